// ctccrf/compose.cc

#include <array>
#include <deque>
#include <unordered_map>

#include "ctccrf/wfst.h"

namespace ctccrf::fst {

namespace {

// Filter states of the epsilon filter: 0 = no pending epsilon move,
// 1 = last move was an epsilon on the left side only, 2 = on the right only.
// Epsilon:epsilon matches are allowed only from 0, left-only moves from
// {0,1}, right-only moves from {0,2}. This admits exactly one canonical
// interleaving of epsilon moves per pair of paths.
struct Triple {
  int a, b, filter;
  bool operator==(const Triple&) const = default;
};

struct TripleHash {
  std::size_t operator()(const Triple& t) const {
    std::size_t h = static_cast<std::size_t>(t.a) * 0x9E3779B97F4A7C15ULL;
    h ^= static_cast<std::size_t>(t.b) + 0x7F4A7C15ULL + (h << 6) + (h >> 2);
    return h * 3 + static_cast<std::size_t>(t.filter);
  }
};

}  // namespace

Wfst Compose(const Wfst& a, const Wfst& b) {
  if (a.osyms().Hash() != b.isyms().Hash()) {
    throw DataError("compose: output symbols of the left machine differ from the input "
                    "symbols of the right machine");
  }
  if (a.semiring() != b.semiring()) throw DataError("compose: semiring mismatch");

  Wfst out(a.isyms(), b.osyms(), a.semiring());
  if (a.Start() == kNoState || b.Start() == kNoState) return out;

  std::unordered_map<Triple, int, TripleHash> ids;
  std::deque<Triple> queue;
  auto state_of = [&](const Triple& t) {
    auto [it, inserted] = ids.emplace(t, 0);
    if (inserted) {
      it->second = out.AddState();
      queue.push_back(t);
    }
    return it->second;
  };
  out.SetStart(state_of({a.Start(), b.Start(), 0}));

  while (!queue.empty()) {
    Triple t = queue.front();
    queue.pop_front();
    const int s = ids.at(t);
    if (a.IsFinal(t.a) && b.IsFinal(t.b)) out.SetFinal(s, a.Final(t.a) + b.Final(t.b));

    for (const Arc& x : a.Arcs(t.a)) {
      if (x.olabel == kEpsilon) {
        // Left moves alone.
        if (t.filter != 2) {
          int d = state_of({x.nextstate, t.b, 1});
          out.AddArc(s, {x.ilabel, kEpsilon, x.weight, d});
        }
        // Both move on epsilon.
        if (t.filter == 0) {
          for (const Arc& y : b.Arcs(t.b)) {
            if (y.ilabel != kEpsilon) continue;
            int d = state_of({x.nextstate, y.nextstate, 0});
            out.AddArc(s, {x.ilabel, y.olabel, x.weight + y.weight, d});
          }
        }
        continue;
      }
      for (const Arc& y : b.Arcs(t.b)) {
        if (y.ilabel != x.olabel) continue;
        int d = state_of({x.nextstate, y.nextstate, 0});
        out.AddArc(s, {x.ilabel, y.olabel, x.weight + y.weight, d});
      }
    }
    // Right moves alone.
    if (t.filter != 1) {
      for (const Arc& y : b.Arcs(t.b)) {
        if (y.ilabel != kEpsilon) continue;
        int d = state_of({t.a, y.nextstate, 2});
        out.AddArc(s, {kEpsilon, y.olabel, y.weight, d});
      }
    }
  }
  return Trim(out);
}

}  // namespace ctccrf::fst
