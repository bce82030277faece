// ctccrf/wfst.cc

#include "ctccrf/wfst.h"

#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

namespace ctccrf::fst {

Wfst::Wfst(SymbolTable isyms, SymbolTable osyms, SemiringKind kind)
    : isyms_(std::move(isyms)), osyms_(std::move(osyms)), kind_(kind) {}

int Wfst::AddState() {
  arcs_.emplace_back();
  finals_.push_back(kLogZero);
  return NumStates() - 1;
}

void Wfst::ReserveStates(int n) {
  arcs_.reserve(n);
  finals_.reserve(n);
}

void Wfst::CheckState(int state) const {
  if (state < 0 || state >= NumStates()) {
    throw DataError("state " + std::to_string(state) + " does not exist");
  }
}

void Wfst::SetStart(int state) {
  CheckState(state);
  start_ = state;
}

void Wfst::SetFinal(int state, double weight) {
  CheckState(state);
  finals_[state] = weight;
}

void Wfst::AddArc(int state, const Arc& arc) {
  CheckState(state);
  CheckState(arc.nextstate);
  if (arc.weight == kLogZero) return;
  arcs_[state].push_back(arc);
}

std::size_t Wfst::NumArcs() const {
  std::size_t n = 0;
  for (const auto& a : arcs_) n += a.size();
  return n;
}

Wfst Trim(const Wfst& fst) {
  Wfst out(fst.isyms(), fst.osyms(), fst.semiring());
  const int n = fst.NumStates();
  if (fst.Start() == kNoState) return out;

  std::vector<char> accessible(n, 0), coaccessible(n, 0);
  std::vector<int> stack{fst.Start()};
  accessible[fst.Start()] = 1;
  std::vector<std::vector<int>> reverse(n);
  while (!stack.empty()) {
    int s = stack.back();
    stack.pop_back();
    for (const Arc& a : fst.Arcs(s)) {
      reverse[a.nextstate].push_back(s);
      if (!accessible[a.nextstate]) {
        accessible[a.nextstate] = 1;
        stack.push_back(a.nextstate);
      }
    }
  }
  for (int s = 0; s < n; ++s) {
    if (accessible[s] && fst.IsFinal(s)) {
      coaccessible[s] = 1;
      stack.push_back(s);
    }
  }
  while (!stack.empty()) {
    int s = stack.back();
    stack.pop_back();
    for (int p : reverse[s]) {
      if (!coaccessible[p]) {
        coaccessible[p] = 1;
        stack.push_back(p);
      }
    }
  }

  std::vector<int> remap(n, kNoState);
  for (int s = 0; s < n; ++s) {
    if (accessible[s] && coaccessible[s]) remap[s] = out.AddState();
  }
  if (remap[fst.Start()] == kNoState) return Wfst(fst.isyms(), fst.osyms(), fst.semiring());
  out.SetStart(remap[fst.Start()]);
  for (int s = 0; s < n; ++s) {
    if (remap[s] == kNoState) continue;
    out.SetFinal(remap[s], fst.Final(s));
    for (const Arc& a : fst.Arcs(s)) {
      if (remap[a.nextstate] == kNoState) continue;
      out.AddArc(remap[s], {a.ilabel, a.olabel, a.weight, remap[a.nextstate]});
    }
  }
  return out;
}

namespace {

std::string FormatWeight(double w) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.9g", w);
  return buf;
}

double ParseWeight(const std::string& s, int lineno) {
  try {
    std::size_t used = 0;
    double w = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return w;
  } catch (const std::exception&) {
    if (s == "-inf" || s == "-Infinity") return kLogZero;
    throw DataError("fst text line " + std::to_string(lineno) + ": bad weight '" + s + "'");
  }
}

}  // namespace

void WriteText(const Wfst& fst, std::ostream& os) {
  const int n = fst.NumStates();
  if (n == 0 || fst.Start() == kNoState) return;
  // Swap the start state with state 0 so that the start is written as 0.
  std::vector<int> order(n);
  for (int s = 0; s < n; ++s) order[s] = s;
  std::swap(order[0], order[fst.Start()]);
  std::vector<int> label(n);
  for (int i = 0; i < n; ++i) label[order[i]] = i;

  for (int i = 0; i < n; ++i) {
    int s = order[i];
    for (const Arc& a : fst.Arcs(s)) {
      os << i << '\t' << label[a.nextstate] << '\t' << a.ilabel << '\t' << a.olabel << '\t'
         << FormatWeight(a.weight) << '\n';
    }
  }
  for (int i = 0; i < n; ++i) {
    int s = order[i];
    if (fst.IsFinal(s)) os << i << '\t' << FormatWeight(fst.Final(s)) << '\n';
  }
}

Wfst ReadText(std::istream& is, SymbolTable isyms, SymbolTable osyms, SemiringKind kind) {
  Wfst fst(std::move(isyms), std::move(osyms), kind);
  auto ensure = [&fst](int s) {
    while (fst.NumStates() <= s) fst.AddState();
  };
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::istringstream fields(line);
    for (std::string tok; fields >> tok;) f.push_back(tok);
    auto as_int = [&](const std::string& s) {
      try {
        std::size_t used = 0;
        int v = std::stoi(s, &used);
        if (used != s.size() || v < 0) throw std::invalid_argument(s);
        return v;
      } catch (const std::exception&) {
        throw DataError("fst text line " + std::to_string(lineno) + ": bad integer '" + s + "'");
      }
    };
    if (f.size() == 5 || f.size() == 4) {
      int src = as_int(f[0]), dst = as_int(f[1]);
      int il = as_int(f[2]), ol = as_int(f[3]);
      if (il >= fst.isyms().size() || ol >= fst.osyms().size()) {
        throw DataError("fst text line " + std::to_string(lineno) + ": label outside symbol table");
      }
      double w = f.size() == 5 ? ParseWeight(f[4], lineno) : 0.0;
      ensure(std::max(src, dst));
      fst.AddArc(src, {il, ol, w, dst});
    } else if (f.size() == 1 || f.size() == 2) {
      int s = as_int(f[0]);
      ensure(s);
      fst.SetFinal(s, f.size() == 2 ? ParseWeight(f[1], lineno) : 0.0);
    } else {
      throw DataError("fst text line " + std::to_string(lineno) + ": expected 1, 2, 4 or 5 fields");
    }
  }
  if (fst.NumStates() > 0) fst.SetStart(0);
  return fst;
}

}  // namespace ctccrf::fst
