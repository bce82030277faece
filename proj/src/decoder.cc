// ctccrf/decoder.cc

#include "ctccrf/decoder.h"

#include <algorithm>
#include <cmath>
#include <queue>

namespace ctccrf::decode {

std::vector<int> GreedyDecode(const Matrix& potentials) {
  std::vector<int> best(static_cast<std::size_t>(potentials.rows()));
  for (Eigen::Index t = 0; t < potentials.rows(); ++t) {
    Eigen::Index arg = 0;
    for (Eigen::Index s = 1; s < potentials.cols(); ++s) {
      if (potentials(t, s) > potentials(t, arg)) arg = s;
    }
    best[t] = static_cast<int>(arg);
  }
  return MapB(best, static_cast<int>(potentials.cols()));
}

void BeamConfig::Validate() const {
  if (width < 1) throw DataError("beam width must be at least 1");
  if (!(slack >= 0.0)) throw DataError("beam slack must be non-negative");
  if (blank_skip && !(*blank_skip > 0.0 && *blank_skip <= 1.0)) {
    throw DataError("blank skip threshold must be in (0, 1]");
  }
}

BeamDecoder::BeamDecoder(const fst::Wfst& graph) : graph_(graph) {
  const int n = graph.NumStates();
  std::vector<int> indegree(n, 0);
  std::vector<char> involved(n, 0);
  for (int s = 0; s < n; ++s) {
    for (const fst::Arc& a : graph.Arcs(s)) {
      if (a.ilabel != kEpsilon) continue;
      has_eps_ = true;
      ++indegree[a.nextstate];
      involved[s] = involved[a.nextstate] = 1;
    }
  }
  // Kahn's algorithm, lowest state id first.
  std::priority_queue<int, std::vector<int>, std::greater<int>> ready;
  int total = 0;
  for (int s = 0; s < n; ++s) {
    if (!involved[s]) continue;
    ++total;
    if (indegree[s] == 0) ready.push(s);
  }
  while (!ready.empty()) {
    const int s = ready.top();
    ready.pop();
    eps_order_.push_back(s);
    for (const fst::Arc& a : graph.Arcs(s)) {
      if (a.ilabel == kEpsilon && --indegree[a.nextstate] == 0) ready.push(a.nextstate);
    }
  }
  eps_acyclic_ = static_cast<int>(eps_order_.size()) == total;
}

namespace {

struct Backpointer {
  int prev;
  int word;
};

class TokenSet {
 public:
  explicit TokenSet(int num_states)
      : score_(num_states, kLogZero), bp_(num_states, -1), on_(num_states, 0) {}

  bool Active(int s) const { return on_[s] != 0; }
  double Score(int s) const { return score_[s]; }
  int Bp(int s) const { return bp_[s]; }
  const std::vector<int>& states() const { return active_; }

  // Strict improvement only, so the first relaxation in iteration order
  // wins ties.
  bool Relax(int s, double score, int bp) {
    if (on_[s] && !(score > score_[s])) return false;
    if (!on_[s]) {
      on_[s] = 1;
      active_.push_back(s);
    }
    score_[s] = score;
    bp_[s] = bp;
    return true;
  }

  void Clear() {
    for (int s : active_) {
      on_[s] = 0;
      score_[s] = kLogZero;
      bp_[s] = -1;
    }
    active_.clear();
  }

  void SortStates() { std::sort(active_.begin(), active_.end()); }

  void Prune(int width, double slack) {
    if (active_.empty()) return;
    double best = kLogZero;
    for (int s : active_) best = std::max(best, score_[s]);
    std::vector<int> keep;
    keep.reserve(active_.size());
    for (int s : active_) {
      if (score_[s] >= best - slack) keep.push_back(s);
    }
    if (static_cast<int>(keep.size()) > width) {
      std::nth_element(keep.begin(), keep.begin() + width, keep.end(), [&](int a, int b) {
        return score_[a] != score_[b] ? score_[a] > score_[b] : a < b;
      });
      keep.resize(width);
    }
    for (int s : active_) on_[s] = 0;
    for (int s : keep) on_[s] = 1;
    for (int s : active_) {
      if (!on_[s]) {
        score_[s] = kLogZero;
        bp_[s] = -1;
      }
    }
    active_ = std::move(keep);
    SortStates();
  }

 private:
  std::vector<double> score_;
  std::vector<int> bp_;
  std::vector<char> on_;
  std::vector<int> active_;
};

}  // namespace

DecodeResult BeamDecoder::Decode(const Matrix& potentials, const BeamConfig& config) const {
  config.Validate();
  DecodeResult result;
  const fst::Wfst& g = graph_;
  if (g.Start() == fst::kNoState) return result;
  const int n = g.NumStates();
  const int width = static_cast<int>(potentials.cols());
  const int blank_input = ToFstInput(Alphabet::kBlank);
  std::vector<Backpointer> arena;

  auto relax_arc = [&](TokenSet& into, int from_bp, double score, const fst::Arc& a) {
    int bp = from_bp;
    if (a.olabel != kEpsilon) {
      if (!(score > (into.Active(a.nextstate) ? into.Score(a.nextstate) : kLogZero))) return;
      arena.push_back({from_bp, a.olabel});
      bp = static_cast<int>(arena.size()) - 1;
    }
    into.Relax(a.nextstate, score, bp);
  };

  auto eps_closure = [&](TokenSet& tokens) {
    if (!has_eps_) return;
    if (eps_acyclic_) {
      for (int s : eps_order_) {
        if (!tokens.Active(s)) continue;
        for (const fst::Arc& a : g.Arcs(s)) {
          if (a.ilabel == kEpsilon) relax_arc(tokens, tokens.Bp(s), tokens.Score(s) + a.weight, a);
        }
      }
    } else {
      // Best-first with a visited set: each state is expanded once.
      std::vector<char> done(n, 0);
      using Item = std::pair<double, int>;  // (score, -state)
      std::priority_queue<Item> heap;
      for (int s : tokens.states()) heap.push({tokens.Score(s), -s});
      while (!heap.empty()) {
        const auto [score, neg] = heap.top();
        heap.pop();
        const int s = -neg;
        if (done[s] || score < tokens.Score(s)) continue;
        done[s] = 1;
        for (const fst::Arc& a : g.Arcs(s)) {
          if (a.ilabel != kEpsilon || done[a.nextstate]) continue;
          const double before = tokens.Active(a.nextstate) ? tokens.Score(a.nextstate) : kLogZero;
          relax_arc(tokens, tokens.Bp(s), score + a.weight, a);
          if (tokens.Score(a.nextstate) > before) heap.push({tokens.Score(a.nextstate), -a.nextstate});
        }
      }
    }
    tokens.SortStates();
  };

  // Pruning acts on the hypotheses produced by emitting arcs; the epsilon
  // closure of every survivor is then kept in full, so a pruned set never
  // holds a state whose only way forward is an epsilon arc it cannot take.
  TokenSet cur(n), next(n);
  cur.Relax(g.Start(), 0.0, -1);
  eps_closure(cur);

  for (Eigen::Index t = 0; t < potentials.rows(); ++t) {
    const bool skip = config.blank_skip && std::exp(potentials(t, Alphabet::kBlank)) > *config.blank_skip;
    const double skip_score = config.skip_adds_blank_score ? potentials(t, Alphabet::kBlank) : 0.0;
    next.Clear();
    for (int s : cur.states()) {
      for (const fst::Arc& a : g.Arcs(s)) {
        if (a.ilabel == kEpsilon) continue;
        double score;
        if (skip) {
          if (a.ilabel != blank_input) continue;
          score = cur.Score(s) + a.weight + skip_score;
        } else {
          const int sym = FromFstInput(a.ilabel);
          if (sym < 0 || sym >= width) {
            throw DataError("decode: graph input label " + std::to_string(a.ilabel) +
                            " outside the posterior width");
          }
          score = cur.Score(s) + a.weight + potentials(t, sym);
        }
        if (score == kLogZero) continue;
        relax_arc(next, cur.Bp(s), score, a);
      }
    }
    next.Prune(config.width, config.slack);
    eps_closure(next);
    std::swap(cur, next);
    if (skip) {
      ++result.frames_skipped;
    } else {
      ++result.frames_processed;
    }
  }

  int best_state = fst::kNoState;
  double best = kLogZero;
  for (int s : cur.states()) {
    if (!g.IsFinal(s)) continue;
    const double score = cur.Score(s) + g.Final(s);
    if (best_state == fst::kNoState || score > best) {
      best = score;
      best_state = s;
    }
  }
  if (best_state == fst::kNoState || best == kLogZero) return result;
  result.ok = true;
  result.score = best;
  for (int bp = cur.Bp(best_state); bp >= 0; bp = arena[bp].prev) {
    result.words.push_back(arena[bp].word);
  }
  std::reverse(result.words.begin(), result.words.end());
  return result;
}

}  // namespace ctccrf::decode
