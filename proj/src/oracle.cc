// ctccrf/oracle.cc

#include "ctccrf/oracle.h"

#include "ctccrf/alphabet.h"

#include <algorithm>
#include <cmath>
#include <functional>
#include <set>

namespace ctccrf::oracle {

std::vector<int> Collapse(std::span<const int> states) {
  std::vector<int> out;
  int prev = -1;
  for (int s : states) {
    if (s != prev && s != 0) out.push_back(s);
    prev = s;
  }
  return out;
}

void ForEachSequence(int frames, int width,
                     const std::function<void(const std::vector<int>&)>& visit) {
  std::vector<int> seq(frames, 0);
  while (true) {
    visit(seq);
    int t = frames - 1;
    while (t >= 0 && ++seq[t] == width) seq[t--] = 0;
    if (t < 0) return;
  }
}

namespace {

double PathScore(const Matrix& pot, const std::vector<int>& seq) {
  double s = 0.0;
  for (std::size_t t = 0; t < seq.size(); ++t) s += pot(static_cast<Eigen::Index>(t), seq[t]);
  return s;
}

double Accumulate(double acc, double x) {
  if (x == kLogZero) return acc;
  if (acc == kLogZero) return x;
  const double m = std::max(acc, x);
  return m + std::log(std::exp(acc - m) + std::exp(x - m));
}

class PathSummer {
 public:
  PathSummer(const lm::NGramModel& lm, std::span<const int> words) : lm_(lm), words_(words) {
    histories_.insert({});
    for (int k = 1; k < lm.order(); ++k) {
      for (const auto& [g, e] : lm.Entries(k)) {
        if (g.back() != lm.Eos()) histories_.insert(g);
      }
    }
  }

  double Run() const {
    const bool has_bos = lm_.order() > 1 && histories_.count({lm_.Bos()});
    return Sum(has_bos ? std::vector<int>{lm_.Bos()} : std::vector<int>{}, 0);
  }

 private:
  std::vector<int> Dest(const std::vector<int>& g) const {
    const std::size_t keep = std::min<std::size_t>(g.size(), lm_.order() - 1);
    for (std::size_t b = g.size() - keep; b <= g.size(); ++b) {
      std::vector<int> suffix(g.begin() + b, g.end());
      if (histories_.count(suffix)) return suffix;
    }
    return {};
  }

  bool Complete(const std::vector<int>& h) const {
    std::vector<int> g = h;
    g.push_back(0);
    for (int w = 1; w <= lm_.NumWords() + 2; ++w) {
      if (w == lm_.Bos()) continue;
      g.back() = w;
      if (!lm_.Find(g)) return false;
    }
    return true;
  }

  double Sum(const std::vector<int>& h, std::size_t i) const {
    double total = kLogZero;
    std::vector<int> g = h;
    if (i == words_.size()) {
      g.push_back(lm_.Eos());
      if (const auto* e = lm_.Find(g)) total = Accumulate(total, e->logprob);
    } else {
      g.push_back(words_[i]);
      if (const auto* e = lm_.Find(g)) total = Accumulate(total, e->logprob + Sum(Dest(g), i + 1));
    }
    if (!h.empty() && !Complete(h)) {
      const auto* e = lm_.Find(h);
      const double bow = e && e->has_backoff ? e->backoff : 0.0;
      total = Accumulate(total, bow + Sum(Dest({h.begin() + 1, h.end()}), i));
    }
    return total;
  }

  const lm::NGramModel& lm_;
  std::span<const int> words_;
  std::set<std::vector<int>> histories_;
};

}  // namespace

double BruteForceCtc(const Matrix& potentials, std::span<const int> labels) {
  const std::vector<int> target(labels.begin(), labels.end());
  double total = kLogZero;
  ForEachSequence(static_cast<int>(potentials.rows()), static_cast<int>(potentials.cols()),
                  [&](const std::vector<int>& seq) {
                    if (Collapse(seq) == target) total = Accumulate(total, PathScore(potentials, seq));
                  });
  return total;
}

double LmPathSum(const lm::NGramModel& lm, std::span<const int> words) {
  if (lm.NumEntries(1) == 0) return words.empty() ? 0.0 : kLogZero;
  return PathSummer(lm, words).Run();
}

double BruteForceDenominator(const Matrix& potentials,
                             const std::function<double(const std::vector<int>&)>& lm_score) {
  double total = kLogZero;
  ForEachSequence(static_cast<int>(potentials.rows()), static_cast<int>(potentials.cols()),
                  [&](const std::vector<int>& seq) {
                    const double lm = lm_score(Collapse(seq));
                    if (lm != kLogZero) total = Accumulate(total, lm + PathScore(potentials, seq));
                  });
  return total;
}

Matrix FiniteDifferenceGradient(const std::function<double(const Matrix&)>& f, const Matrix& x,
                                double h) {
  Matrix grad(x.rows(), x.cols());
  Matrix probe = x;
  for (Eigen::Index k = 0; k < x.size(); ++k) {
    const double orig = probe.data()[k];
    probe.data()[k] = orig + h;
    const double up = f(probe);
    probe.data()[k] = orig - h;
    const double down = f(probe);
    probe.data()[k] = orig;
    grad.data()[k] = (up - down) / (2.0 * h);
  }
  return grad;
}

double MaxRelativeError(const Matrix& a, const Matrix& b, double floor) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw DataError("shape mismatch");
  double worst = 0.0;
  for (Eigen::Index k = 0; k < a.size(); ++k) {
    const double x = a.data()[k], y = b.data()[k];
    const double denom = std::max({std::abs(x), std::abs(y), floor});
    worst = std::max(worst, std::abs(x - y) / denom);
  }
  return worst;
}

BestPaths BestPathByEnumeration(const fst::Wfst& g, const Matrix& pot) {
  const int frames = static_cast<int>(pot.rows());
  std::vector<std::pair<double, std::vector<int>>> finals;
  std::vector<int> words;
  std::function<void(int, int, double)> walk = [&](int s, int t, double score) {
    if (t == frames && g.IsFinal(s)) finals.emplace_back(score + g.Final(s), words);
    for (const fst::Arc& a : g.Arcs(s)) {
      double next = score + a.weight;
      int nt = t;
      if (a.ilabel != kEpsilon) {
        if (t == frames) continue;
        next += pot(t, FromFstInput(a.ilabel));
        nt = t + 1;
      }
      if (a.olabel != kEpsilon) words.push_back(a.olabel);
      walk(a.nextstate, nt, next);
      if (a.olabel != kEpsilon) words.pop_back();
    }
  };
  if (g.Start() != fst::kNoState) walk(g.Start(), 0, 0.0);
  BestPaths out;
  for (const auto& [s, w] : finals) out.score = std::max(out.score, s);
  for (const auto& [s, w] : finals) {
    if (out.score != kLogZero && s >= out.score - 1e-9) out.words.insert(w);
  }
  return out;
}

}  // namespace ctccrf::oracle
