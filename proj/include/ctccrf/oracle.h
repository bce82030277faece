// ctccrf/oracle.h
//
// Brute-force reference computations. Everything here enumerates state
// sequences or backoff paths directly from model entries and never touches
// the transducer or forward-backward code, so it can check both.

#ifndef CTCCRF_ORACLE_H_
#define CTCCRF_ORACLE_H_

#include <functional>
#include <set>
#include <span>
#include <vector>

#include "ctccrf/common.h"
#include "ctccrf/ngram.h"
#include "ctccrf/wfst.h"

namespace ctccrf::oracle {

/// Collapse repeats, drop blank (id 0).
std::vector<int> Collapse(std::span<const int> states);

/// Calls `visit` on every sequence in [0, width)^frames.
void ForEachSequence(int frames, int width,
                     const std::function<void(const std::vector<int>&)>& visit);

/// log sum over pi with Collapse(pi) == labels of exp(sum_t pot[t][pi_t]).
double BruteForceCtc(const Matrix& potentials, std::span<const int> labels);

/// Log of the sum over backoff paths that an epsilon-backoff acceptor
/// assigns to `<s> labels </s>`: at each history the model may take the
/// explicit n-gram or back off (unless the history lists every next
/// symbol). Labels are LM word ids. Equals the exact backoff probability
/// whenever no history offers both choices.
double LmPathSum(const lm::NGramModel& lm, std::span<const int> words);

/// log sum over all pi in [0, width)^T of exp(lm_score(Collapse(pi)) +
/// sum_t pot[t][pi_t]), where lm_score maps label state ids to a log
/// weight.
double BruteForceDenominator(
    const Matrix& potentials,
    const std::function<double(const std::vector<int>&)>& lm_score);

/// Central differences of a scalar function, one coordinate at a time.
Matrix FiniteDifferenceGradient(const std::function<double(const Matrix&)>& f,
                                const Matrix& x, double h = 1e-4);

/// max |a - b| / max(|a|, |b|, floor) over entries.
double MaxRelativeError(const Matrix& a, const Matrix& b, double floor = 1e-3);

struct BestPaths {
  double score = kLogZero;
  std::set<std::vector<int>> words;  // every output sequence within 1e-9 of the best
};

/// Best complete path through a graph whose input labels are shifted state
/// ids, reading exactly one input per potentials row. The graph must be
/// epsilon-acyclic.
BestPaths BestPathByEnumeration(const fst::Wfst& graph, const Matrix& potentials);

}  // namespace ctccrf::oracle

#endif  // CTCCRF_ORACLE_H_
