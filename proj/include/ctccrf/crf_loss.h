// ctccrf/crf_loss.h
//
// CTC-CRF objective: log of the constrained path sum over B^-1(l) minus the
// log path sum over the denominator graph, with node potentials taken from
// log-softmax outputs. All gradients are with respect to those potentials.

#ifndef CTCCRF_CRF_LOSS_H_
#define CTCCRF_CRF_LOSS_H_

#include <span>
#include <vector>

#include "ctccrf/common.h"
#include "ctccrf/den_table.h"

namespace ctccrf::crf {

/// Score and per-frame symbol occupancy (rows sum to 1 when feasible).
struct ForwardBackwardResult {
  double score = kLogZero;
  Matrix occupancy;
  bool feasible = false;
};

/// CTC forward-backward over the 2|l|+1 extended label lattice. `labels`
/// are state ids in [1, width). score = log_pl + log CTC likelihood; an
/// infeasible length gives -inf with zero occupancy. Throws DataError on a
/// label outside the potential matrix width.
ForwardBackwardResult NumeratorForwardBackward(const Matrix& potentials,
                                               std::span<const int> labels,
                                               double log_pl = 0.0);

/// Log-domain forward-backward over the flattened denominator graph. The
/// OpenMP kernel parallelises over states within a frame and over frames
/// for the occupancy pass; results do not depend on the thread count.
/// Throws DataError if the table is empty or the widths differ.
ForwardBackwardResult DenominatorForwardBackward(const Matrix& potentials,
                                                 const DenominatorTable& den);

namespace reference {
/// Plain serial push-style implementation kept to check the kernel.
ForwardBackwardResult DenominatorForwardBackward(const Matrix& potentials,
                                                 const DenominatorTable& den);
}  // namespace reference

enum class LossStatus {
  kOk,
  kNumeratorInfeasible,   // no path in B^-1(l) of this length
  kDenominatorInfeasible, // no complete denominator path of this length
};

struct LossResult {
  double objective = kLogZero;  // (numerator - denominator) + alpha * ctc
  double numerator = kLogZero;
  double denominator = kLogZero;
  double ctc = kLogZero;        // plain CTC log-likelihood (log_pl = 0)
  Matrix grad;                  // d objective / d potentials
  LossStatus status = LossStatus::kOk;

  bool ok() const { return status == LossStatus::kOk; }
};

/// Maximisation convention. Degenerate utterances are flagged and return a
/// zero gradient instead of throwing.
LossResult CrfLoss(const Matrix& potentials, std::span<const int> labels,
                   double log_pl, const DenominatorTable& den,
                   double alpha = 0.1);

struct UtteranceRef {
  const Matrix* potentials = nullptr;
  std::vector<int> labels;
  double log_pl = 0.0;
};

struct BatchLossResult {
  std::vector<LossResult> results;  // in input order
  double objective_sum = 0.0;       // over ok utterances
  long frames = 0;                  // over ok utterances
  int num_degenerate = 0;

  /// Frame-normalized mean objective.
  double aggregate() const {
    return frames > 0 ? objective_sum / static_cast<double>(frames) : 0.0;
  }
};

/// Each utterance at its own length; fanned out over `workers` OpenMP
/// threads (0 = runtime default). Aggregation runs in input order.
BatchLossResult BatchCrfLoss(std::span<const UtteranceRef> batch,
                             const DenominatorTable& den, double alpha = 0.1,
                             int workers = 1);

}  // namespace ctccrf::crf

#endif  // CTCCRF_CRF_LOSS_H_
