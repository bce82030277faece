// ctccrf/crf_loss.cc

#include "ctccrf/crf_loss.h"

#include <exception>

#include <omp.h>

namespace ctccrf::crf {

LossResult CrfLoss(const Matrix& potentials, std::span<const int> labels, double log_pl,
                   const DenominatorTable& den, double alpha) {
  if (alpha < 0.0) throw DataError("crf loss: alpha must be >= 0");
  ForwardBackwardResult num = NumeratorForwardBackward(potentials, labels, log_pl);
  ForwardBackwardResult dnm = DenominatorForwardBackward(potentials, den);

  LossResult r;
  r.numerator = num.score;
  r.denominator = dnm.score;
  r.ctc = num.feasible ? num.score - log_pl : kLogZero;
  if (!dnm.feasible || !num.feasible) {
    r.status = !dnm.feasible ? LossStatus::kDenominatorInfeasible : LossStatus::kNumeratorInfeasible;
    r.grad = Matrix::Zero(potentials.rows(), potentials.cols());
    return r;
  }
  r.objective = (num.score - dnm.score) + alpha * r.ctc;
  // The CTC term shares the numerator lattice, so its occupancy is the same.
  r.grad = (1.0 + alpha) * num.occupancy - dnm.occupancy;
  if (!std::isfinite(r.objective)) throw NumericalError("crf loss: non-finite objective");
  return r;
}

BatchLossResult BatchCrfLoss(std::span<const UtteranceRef> batch, const DenominatorTable& den,
                             double alpha, int workers) {
  BatchLossResult out;
  out.results.resize(batch.size());
  std::vector<std::exception_ptr> errors(batch.size());
  const int n = static_cast<int>(batch.size());
  const int threads = workers > 0 ? workers : omp_get_max_threads();
#pragma omp parallel for schedule(dynamic) num_threads(threads)
  for (int i = 0; i < n; ++i) {
    try {
      const UtteranceRef& u = batch[i];
      if (u.potentials == nullptr) throw DataError("batch: utterance without potentials");
      out.results[i] = CrfLoss(*u.potentials, u.labels, u.log_pl, den, alpha);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  // Bad input in any utterance is a caller error and is rethrown; infeasible
  // utterances are only flagged.
  for (int i = 0; i < n; ++i) {
    if (errors[i]) std::rethrow_exception(errors[i]);
    const LossResult& r = out.results[i];
    if (!r.ok()) {
      ++out.num_degenerate;
      continue;
    }
    out.objective_sum += r.objective;
    out.frames += batch[i].potentials->rows();
  }
  return out;
}

}  // namespace ctccrf::crf
