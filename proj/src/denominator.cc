// ctccrf/denominator.cc

#include <algorithm>

#include "ctccrf/crf_loss.h"

namespace ctccrf::crf {

namespace {

void CheckShapes(const Matrix& potentials, const DenominatorTable& den) {
  if (den.empty()) throw DataError("denominator: empty graph");
  if (potentials.cols() != den.num_labels()) {
    throw DataError("denominator: potential width " + std::to_string(potentials.cols()) +
                    " does not match the graph's " + std::to_string(den.num_labels()) + " symbols");
  }
}

// Below this many states a parallel region per frame costs more than it saves.
constexpr int kMinParallelStates = 256;

}  // namespace

ForwardBackwardResult DenominatorForwardBackward(const Matrix& potentials,
                                                 const DenominatorTable& den) {
  CheckShapes(potentials, den);
  const int frames = static_cast<int>(potentials.rows());
  const int n = den.num_states();
  const auto& trs = den.transitions();
  const auto& in_begin = den.in_begin();
  const auto& in_order = den.in_order();
  const auto& out_begin = den.out_begin();
  const auto& finals = den.finals();

  ForwardBackwardResult result;
  result.occupancy = Matrix::Zero(frames, potentials.cols());

  Matrix alpha = Matrix::Constant(frames + 1, n, kLogZero);
  alpha(0, den.start()) = 0.0;
  for (int t = 0; t < frames; ++t) {
    const double* prev = alpha.row(t).data();
    const double* pot = potentials.row(t).data();
    double* cur = alpha.row(t + 1).data();
#pragma omp parallel for schedule(static) if (n >= kMinParallelStates)
    for (int j = 0; j < n; ++j) {
      double m = kLogZero;
      for (int k = in_begin[j]; k < in_begin[j + 1]; ++k) {
        const DenTransition& tr = trs[in_order[k]];
        m = std::max(m, prev[tr.from] + tr.weight + pot[tr.label]);
      }
      if (m == kLogZero) continue;
      double sum = 0.0;
      for (int k = in_begin[j]; k < in_begin[j + 1]; ++k) {
        const DenTransition& tr = trs[in_order[k]];
        sum += std::exp(prev[tr.from] + tr.weight + pot[tr.label] - m);
      }
      cur[j] = m + std::log(sum);
    }
  }

  double log_z = kLogZero;
  for (int s = 0; s < n; ++s) log_z = LogAdd(log_z, alpha(frames, s) + finals[s]);
  if (log_z == kLogZero) return result;

  Matrix beta = Matrix::Constant(frames + 1, n, kLogZero);
  for (int s = 0; s < n; ++s) beta(frames, s) = finals[s];
  for (int t = frames - 1; t >= 0; --t) {
    const double* next = beta.row(t + 1).data();
    const double* pot = potentials.row(t).data();
    double* cur = beta.row(t).data();
#pragma omp parallel for schedule(static) if (n >= kMinParallelStates)
    for (int i = 0; i < n; ++i) {
      double m = kLogZero;
      for (int k = out_begin[i]; k < out_begin[i + 1]; ++k) {
        m = std::max(m, trs[k].weight + pot[trs[k].label] + next[trs[k].to]);
      }
      if (m == kLogZero) continue;
      double sum = 0.0;
      for (int k = out_begin[i]; k < out_begin[i + 1]; ++k) {
        sum += std::exp(trs[k].weight + pot[trs[k].label] + next[trs[k].to] - m);
      }
      cur[i] = m + std::log(sum);
    }
  }

  // Frames are independent once alpha and beta are known; each thread owns
  // whole occupancy rows.
#pragma omp parallel for schedule(static) if (frames * static_cast<long>(trs.size()) >= 65536)
  for (int t = 0; t < frames; ++t) {
    const double* a = alpha.row(t).data();
    const double* b = beta.row(t + 1).data();
    const double* pot = potentials.row(t).data();
    double* occ = result.occupancy.row(t).data();
    for (const DenTransition& tr : trs) {
      const double g = a[tr.from] + tr.weight + pot[tr.label] + b[tr.to] - log_z;
      if (g != kLogZero) occ[tr.label] += std::exp(g);
    }
  }
  result.score = log_z;
  result.feasible = true;
  return result;
}

namespace reference {

ForwardBackwardResult DenominatorForwardBackward(const Matrix& potentials,
                                                 const DenominatorTable& den) {
  CheckShapes(potentials, den);
  const int frames = static_cast<int>(potentials.rows());
  const int n = den.num_states();
  ForwardBackwardResult result;
  result.occupancy = Matrix::Zero(frames, potentials.cols());

  Matrix alpha = Matrix::Constant(frames + 1, n, kLogZero);
  alpha(0, den.start()) = 0.0;
  for (int t = 0; t < frames; ++t) {
    for (const DenTransition& tr : den.transitions()) {
      alpha(t + 1, tr.to) =
          LogAdd(alpha(t + 1, tr.to), alpha(t, tr.from) + tr.weight + potentials(t, tr.label));
    }
  }
  double log_z = kLogZero;
  for (int s = 0; s < n; ++s) log_z = LogAdd(log_z, alpha(frames, s) + den.finals()[s]);
  if (log_z == kLogZero) return result;

  Matrix beta = Matrix::Constant(frames + 1, n, kLogZero);
  for (int s = 0; s < n; ++s) beta(frames, s) = den.finals()[s];
  for (int t = frames - 1; t >= 0; --t) {
    for (const DenTransition& tr : den.transitions()) {
      const double arc = tr.weight + potentials(t, tr.label);
      beta(t, tr.from) = LogAdd(beta(t, tr.from), arc + beta(t + 1, tr.to));
      const double g = alpha(t, tr.from) + arc + beta(t + 1, tr.to) - log_z;
      if (g != kLogZero) result.occupancy(t, tr.label) += std::exp(g);
    }
  }
  result.score = log_z;
  result.feasible = true;
  return result;
}

}  // namespace reference
}  // namespace ctccrf::crf
