// ctccrf/numerator.cc

#include <algorithm>

#include "ctccrf/crf_loss.h"

namespace ctccrf::crf {

ForwardBackwardResult NumeratorForwardBackward(const Matrix& potentials,
                                               std::span<const int> labels, double log_pl) {
  const int frames = static_cast<int>(potentials.rows());
  const int width = static_cast<int>(potentials.cols());
  for (int l : labels) {
    if (l < 1 || l >= width) {
      throw DataError("numerator: label " + std::to_string(l) + " outside the state alphabet");
    }
  }

  ForwardBackwardResult result;
  result.occupancy = Matrix::Zero(frames, width);
  const int num_labels = static_cast<int>(labels.size());
  const int ext_size = 2 * num_labels + 1;
  if (frames == 0) {
    result.feasible = num_labels == 0;
    result.score = result.feasible ? log_pl : kLogZero;
    return result;
  }

  // Extended sequence: blank, l1, blank, l2, ..., blank.
  auto ext = [&labels](int s) { return s % 2 == 0 ? 0 : labels[s / 2]; };
  auto can_skip = [&](int s) { return s % 2 == 1 && s >= 3 && ext(s) != ext(s - 2); };

  Matrix alpha = Matrix::Constant(frames, ext_size, kLogZero);
  Matrix beta = Matrix::Constant(frames, ext_size, kLogZero);
  alpha(0, 0) = potentials(0, 0);
  if (num_labels > 0) alpha(0, 1) = potentials(0, ext(1));
  for (int t = 1; t < frames; ++t) {
    // Only the last 2 * (frames - t) + 2 positions can still reach the end,
    // and only the first 2 * (t + 1) positions are reachable from the start.
    const int lo = std::max(0, ext_size - 2 * (frames - t) - 2);
    const int hi = std::min(ext_size, 2 * (t + 1));
    for (int s = lo; s < hi; ++s) {
      double v = alpha(t - 1, s);
      if (s >= 1) v = LogAdd(v, alpha(t - 1, s - 1));
      if (can_skip(s)) v = LogAdd(v, alpha(t - 1, s - 2));
      if (v != kLogZero) alpha(t, s) = v + potentials(t, ext(s));
    }
  }

  double log_z = alpha(frames - 1, ext_size - 1);
  if (num_labels > 0) log_z = LogAdd(log_z, alpha(frames - 1, ext_size - 2));
  if (log_z == kLogZero) return result;

  beta(frames - 1, ext_size - 1) = 0.0;
  if (num_labels > 0) beta(frames - 1, ext_size - 2) = 0.0;
  for (int t = frames - 2; t >= 0; --t) {
    for (int s = 0; s < ext_size; ++s) {
      double v = beta(t + 1, s) + potentials(t + 1, ext(s));
      if (s + 1 < ext_size) v = LogAdd(v, beta(t + 1, s + 1) + potentials(t + 1, ext(s + 1)));
      if (s + 2 < ext_size && can_skip(s + 2)) {
        v = LogAdd(v, beta(t + 1, s + 2) + potentials(t + 1, ext(s + 2)));
      }
      beta(t, s) = v;
    }
  }

  for (int t = 0; t < frames; ++t) {
    for (int s = 0; s < ext_size; ++s) {
      const double g = alpha(t, s) + beta(t, s) - log_z;
      if (g != kLogZero) result.occupancy(t, ext(s)) += std::exp(g);
    }
  }
  result.score = log_pl + log_z;
  result.feasible = true;
  return result;
}

}  // namespace ctccrf::crf
