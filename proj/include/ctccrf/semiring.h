// ctccrf/semiring.h

#ifndef CTCCRF_SEMIRING_H_
#define CTCCRF_SEMIRING_H_

#include <algorithm>

#include "ctccrf/common.h"

namespace ctccrf {

// Weights are natural-log values in both semirings; larger is better.
// Zero() is a genuine -inf, never a large negative sentinel.

struct LogSemiring {
  static constexpr double Zero() { return kLogZero; }
  static constexpr double One() { return 0.0; }
  static double Plus(double a, double b) { return LogAdd(a, b); }
  static double Times(double a, double b) { return a + b; }
};

struct TropicalSemiring {
  static constexpr double Zero() { return kLogZero; }
  static constexpr double One() { return 0.0; }
  static double Plus(double a, double b) { return std::max(a, b); }
  static double Times(double a, double b) { return a + b; }
};

enum class SemiringKind { kLog, kTropical };

inline double Plus(SemiringKind kind, double a, double b) {
  return kind == SemiringKind::kLog ? LogSemiring::Plus(a, b)
                                    : TropicalSemiring::Plus(a, b);
}

inline double Times(SemiringKind, double a, double b) { return a + b; }

}  // namespace ctccrf

#endif  // CTCCRF_SEMIRING_H_
