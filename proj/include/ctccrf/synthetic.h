// ctccrf/synthetic.h

#ifndef CTCCRF_SYNTHETIC_H_
#define CTCCRF_SYNTHETIC_H_

#include <cstdint>
#include <vector>

#include "ctccrf/trainer.h"

namespace ctccrf::am {

/// Toy task: each utterance is a random label sequence expanded into a CTC
/// state sequence (blank runs between labels, label runs of 1-3 frames);
/// features are one-hot encodings of those states plus Gaussian noise,
/// padded with pure-noise dimensions up to feature_dim.
struct SyntheticConfig {
  int num_labels = 5;
  int feature_dim = 8;
  double noise = 0.2;
  int min_labels = 2;
  int max_labels = 6;
  std::uint64_t seed = 1;
};

struct SyntheticUtterance {
  Example example;
  std::vector<int> states;  // the generating state sequence
};

std::vector<SyntheticUtterance> GenerateSynthetic(int count, const SyntheticConfig& config);

std::vector<Example> ExamplesOf(const std::vector<SyntheticUtterance>& utterances);

}  // namespace ctccrf::am

#endif  // CTCCRF_SYNTHETIC_H_
