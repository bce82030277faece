// ctccrf/trainer.h

#ifndef CTCCRF_TRAINER_H_
#define CTCCRF_TRAINER_H_

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "ctccrf/alphabet.h"
#include "ctccrf/crf_loss.h"
#include "ctccrf/model.h"
#include "ctccrf/ngram.h"

namespace ctccrf::am {

enum class OptimizerKind { kSgd, kAdam };

struct TrainConfig {
  double alpha = 0.1;  // auxiliary CTC weight
  double learning_rate = 1e-3;
  OptimizerKind optimizer = OptimizerKind::kAdam;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  int epochs = 10;
  int batch_size = 8;
  std::uint64_t seed = 0;
  double clip_norm = 5.0;  // 0 disables clipping
  int workers = 1;
  double dropout = 0.0;

  /// Throws DataError on non-positive sizes or negative rates.
  void Validate() const;
};

struct Example {
  std::string id;
  Matrix features;
  std::vector<int> labels;  // state ids
  double log_pl = 0.0;      // log p(l) under the denominator LM
};

struct EpochMetrics {
  int epoch = 0;
  double objective = 0.0;    // mean frame-normalized objective over the epoch
  double token_error = 0.0;  // greedy decoding on the held-out split
  int degenerate = 0;
};

struct TrainResult {
  AcousticModel model;
  std::vector<EpochMetrics> metrics;
  bool diverged = false;  // model holds the last finite parameters
};

/// Fills Example::log_pl with the denominator LM score of each label
/// sequence.
void AttachLogPl(std::span<Example> examples, const Alphabet& alphabet,
                 const lm::NGramModel& lm);

/// Mini-batch maximisation of the mean frame-normalized CRF objective (plus
/// the auxiliary CTC term). Per-utterance gradients are summed in index
/// order, so a run is reproducible for a fixed seed at any worker count.
TrainResult Train(const TrainConfig& config, AcousticModel model,
                  std::span<const Example> train, std::span<const Example> heldout,
                  const crf::DenominatorTable& den,
                  const std::function<void(const EpochMetrics&, const AcousticModel&)>& on_epoch = {});

/// Greedy-decoding token error rate of `model` over `data`.
double GreedyTokenError(const AcousticModel& model, std::span<const Example> data);

/// Keeps frames 0, factor, 2*factor, ...
Matrix SubsampleFrames(const Matrix& features, int factor);

}  // namespace ctccrf::am

#endif  // CTCCRF_TRAINER_H_
