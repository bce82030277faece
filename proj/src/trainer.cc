// ctccrf/trainer.cc

#include "ctccrf/trainer.h"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <exception>
#include <numeric>
#include <random>

#include "ctccrf/decoder.h"
#include "ctccrf/error_rate.h"

namespace ctccrf::am {

void TrainConfig::Validate() const {
  if (epochs < 0) throw DataError("train: epochs must be non-negative");
  if (batch_size < 1) throw DataError("train: batch size must be positive");
  if (!(learning_rate >= 0.0)) throw DataError("train: learning rate must be non-negative");
  if (!(alpha >= 0.0)) throw DataError("train: alpha must be non-negative");
  if (!(clip_norm >= 0.0)) throw DataError("train: clip norm must be non-negative");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw DataError("train: dropout must be in [0, 1)");
  if (workers < 0) throw DataError("train: workers must be non-negative");
  if (optimizer == OptimizerKind::kAdam &&
      !(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0 && epsilon > 0.0)) {
    throw DataError("train: invalid Adam hyperparameters");
  }
}

void AttachLogPl(std::span<Example> examples, const Alphabet& alphabet,
                 const lm::NGramModel& lm) {
  for (Example& ex : examples) {
    try {
      std::vector<std::string> names = alphabet.Decode(ex.labels);
      ex.log_pl = lm::ScoreSequence(lm, names);
    } catch (const DataError& e) {
      throw DataError("utterance " + ex.id + ": " + e.what());
    }
  }
}

Matrix SubsampleFrames(const Matrix& features, int factor) {
  if (factor < 1) throw DataError("subsample factor must be positive");
  const Eigen::Index kept = (features.rows() + factor - 1) / factor;
  Matrix out(kept, features.cols());
  for (Eigen::Index i = 0; i < kept; ++i) out.row(i) = features.row(i * factor);
  return out;
}

double GreedyTokenError(const AcousticModel& model, std::span<const Example> data) {
  std::vector<std::vector<int>> hyp, ref;
  for (const Example& ex : data) {
    hyp.push_back(decode::GreedyDecode(model.ForwardLogProbs(ex.features)));
    ref.push_back(ex.labels);
  }
  return decode::EvaluateErrorRate(hyp, ref).rate();
}

namespace {

struct UtteranceGrad {
  double objective = 0.0;
  long frames = 0;
  bool ok = false;
  std::vector<Matrix> grads;
};

bool AllFinite(const std::vector<Matrix>& tensors) {
  for (const Matrix& m : tensors) {
    if (!m.allFinite()) return false;
  }
  return true;
}

class Optimizer {
 public:
  Optimizer(const TrainConfig& config, const std::vector<Matrix>& params) : config_(config) {
    if (config.optimizer == OptimizerKind::kAdam) {
      for (const Matrix& p : params) {
        m_.push_back(Matrix::Zero(p.rows(), p.cols()));
        v_.push_back(Matrix::Zero(p.rows(), p.cols()));
      }
    }
  }

  // Gradient ascent step.
  void Step(std::vector<Matrix>& params, const std::vector<Matrix>& grads) {
    const double lr = config_.learning_rate;
    if (config_.optimizer == OptimizerKind::kSgd) {
      for (std::size_t i = 0; i < params.size(); ++i) params[i] += lr * grads[i];
      return;
    }
    ++step_;
    const double c1 = 1.0 - std::pow(config_.beta1, step_);
    const double c2 = 1.0 - std::pow(config_.beta2, step_);
    for (std::size_t i = 0; i < params.size(); ++i) {
      m_[i] = config_.beta1 * m_[i] + (1.0 - config_.beta1) * grads[i];
      v_[i] = config_.beta2 * v_[i] + (1.0 - config_.beta2) * grads[i].cwiseAbs2();
      params[i].array() += lr * (m_[i].array() / c1) /
                           ((v_[i].array() / c2).sqrt() + config_.epsilon);
    }
  }

 private:
  const TrainConfig& config_;
  std::vector<Matrix> m_, v_;
  int step_ = 0;
};

}  // namespace

TrainResult Train(const TrainConfig& config, AcousticModel model,
                  std::span<const Example> train, std::span<const Example> heldout,
                  const crf::DenominatorTable& den,
                  const std::function<void(const EpochMetrics&, const AcousticModel&)>& on_epoch) {
  config.Validate();
  if (train.empty()) throw DataError("train: empty training set");
  if (model.output_dim() != den.num_labels()) {
    throw DataError("train: model output width does not match the denominator table");
  }
  model.set_dropout(config.dropout);

  TrainResult result;
  std::mt19937_64 rng(config.seed);
  Optimizer optimizer(config, model.params());
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);
  const int workers = config.workers > 0 ? config.workers : omp_get_max_threads();

  for (int epoch = 1; epoch <= config.epochs && !result.diverged; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_objective = 0.0;
    long epoch_frames = 0;
    int degenerate = 0;

    for (std::size_t begin = 0; begin < order.size() && !result.diverged;
         begin += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t end = std::min(order.size(), begin + config.batch_size);
      const int n = static_cast<int>(end - begin);
      std::vector<UtteranceGrad> per(n);
      std::vector<std::exception_ptr> errors(n);

#pragma omp parallel for schedule(dynamic) num_threads(workers)
      for (int k = 0; k < n; ++k) {
        const std::size_t idx = order[begin + k];
        const Example& ex = train[idx];
        try {
          // Dropout noise depends only on (seed, epoch, utterance), not on
          // which worker runs it.
          std::seed_seq seq{config.seed, static_cast<std::uint64_t>(epoch),
                            static_cast<std::uint64_t>(idx)};
          std::mt19937_64 drop_rng(seq);
          ForwardCache cache;
          model.ForwardLogProbs(ex.features, &cache, config.dropout > 0.0 ? &drop_rng : nullptr);
          crf::LossResult loss =
              crf::CrfLoss(cache.log_probs, ex.labels, ex.log_pl, den, config.alpha);
          UtteranceGrad& u = per[k];
          u.ok = loss.ok();
          if (u.ok) {
            u.objective = loss.objective;
            u.frames = ex.features.rows();
            u.grads = model.Backward(cache, loss.grad);
          }
        } catch (...) {
          errors[k] = std::current_exception();
        }
      }

      bool numerical_failure = false;
      for (int k = 0; k < n; ++k) {
        if (!errors[k]) continue;
        try {
          std::rethrow_exception(errors[k]);
        } catch (const NumericalError&) {
          numerical_failure = true;
        }
      }

      std::vector<Matrix> grads;
      double batch_objective = 0.0;
      long batch_frames = 0;
      if (!numerical_failure) {
        for (const Matrix& p : model.params()) grads.push_back(Matrix::Zero(p.rows(), p.cols()));
        for (const UtteranceGrad& u : per) {
          if (!u.ok) {
            ++degenerate;
            continue;
          }
          batch_objective += u.objective;
          batch_frames += u.frames;
          for (std::size_t i = 0; i < grads.size(); ++i) grads[i] += u.grads[i];
        }
        numerical_failure = !std::isfinite(batch_objective) || !AllFinite(grads);
      }
      if (numerical_failure) {
        result.diverged = true;
        break;
      }
      if (batch_frames == 0) continue;

      double norm_sq = 0.0;
      for (Matrix& g : grads) {
        g /= static_cast<double>(batch_frames);
        norm_sq += g.squaredNorm();
      }
      const double norm = std::sqrt(norm_sq);
      if (config.clip_norm > 0.0 && norm > config.clip_norm) {
        for (Matrix& g : grads) g *= config.clip_norm / norm;
      }

      std::vector<Matrix> last_good = model.params();
      optimizer.Step(model.params(), grads);
      if (!AllFinite(model.params())) {
        model.params() = std::move(last_good);
        result.diverged = true;
        break;
      }
      epoch_objective += batch_objective;
      epoch_frames += batch_frames;
    }
    if (result.diverged) break;

    EpochMetrics metrics;
    metrics.epoch = epoch;
    metrics.objective = epoch_frames > 0 ? epoch_objective / epoch_frames : 0.0;
    metrics.token_error = heldout.empty() ? 0.0 : GreedyTokenError(model, heldout);
    metrics.degenerate = degenerate;
    result.metrics.push_back(metrics);
    if (on_epoch) on_epoch(metrics, model);
  }
  result.model = std::move(model);
  return result;
}

}  // namespace ctccrf::am
