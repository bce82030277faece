// tests/acoustic_test.cc

#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "ctccrf/crf_loss.h"
#include "ctccrf/den_table.h"
#include "ctccrf/graphs.h"
#include "ctccrf/model.h"
#include "ctccrf/oracle.h"
#include "ctccrf/synthetic.h"
#include "ctccrf/trainer.h"
#include "test_util.h"

namespace ctccrf::am {
namespace {

Matrix RandomMatrix(std::mt19937_64& rng, int rows, int cols) {
  std::normal_distribution<double> dist(0.0, 1.0);
  Matrix m(rows, cols);
  for (Eigen::Index k = 0; k < m.size(); ++k) m.data()[k] = dist(rng);
  return m;
}

// Worst relative error between Backward() and central differences of
// `objective` over every parameter.
double ParameterGradError(AcousticModel& model, const std::vector<Matrix>& analytic,
                          const std::function<double()>& objective) {
  double worst = 0.0;
  for (std::size_t i = 0; i < model.params().size(); ++i) {
    Matrix& p = model.params()[i];
    Matrix fd = oracle::FiniteDifferenceGradient(
        [&](const Matrix& x) {
          Matrix saved = p;
          p = x;
          const double v = objective();
          p = saved;
          return v;
        },
        p, 1e-4);
    worst = std::max(worst, oracle::MaxRelativeError(analytic[i], fd));
  }
  return worst;
}

TEST(ModelTest, ZeroFinalLayerGivesUniformRows) {
  AcousticModel model({LayerSpec::Affine(4, 6), LayerSpec::Tanh(6), LayerSpec::Affine(6, 5)}, 1);
  model.params()[2].setZero();
  model.params()[3].setZero();
  std::mt19937_64 rng(1);
  PosteriorMatrix out = model.Forward(RandomMatrix(rng, 3, 4));
  for (int t = 0; t < 3; ++t) {
    for (int s = 0; s < 5; ++s) EXPECT_NEAR(out(t, s), -std::log(5.0), 1e-15);
  }
}

TEST(ModelTest, PointwiseModelMapsEqualFramesEqually) {
  AcousticModel model({LayerSpec::Affine(3, 4), LayerSpec::Tanh(4), LayerSpec::Affine(4, 3)}, 2);
  Matrix x(4, 3);
  x.rowwise() = Eigen::RowVector3d(0.3, -1.0, 2.0);
  Matrix y = model.ForwardLogProbs(x);
  for (int t = 1; t < 4; ++t) EXPECT_TRUE(y.row(t) == y.row(0));
}

TEST(ModelTest, DeterministicGivenSeed) {
  std::vector<LayerSpec> layers{LayerSpec::Recurrent(3, 4, true), LayerSpec::Affine(8, 3)};
  AcousticModel a(layers, 7), b(layers, 7), c(layers, 8);
  std::mt19937_64 rng(3);
  Matrix x = RandomMatrix(rng, 5, 3);
  EXPECT_TRUE(a.ForwardLogProbs(x) == b.ForwardLogProbs(x));
  EXPECT_FALSE(a.ForwardLogProbs(x) == c.ForwardLogProbs(x));
  EXPECT_EQ(a.NumParameters(), 2u * (4 * 3 + 4 * 4 + 4) + 8 * 3 + 3);
}

TEST(ModelTest, RowsAreLogSoftmax) {
  AcousticModel model({LayerSpec::Recurrent(3, 5, false), LayerSpec::Affine(5, 4)}, 4);
  std::mt19937_64 rng(4);
  Matrix y = model.ForwardLogProbs(RandomMatrix(rng, 6, 3));
  for (int t = 0; t < 6; ++t) EXPECT_NEAR(y.row(t).array().exp().sum(), 1.0, 1e-12);
}

TEST(ModelTest, ShapeErrors) {
  AcousticModel model({LayerSpec::Affine(3, 4)}, 1);
  EXPECT_THROW(model.Forward(Matrix::Zero(2, 5)), DataError);
  EXPECT_THROW(AcousticModel({LayerSpec::Affine(3, 4), LayerSpec::Affine(5, 2)}, 1), DataError);
  EXPECT_THROW(AcousticModel({LayerSpec::Affine(3, 4), LayerSpec::Tanh(4)}, 1), DataError);
  ForwardCache cache;
  model.ForwardLogProbs(Matrix::Zero(2, 3), &cache);
  EXPECT_THROW(model.Backward(cache, Matrix::Zero(3, 4)), DataError);
}

TEST(BackwardTest, MatchesFiniteDifferences) {
  const std::vector<std::vector<LayerSpec>> configs{
      {LayerSpec::Affine(3, 5), LayerSpec::Tanh(5), LayerSpec::Affine(5, 4)},
      {LayerSpec::Recurrent(3, 4, false), LayerSpec::Affine(4, 4)},
      {LayerSpec::Recurrent(3, 3, true), LayerSpec::Tanh(6), LayerSpec::Affine(6, 4)},
  };
  std::mt19937_64 rng(5);
  for (const auto& layers : configs) {
    AcousticModel model(layers, 9);
    Matrix x = RandomMatrix(rng, 5, 3), upstream = RandomMatrix(rng, 5, 4);
    ForwardCache cache;
    model.ForwardLogProbs(x, &cache);
    std::vector<Matrix> grads = model.Backward(cache, upstream);
    const double err = ParameterGradError(model, grads, [&] {
      return upstream.cwiseProduct(model.ForwardLogProbs(x)).sum();
    });
    EXPECT_LT(err, 1e-3);
  }
}

TEST(BackwardTest, LinearInUpstream) {
  AcousticModel model({LayerSpec::Recurrent(3, 4, true), LayerSpec::Affine(8, 4)}, 10);
  std::mt19937_64 rng(6);
  Matrix x = RandomMatrix(rng, 4, 3), up = RandomMatrix(rng, 4, 4);
  ForwardCache cache;
  model.ForwardLogProbs(x, &cache);
  auto zero = model.Backward(cache, Matrix::Zero(4, 4));
  auto once = model.Backward(cache, up);
  auto twice = model.Backward(cache, 2.0 * up);
  for (std::size_t i = 0; i < once.size(); ++i) {
    EXPECT_EQ(zero[i].cwiseAbs().sum(), 0.0);
    EXPECT_TRUE(twice[i] == 2.0 * once[i]);
  }
}

TEST(BackwardTest, EndToEndThroughLossMatchesFiniteDifferences) {
  std::mt19937_64 rng(7);
  Alphabet ab = testing::LetterAlphabet(2);
  lm::NGramModel lm = testing::RandomLabelLm(rng, ab, 2);
  crf::DenominatorTable den = crf::FlattenDenominator(fst::BuildDenominatorGraph(ab, lm));
  AcousticModel model({LayerSpec::Recurrent(4, 5, true), LayerSpec::Tanh(10), LayerSpec::Affine(10, 3)},
                      11);
  ASSERT_LE(model.NumParameters(), 500u);
  Matrix x = RandomMatrix(rng, 6, 4);
  const std::vector<int> l{1, 2, 1};
  const double log_pl = lm::ScoreSequenceIds(lm, l);
  ForwardCache cache;
  model.ForwardLogProbs(x, &cache);
  crf::LossResult loss = crf::CrfLoss(cache.log_probs, l, log_pl, den, 0.1);
  ASSERT_TRUE(loss.ok());
  std::vector<Matrix> grads = model.Backward(cache, loss.grad);
  const double err = ParameterGradError(model, grads, [&] {
    return crf::CrfLoss(model.ForwardLogProbs(x), l, log_pl, den, 0.1).objective;
  });
  EXPECT_LT(err, 1e-3);
}

TEST(DropoutTest, OnlyWithRngAndScaled) {
  AcousticModel model({LayerSpec::Recurrent(3, 50, false), LayerSpec::Affine(50, 3)}, 12);
  model.set_dropout(0.5);
  std::mt19937_64 data(8);
  Matrix x = RandomMatrix(data, 4, 3);
  EXPECT_TRUE(model.ForwardLogProbs(x) == model.ForwardLogProbs(x));
  std::mt19937_64 rng(1);
  ForwardCache cache;
  model.ForwardLogProbs(x, &cache, &rng);
  const Matrix& mask = cache.dropout_masks[0];
  ASSERT_EQ(mask.rows(), 4);
  for (Eigen::Index k = 0; k < mask.size(); ++k) {
    EXPECT_TRUE(mask.data()[k] == 0.0 || mask.data()[k] == 2.0);
  }
  EXPECT_GT((mask.array() == 0.0).count(), 0);
  EXPECT_GT((mask.array() == 2.0).count(), 0);
}

TEST(CheckpointTest, ReloadIsBitExact) {
  AcousticModel model({LayerSpec::Recurrent(3, 4, true), LayerSpec::Affine(8, 5)}, 13);
  std::stringstream first;
  model.Save(first);
  const std::string bytes = first.str();
  AcousticModel loaded = AcousticModel::Load(first);
  std::stringstream second;
  loaded.Save(second);
  EXPECT_EQ(second.str(), bytes);
  ASSERT_EQ(loaded.params().size(), model.params().size());
  for (std::size_t i = 0; i < model.params().size(); ++i) {
    Matrix rounded = model.params()[i].cast<float>().cast<double>();
    EXPECT_TRUE(loaded.params()[i] == rounded);
  }
  EXPECT_EQ(bytes.substr(0, 8), "CTCCRFAM");
}

TEST(CheckpointTest, RejectsCorruptInput) {
  AcousticModel model({LayerSpec::Affine(2, 3)}, 1);
  std::stringstream ss;
  model.Save(ss);
  std::string bytes = ss.str();
  std::stringstream truncated(bytes.substr(0, bytes.size() - 3));
  EXPECT_THROW(AcousticModel::Load(truncated), DataError);
  bytes[0] = 'X';
  std::stringstream bad(bytes);
  EXPECT_THROW(AcousticModel::Load(bad), DataError);
}

TEST(SubsampleTest, KeepsEveryThirdFrame) {
  Matrix x(10, 2);
  for (int t = 0; t < 10; ++t) x.row(t) << t, -t;
  Matrix y = SubsampleFrames(x, 3);
  ASSERT_EQ(y.rows(), 4);
  for (int i = 0; i < 4; ++i) EXPECT_EQ(y(i, 0), 3 * i);
  EXPECT_THROW(SubsampleFrames(x, 0), DataError);
}

TEST(SyntheticTest, FeaturesEncodeStates) {
  SyntheticConfig config;
  config.noise = 0.0;
  auto utts = GenerateSynthetic(20, config);
  ASSERT_EQ(utts.size(), 20u);
  for (const auto& u : utts) {
    EXPECT_EQ(MapB(u.states, config.num_labels + 1), u.example.labels);
    ASSERT_EQ(u.example.features.rows(), static_cast<Eigen::Index>(u.states.size()));
    for (std::size_t t = 0; t < u.states.size(); ++t) {
      EXPECT_EQ(u.example.features(t, u.states[t]), 1.0);
      EXPECT_EQ(u.example.features.row(t).sum(), 1.0);
    }
  }
}

struct ToyTask {
  Alphabet alphabet = testing::LetterAlphabet(5);
  std::vector<Example> train, heldout;
  crf::DenominatorTable den;

  explicit ToyTask(int num_train, std::uint64_t seed = 1) {
    SyntheticConfig config;
    config.seed = seed;
    auto all = ExamplesOf(GenerateSynthetic(num_train + 10, config));
    train.assign(all.begin(), all.begin() + num_train);
    heldout.assign(all.begin() + num_train, all.end());
    std::vector<std::vector<std::string>> corpus;
    for (const auto& ex : train) corpus.push_back(alphabet.Decode(ex.labels));
    lm::NGramModel lm = lm::Estimate(corpus, 2, 0.5, alphabet.labels());
    AttachLogPl(train, alphabet, lm);
    AttachLogPl(heldout, alphabet, lm);
    den = crf::FlattenDenominator(fst::BuildDenominatorGraph(alphabet, lm));
  }
};

AcousticModel ToyModel(std::uint64_t seed) {
  return AcousticModel({LayerSpec::Recurrent(8, 12, true), LayerSpec::Affine(24, 6)}, seed);
}

TEST(TrainTest, ZeroLearningRateLeavesParameters) {
  ToyTask task(16);
  TrainConfig config;
  config.learning_rate = 0.0;
  config.epochs = 1;
  AcousticModel model = ToyModel(3);
  TrainResult r = Train(config, model, task.train, task.heldout, task.den);
  ASSERT_EQ(r.metrics.size(), 1u);
  for (std::size_t i = 0; i < model.params().size(); ++i) {
    EXPECT_TRUE(r.model.params()[i] == model.params()[i]);
  }
}

TEST(TrainTest, SameSeedSameMetrics) {
  ToyTask task(24);
  TrainConfig config;
  config.epochs = 2;
  config.learning_rate = 0.01;
  config.dropout = 0.2;
  TrainResult a = Train(config, ToyModel(4), task.train, task.heldout, task.den);
  TrainResult b = Train(config, ToyModel(4), task.train, task.heldout, task.den);
  ASSERT_EQ(a.metrics.size(), 2u);
  for (std::size_t e = 0; e < 2; ++e) {
    EXPECT_EQ(a.metrics[e].objective, b.metrics[e].objective);
    EXPECT_EQ(a.metrics[e].token_error, b.metrics[e].token_error);
  }
  config.workers = 3;
  TrainResult c = Train(config, ToyModel(4), task.train, task.heldout, task.den);
  EXPECT_EQ(a.metrics[1].objective, c.metrics[1].objective);
}

TEST(TrainTest, ObjectiveRisesWithSgdInMostSeeds) {
  int monotone = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    ToyTask task(40, seed + 100);
    TrainConfig config;
    config.optimizer = OptimizerKind::kSgd;
    config.learning_rate = 0.01;
    config.epochs = 5;
    config.seed = seed;
    TrainResult r = Train(config, ToyModel(seed), task.train, task.heldout, task.den);
    bool ok = r.metrics.size() == 5;
    for (std::size_t e = 1; ok && e < r.metrics.size(); ++e) {
      ok = r.metrics[e].objective >= r.metrics[e - 1].objective;
    }
    monotone += ok;
  }
  std::cout << "monotone seeds: " << monotone << "/10\n";
  EXPECT_GE(monotone, 9);
}

TEST(TrainTest, DivergenceKeepsLastFiniteModel) {
  ToyTask task(8);
  TrainConfig config;
  config.optimizer = OptimizerKind::kSgd;
  config.learning_rate = 1e308;
  config.clip_norm = 0.0;
  config.epochs = 3;
  AcousticModel model = ToyModel(5);
  TrainResult r = Train(config, model, task.train, task.heldout, task.den);
  EXPECT_TRUE(r.diverged);
  for (const Matrix& p : r.model.params()) EXPECT_TRUE(p.allFinite());
}

TEST(TrainTest, ConfigValidation) {
  TrainConfig config;
  config.batch_size = 0;
  EXPECT_THROW(config.Validate(), DataError);
  config = TrainConfig();
  config.learning_rate = -1.0;
  EXPECT_THROW(config.Validate(), DataError);
  config = TrainConfig();
  config.dropout = 1.0;
  EXPECT_THROW(config.Validate(), DataError);
}

}  // namespace
}  // namespace ctccrf::am
