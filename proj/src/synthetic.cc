// ctccrf/synthetic.cc

#include "ctccrf/synthetic.h"

#include <random>
#include <string>

namespace ctccrf::am {

std::vector<SyntheticUtterance> GenerateSynthetic(int count, const SyntheticConfig& config) {
  const int num_states = config.num_labels + 1;
  if (count < 0 || config.num_labels < 1) throw DataError("synthetic: bad sizes");
  if (config.feature_dim < num_states) {
    throw DataError("synthetic: feature_dim must cover every state");
  }
  if (config.min_labels < 1 || config.max_labels < config.min_labels) {
    throw DataError("synthetic: bad label length range");
  }
  std::mt19937_64 rng(config.seed);
  std::uniform_int_distribution<int> length(config.min_labels, config.max_labels);
  std::uniform_int_distribution<int> label(1, config.num_labels);
  std::uniform_int_distribution<int> run(1, 3);
  std::uniform_int_distribution<int> gap(0, 2);
  std::normal_distribution<double> noise(0.0, config.noise);

  std::vector<SyntheticUtterance> out;
  out.reserve(count);
  for (int u = 0; u < count; ++u) {
    SyntheticUtterance utt;
    utt.example.id = "utt" + std::to_string(u);
    const int n = length(rng);
    for (int i = 0; i < n; ++i) utt.example.labels.push_back(label(rng));

    std::vector<int>& states = utt.states;
    for (int i = 0; i < n; ++i) {
      const int l = utt.example.labels[i];
      int blanks = gap(rng);
      if (i > 0 && utt.example.labels[i - 1] == l && blanks == 0) blanks = 1;
      states.insert(states.end(), blanks, Alphabet::kBlank);
      states.insert(states.end(), run(rng), l);
    }
    states.insert(states.end(), gap(rng), Alphabet::kBlank);

    Matrix& f = utt.example.features;
    f.resize(static_cast<Eigen::Index>(states.size()), config.feature_dim);
    for (Eigen::Index t = 0; t < f.rows(); ++t) {
      for (int d = 0; d < config.feature_dim; ++d) {
        f(t, d) = (d == states[t] ? 1.0 : 0.0) + noise(rng);
      }
    }
    out.push_back(std::move(utt));
  }
  return out;
}

std::vector<Example> ExamplesOf(const std::vector<SyntheticUtterance>& utterances) {
  std::vector<Example> out;
  out.reserve(utterances.size());
  for (const auto& u : utterances) out.push_back(u.example);
  return out;
}

}  // namespace ctccrf::am
