// ctccrf/gradcheck.cc

#include "ctccrf/gradcheck.h"

#include <algorithm>
#include <string>
#include <vector>

#include "ctccrf/crf_loss.h"
#include "ctccrf/den_table.h"
#include "ctccrf/graphs.h"
#include "ctccrf/matrix_io.h"
#include "ctccrf/model.h"
#include "ctccrf/oracle.h"

namespace ctccrf::oracle {

Matrix RandomLogSoftmax(std::mt19937_64& rng, int frames, int width, double scale) {
  std::normal_distribution<double> dist(0.0, scale);
  Matrix logits(frames, width);
  for (Eigen::Index k = 0; k < logits.size(); ++k) logits.data()[k] = dist(rng);
  return LogSoftmaxRows(logits);
}

lm::NGramModel RandomLabelLm(std::mt19937_64& rng, const Alphabet& alphabet, int order,
                             int sentences) {
  std::uniform_int_distribution<int> length(0, 4);
  std::uniform_int_distribution<int> label(0, alphabet.NumLabels() - 1);
  std::uniform_real_distribution<double> discount(0.2, 0.8);
  std::vector<std::vector<std::string>> corpus;
  for (int s = 0; s < sentences; ++s) {
    std::vector<std::string> sentence;
    const int n = length(rng);
    for (int i = 0; i < n; ++i) sentence.push_back(alphabet.labels()[label(rng)]);
    corpus.push_back(sentence);
  }
  return lm::Estimate(corpus, order, discount(rng), alphabet.labels());
}

fst::Wfst RandomDecodingGraph(std::mt19937_64& rng, const Alphabet& ab, int num_states,
                              int num_arcs, int num_words) {
  SymbolTable words;
  for (int w = 0; w < num_words; ++w) words.AddSymbol("w" + std::to_string(w));
  fst::Wfst g(ab.StateSymbols(), words, SemiringKind::kTropical);
  for (int s = 0; s < num_states; ++s) g.AddState();
  g.SetStart(0);
  std::uniform_int_distribution<int> state(0, num_states - 1), sym(0, ab.NumStates());
  std::uniform_int_distribution<int> word(0, num_words);
  std::uniform_real_distribution<double> weight(-3.0, 0.0);
  for (int k = 0; k < num_arcs; ++k) {
    int from = state(rng), to = state(rng), il = sym(rng);
    if (il == kEpsilon && to <= from) {
      if (from == num_states - 1) continue;
      to = std::uniform_int_distribution<int>(from + 1, num_states - 1)(rng);
    }
    g.AddArc(from, {il, word(rng), weight(rng), to});
  }
  g.SetFinal(num_states - 1, weight(rng));
  g.SetFinal(state(rng), weight(rng));
  return g;
}

namespace {

Alphabet Letters(int n) {
  std::vector<std::string> names;
  for (int i = 0; i < n; ++i) names.push_back(std::string(1, static_cast<char>('a' + i)));
  return Alphabet(names);
}

// Random label sequence that always has a CTC path of `frames` frames.
std::vector<int> FeasibleLabels(std::mt19937_64& rng, int frames, int num_labels) {
  std::uniform_int_distribution<int> len(0, (frames + 1) / 2), sym(1, num_labels);
  std::vector<int> l(len(rng));
  for (int& x : l) x = sym(rng);
  return l;
}

}  // namespace

CheckResult CheckLossAgainstEnumeration(int cases, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  CheckResult out;
  for (int c = 0; c < cases; ++c) {
    const Alphabet ab = Letters(1 + c % 2);
    const lm::NGramModel lm = RandomLabelLm(rng, ab, 1 + (c / 2) % 2);
    const crf::DenominatorTable den =
        crf::FlattenDenominator(fst::BuildDenominatorGraph(ab, lm));
    const int frames = 1 + c % 5;
    const Matrix pot = RandomLogSoftmax(rng, frames, ab.NumStates());

    const double den_brute = BruteForceDenominator(
        pot, [&lm](const std::vector<int>& l) { return LmPathSum(lm, l); });
    const double den_fb = crf::DenominatorForwardBackward(pot, den).score;
    out.max_error = std::max(out.max_error, std::abs(den_fb - den_brute));

    std::uniform_int_distribution<int> len(0, frames), sym(1, ab.NumLabels());
    std::vector<int> l(len(rng));
    for (int& x : l) x = sym(rng);
    const double log_pl = lm::ScoreSequenceIds(lm, l);
    const auto num = crf::NumeratorForwardBackward(pot, l, log_pl);
    const double num_brute = BruteForceCtc(pot, l);
    if (num_brute == kLogZero) {
      if (num.feasible) out.max_error = std::numeric_limits<double>::infinity();
    } else {
      out.max_error = std::max(out.max_error, std::abs(num.score - (log_pl + num_brute)));
    }
    ++out.cases;
  }
  return out;
}

CheckResult CheckPotentialGradients(int cases, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  CheckResult out;
  for (int c = 0; c < cases; ++c) {
    const Alphabet ab = Letters(1 + c % 3);
    const lm::NGramModel lm = RandomLabelLm(rng, ab, 1 + c % 2);
    const crf::DenominatorTable den =
        crf::FlattenDenominator(fst::BuildDenominatorGraph(ab, lm));
    const int frames = 2 + c % 4;
    const Matrix pot = RandomLogSoftmax(rng, frames, ab.NumStates());
    const std::vector<int> l = FeasibleLabels(rng, frames, ab.NumLabels());
    const double log_pl = lm::ScoreSequenceIds(lm, l);
    const double alpha = c % 4 == 3 ? 0.0 : 0.1;

    const crf::LossResult r = crf::CrfLoss(pot, l, log_pl, den, alpha);
    const Matrix fd = FiniteDifferenceGradient(
        [&](const Matrix& x) { return crf::CrfLoss(x, l, log_pl, den, alpha).objective; }, pot,
        1e-4);
    out.max_error = std::max(out.max_error, MaxRelativeError(r.grad, fd));
    ++out.cases;
  }
  return out;
}

CheckResult CheckModelGradients(int cases, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  CheckResult out;
  for (int c = 0; c < cases; ++c) {
    const Alphabet ab = Letters(2);
    const lm::NGramModel lm = RandomLabelLm(rng, ab, 2);
    const crf::DenominatorTable den =
        crf::FlattenDenominator(fst::BuildDenominatorGraph(ab, lm));
    am::AcousticModel model({am::LayerSpec::Recurrent(4, 5, true), am::LayerSpec::Tanh(10),
                             am::LayerSpec::Affine(10, ab.NumStates())},
                            rng());
    const int frames = 3 + c % 4;
    std::normal_distribution<double> gauss(0.0, 1.0);
    Matrix x(frames, 4);
    for (Eigen::Index k = 0; k < x.size(); ++k) x.data()[k] = gauss(rng);
    const std::vector<int> l = FeasibleLabels(rng, frames, ab.NumLabels());
    const double log_pl = lm::ScoreSequenceIds(lm, l);

    am::ForwardCache cache;
    model.ForwardLogProbs(x, &cache);
    const crf::LossResult loss = crf::CrfLoss(cache.log_probs, l, log_pl, den, 0.1);
    const std::vector<Matrix> grads = model.Backward(cache, loss.grad);
    for (std::size_t i = 0; i < model.params().size(); ++i) {
      Matrix& p = model.params()[i];
      const Matrix fd = FiniteDifferenceGradient(
          [&](const Matrix& v) {
            const Matrix saved = p;
            p = v;
            const double obj = crf::CrfLoss(model.ForwardLogProbs(x), l, log_pl, den, 0.1).objective;
            p = saved;
            return obj;
          },
          p, 1e-4);
      out.max_error = std::max(out.max_error, MaxRelativeError(grads[i], fd));
    }
    ++out.cases;
  }
  return out;
}

}  // namespace ctccrf::oracle
