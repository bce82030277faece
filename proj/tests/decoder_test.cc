// tests/decoder_test.cc

#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <set>
#include <sstream>

#include "ctccrf/decoder.h"
#include "ctccrf/error_rate.h"
#include "ctccrf/graphs.h"
#include "ctccrf/oracle.h"
#include "test_util.h"

namespace ctccrf::decode {
namespace {

using testing::LetterAlphabet;

using oracle::BestPathByEnumeration;
using oracle::RandomDecodingGraph;

// Per-frame distribution with `peak` on the given state.
Matrix Spiky(const std::vector<int>& states, int width, double peak) {
  Matrix m(static_cast<Eigen::Index>(states.size()), width);
  const double rest = std::log((1.0 - peak) / (width - 1));
  m.setConstant(rest);
  for (std::size_t t = 0; t < states.size(); ++t) m(t, states[t]) = std::log(peak);
  return m;
}

lm::NGramModel UniformWordLm(const std::vector<std::string>& words) {
  lm::NGramModel lm(1, words);
  const double p = -std::log(words.size() + 1.0);
  for (int w = 1; w <= static_cast<int>(words.size()); ++w) lm.SetEntry({w}, {p});
  lm.SetEntry({lm.Eos()}, {p});
  return lm;
}

TEST(GreedyTest, Examples) {
  EXPECT_EQ(GreedyDecode(Spiky({0, 1, 1, 0, 2}, 3, 0.9)), (std::vector<int>{1, 2}));
  EXPECT_TRUE(GreedyDecode(Spiky({0, 0, 0}, 3, 0.9)).empty());
  // Ties go to the lowest id.
  EXPECT_TRUE(GreedyDecode(Matrix::Constant(2, 3, -std::log(3.0))).empty());
}

TEST(BeamConfigTest, Validation) {
  BeamConfig c;
  c.width = 0;
  EXPECT_THROW(c.Validate(), DataError);
  c = BeamConfig();
  c.slack = -1.0;
  EXPECT_THROW(c.Validate(), DataError);
  c = BeamConfig();
  c.blank_skip = 0.0;
  EXPECT_THROW(c.Validate(), DataError);
  c.blank_skip = 1.5;
  EXPECT_THROW(c.Validate(), DataError);
  c.blank_skip = 1.0;
  EXPECT_NO_THROW(c.Validate());
}

TEST(DecodingGraphTest, NoLexiconDecodesLabelAsWord) {
  Alphabet ab = LetterAlphabet(2);
  fst::Wfst g = fst::BuildDecodingGraph(ab, std::nullopt, UniformWordLm({"a", "b"}));
  DecodeResult r = BeamDecode(Spiky({1, 0}, 3, 0.9), g, BeamConfig());
  ASSERT_TRUE(r.ok);
  EXPECT_EQ(r.words, (std::vector<int>{1}));
  EXPECT_EQ(fst::DecodingWordSymbols(UniformWordLm({"a", "b"})).Symbol(1), "a");
}

TEST(DecodingGraphTest, LexiconSpellsWord) {
  Alphabet ab({"g", "o"});
  fst::Lexicon lex;
  std::istringstream is("go g o\n");
  lex = fst::Lexicon::Read(is);
  lm::NGramModel lm = UniformWordLm({"go"});
  fst::Wfst g = fst::BuildDecodingGraph(ab, lex, lm);
  // g g <blk> o
  DecodeResult r = BeamDecode(Spiky({1, 1, 0, 2}, 3, 0.9), g, BeamConfig());
  ASSERT_TRUE(r.ok);
  ASSERT_EQ(r.words.size(), 1u);
  EXPECT_EQ(g.osyms().Symbol(r.words[0]), "go");
}

TEST(DecodingGraphTest, Errors) {
  Alphabet ab({"g", "o"});
  fst::Lexicon lex;
  lex.entries.push_back({"go", {"g", "o"}});
  try {
    fst::BuildDecodingGraph(ab, lex, UniformWordLm({"go", "og"}));
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("og"), std::string::npos);
  }
  EXPECT_THROW(fst::BuildDecodingGraph(ab, lex, lm::NGramModel(1, {})), DataError);
}

TEST(ExactnessTest, MatchesEnumerationOnDecodingGraphs) {
  std::mt19937_64 rng(1);
  Alphabet ab = LetterAlphabet(2);
  std::vector<fst::Wfst> graphs;
  graphs.push_back(fst::BuildDecodingGraph(ab, std::nullopt, UniformWordLm({"a", "b"})));
  graphs.push_back(fst::BuildDecodingGraph(ab, std::nullopt,
                                           lm::Estimate({{"a", "b"}, {"b"}, {"a", "a"}}, 2, 0.5)));
  fst::Lexicon lex;
  lex.entries = {{"x", {"a", "b"}}, {"y", {"b"}}};
  graphs.push_back(fst::BuildDecodingGraph(ab, lex, UniformWordLm({"x", "y"})));
  for (const auto& g : graphs) {
    ASSERT_LE(g.NumStates(), 20);
    BeamDecoder decoder(g);
    for (int frames = 1; frames <= 6; ++frames) {
      for (int trial = 0; trial < 5; ++trial) {
        Matrix pot = testing::RandomLogSoftmax(rng, frames, ab.NumStates());
        oracle::BestPaths expect = BestPathByEnumeration(g, pot);
        DecodeResult got = decoder.Decode(pot, BeamConfig());
        ASSERT_EQ(got.ok, expect.score != kLogZero);
        if (!got.ok) continue;
        EXPECT_NEAR(got.score, expect.score, 1e-9);
        EXPECT_TRUE(expect.words.count(got.words));
      }
    }
  }
}

TEST(ExactnessTest, MatchesEnumerationOnRandomGraphs) {
  std::mt19937_64 rng(2);
  int checked = 0;
  for (int trial = 0; trial < 200; ++trial) {
    Alphabet ab = LetterAlphabet(1 + trial % 3);
    const int states = 2 + trial % 19;
    fst::Wfst g = RandomDecodingGraph(rng, ab, states, states + 1 + trial % (states + 2), 3);
    const int frames = 1 + trial % 6;
    Matrix pot = testing::RandomLogSoftmax(rng, frames, ab.NumStates());
    oracle::BestPaths expect = BestPathByEnumeration(g, pot);
    DecodeResult got = BeamDecode(pot, g, BeamConfig());
    ASSERT_EQ(got.ok, expect.score != kLogZero) << "trial " << trial;
    EXPECT_EQ(got.frames_processed, frames);
    if (!got.ok) continue;
    ++checked;
    EXPECT_NEAR(got.score, expect.score, 1e-9) << "trial " << trial;
    EXPECT_TRUE(expect.words.count(got.words)) << "trial " << trial;
  }
  EXPECT_GT(checked, 50);
}

TEST(DecoderTest, NoSurvivorIsFlaggedNotThrown) {
  Alphabet ab = LetterAlphabet(1);
  fst::Wfst g(ab.StateSymbols(), ab.LabelSymbols(), SemiringKind::kTropical);
  g.SetStart(g.AddState());
  g.AddState();
  g.AddArc(0, {ToFstInput(1), 1, 0.0, 1});
  g.SetFinal(1, 0.0);
  DecodeResult r = BeamDecode(Spiky({1, 1}, 2, 0.9), g, BeamConfig());
  EXPECT_FALSE(r.ok);
  EXPECT_TRUE(r.words.empty());
  EXPECT_EQ(r.frames_processed, 2);
}

TEST(DecoderTest, EpsilonCycleTerminates) {
  Alphabet ab = LetterAlphabet(1);
  SymbolTable words;
  words.AddSymbol("w");
  fst::Wfst g(ab.StateSymbols(), words, SemiringKind::kTropical);
  g.SetStart(g.AddState());
  g.AddState();
  g.AddArc(0, {kEpsilon, kEpsilon, -0.5, 1});
  g.AddArc(1, {kEpsilon, kEpsilon, -0.5, 0});
  g.AddArc(1, {ToFstInput(1), 1, -0.1, 1});
  g.SetFinal(1, 0.0);
  DecodeResult r = BeamDecode(Spiky({1, 1}, 2, 0.9), g, BeamConfig());
  ASSERT_TRUE(r.ok);
  EXPECT_EQ(r.words, (std::vector<int>{1, 1}));
  EXPECT_NEAR(r.score, -0.5 - 0.2 + 2 * std::log(0.9), 1e-12);
}

TEST(BlankSkipTest, SkipsConfidentBlankFrames) {
  Alphabet ab = LetterAlphabet(2);
  fst::Wfst g = fst::BuildDecodingGraph(ab, std::nullopt, UniformWordLm({"a", "b"}));
  // Frames 2 and 4 are blank with probability 0.95.
  Matrix pot = Spiky({1, 1, 0, 2, 0, 2}, 3, 0.8);
  pot.row(2) = Spiky({0}, 3, 0.95).row(0);
  pot.row(4) = Spiky({0}, 3, 0.95).row(0);
  BeamConfig off, on;
  on.blank_skip = 0.7;
  DecodeResult a = BeamDecode(pot, g, off), b = BeamDecode(pot, g, on);
  ASSERT_TRUE(a.ok && b.ok);
  EXPECT_EQ(a.words, b.words);
  EXPECT_EQ(a.words, (std::vector<int>{1, 2, 2}));
  EXPECT_EQ(b.frames_skipped, 2);
  EXPECT_EQ(b.frames_processed + b.frames_skipped, 6);
  // Skipped frames contribute nothing unless asked to.
  EXPECT_NEAR(b.score, a.score - 2 * std::log(0.95), 1e-12);
  on.skip_adds_blank_score = true;
  EXPECT_NEAR(BeamDecode(pot, g, on).score, a.score, 1e-12);
}

TEST(BlankSkipTest, PreservesWordsWhenBestPathEmitsBlankThere) {
  std::mt19937_64 rng(3);
  Alphabet ab = LetterAlphabet(3);
  fst::Wfst g = fst::BuildDecodingGraph(
      ab, std::nullopt, lm::Estimate({{"a", "b"}, {"c", "a"}, {"b", "b", "c"}}, 2, 0.5));
  BeamDecoder decoder(g);
  std::uniform_int_distribution<int> sym(0, 3);
  std::bernoulli_distribution confident(0.4);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<int> states(12);
    for (int& s : states) s = sym(rng);
    Matrix pot = Spiky(states, 4, 0.85);
    for (std::size_t t = 0; t < states.size(); ++t) {
      if (states[t] == 0 && confident(rng)) pot.row(t) = Spiky({0}, 4, 0.97).row(0);
    }
    BeamConfig off, on;
    on.blank_skip = 0.7;
    DecodeResult a = decoder.Decode(pot, off), b = decoder.Decode(pot, on);
    ASSERT_TRUE(a.ok && b.ok);
    EXPECT_EQ(a.words, b.words) << "trial " << trial;
  }
}

TEST(BeamTest, WidthOneOnSpikyPosteriorEqualsGreedy) {
  std::mt19937_64 rng(4);
  Alphabet ab = LetterAlphabet(4);
  fst::Wfst g = fst::BuildDecodingGraph(ab, std::nullopt, UniformWordLm(ab.labels()));
  BeamDecoder decoder(g);
  std::uniform_int_distribution<int> sym(0, 4);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<int> states(10);
    for (int& s : states) s = sym(rng);
    Matrix pot = Spiky(states, 5, 0.95);
    BeamConfig narrow;
    narrow.width = 1;
    DecodeResult r = decoder.Decode(pot, narrow);
    ASSERT_TRUE(r.ok);
    // Word ids equal label ids under the identity lexicon.
    EXPECT_EQ(r.words, GreedyDecode(pot)) << "trial " << trial;
    EXPECT_EQ(decoder.Decode(pot, BeamConfig()).words, GreedyDecode(pot));
  }
}

// A wider beam is not guaranteed to score at least as well as a narrower
// one: it can keep hypotheses that crowd out the only one that later reaches
// a final state. What does hold is that the unlimited beam, being exact,
// dominates every width. The violation rate between finite widths is
// reported as a test property.
TEST(BeamTest, UnlimitedBeamDominatesEveryWidth) {
  std::mt19937_64 rng(5);
  int pairs = 0, violations = 0;
  for (int trial = 0; trial < 300; ++trial) {
    Alphabet ab = LetterAlphabet(2 + trial % 3);
    fst::Wfst g = fst::BuildDecodingGraph(ab, std::nullopt,
                                          testing::RandomLabelLm(rng, ab, 1 + trial % 3, 5));
    BeamDecoder decoder(g);
    Matrix pot = testing::RandomLogSoftmax(rng, 3 + trial % 8, ab.NumStates(), 1.0 + trial % 3);
    const DecodeResult exact = decoder.Decode(pot, BeamConfig());
    ASSERT_TRUE(exact.ok);
    double prev = kLogZero;
    for (int width : {1, 2, 3, 5, 8}) {
      BeamConfig c;
      c.width = width;
      DecodeResult r = decoder.Decode(pot, c);
      const double score = r.ok ? r.score : kLogZero;
      EXPECT_LE(score, exact.score + 1e-12) << "trial " << trial << " width " << width;
      ++pairs;
      violations += score < prev;
      prev = std::max(prev, score);
    }
  }
  ::testing::Test::RecordProperty("width_monotonicity_violations", violations);
  std::cout << "width monotonicity violations: " << violations << "/" << pairs << "\n";
}

TEST(BeamTest, SlackPrunes) {
  std::mt19937_64 rng(6);
  Alphabet ab = LetterAlphabet(3);
  fst::Wfst g = fst::BuildDecodingGraph(ab, std::nullopt, UniformWordLm(ab.labels()));
  Matrix pot = testing::RandomLogSoftmax(rng, 8, 4);
  BeamConfig tight;
  tight.slack = 0.0;
  DecodeResult exact = BeamDecode(pot, g, BeamConfig()), pruned = BeamDecode(pot, g, tight);
  if (pruned.ok) {
    EXPECT_LE(pruned.score, exact.score + 1e-12);
  }
}

TEST(ErrorRateTest, Examples) {
  using Words = std::vector<std::vector<std::string>>;
  ErrorRate same = EvaluateErrorRate(Words{{"a", "b"}}, Words{{"a", "b"}});
  EXPECT_EQ(same.rate(), 0.0);
  ErrorRate sub = EvaluateErrorRate(Words{{"a", "b"}}, Words{{"a", "c"}});
  EXPECT_EQ(sub.substitutions, 1);
  EXPECT_EQ(sub.rate(), 0.5);
  ErrorRate del = EvaluateErrorRate(Words{{}}, Words{{"x", "y", "z"}});
  EXPECT_EQ(del.deletions, 3);
  EXPECT_EQ(del.rate(), 1.0);
  ErrorRate ins = EvaluateErrorRate(Words{{"a", "q", "b"}}, Words{{"a", "b"}});
  EXPECT_EQ(ins.insertions, 1);
  EXPECT_EQ(ins.errors(), 1);
  EXPECT_THROW(EvaluateErrorRate(Words{{"a"}}, Words{}), DataError);
}

TEST(ErrorRateTest, CorpusLevelRate) {
  using Ids = std::vector<std::vector<int>>;
  ErrorRate er = EvaluateErrorRate(Ids{{1, 2, 3}, {4}}, Ids{{1, 3}, {5, 6}});
  EXPECT_EQ(er.reference_words, 4);
  EXPECT_EQ(er.errors(), 3);
  EXPECT_EQ(er.rate(), 0.75);
}

}  // namespace
}  // namespace ctccrf::decode
