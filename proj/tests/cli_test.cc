// tests/cli_test.cc
//
// Runs the built ctccrf binary end to end in scratch directories.

#include <gtest/gtest.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <random>
#include <regex>
#include <sstream>
#include <string>
#include <vector>

#include "ctccrf/matrix_io.h"
#include "ctccrf/symbol_table.h"
#include "ctccrf/wfst.h"

namespace ctccrf {
namespace {

namespace fs = std::filesystem;

std::string Slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(is), {}};
}

void Spit(const fs::path& p, const std::string& text) {
  std::ofstream os(p, std::ios::binary);
  os << text;
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() /
           ("ctccrf_cli_" + std::to_string(::getpid()) + "_" + info->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override {
    if (!HasFailure()) fs::remove_all(dir_);
  }

  // Runs the binary inside the scratch directory; stdout and stderr land in
  // out_ and err_.
  int Run(const std::string& args) {
    const std::string cmd = "cd '" + dir_.string() + "' && '" CTCCRF_CLI_PATH "' " + args +
                            " > stdout.txt 2> stderr.txt";
    const int status = std::system(cmd.c_str());
    out_ = Slurp(dir_ / "stdout.txt");
    err_ = Slurp(dir_ / "stderr.txt");
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  fs::path P(const std::string& name) const { return dir_ / name; }

  // Two-label toy setup: alphabet, transcripts, features and a bigram LM.
  void TinyCorpus() {
    Spit(P("units.txt"), "a\nb\n");
    Spit(P("text"), "u1 a b\nu2 b\nu3 a a b\n");
    fs::create_directories(P("feats"));
    std::mt19937_64 rng(1);
    std::normal_distribution<double> g(0.0, 1.0);
    for (const char* u : {"u1", "u2", "u3"}) {
      Matrix m(10, 3);
      for (Eigen::Index k = 0; k < m.size(); ++k) m.data()[k] = g(rng);
      WriteMatrixFile(m, P(std::string("feats/") + u + ".catm").string());
    }
    ASSERT_EQ(Run("lm-train --text text --order 2 --vocab units.txt --out den.arpa"), 0) << err_;
  }

  fs::path dir_;
  std::string out_;
  std::string err_;
};

double SkippedPercent(const std::string& err) {
  std::smatch m;
  const std::regex summary(R"(utterances, \d+ frames, skipped ([0-9.]+)%)");
  if (!std::regex_search(err, m, summary)) return -1.0;
  return std::stod(m[1]);
}

double ErrorPercent(const std::string& report) {
  std::smatch m;
  if (!std::regex_search(report, m, std::regex(R"(%ER ([0-9.]+))"))) return -1.0;
  return std::stod(m[1]);
}

TEST_F(CliTest, ToyPipeline) {
  ASSERT_EQ(Run("synth --out raw_train --count 120 --seed 1"), 0) << err_;
  ASSERT_EQ(Run("synth --out raw_test --count 30 --seed 2"), 0) << err_;
  ASSERT_EQ(Run("lm-train --text raw_train/text --vocab raw_train/units.txt --out den.arpa"), 0)
      << err_;
  ASSERT_EQ(Run("build-graphs --alphabet raw_train/units.txt --den-arpa den.arpa --out graphs"), 0)
      << err_;
  EXPECT_NE(err_.find("TLG.fst:"), std::string::npos);
  for (const char* split : {"train", "test"}) {
    ASSERT_EQ(Run(std::string("prepare --alphabet raw_train/units.txt --text raw_") + split +
                  "/text --feats raw_" + split + "/feats --den-arpa den.arpa --out " + split),
              0)
        << err_;
  }
  ASSERT_EQ(Run("train --data train --heldout test --den-table graphs/den_table.txt --out am "
                "--epochs 15 --learning-rate 0.01"),
            0)
      << err_;
  EXPECT_TRUE(fs::exists(P("am/final.ckpt")));
  EXPECT_TRUE(fs::exists(P("am/epoch-15.ckpt")));
  const std::string metrics = Slurp(P("am/metrics.tsv"));
  EXPECT_EQ(std::count(metrics.begin(), metrics.end(), '\n'), 16);

  const std::string common = "decode --model am/final.ckpt --graph-dir graphs --data test ";
  ASSERT_EQ(Run(common + "--out hyp_off.txt --no-blank-skip"), 0) << err_;
  EXPECT_EQ(SkippedPercent(err_), 0.0);
  ASSERT_EQ(Run(common + "--out hyp_on.txt --blank-skip 0.7"), 0) << err_;
  EXPECT_GT(SkippedPercent(err_), 0.0);

  ASSERT_EQ(Run("score --hyp hyp_off.txt --ref raw_test/text --out wer_off.txt"), 0) << err_;
  const double off = ErrorPercent(out_);
  ASSERT_EQ(Run("score --hyp hyp_on.txt --ref raw_test/text"), 0) << err_;
  const double on = ErrorPercent(out_);
  EXPECT_GE(off, 0.0);
  EXPECT_LE(off, 5.0);
  EXPECT_EQ(on, off);
  EXPECT_EQ(Slurp(P("wer_off.txt")).substr(0, 4), "%ER ");
}

TEST_F(CliTest, TwoLabelTopologyHasNineArcs) {
  TinyCorpus();
  ASSERT_EQ(Run("build-graphs --alphabet units.txt --den-arpa den.arpa --out g"), 0) << err_;
  EXPECT_NE(err_.find("T.fst: 3 states, 9 arcs"), std::string::npos) << err_;
  std::ifstream isyms(P("g/isyms.txt")), labels(P("g/labels.txt")), t(P("g/T.fst"));
  const fst::Wfst topo =
      fst::ReadText(t, SymbolTable::Read(isyms), SymbolTable::Read(labels));
  EXPECT_EQ(topo.NumStates(), 3);
  EXPECT_EQ(topo.NumArcs(), 9u);
}

TEST_F(CliTest, MissingArpaFailsBeforeWriting) {
  TinyCorpus();
  EXPECT_EQ(Run("build-graphs --alphabet units.txt --den-arpa nope.arpa --out g"), 2);
  EXPECT_NE(err_.find("nope.arpa"), std::string::npos);
  EXPECT_FALSE(fs::exists(P("g")));
  EXPECT_FALSE(fs::exists(P("g.tmp")));
  EXPECT_EQ(Run("build-graphs --alphabet units.txt --den-arpa den.arpa --word-arpa nope.arpa "
                "--out g"),
            2);
  EXPECT_FALSE(fs::exists(P("g")));
}

TEST_F(CliTest, RerunsAreByteIdentical) {
  TinyCorpus();
  for (const char* out : {"g1", "g2"}) {
    ASSERT_EQ(Run(std::string("build-graphs --alphabet units.txt --den-arpa den.arpa --out ") + out),
              0);
    ASSERT_EQ(Run(std::string("prepare --alphabet units.txt --text text --feats feats "
                              "--den-arpa den.arpa --out d") + out),
              0);
  }
  int compared = 0;
  for (const auto& e : fs::directory_iterator(P("g1"))) {
    EXPECT_EQ(Slurp(e.path()), Slurp(P("g2") / e.path().filename())) << e.path();
    ++compared;
  }
  EXPECT_EQ(compared, 8);
  for (const char* f : {"manifest.tsv", "log_pl.txt", "feats/u1.catm"}) {
    EXPECT_EQ(Slurp(P("dg1") / f), Slurp(P("dg2") / f)) << f;
  }
}

TEST_F(CliTest, PrepareWritesManifestAndCache) {
  TinyCorpus();
  ASSERT_EQ(Run("prepare --alphabet units.txt --text text --feats feats --den-arpa den.arpa "
                "--out d --subsample 3"),
            0)
      << err_;
  const std::string manifest = Slurp(P("d/manifest.tsv"));
  EXPECT_EQ(manifest,
            "u1\tfeats/u1.catm\t4\ta b\nu2\tfeats/u2.catm\t4\tb\nu3\tfeats/u3.catm\t4\ta a b\n");
  const std::string cache = Slurp(P("d/log_pl.txt"));
  EXPECT_EQ(std::count(cache.begin(), cache.end(), '\n'), 3);
  EXPECT_EQ(ReadMatrixFile(P("d/feats/u1.catm").string()).rows(), 4);
}

TEST_F(CliTest, PrepareNamesUtteranceWithUnknownLabel) {
  TinyCorpus();
  Spit(P("text"), "u1 a b\nu2 b z\n");
  EXPECT_EQ(Run("prepare --alphabet units.txt --text text --feats feats --den-arpa den.arpa "
                "--out d"),
            2);
  EXPECT_NE(err_.find("u2"), std::string::npos) << err_;
  EXPECT_FALSE(fs::exists(P("d")));
}

TEST_F(CliTest, GradcheckPassesAndFailsOnTolerance) {
  EXPECT_EQ(Run("gradcheck"), 0) << out_;
  EXPECT_NE(out_.find("max relative error:"), std::string::npos);
  EXPECT_EQ(out_.substr(out_.size() - 5), "PASS\n");
  EXPECT_EQ(Run("gradcheck --seed 17"), 0) << out_;
  EXPECT_EQ(Run("gradcheck --tolerance 1e-12"), 3);
  EXPECT_EQ(out_.substr(out_.size() - 5), "FAIL\n");
}

TEST_F(CliTest, ScoreRejectsLengthMismatch) {
  Spit(P("hyp"), "u1 a\nu2 b\n");
  Spit(P("ref"), "u1 a\n");
  EXPECT_EQ(Run("score --hyp hyp --ref ref"), 2);
  EXPECT_NE(err_.find("utterances"), std::string::npos);
  Spit(P("ref"), "u1 a\nu2 b c\n");
  EXPECT_EQ(Run("score --hyp hyp --ref ref"), 0);
  EXPECT_NE(out_.find("[ 1 / 3, 0 ins, 1 del, 0 sub ]"), std::string::npos) << out_;
}

TEST_F(CliTest, UsageErrorsExitOne) {
  EXPECT_EQ(Run(""), 1);
  EXPECT_EQ(Run("gradcheck --bogus=1"), 1);
  EXPECT_EQ(Run("score --hyp x"), 1);
  EXPECT_EQ(Run("train --data d --den-table t --out o --epochs -1"), 1);
  EXPECT_EQ(Run("train --config missing.cfg"), 1);
}

TEST_F(CliTest, ConfigFileIsOverriddenByFlags) {
  ASSERT_EQ(Run("synth --out raw --count 10 --seed 3"), 0);
  ASSERT_EQ(Run("lm-train --text raw/text --order 2 --vocab raw/units.txt --out den.arpa"), 0);
  ASSERT_EQ(Run("build-graphs --alphabet raw/units.txt --den-arpa den.arpa --out g"), 0);
  ASSERT_EQ(Run("prepare --alphabet raw/units.txt --text raw/text --feats raw/feats "
                "--den-arpa den.arpa --out d"),
            0);
  Spit(P("train.cfg"), "# toy\nepochs = 3\nhidden = 4\nden-table = g/den_table.txt\n");
  ASSERT_EQ(Run("train --config train.cfg --data d --out am --epochs 2"), 0) << err_;
  const std::string metrics = Slurp(P("am/metrics.tsv"));
  EXPECT_EQ(std::count(metrics.begin(), metrics.end(), '\n'), 3);
  Spit(P("bad.cfg"), "epochs 3\n");
  EXPECT_EQ(Run("train --config bad.cfg --data d --out am"), 1);
}

TEST_F(CliTest, TrainingAndDecodingAreDeterministic) {
  ASSERT_EQ(Run("synth --out raw --count 30 --seed 4"), 0);
  ASSERT_EQ(Run("lm-train --text raw/text --order 2 --vocab raw/units.txt --out den.arpa"), 0);
  ASSERT_EQ(Run("build-graphs --alphabet raw/units.txt --den-arpa den.arpa --out g"), 0);
  ASSERT_EQ(Run("prepare --alphabet raw/units.txt --text raw/text --feats raw/feats "
                "--den-arpa den.arpa --out d"),
            0);
  for (const char* out : {"a", "b"}) {
    ASSERT_EQ(Run(std::string("--workers 1 train --data d --heldout d --den-table "
                              "g/den_table.txt --hidden 8 --epochs 3 --seed 5 --out ") + out),
              0);
    ASSERT_EQ(Run(std::string("decode --model ") + out + "/final.ckpt --graph-dir g --data d " +
                  "--blank-skip 0.7 --out " + out + "/hyp.txt"),
              0);
  }
  for (const char* f : {"metrics.tsv", "final.ckpt", "hyp.txt"}) {
    EXPECT_EQ(Slurp(P("a") / f), Slurp(P("b") / f)) << f;
  }
}

}  // namespace
}  // namespace ctccrf
