// tools/ctccrf.cc
//
// Command-line pipeline: synth, lm-train, prepare, build-graphs, gradcheck,
// train, decode, score.
//
// Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.

#include <omp.h>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "ctccrf/alphabet.h"
#include "ctccrf/common.h"
#include "ctccrf/crf_loss.h"
#include "ctccrf/decoder.h"
#include "ctccrf/den_table.h"
#include "ctccrf/error_rate.h"
#include "ctccrf/gradcheck.h"
#include "ctccrf/graphs.h"
#include "ctccrf/matrix_io.h"
#include "ctccrf/model.h"
#include "ctccrf/ngram.h"
#include "ctccrf/synthetic.h"
#include "ctccrf/trainer.h"
#include "ctccrf/wfst.h"

namespace fs = std::filesystem;
using namespace ctccrf;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNumerical = 3;

class UsageError : public Error {
 public:
  using Error::Error;
};

// ---------------------------------------------------------------------------
// File helpers

void RequireFile(const std::string& path, const std::string& what) {
  if (!fs::is_regular_file(path)) throw DataError(what + " not found: " + path);
}

void RequireDir(const std::string& path, const std::string& what) {
  if (!fs::is_directory(path)) throw DataError(what + " not found: " + path);
}

std::ifstream OpenIn(const std::string& path, const std::string& what) {
  RequireFile(path, what);
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open " + what + ": " + path);
  return is;
}

// Writes through a temporary file that replaces `path` only once complete.
void WriteAtomic(const fs::path& path, const std::function<void(std::ostream&)>& write) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw DataError("cannot write " + tmp.string());
    write(os);
    os.flush();
    if (!os) throw DataError("write failed: " + tmp.string());
  }
  fs::rename(tmp, path);
}

// Output directory built under `<dir>.tmp` and moved into place on Commit.
class StagedDir {
 public:
  explicit StagedDir(fs::path final_path)
      : final_(std::move(final_path)), staging_(final_.string() + ".tmp") {
    fs::remove_all(staging_);
    fs::create_directories(staging_);
  }
  ~StagedDir() {
    if (!committed_) {
      std::error_code ec;
      fs::remove_all(staging_, ec);
    }
  }
  StagedDir(const StagedDir&) = delete;
  StagedDir& operator=(const StagedDir&) = delete;

  fs::path operator/(const std::string& name) const { return staging_ / name; }

  void Commit() {
    fs::remove_all(final_);
    fs::rename(staging_, final_);
    committed_ = true;
  }

 private:
  fs::path final_;
  fs::path staging_;
  bool committed_ = false;
};

Alphabet LoadAlphabet(const std::string& path) {
  std::ifstream is = OpenIn(path, "alphabet");
  Alphabet ab = Alphabet::Read(is);
  if (ab.empty()) throw DataError("alphabet is empty: " + path);
  return ab;
}

lm::NGramModel LoadArpa(const std::string& path) {
  std::ifstream is = OpenIn(path, "ARPA file");
  try {
    return lm::ParseArpa(is);
  } catch (const DataError& e) {
    throw DataError(path + ": " + e.what());
  }
}

// `utt w1 w2 ...` lines, in file order.
std::vector<std::pair<std::string, std::vector<std::string>>> ReadTranscripts(
    const std::string& path) {
  std::ifstream is = OpenIn(path, "transcript file");
  std::vector<std::pair<std::string, std::vector<std::string>>> out;
  std::set<std::string> seen;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    std::istringstream fields(line);
    std::string id;
    if (!(fields >> id)) continue;
    if (!seen.insert(id).second) {
      throw DataError(path + " line " + std::to_string(lineno) + ": duplicate utterance " + id);
    }
    std::vector<std::string> words;
    for (std::string w; fields >> w;) words.push_back(w);
    out.emplace_back(id, std::move(words));
  }
  return out;
}

// Module-level validation of flag values reports DataError; on the command
// line those are usage errors.
void ValidateFlags(const std::function<void()>& validate) {
  try {
    validate();
  } catch (const DataError& e) {
    throw UsageError(e.what());
  }
}

std::string Join(const std::vector<std::string>& words) {
  std::string out;
  for (const auto& w : words) {
    if (!out.empty()) out += ' ';
    out += w;
  }
  return out;
}

std::string FormatDouble(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// ---------------------------------------------------------------------------
// Prepared datasets: manifest.tsv (`utt \t feats \t frames \t labels`) with
// feature paths relative to the dataset directory, plus log_pl.txt.

struct ManifestEntry {
  std::string id;
  std::string feats;
  int frames = 0;
  std::vector<std::string> labels;
};

std::vector<ManifestEntry> ReadManifest(const std::string& dir) {
  const std::string path = (fs::path(dir) / "manifest.tsv").string();
  std::ifstream is = OpenIn(path, "manifest");
  std::vector<ManifestEntry> out;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::size_t start = 0;
    for (std::size_t tab; (tab = line.find('\t', start)) != std::string::npos; start = tab + 1) {
      f.push_back(line.substr(start, tab - start));
    }
    f.push_back(line.substr(start));
    if (f.size() != 4) {
      throw DataError(path + " line " + std::to_string(lineno) + ": expected 4 tab-separated fields");
    }
    ManifestEntry e;
    e.id = f[0];
    e.feats = f[1];
    try {
      e.frames = std::stoi(f[2]);
    } catch (const std::exception&) {
      throw DataError(path + " line " + std::to_string(lineno) + ": bad frame count");
    }
    std::istringstream words(f[3]);
    for (std::string w; words >> w;) e.labels.push_back(w);
    out.push_back(std::move(e));
  }
  return out;
}

std::vector<am::Example> LoadDataset(const std::string& dir, const Alphabet& alphabet) {
  RequireDir(dir, "dataset");
  const std::vector<ManifestEntry> manifest = ReadManifest(dir);
  std::ifstream cache_in = OpenIn((fs::path(dir) / "log_pl.txt").string(), "log_pl cache");
  const std::map<std::string, double> log_pl = ReadLogPlCache(cache_in);
  std::vector<am::Example> out;
  out.reserve(manifest.size());
  for (const ManifestEntry& e : manifest) {
    am::Example ex;
    ex.id = e.id;
    ex.features = ReadMatrixFile((fs::path(dir) / e.feats).string());
    if (ex.features.rows() != e.frames) {
      throw DataError("utterance " + e.id + ": manifest says " + std::to_string(e.frames) +
                      " frames, features have " + std::to_string(ex.features.rows()));
    }
    try {
      ex.labels = alphabet.Encode(e.labels);
    } catch (const DataError& err) {
      throw DataError("utterance " + e.id + ": " + err.what());
    }
    auto it = log_pl.find(e.id);
    if (it == log_pl.end()) throw DataError("utterance " + e.id + " missing from log_pl cache");
    ex.log_pl = it->second;
    out.push_back(std::move(ex));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Config files: flat `key = value` lines, `#` comments. Each entry becomes
// `--key=value` placed before the command-line arguments, so explicit flags
// override the file.

std::vector<std::string> ExpandConfig(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw UsageError("cannot open config file: " + path);
  std::vector<std::string> args;
  std::string line;
  int lineno = 0;
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return std::string();
    return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
  };
  while (std::getline(is, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw UsageError(path + " line " + std::to_string(lineno) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw UsageError(path + " line " + std::to_string(lineno) + ": empty key");
    args.push_back("--" + key + "=" + value);
  }
  return args;
}

// Splices config-file arguments in after the subcommand name.
std::vector<std::string> SpliceConfig(std::vector<std::string> args) {
  std::optional<std::string> config;
  std::vector<std::string> rest;
  for (std::size_t i = 0; i < args.size(); ++i) {
    const std::string& a = args[i];
    if (a == "--config") {
      if (i + 1 >= args.size()) throw UsageError("--config requires a file argument");
      config = args[++i];
    } else if (a.rfind("--config=", 0) == 0) {
      config = a.substr(9);
    } else {
      rest.push_back(a);
    }
  }
  if (!config) return rest;
  std::vector<std::string> expanded = ExpandConfig(*config);
  if (rest.empty()) throw UsageError("--config given without a subcommand");
  std::vector<std::string> out{rest[0]};
  out.insert(out.end(), expanded.begin(), expanded.end());
  out.insert(out.end(), rest.begin() + 1, rest.end());
  return out;
}

// ---------------------------------------------------------------------------
// Subcommands

struct SynthArgs {
  std::string out;
  int count = 200;
  am::SyntheticConfig config;
};

void RunSynth(const SynthArgs& a) {
  if (a.config.num_labels > 26) throw UsageError("--num-labels must be at most 26");
  const auto utts = am::GenerateSynthetic(a.count, a.config);
  std::vector<std::string> names;
  for (int i = 0; i < a.config.num_labels; ++i) names.emplace_back(1, static_cast<char>('a' + i));
  const Alphabet ab(names);

  StagedDir dir(a.out);
  fs::create_directories(dir / "feats");
  WriteAtomic(dir / "units.txt", [&](std::ostream& os) { ab.Write(os); });
  WriteAtomic(dir / "text", [&](std::ostream& os) {
    for (const auto& u : utts) {
      os << u.example.id;
      for (const auto& n : ab.Decode(u.example.labels)) os << ' ' << n;
      os << '\n';
    }
  });
  for (const auto& u : utts) {
    WriteMatrixFile(u.example.features, (dir / "feats" / (u.example.id + ".catm")).string());
  }
  dir.Commit();
  std::cerr << "synth: " << utts.size() << " utterances, " << ab.NumLabels() << " labels -> "
            << a.out << '\n';
}

struct LmTrainArgs {
  std::string text;
  std::string out;
  std::string vocab;
  int order = 3;
  double discount = 0.5;
  bool with_ids = true;
};

void RunLmTrain(const LmTrainArgs& a) {
  std::ifstream is = OpenIn(a.text, "training text");
  const auto corpus = lm::ReadCorpus(is, a.with_ids);
  std::optional<std::vector<std::string>> vocab;
  if (!a.vocab.empty()) vocab = LoadAlphabet(a.vocab).labels();
  const lm::NGramModel model = lm::Estimate(corpus, a.order, a.discount, vocab);
  WriteAtomic(a.out, [&](std::ostream& os) { lm::EmitArpa(model, os); });
  std::cerr << "lm-train: order " << model.order() << ", " << model.NumWords() << " words";
  for (int k = 1; k <= model.order(); ++k) std::cerr << ", " << model.NumEntries(k) << " " << k << "-grams";
  std::cerr << '\n';
}

struct PrepareArgs {
  std::string alphabet;
  std::string text;
  std::string feats;
  std::string den_arpa;
  std::string out;
  int subsample = 1;
};

void RunPrepare(const PrepareArgs& a) {
  if (a.subsample < 1) throw UsageError("--subsample must be at least 1");
  const Alphabet ab = LoadAlphabet(a.alphabet);
  const lm::NGramModel lm = LoadArpa(a.den_arpa);
  RequireDir(a.feats, "feature directory");
  const auto transcripts = ReadTranscripts(a.text);

  std::vector<am::Example> examples;
  for (const auto& [id, words] : transcripts) {
    am::Example ex;
    ex.id = id;
    try {
      ex.labels = ab.Encode(words);
    } catch (const DataError& e) {
      throw DataError("utterance " + id + ": " + e.what());
    }
    const fs::path feat_path = fs::path(a.feats) / (id + ".catm");
    if (!fs::is_regular_file(feat_path)) {
      throw DataError("utterance " + id + ": features not found: " + feat_path.string());
    }
    ex.features = am::SubsampleFrames(ReadMatrixFile(feat_path.string()), a.subsample);
    examples.push_back(std::move(ex));
  }
  am::AttachLogPl(examples, ab, lm);

  StagedDir dir(a.out);
  fs::create_directories(dir / "feats");
  std::map<std::string, double> cache;
  for (const auto& ex : examples) {
    WriteMatrixFile(ex.features, (dir / "feats" / (ex.id + ".catm")).string());
    cache[ex.id] = ex.log_pl;
  }
  WriteAtomic(dir / "manifest.tsv", [&](std::ostream& os) {
    for (const auto& ex : examples) {
      os << ex.id << '\t' << "feats/" << ex.id << ".catm" << '\t' << ex.features.rows() << '\t'
         << Join(ab.Decode(ex.labels)) << '\n';
    }
  });
  WriteAtomic(dir / "log_pl.txt", [&](std::ostream& os) { WriteLogPlCache(cache, os); });
  dir.Commit();
  std::cerr << "prepare: " << examples.size() << " utterances -> " << a.out << '\n';
}

struct BuildGraphsArgs {
  std::string alphabet;
  std::string den_arpa;
  std::string word_arpa;
  std::string lexicon;
  std::string out;
};

void LogSize(const std::string& name, const fst::Wfst& f) {
  std::cerr << "build-graphs: " << name << ": " << f.NumStates() << " states, " << f.NumArcs()
            << " arcs\n";
}

void RunBuildGraphs(const BuildGraphsArgs& a) {
  // Everything is read and built before the output directory is touched.
  const Alphabet ab = LoadAlphabet(a.alphabet);
  const lm::NGramModel den_lm = LoadArpa(a.den_arpa);
  const lm::NGramModel word_lm = a.word_arpa.empty() ? den_lm : LoadArpa(a.word_arpa);
  std::optional<fst::Lexicon> lexicon;
  if (!a.lexicon.empty()) {
    std::ifstream is = OpenIn(a.lexicon, "lexicon");
    lexicon = fst::Lexicon::Read(is);
  }

  const fst::Wfst t = fst::BuildCtcTopology(ab);
  const fst::Wfst den = fst::BuildDenominatorGraph(ab, den_lm);
  const crf::DenominatorTable table = crf::FlattenDenominator(den);
  const fst::Wfst tlg = fst::BuildDecodingGraph(ab, lexicon, word_lm);
  const SymbolTable words = fst::DecodingWordSymbols(word_lm);

  StagedDir dir(a.out);
  WriteAtomic(dir / "units.txt", [&](std::ostream& os) { ab.Write(os); });
  WriteAtomic(dir / "isyms.txt", [&](std::ostream& os) { ab.StateSymbols().Write(os); });
  WriteAtomic(dir / "labels.txt", [&](std::ostream& os) { ab.LabelSymbols().Write(os); });
  WriteAtomic(dir / "words.txt", [&](std::ostream& os) { words.Write(os); });
  WriteAtomic(dir / "T.fst", [&](std::ostream& os) { fst::WriteText(t, os); });
  WriteAtomic(dir / "den.fst", [&](std::ostream& os) { fst::WriteText(den, os); });
  WriteAtomic(dir / "den_table.txt", [&](std::ostream& os) { table.Write(os); });
  WriteAtomic(dir / "TLG.fst", [&](std::ostream& os) { fst::WriteText(tlg, os); });
  dir.Commit();

  LogSize("T.fst", t);
  LogSize("den.fst", den);
  std::cerr << "build-graphs: den_table.txt: " << table.num_states() << " states, "
            << table.transitions().size() << " transitions\n";
  LogSize("TLG.fst", tlg);
}

struct GradcheckArgs {
  int trials = 20;
  std::uint64_t seed = 0;
  double tolerance = 1e-4;
  double model_tolerance = 1e-3;
  double oracle_tolerance = 1e-9;
};

bool RunGradcheck(const GradcheckArgs& a) {
  if (a.trials < 1) throw UsageError("--trials must be at least 1");
  const auto eq = oracle::CheckLossAgainstEnumeration(a.trials, a.seed);
  const auto pot = oracle::CheckPotentialGradients(a.trials, a.seed + 1);
  const auto mod = oracle::CheckModelGradients(std::max(1, a.trials / 5), a.seed + 2);
  bool all = true;
  auto line = [&](const char* name, const oracle::CheckResult& r, double tol) {
    const bool pass = r.max_error <= tol;
    all = all && pass;
    std::printf("%-28s cases %4d  max error %.3e  tolerance %.1e  %s\n", name, r.cases,
                r.max_error, tol, pass ? "PASS" : "FAIL");
  };
  line("oracle equivalence (abs)", eq, a.oracle_tolerance);
  line("potential gradient (rel)", pot, a.tolerance);
  line("model gradient (rel)", mod, a.model_tolerance);
  std::printf("max relative error: %.3e\n", std::max(pot.max_error, mod.max_error));
  std::printf("%s\n", all ? "PASS" : "FAIL");
  return all;
}

struct TrainArgs {
  std::string data;
  std::string heldout;
  std::string den_table;
  std::string out;
  std::string init;
  std::string optimizer = "adam";
  int hidden = 32;
  int layers = 1;
  bool bidirectional = true;
  std::uint64_t model_seed = 0;
  am::TrainConfig config;
};

crf::DenominatorTable LoadDenTable(const std::string& path) {
  std::ifstream is = OpenIn(path, "denominator table");
  return crf::DenominatorTable::Read(is);
}

// Alphabet stored next to the denominator table by build-graphs.
Alphabet AlphabetBeside(const std::string& path) {
  return LoadAlphabet((fs::path(path).parent_path() / "units.txt").string());
}

int RunTrain(TrainArgs a) {
  if (a.optimizer == "adam") {
    a.config.optimizer = am::OptimizerKind::kAdam;
  } else if (a.optimizer == "sgd") {
    a.config.optimizer = am::OptimizerKind::kSgd;
  } else {
    throw UsageError("--optimizer must be sgd or adam");
  }
  if (a.hidden < 1 || a.layers < 1) throw UsageError("--hidden and --layers must be positive");
  ValidateFlags([&] { a.config.Validate(); });

  const crf::DenominatorTable den = LoadDenTable(a.den_table);
  const Alphabet ab = AlphabetBeside(a.den_table);
  if (ab.NumStates() != den.num_labels()) {
    throw DataError("units.txt does not match the denominator table");
  }
  const std::vector<am::Example> train = LoadDataset(a.data, ab);
  const std::vector<am::Example> heldout =
      a.heldout.empty() ? std::vector<am::Example>{} : LoadDataset(a.heldout, ab);
  if (train.empty()) throw DataError("training set is empty: " + a.data);

  am::AcousticModel model;
  if (!a.init.empty()) {
    RequireFile(a.init, "initial checkpoint");
    model = am::AcousticModel::LoadFile(a.init);
  } else {
    const int in = static_cast<int>(train.front().features.cols());
    std::vector<am::LayerSpec> specs;
    int dim = in;
    for (int l = 0; l < a.layers; ++l) {
      specs.push_back(am::LayerSpec::Recurrent(dim, a.hidden, a.bidirectional));
      dim = specs.back().OutputDim();
    }
    specs.push_back(am::LayerSpec::Affine(dim, ab.NumStates()));
    model = am::AcousticModel(specs, a.model_seed);
  }

  fs::create_directories(a.out);
  std::string metrics_text = "epoch\tobjective\ttoken_error\n";
  auto write_metrics = [&] {
    WriteAtomic(fs::path(a.out) / "metrics.tsv", [&](std::ostream& os) { os << metrics_text; });
  };
  auto save = [&](const am::AcousticModel& m, const std::string& name) {
    WriteAtomic(fs::path(a.out) / name, [&](std::ostream& os) { m.Save(os); });
  };

  am::TrainResult result = am::Train(
      a.config, model, train, heldout, den,
      [&](const am::EpochMetrics& m, const am::AcousticModel& current) {
        metrics_text += std::to_string(m.epoch) + '\t' + FormatDouble(m.objective) + '\t' +
                        FormatDouble(m.token_error) + '\n';
        write_metrics();
        save(current, "epoch-" + std::to_string(m.epoch) + ".ckpt");
        std::cerr << "train: epoch " << m.epoch << " objective " << m.objective
                  << " token error " << m.token_error;
        if (m.degenerate > 0) std::cerr << " (" << m.degenerate << " degenerate)";
        std::cerr << '\n';
      });
  save(result.model, "final.ckpt");
  if (result.diverged) {
    std::cerr << "train: diverged; final.ckpt holds the last finite parameters\n";
    return kExitNumerical;
  }
  return 0;
}

struct DecodeArgs {
  std::string model;
  std::string graph_dir;
  std::string data;
  std::string out;
  int beam_width = 0;
  double beam_slack = 0.0;
  double blank_skip = 0.0;
  bool skip_adds_blank_score = false;
};

void RunDecode(const DecodeArgs& a) {
  if (a.beam_width < 0 || a.beam_slack < 0.0 || a.blank_skip < 0.0) {
    throw UsageError("beam settings and the blank-skip threshold must be non-negative");
  }
  decode::BeamConfig config;
  if (a.beam_width > 0) config.width = a.beam_width;
  if (a.beam_slack > 0.0) config.slack = a.beam_slack;
  if (a.blank_skip > 0.0) config.blank_skip = a.blank_skip;
  config.skip_adds_blank_score = a.skip_adds_blank_score;
  ValidateFlags([&] { config.Validate(); });

  RequireFile(a.model, "model checkpoint");
  const am::AcousticModel model = am::AcousticModel::LoadFile(a.model);
  const fs::path gdir(a.graph_dir);
  const Alphabet ab = LoadAlphabet((gdir / "units.txt").string());
  std::ifstream wis = OpenIn((gdir / "words.txt").string(), "word symbols");
  const SymbolTable words = SymbolTable::Read(wis);
  std::ifstream gis = OpenIn((gdir / "TLG.fst").string(), "decoding graph");
  const fst::Wfst graph =
      fst::ReadText(gis, ab.StateSymbols(), words, SemiringKind::kTropical);
  if (model.output_dim() != ab.NumStates()) {
    throw DataError("model output width " + std::to_string(model.output_dim()) +
                    " does not match the alphabet (" + std::to_string(ab.NumStates()) +
                    " states)");
  }
  const std::vector<am::Example> data = LoadDataset(a.data, ab);
  const decode::BeamDecoder decoder(graph);

  struct Outcome {
    decode::DecodeResult result;
    double seconds = 0.0;
  };
  std::vector<Outcome> outcomes(data.size());
  std::vector<std::string> failures(data.size());
  const long n = static_cast<long>(data.size());
#pragma omp parallel for schedule(dynamic)
  for (long i = 0; i < n; ++i) {
    try {
      const Matrix pot = model.Forward(data[i].features).values();
      const auto start = std::chrono::steady_clock::now();
      outcomes[i].result = decoder.Decode(pot, config);
      outcomes[i].seconds =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    } catch (const std::exception& e) {
      failures[i] = e.what();
    }
  }
  for (long i = 0; i < n; ++i) {
    if (!failures[i].empty()) throw DataError("utterance " + data[i].id + ": " + failures[i]);
  }

  long frames = 0, skipped = 0;
  double seconds = 0.0;
  int no_survivor = 0;
  WriteAtomic(a.out, [&](std::ostream& os) {
    for (long i = 0; i < n; ++i) {
      const auto& r = outcomes[i].result;
      std::vector<std::string> hyp;
      for (int w : r.words) hyp.push_back(words.Symbol(w));
      os << data[i].id;
      if (!hyp.empty()) os << '\t' << Join(hyp);
      os << '\n';
      const int total = r.frames_processed + r.frames_skipped;
      frames += total;
      skipped += r.frames_skipped;
      seconds += outcomes[i].seconds;
      if (!r.ok) ++no_survivor;
      std::fprintf(stderr, "decode: %s frames %d skipped %.1f%% time %.3f ms%s\n",
                   data[i].id.c_str(), total, total > 0 ? 100.0 * r.frames_skipped / total : 0.0,
                   1e3 * outcomes[i].seconds, r.ok ? "" : " (no hypothesis)");
    }
  });
  std::fprintf(stderr, "decode: %ld utterances, %ld frames, skipped %.1f%%, search time %.3f ms\n",
               n, frames, frames > 0 ? 100.0 * skipped / frames : 0.0, 1e3 * seconds);
  if (no_survivor > 0) {
    std::fprintf(stderr, "decode: %d utterances had no surviving hypothesis\n", no_survivor);
  }
}

struct ScoreArgs {
  std::string hyp;
  std::string ref;
  std::string out;
};

void RunScore(const ScoreArgs& a) {
  const auto hyp = ReadTranscripts(a.hyp);
  const auto ref = ReadTranscripts(a.ref);
  if (hyp.size() != ref.size()) {
    throw DataError("hypothesis file has " + std::to_string(hyp.size()) +
                    " utterances, reference has " + std::to_string(ref.size()));
  }
  std::vector<std::vector<std::string>> h, r;
  for (std::size_t i = 0; i < hyp.size(); ++i) {
    if (hyp[i].first != ref[i].first) {
      throw DataError("utterance order differs at line " + std::to_string(i + 1) + ": " +
                      hyp[i].first + " vs " + ref[i].first);
    }
    h.push_back(hyp[i].second);
    r.push_back(ref[i].second);
  }
  const decode::ErrorRate er = decode::EvaluateErrorRate(h, r);
  char buf[200];
  std::snprintf(buf, sizeof(buf),
                "%%ER %.2f [ %ld / %ld, %ld ins, %ld del, %ld sub ] %zu utterances\n",
                100.0 * er.rate(), er.errors(), er.reference_words, er.insertions,
                er.deletions, er.substitutions, hyp.size());
  std::fputs(buf, stdout);
  if (!a.out.empty()) WriteAtomic(a.out, [&](std::ostream& os) { os << buf; });
}

int Main(int argc, char** argv) {
  CLI::App app{"CTC-CRF training and decoding pipeline"};
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.require_subcommand(1);
  int workers = 1;
  app.add_option("--workers", workers, "Worker threads for all parallel stages")
      ->check(CLI::PositiveNumber);
  app.set_help_all_flag("--help-all");

  SynthArgs synth;
  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic toy corpus");
  synth_cmd->add_option("--out", synth.out, "Output directory")->required();
  synth_cmd->add_option("--count", synth.count, "Number of utterances")->check(CLI::PositiveNumber);
  synth_cmd->add_option("--seed", synth.config.seed, "Random seed");
  synth_cmd->add_option("--num-labels", synth.config.num_labels, "Label alphabet size")
      ->check(CLI::PositiveNumber);
  synth_cmd->add_option("--feature-dim", synth.config.feature_dim, "Feature dimension");
  synth_cmd->add_option("--noise", synth.config.noise, "Gaussian noise standard deviation");
  synth_cmd->add_option("--min-labels", synth.config.min_labels, "Shortest label sequence");
  synth_cmd->add_option("--max-labels", synth.config.max_labels, "Longest label sequence");

  LmTrainArgs lmt;
  auto* lm_cmd = app.add_subcommand("lm-train", "Estimate an n-gram LM and write ARPA");
  lm_cmd->add_option("--text", lmt.text, "Training text")->required();
  lm_cmd->add_option("--out", lmt.out, "Output ARPA file")->required();
  lm_cmd->add_option("--order", lmt.order, "N-gram order")->check(CLI::PositiveNumber);
  lm_cmd->add_option("--discount", lmt.discount, "Absolute discount in (0, 1)");
  lm_cmd->add_option("--vocab", lmt.vocab, "Closed vocabulary, one word per line");
  lm_cmd->add_flag("--with-ids,!--no-ids", lmt.with_ids,
                   "First field of each line is an utterance id (default on)");

  PrepareArgs prep;
  auto* prep_cmd = app.add_subcommand("prepare", "Validate a corpus and cache log p(l)");
  prep_cmd->add_option("--alphabet", prep.alphabet, "Label alphabet file")->required();
  prep_cmd->add_option("--text", prep.text, "Transcripts: utt label ...")->required();
  prep_cmd->add_option("--feats", prep.feats, "Directory of <utt>.catm feature files")->required();
  prep_cmd->add_option("--den-arpa", prep.den_arpa, "Denominator LM (ARPA)")->required();
  prep_cmd->add_option("--out", prep.out, "Output dataset directory")->required();
  prep_cmd->add_option("--subsample", prep.subsample, "Keep every k-th frame");

  BuildGraphsArgs bg;
  auto* bg_cmd = app.add_subcommand("build-graphs", "Build T, denominator and TLG graphs");
  bg_cmd->add_option("--alphabet", bg.alphabet, "Label alphabet file")->required();
  bg_cmd->add_option("--den-arpa", bg.den_arpa, "Denominator LM (ARPA)")->required();
  bg_cmd->add_option("--word-arpa", bg.word_arpa,
                     "Word LM for decoding (default: the denominator LM)");
  bg_cmd->add_option("--lexicon", bg.lexicon, "Lexicon: word label ...");
  bg_cmd->add_option("--out", bg.out, "Output graph directory")->required();

  GradcheckArgs gc;
  auto* gc_cmd = app.add_subcommand("gradcheck", "Check the loss against brute-force oracles");
  gc_cmd->add_option("--trials", gc.trials, "Randomized cases per suite");
  gc_cmd->add_option("--seed", gc.seed, "Random seed");
  gc_cmd->add_option("--tolerance", gc.tolerance, "Relative tolerance for potential gradients");
  gc_cmd->add_option("--model-tolerance", gc.model_tolerance,
                     "Relative tolerance for model parameter gradients");

  TrainArgs tr;
  auto* tr_cmd = app.add_subcommand("train", "Train an acoustic model");
  tr_cmd->add_option("--data", tr.data, "Prepared training set")->required();
  tr_cmd->add_option("--heldout", tr.heldout, "Prepared held-out set");
  tr_cmd->add_option("--den-table", tr.den_table, "den_table.txt from build-graphs")->required();
  tr_cmd->add_option("--out", tr.out, "Output directory")->required();
  tr_cmd->add_option("--init", tr.init, "Start from this checkpoint");
  tr_cmd->add_option("--hidden", tr.hidden, "Recurrent hidden size");
  tr_cmd->add_option("--layers", tr.layers, "Recurrent layers");
  tr_cmd->add_flag("--bidirectional,!--unidirectional", tr.bidirectional,
                   "Bidirectional recurrent layers (default on)");
  tr_cmd->add_option("--model-seed", tr.model_seed, "Parameter initialization seed");
  tr_cmd->add_option("--alpha", tr.config.alpha, "Auxiliary CTC weight");
  tr_cmd->add_option("--learning-rate", tr.config.learning_rate, "Step size");
  tr_cmd->add_option("--optimizer", tr.optimizer, "sgd or adam");
  tr_cmd->add_option("--beta1", tr.config.beta1, "Adam beta1");
  tr_cmd->add_option("--beta2", tr.config.beta2, "Adam beta2");
  tr_cmd->add_option("--epsilon", tr.config.epsilon, "Adam epsilon");
  tr_cmd->add_option("--epochs", tr.config.epochs, "Training epochs");
  tr_cmd->add_option("--batch-size", tr.config.batch_size, "Utterances per batch");
  tr_cmd->add_option("--seed", tr.config.seed, "Shuffling and dropout seed");
  tr_cmd->add_option("--clip-norm", tr.config.clip_norm, "Global gradient norm clip (0 = off)");
  tr_cmd->add_option("--dropout", tr.config.dropout, "Dropout on recurrent outputs");

  DecodeArgs dec;
  bool no_blank_skip = false;
  auto* dec_cmd = app.add_subcommand("decode", "Decode a prepared set with TLG");
  dec_cmd->add_option("--model", dec.model, "Model checkpoint")->required();
  dec_cmd->add_option("--graph-dir", dec.graph_dir, "Directory from build-graphs")->required();
  dec_cmd->add_option("--data", dec.data, "Prepared dataset")->required();
  dec_cmd->add_option("--out", dec.out, "Hypothesis file")->required();
  dec_cmd->add_option("--beam-width", dec.beam_width, "Max active states per frame (0 = unlimited)");
  dec_cmd->add_option("--beam-slack", dec.beam_slack, "Score slack below the best (0 = unlimited)");
  auto* skip_opt = dec_cmd->add_option("--blank-skip", dec.blank_skip,
                                       "Skip frames whose blank probability exceeds this");
  auto* no_skip_opt = dec_cmd->add_flag("--no-blank-skip", no_blank_skip, "Disable blank skipping");
  dec_cmd->add_flag("--skip-adds-blank-score", dec.skip_adds_blank_score,
                    "Add the blank score on skipped frames");

  ScoreArgs sc;
  auto* sc_cmd = app.add_subcommand("score", "Error rate of hypotheses against references");
  sc_cmd->add_option("--hyp", sc.hyp, "Hypotheses: utt word ...")->required();
  sc_cmd->add_option("--ref", sc.ref, "References: utt word ...")->required();
  sc_cmd->add_option("--out", sc.out, "Also write the report here");

  // CLI11 takes the argument vector in reverse order.
  std::vector<std::string> args = SpliceConfig({argv + 1, argv + argc});
  std::reverse(args.begin(), args.end());
  try {
    app.parse(args);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  omp_set_num_threads(workers);
  tr.config.workers = workers;

  if (*synth_cmd) RunSynth(synth);
  if (*lm_cmd) RunLmTrain(lmt);
  if (*prep_cmd) RunPrepare(prep);
  if (*bg_cmd) RunBuildGraphs(bg);
  if (*gc_cmd) return RunGradcheck(gc) ? 0 : kExitNumerical;
  if (*tr_cmd) return RunTrain(tr);
  if (*dec_cmd) {
    // The later of --blank-skip / --no-blank-skip wins.
    if (no_blank_skip && skip_opt->count() > 0) {
      const auto& results = app.get_subcommand("decode")->parse_order();
      for (auto it = results.rbegin(); it != results.rend(); ++it) {
        if (*it == skip_opt) break;
        if (*it == no_skip_opt) {
          dec.blank_skip = 0.0;
          break;
        }
      }
    } else if (no_blank_skip) {
      dec.blank_skip = 0.0;
    }
    RunDecode(dec);
  }
  if (*sc_cmd) RunScore(sc);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return Main(argc, argv);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  }
}
