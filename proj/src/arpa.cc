// ctccrf/arpa.cc

#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

#include "ctccrf/ngram.h"

namespace ctccrf::lm {

namespace {

const double kLn10 = std::log(10.0);

struct RawEntry {
  std::vector<std::string> words;
  double log10prob = 0.0;
  bool has_backoff = false;
  double log10backoff = 0.0;
  int line = 0;
};

[[noreturn]] void Fail(int line, const std::string& what) {
  throw DataError("ARPA line " + std::to_string(line) + ": " + what);
}

double ParseNumber(const std::string& s, int line) {
  try {
    std::size_t used = 0;
    double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    Fail(line, "bad number '" + s + "'");
  }
}

std::string Trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

NGramModel ParseArpa(std::istream& is) {
  std::string raw;
  int lineno = 0;
  auto next_line = [&](std::string& out) {
    while (std::getline(is, raw)) {
      ++lineno;
      out = Trim(raw);
      if (!out.empty()) return true;
    }
    return false;
  };

  std::string line;
  if (!next_line(line) || line != "\\data\\") Fail(lineno, "expected \\data\\ header");

  std::vector<long> declared;
  bool have_line = next_line(line);
  while (have_line && line.rfind("ngram ", 0) == 0) {
    auto eq = line.find('=');
    if (eq == std::string::npos) Fail(lineno, "malformed ngram count line");
    int k = static_cast<int>(ParseNumber(Trim(line.substr(6, eq - 6)), lineno));
    long n = static_cast<long>(ParseNumber(Trim(line.substr(eq + 1)), lineno));
    if (k != static_cast<int>(declared.size()) + 1 || n < 0) {
      Fail(lineno, "ngram counts must be listed for orders 1, 2, ... in turn");
    }
    declared.push_back(n);
    have_line = next_line(line);
  }
  if (declared.empty()) Fail(lineno, "no ngram counts in \\data\\ section");
  const int order = static_cast<int>(declared.size());

  std::vector<std::vector<RawEntry>> sections(order);
  bool ended = false;
  while (have_line) {
    if (line == "\\end\\") {
      ended = true;
      break;
    }
    int k = 0;
    if (std::sscanf(line.c_str(), "\\%d-grams:", &k) != 1 || k < 1 || k > order) {
      Fail(lineno, "expected an n-gram section header, got '" + line + "'");
    }
    const int section_line = lineno;
    auto& entries = sections[k - 1];
    if (!entries.empty()) Fail(lineno, "duplicate section");
    while ((have_line = next_line(line)) && line[0] != '\\') {
      std::istringstream fields(line);
      std::vector<std::string> f;
      for (std::string tok; fields >> tok;) f.push_back(tok);
      if (f.size() != static_cast<std::size_t>(k) + 1 && f.size() != static_cast<std::size_t>(k) + 2) {
        Fail(lineno, "expected " + std::to_string(k + 1) + " or " + std::to_string(k + 2) + " fields");
      }
      RawEntry e;
      e.line = lineno;
      e.log10prob = ParseNumber(f[0], lineno);
      e.words.assign(f.begin() + 1, f.begin() + 1 + k);
      if (f.size() == static_cast<std::size_t>(k) + 2) {
        e.has_backoff = true;
        e.log10backoff = ParseNumber(f.back(), lineno);
      }
      entries.push_back(std::move(e));
    }
    if (static_cast<long>(entries.size()) != declared[k - 1]) {
      Fail(section_line, "\\" + std::to_string(k) + "-grams: declares " +
                             std::to_string(declared[k - 1]) + " entries but lists " +
                             std::to_string(entries.size()));
    }
  }
  if (!ended) Fail(lineno, "missing \\end\\");
  for (int k = 0; k < order; ++k) {
    if (declared[k] > 0 && sections[k].empty()) Fail(lineno, "missing section for order " + std::to_string(k + 1));
  }

  std::vector<std::string> vocab;
  for (const auto& e : sections[0]) {
    if (e.words[0] != NGramModel::kBos && e.words[0] != NGramModel::kEos) vocab.push_back(e.words[0]);
  }
  NGramModel lm = [&] {
    try {
      return NGramModel(order, vocab);
    } catch (const DataError& err) {
      Fail(sections[0].empty() ? lineno : sections[0].front().line, err.what());
    }
  }();
  for (int k = 0; k < order; ++k) {
    for (const auto& e : sections[k]) {
      NGramModel::NGram g;
      for (const auto& w : e.words) {
        int id = lm.WordId(w);
        if (id == kNoSymbol) Fail(e.line, "word '" + w + "' has no unigram");
        g.push_back(id);
      }
      if (k > 0 && !lm.Find(std::span<const int>(g).first(k))) {
        Fail(e.line, "n-gram prefix is not listed as a lower-order entry");
      }
      lm.SetEntry(g, {e.log10prob * kLn10, e.log10backoff * kLn10, e.has_backoff});
    }
  }
  return lm;
}

void EmitArpa(const NGramModel& lm, std::ostream& os) {
  auto fmt = [](double natural) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.10g", natural / kLn10);
    return std::string(buf);
  };
  os << "\\data\\\n";
  for (int k = 1; k <= lm.order(); ++k) os << "ngram " << k << '=' << lm.NumEntries(k) << '\n';
  for (int k = 1; k <= lm.order(); ++k) {
    os << "\n\\" << k << "-grams:\n";
    for (const auto& [g, e] : lm.Entries(k)) {
      os << fmt(e.logprob);
      for (std::size_t i = 0; i < g.size(); ++i) os << (i == 0 ? '\t' : ' ') << lm.WordName(g[i]);
      if (e.has_backoff) os << '\t' << fmt(e.backoff);
      os << '\n';
    }
  }
  os << "\n\\end\\\n";
}

}  // namespace ctccrf::lm
