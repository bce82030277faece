// ctccrf/ngram.cc

#include "ctccrf/ngram.h"

#include <cmath>
#include <istream>
#include <set>
#include <sstream>

#include "ctccrf/common.h"

namespace ctccrf::lm {

NGramModel::NGramModel(int order, std::vector<std::string> words)
    : order_(order), words_(std::move(words)), entries_(order > 0 ? order : 0) {
  if (order < 1) throw DataError("n-gram order must be >= 1");
  for (std::size_t i = 0; i < words_.size(); ++i) {
    const auto& w = words_[i];
    if (w.empty() || w == kBos || w == kEos || w == "<eps>") {
      throw DataError("n-gram vocabulary: reserved or empty word '" + w + "'");
    }
    if (!ids_.emplace(w, static_cast<int>(i) + 1).second) {
      throw DataError("n-gram vocabulary: duplicate word " + w);
    }
  }
}

int NGramModel::WordId(const std::string& word) const {
  if (word == kBos) return Bos();
  if (word == kEos) return Eos();
  auto it = ids_.find(word);
  return it == ids_.end() ? kNoSymbol : it->second;
}

const std::string& NGramModel::WordName(int id) const {
  static const std::string bos = kBos, eos = kEos;
  if (id == Bos()) return bos;
  if (id == Eos()) return eos;
  if (id < 1 || id > NumWords()) throw DataError("word id " + std::to_string(id) + " out of range");
  return words_[id - 1];
}

void NGramModel::SetEntry(const NGram& ngram, const Entry& entry) {
  if (ngram.empty() || static_cast<int>(ngram.size()) > order_) {
    throw DataError("n-gram of length " + std::to_string(ngram.size()) +
                    " does not fit an order-" + std::to_string(order_) + " model");
  }
  for (int id : ngram) {
    if (id < 1 || id > Eos()) throw DataError("n-gram contains unknown word id");
  }
  entries_[ngram.size() - 1][ngram] = entry;
}

const NGramModel::Entry* NGramModel::Find(std::span<const int> ngram) const {
  if (ngram.empty() || static_cast<int>(ngram.size()) > order_) return nullptr;
  const auto& table = entries_[ngram.size() - 1];
  auto it = table.find(NGram(ngram.begin(), ngram.end()));
  return it == table.end() ? nullptr : &it->second;
}

double NGramModel::ConditionalLogProb(std::span<const int> history, int word) const {
  if (order_ == 0) return kLogZero;
  const std::size_t keep = std::min<std::size_t>(history.size(), order_ - 1);
  history = history.subspan(history.size() - keep);
  NGram key;
  key.reserve(keep + 1);
  double acc = 0.0;
  for (std::size_t start = 0; start <= keep; ++start) {
    key.assign(history.begin() + start, history.end());
    key.push_back(word);
    if (const Entry* e = Find(key)) return acc + e->logprob;
    if (start < keep) {
      key.pop_back();
      if (const Entry* ctx = Find(key); ctx && ctx->has_backoff) acc += ctx->backoff;
    }
  }
  return kLogZero;
}

SymbolTable NGramModel::WordSymbols() const {
  SymbolTable t;
  for (const auto& w : words_) t.AddSymbol(w);
  return t;
}

NGramModel Estimate(const std::vector<std::vector<std::string>>& corpus, int order,
                    double discount, const std::optional<std::vector<std::string>>& vocabulary) {
  if (corpus.empty()) throw DataError("estimate: empty corpus");
  if (order < 1) throw DataError("estimate: order must be >= 1");
  if (!(discount > 0.0 && discount < 1.0)) throw DataError("estimate: discount must be in (0, 1)");

  std::vector<std::string> words;
  if (vocabulary) {
    words = *vocabulary;
  } else {
    std::set<std::string> seen;
    for (const auto& sentence : corpus) {
      for (const auto& w : sentence) {
        if (seen.insert(w).second) words.push_back(w);
      }
    }
  }
  NGramModel lm(order, words);
  const int bos = lm.Bos(), eos = lm.Eos();

  // counts[k-1][ngram] for n-grams ending in a predicted token.
  std::vector<std::map<NGramModel::NGram, double>> counts(order);
  for (const auto& sentence : corpus) {
    std::vector<int> padded{bos};
    for (const auto& w : sentence) {
      int id = lm.WordId(w);
      if (id == kNoSymbol || id == bos || id == eos) {
        throw DataError("estimate: word '" + w + "' outside the vocabulary");
      }
      padded.push_back(id);
    }
    padded.push_back(eos);
    for (std::size_t end = 1; end < padded.size(); ++end) {
      for (int k = 1; k <= order && static_cast<std::size_t>(k) <= end + 1; ++k) {
        NGramModel::NGram g(padded.begin() + (end + 1 - k), padded.begin() + end + 1);
        counts[k - 1][g] += 1.0;
      }
    }
  }

  // Predictable symbols: the vocabulary plus </s>.
  std::vector<int> predictable;
  for (int w = 1; w <= lm.NumWords(); ++w) predictable.push_back(w);
  predictable.push_back(eos);
  const double num_predictable = static_cast<double>(predictable.size());

  // Unigrams: discounted counts interpolated with a uniform distribution.
  double total = 0.0, seen_types = 0.0;
  for (const auto& [g, c] : counts[0]) {
    total += c;
    seen_types += 1.0;
  }
  const double floor_mass = discount * seen_types / total / num_predictable;
  for (int w : predictable) {
    auto it = counts[0].find({w});
    double c = it == counts[0].end() ? 0.0 : it->second;
    double p = std::max(c - discount, 0.0) / total + floor_mass;
    lm.SetEntry({w}, {std::log(p), 0.0, false});
  }
  if (order > 1) lm.SetEntry({bos}, {-99.0 * std::log(10.0), 0.0, false});

  for (int k = 2; k <= order; ++k) {
    std::map<NGramModel::NGram, std::vector<std::pair<int, double>>> by_history;
    for (const auto& [g, c] : counts[k - 1]) {
      NGramModel::NGram h(g.begin(), g.end() - 1);
      by_history[h].emplace_back(g.back(), c);
    }
    for (const auto& [h, successors] : by_history) {
      double context_total = 0.0;
      for (const auto& [w, c] : successors) context_total += c;
      const bool complete = successors.size() == predictable.size();
      NGramModel::NGram g = h;
      g.push_back(0);
      double lower_seen = 0.0;
      for (const auto& [w, c] : successors) {
        g.back() = w;
        double p = complete ? c / context_total : (c - discount) / context_total;
        lm.SetEntry(g, {std::log(p), 0.0, false});
        lower_seen += std::exp(lm.ConditionalLogProb(std::span<const int>(h).subspan(1), w));
      }
      NGramModel::Entry ctx = *lm.Find(h);
      if (!complete) {
        const double left_over = discount * static_cast<double>(successors.size()) / context_total;
        ctx.backoff = std::log(left_over) - std::log(1.0 - lower_seen);
        ctx.has_backoff = true;
      }
      lm.SetEntry(h, ctx);
    }
  }
  return lm;
}

double ScoreSequenceIds(const NGramModel& lm, std::span<const int> ids) {
  std::vector<int> history{lm.Bos()};
  double total = 0.0;
  for (int id : ids) {
    if (id < 1 || id > lm.NumWords()) throw DataError("score: word id outside the LM vocabulary");
    total += lm.ConditionalLogProb(history, id);
    history.push_back(id);
  }
  return total + lm.ConditionalLogProb(history, lm.Eos());
}

double ScoreSequence(const NGramModel& lm, std::span<const std::string> words) {
  std::vector<int> ids;
  ids.reserve(words.size());
  for (const auto& w : words) {
    int id = lm.WordId(w);
    if (id == kNoSymbol || id == lm.Bos() || id == lm.Eos()) {
      throw DataError("score: out-of-vocabulary word '" + w + "'");
    }
    ids.push_back(id);
  }
  return ScoreSequenceIds(lm, ids);
}

double ContextMass(const NGramModel& lm, std::span<const int> history) {
  double mass = 0.0;
  for (int w = 1; w <= lm.NumWords(); ++w) mass += std::exp(lm.ConditionalLogProb(history, w));
  return mass + std::exp(lm.ConditionalLogProb(history, lm.Eos()));
}

std::vector<std::vector<std::string>> ReadCorpus(std::istream& is, bool skip_first_field) {
  std::vector<std::vector<std::string>> corpus;
  std::string line;
  while (std::getline(is, line)) {
    std::istringstream fields(line);
    std::vector<std::string> sentence;
    std::string tok;
    if (skip_first_field && !(fields >> tok)) continue;
    while (fields >> tok) sentence.push_back(tok);
    if (!skip_first_field && sentence.empty()) continue;
    corpus.push_back(std::move(sentence));
  }
  return corpus;
}

}  // namespace ctccrf::lm
