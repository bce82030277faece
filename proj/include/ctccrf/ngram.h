// ctccrf/ngram.h

#ifndef CTCCRF_NGRAM_H_
#define CTCCRF_NGRAM_H_

#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ctccrf/symbol_table.h"
#include "ctccrf/wfst.h"

namespace ctccrf::lm {

/// Backoff n-gram model. Probabilities and backoff weights are stored in
/// natural log; ARPA's log10 appears only at the file boundary.
///
/// Word ids: 1..V are the vocabulary words in insertion order, then <s> and
/// </s>. Id 0 is unused (epsilon).
class NGramModel {
 public:
  struct Entry {
    double logprob = 0.0;
    double backoff = 0.0;
    bool has_backoff = false;
  };
  using NGram = std::vector<int>;

  static constexpr const char* kBos = "<s>";
  static constexpr const char* kEos = "</s>";

  NGramModel() = default;
  /// `words` excludes the sentence boundaries. Throws DataError on order < 1,
  /// duplicates or reserved names.
  NGramModel(int order, std::vector<std::string> words);

  int order() const { return order_; }
  const std::vector<std::string>& words() const { return words_; }
  int NumWords() const { return static_cast<int>(words_.size()); }
  int Bos() const { return NumWords() + 1; }
  int Eos() const { return NumWords() + 2; }
  /// kNoSymbol when absent. Knows <s> and </s>.
  int WordId(const std::string& word) const;
  const std::string& WordName(int id) const;

  /// Inserts or replaces. Throws DataError if the n-gram is longer than the
  /// order or contains an unknown id.
  void SetEntry(const NGram& ngram, const Entry& entry);
  const Entry* Find(std::span<const int> ngram) const;
  /// Entries of order k (1-based), sorted by id sequence.
  const std::map<NGram, Entry>& Entries(int k) const { return entries_[k - 1]; }
  std::size_t NumEntries(int k) const {
    return k >= 1 && k <= order_ ? entries_[k - 1].size() : 0;
  }

  /// log p(word | history) by the backoff recursion; only the last order-1
  /// history symbols matter. kLogZero if the word has no unigram.
  double ConditionalLogProb(std::span<const int> history, int word) const;

  /// <eps> followed by the vocabulary, in id order.
  SymbolTable WordSymbols() const;

 private:
  int order_ = 0;
  std::vector<std::string> words_;
  std::map<std::string, int> ids_;
  std::vector<std::map<NGram, Entry>> entries_;
};

/// Absolute-discounting backoff estimate. `vocabulary` closes the word set
/// (words never seen still get unigram mass); by default the vocabulary is
/// the set of corpus words in order of first appearance.
/// Throws DataError on an empty corpus, order < 1, discount outside (0, 1),
/// or corpus words missing from an explicit vocabulary.
NGramModel Estimate(const std::vector<std::vector<std::string>>& corpus,
                    int order, double discount = 0.5,
                    const std::optional<std::vector<std::string>>& vocabulary =
                        std::nullopt);

/// Natural-log probability of `<s> words </s>`. Throws DataError on OOV.
double ScoreSequence(const NGramModel& lm, std::span<const std::string> words);
double ScoreSequenceIds(const NGramModel& lm, std::span<const int> ids);

/// Sum over next symbols (vocabulary and </s>) of p(w | history).
double ContextMass(const NGramModel& lm, std::span<const int> history);

/// Throws DataError with a line number on malformed input.
NGramModel ParseArpa(std::istream& is);
void EmitArpa(const NGramModel& lm, std::ostream& os);

/// Backoff acceptor: one state per history, n-gram arcs weighted by
/// log-probability, epsilon backoff arcs weighted by the backoff weight,
/// explicit </s> probabilities as final weights. State 0 is the <s>
/// history (for order 1, a dedicated start state with an epsilon arc into
/// the unigram state). A history that has explicit entries for every
/// possible next symbol gets no backoff arc.
///
/// Labels use WordSymbols(), or `target` when given; in that case the LM
/// vocabulary must equal the target's non-epsilon symbols as a set.
fst::Wfst LmToFst(const NGramModel& lm,
                  SemiringKind kind = SemiringKind::kLog);
fst::Wfst LmToFst(const NGramModel& lm, const SymbolTable& target,
                  SemiringKind kind = SemiringKind::kLog);

/// Reads one whitespace-tokenized sentence per line. With
/// `skip_first_field`, the first token (an utterance id) is dropped.
std::vector<std::vector<std::string>> ReadCorpus(std::istream& is,
                                                 bool skip_first_field = false);

}  // namespace ctccrf::lm

#endif  // CTCCRF_NGRAM_H_
