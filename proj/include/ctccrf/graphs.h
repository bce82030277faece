// ctccrf/graphs.h
//
// Builders for the CTC topology, the denominator graph and the decoding
// graph.

#ifndef CTCCRF_GRAPHS_H_
#define CTCCRF_GRAPHS_H_

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "ctccrf/alphabet.h"
#include "ctccrf/ngram.h"
#include "ctccrf/wfst.h"

namespace ctccrf::fst {

/// The CTC topology transducer T. State 0 is the blank state (start), state
/// i+1 belongs to label i; every state is final with weight 0.
///
///   0 --blk:eps--> 0          i --i:eps--> i
///   0 --i:i-->     i          i --blk:eps--> 0
///   i --j:j-->     j  (i != j)
///
/// Deterministic on input, and its output on any state sequence equals
/// MapB(). (|S_l| + 1)^2 arcs in total. Throws DataError on an empty
/// alphabet.
Wfst BuildCtcTopology(const Alphabet& alphabet,
                      SemiringKind kind = SemiringKind::kLog);

/// T composed with the label LM acceptor, in the log semiring. The LM's
/// vocabulary must be exactly the alphabet's labels.
Wfst BuildDenominatorGraph(const Alphabet& alphabet, const lm::NGramModel& lm);

struct Lexicon {
  /// (word, pronunciation as label names). A word may repeat.
  std::vector<std::pair<std::string, std::vector<std::string>>> entries;

  /// `word label label ...` per line.
  static Lexicon Read(std::istream& is);
};

/// trim(T o (L o G)) in the tropical semiring. Without a lexicon, L is the
/// identity over labels that are also words of `word_lm`.
/// Throws DataError naming any LM word without a pronunciation, and on an
/// empty word LM.
Wfst BuildDecodingGraph(const Alphabet& alphabet,
                        const std::optional<Lexicon>& lexicon,
                        const lm::NGramModel& word_lm);

/// Output symbols of BuildDecodingGraph(): <eps> then the LM's words.
SymbolTable DecodingWordSymbols(const lm::NGramModel& word_lm);

}  // namespace ctccrf::fst

#endif  // CTCCRF_GRAPHS_H_
