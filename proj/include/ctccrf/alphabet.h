// ctccrf/alphabet.h

#ifndef CTCCRF_ALPHABET_H_
#define CTCCRF_ALPHABET_H_

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "ctccrf/symbol_table.h"

namespace ctccrf {

/// The label set plus blank. State ids: blank is 0, label i is i + 1.
///
/// Label sequences throughout the library are vectors of state ids in
/// [1, NumStates()). In transducers the state alphabet is shifted by one so
/// that id 0 stays epsilon: see ToFstInput().
class Alphabet {
 public:
  static constexpr int kBlank = 0;
  static constexpr const char* kBlankName = "<blk>";

  Alphabet() = default;
  /// Throws DataError on empty, duplicate or reserved names.
  explicit Alphabet(std::vector<std::string> labels);

  int NumLabels() const { return static_cast<int>(labels_.size()); }
  /// |S_pi| = labels + blank.
  int NumStates() const { return NumLabels() + 1; }
  bool empty() const { return labels_.empty(); }

  const std::vector<std::string>& labels() const { return labels_; }
  const std::string& Name(int state_id) const;
  /// State id of a label or blank name; kNoSymbol when absent.
  int Find(const std::string& name) const;

  /// Transducer input table: <eps>=0, <blk>=1, label i -> i + 2.
  SymbolTable StateSymbols() const;
  /// Transducer output table: <eps>=0, label i -> i + 1 (equal to state id).
  SymbolTable LabelSymbols() const;

  /// Maps a sequence of names to state ids; throws DataError naming the
  /// first unknown symbol.
  std::vector<int> Encode(std::span<const std::string> names) const;
  std::vector<std::string> Decode(std::span<const int> ids) const;

  /// One label per line; blank lines ignored.
  static Alphabet Read(std::istream& is);
  void Write(std::ostream& os) const;

 private:
  std::vector<std::string> labels_;
};

inline int ToFstInput(int state_id) { return state_id + 1; }
inline int FromFstInput(int ilabel) { return ilabel - 1; }

/// Reference implementation of the CTC collapse: merge runs of identical
/// symbols, then drop blanks. Throws DataError on ids outside [0, num_states).
std::vector<int> MapB(std::span<const int> states, int num_states);

inline std::vector<int> MapB(std::span<const int> states, const Alphabet& alphabet) {
  return MapB(states, alphabet.NumStates());
}

}  // namespace ctccrf

#endif  // CTCCRF_ALPHABET_H_
