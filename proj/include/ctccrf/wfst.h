// ctccrf/wfst.h

#ifndef CTCCRF_WFST_H_
#define CTCCRF_WFST_H_

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

#include "ctccrf/semiring.h"
#include "ctccrf/symbol_table.h"

namespace ctccrf::fst {

inline constexpr int kNoState = -1;

struct Arc {
  int ilabel = kEpsilon;
  int olabel = kEpsilon;
  double weight = 0.0;
  int nextstate = kNoState;
};

/// Mutable vector-backed transducer. Once built it is only read, and a const
/// Wfst may be shared by any number of threads.
class Wfst {
 public:
  Wfst() = default;
  Wfst(SymbolTable isyms, SymbolTable osyms,
       SemiringKind kind = SemiringKind::kLog);

  int AddState();
  void SetStart(int state);
  void SetFinal(int state, double weight);
  /// Arcs with a -inf weight carry no mass and are dropped.
  void AddArc(int state, const Arc& arc);
  void ReserveStates(int n);

  int Start() const { return start_; }
  int NumStates() const { return static_cast<int>(arcs_.size()); }
  std::size_t NumArcs() const;
  std::size_t NumArcs(int state) const { return arcs_[state].size(); }
  std::span<const Arc> Arcs(int state) const { return arcs_[state]; }
  double Final(int state) const { return finals_[state]; }
  bool IsFinal(int state) const { return finals_[state] != kLogZero; }

  const SymbolTable& isyms() const { return isyms_; }
  const SymbolTable& osyms() const { return osyms_; }
  SemiringKind semiring() const { return kind_; }
  void set_semiring(SemiringKind kind) { kind_ = kind; }

 private:
  void CheckState(int state) const;

  SymbolTable isyms_;
  SymbolTable osyms_;
  SemiringKind kind_ = SemiringKind::kLog;
  int start_ = kNoState;
  std::vector<std::vector<Arc>> arcs_;
  std::vector<double> finals_;
};

/// Keeps only states that lie on some start -> final path. State order is
/// preserved, so a start state 0 stays 0. May return an empty machine.
Wfst Trim(const Wfst& fst);

/// Composition with the three-state epsilon filter; the result is trimmed.
/// Throws DataError unless a.osyms() and b.isyms() hash equal, or the
/// semirings differ.
Wfst Compose(const Wfst& a, const Wfst& b);

/// Text format: `src\tdst\tilabel\tolabel\tweight` per arc, `state\tweight`
/// per final state, start renumbered to 0, weights with 9 significant
/// digits. Labels are written as integer ids.
void WriteText(const Wfst& fst, std::ostream& os);
Wfst ReadText(std::istream& is, SymbolTable isyms, SymbolTable osyms,
              SemiringKind kind = SemiringKind::kLog);

}  // namespace ctccrf::fst

#endif  // CTCCRF_WFST_H_
