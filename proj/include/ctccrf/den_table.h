// ctccrf/den_table.h

#ifndef CTCCRF_DEN_TABLE_H_
#define CTCCRF_DEN_TABLE_H_

#include <iosfwd>
#include <vector>

#include "ctccrf/wfst.h"

namespace ctccrf::crf {

struct DenTransition {
  int from = 0;
  int to = 0;
  int label = 0;  // state id in S_pi
  double weight = 0.0;
};

/// Epsilon-free flattening of the denominator graph. Transitions are sorted
/// by (from, label, to); parallel transitions are merged. The incoming
/// index lists transitions grouped by destination for the pull-style
/// forward kernel.
class DenominatorTable {
 public:
  DenominatorTable() = default;
  DenominatorTable(int num_states, int num_labels, int start,
                   std::vector<double> finals,
                   std::vector<DenTransition> transitions);

  int num_states() const { return num_states_; }
  int num_labels() const { return num_labels_; }
  int start() const { return start_; }
  const std::vector<double>& finals() const { return finals_; }
  const std::vector<DenTransition>& transitions() const { return transitions_; }

  /// transitions()[out_begin[s] .. out_begin[s+1]) leave state s.
  const std::vector<int>& out_begin() const { return out_begin_; }
  /// in_order()[in_begin[s] .. in_begin[s+1]) index transitions entering s.
  const std::vector<int>& in_begin() const { return in_begin_; }
  const std::vector<int>& in_order() const { return in_order_; }

  bool empty() const { return num_states_ == 0; }

  /// Header `num_states num_labels start`, then `from\tto\tlabel\tweight`
  /// lines, then `final\tstate\tweight` lines.
  void Write(std::ostream& os) const;
  static DenominatorTable Read(std::istream& is);

 private:
  void BuildIndex();

  int num_states_ = 0;
  int num_labels_ = 0;
  int start_ = 0;
  std::vector<double> finals_;
  std::vector<DenTransition> transitions_;
  std::vector<int> out_begin_;
  std::vector<int> in_begin_;
  std::vector<int> in_order_;
};

/// Removes epsilon-input arcs by weighted (log semiring) epsilon closure and
/// keeps only states reachable from the start and co-reachable to a final.
/// Input labels must come from Alphabet::StateSymbols().
/// Throws NumericalError if an epsilon cycle has weight >= 0 (the closure
/// diverges).
DenominatorTable FlattenDenominator(const fst::Wfst& den_fst);

}  // namespace ctccrf::crf

#endif  // CTCCRF_DEN_TABLE_H_
