// ctccrf/ctc_topology.cc

#include "ctccrf/graphs.h"

namespace ctccrf::fst {

Wfst BuildCtcTopology(const Alphabet& alphabet, SemiringKind kind) {
  if (alphabet.empty()) throw DataError("ctc topology: empty alphabet");
  Wfst t(alphabet.StateSymbols(), alphabet.LabelSymbols(), kind);
  const int num_labels = alphabet.NumLabels();
  const int blk = ToFstInput(Alphabet::kBlank);
  t.ReserveStates(num_labels + 1);
  for (int s = 0; s <= num_labels; ++s) {
    t.AddState();
    t.SetFinal(s, 0.0);
  }
  t.SetStart(0);

  t.AddArc(0, {blk, kEpsilon, 0.0, 0});
  for (int i = 1; i <= num_labels; ++i) t.AddArc(0, {ToFstInput(i), i, 0.0, i});
  for (int i = 1; i <= num_labels; ++i) {
    t.AddArc(i, {ToFstInput(i), kEpsilon, 0.0, i});
    t.AddArc(i, {blk, kEpsilon, 0.0, 0});
    for (int j = 1; j <= num_labels; ++j) {
      if (j != i) t.AddArc(i, {ToFstInput(j), j, 0.0, j});
    }
  }
  return t;
}

}  // namespace ctccrf::fst
