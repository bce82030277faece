// ctccrf/decoder.h

#ifndef CTCCRF_DECODER_H_
#define CTCCRF_DECODER_H_

#include <limits>
#include <optional>
#include <vector>

#include "ctccrf/alphabet.h"
#include "ctccrf/matrix_io.h"
#include "ctccrf/wfst.h"

namespace ctccrf::decode {

/// Per-frame argmax (lowest id wins ties) followed by MapB().
std::vector<int> GreedyDecode(const Matrix& potentials);

struct BeamConfig {
  int width = std::numeric_limits<int>::max();
  double slack = std::numeric_limits<double>::infinity();
  /// Frames whose blank probability exceeds this are skipped.
  std::optional<double> blank_skip;
  /// Add the blank score of skipped frames to every hypothesis (a uniform
  /// shift that does not change the search).
  bool skip_adds_blank_score = false;

  void Validate() const;
};

struct DecodeResult {
  std::vector<int> words;  // output symbol ids of the graph
  double score = kLogZero;
  int frames_processed = 0;
  int frames_skipped = 0;
  bool ok = false;  // false when no hypothesis survived to a final state
};

/// Time-synchronous Viterbi beam search over a decoding graph whose input
/// labels are ToFstInput(state id). The epsilon order of the graph is
/// computed once; Decode() is const and thread-safe. Skipped frames move
/// every hypothesis across the graph's blank arcs without an acoustic score.
class BeamDecoder {
 public:
  explicit BeamDecoder(const fst::Wfst& graph);

  DecodeResult Decode(const Matrix& potentials, const BeamConfig& config) const;

 private:
  const fst::Wfst& graph_;
  std::vector<int> eps_order_;  // states in topological order of eps arcs
  bool eps_acyclic_ = true;
  bool has_eps_ = false;
};

inline DecodeResult BeamDecode(const Matrix& potentials, const fst::Wfst& graph,
                               const BeamConfig& config) {
  return BeamDecoder(graph).Decode(potentials, config);
}

}  // namespace ctccrf::decode

#endif  // CTCCRF_DECODER_H_
