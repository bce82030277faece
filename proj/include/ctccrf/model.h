// ctccrf/model.h

#ifndef CTCCRF_MODEL_H_
#define CTCCRF_MODEL_H_

#include <cstdint>
#include <iosfwd>
#include <random>
#include <string>
#include <vector>

#include "ctccrf/common.h"
#include "ctccrf/matrix_io.h"

namespace ctccrf::am {

enum class LayerKind : std::uint32_t { kAffine = 1, kTanh = 2, kRecurrent = 3 };

/// `out` is the hidden size for a recurrent layer; a bidirectional layer
/// produces 2 * out columns (forward then backward).
struct LayerSpec {
  LayerKind kind = LayerKind::kAffine;
  int in = 0;
  int out = 0;
  bool bidirectional = false;

  static LayerSpec Affine(int in, int out) { return {LayerKind::kAffine, in, out, false}; }
  static LayerSpec Tanh(int dim) { return {LayerKind::kTanh, dim, dim, false}; }
  static LayerSpec Recurrent(int in, int hidden, bool bidirectional) {
    return {LayerKind::kRecurrent, in, hidden, bidirectional};
  }
  int OutputDim() const {
    return kind == LayerKind::kRecurrent && bidirectional ? 2 * out : out;
  }
};

/// Per-layer activations kept by the forward pass for Backward().
struct ForwardCache {
  std::vector<Matrix> inputs;                   // input of each layer
  std::vector<Matrix> outputs;                  // output of each layer
  std::vector<Matrix> dropout_masks;            // empty when unused
  Matrix log_probs;
};

/// Small feed-forward / Elman-recurrent network ending in log-softmax.
/// The last layer must be Affine; its output width is |S_pi|.
class AcousticModel {
 public:
  AcousticModel() = default;
  /// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) init from `seed`.
  AcousticModel(std::vector<LayerSpec> layers, std::uint64_t seed);

  const std::vector<LayerSpec>& layers() const { return layers_; }
  int input_dim() const { return layers_.front().in; }
  int output_dim() const { return layers_.back().out; }

  /// Parameter tensors in a fixed order (per layer: W, b; recurrent: Wx,
  /// Wh, b per direction).
  std::vector<Matrix>& params() { return params_; }
  const std::vector<Matrix>& params() const { return params_; }
  std::size_t NumParameters() const;

  /// Inverted dropout rate on recurrent outputs, applied only when an RNG
  /// is passed to Forward().
  double dropout() const { return dropout_; }
  void set_dropout(double p) { dropout_ = p; }

  /// Throws DataError on a feature width mismatch.
  PosteriorMatrix Forward(const Matrix& features) const;
  Matrix ForwardLogProbs(const Matrix& features, ForwardCache* cache = nullptr,
                         std::mt19937_64* dropout_rng = nullptr) const;

  /// Reverse-mode gradients of sum(upstream .* log_probs) with respect to
  /// params(), including the log-softmax Jacobian. `cache` must come from
  /// ForwardLogProbs() on the same parameters.
  std::vector<Matrix> Backward(const ForwardCache& cache, const Matrix& upstream) const;

  /// Versioned header, layer specs, then float32 tensors (little-endian).
  /// Parameters are rounded to float32 on save.
  void Save(std::ostream& os) const;
  static AcousticModel Load(std::istream& is);
  void SaveFile(const std::string& path) const;
  static AcousticModel LoadFile(const std::string& path);

 private:
  void Validate() const;

  std::vector<LayerSpec> layers_;
  std::vector<int> param_offset_;  // first params_ index of each layer
  std::vector<Matrix> params_;
  double dropout_ = 0.0;
};

}  // namespace ctccrf::am

#endif  // CTCCRF_MODEL_H_
