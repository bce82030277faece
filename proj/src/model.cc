// ctccrf/model.cc

#include "ctccrf/model.h"

#include <cmath>

namespace ctccrf::am {

namespace {

Matrix Uniform(int rows, int cols, double scale, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-scale, scale);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = dist(rng);
  return m;
}

// One direction of an Elman layer: h_t = tanh(x_t Wx^T + h_prev Wh^T + b).
Matrix RunRecurrent(const Matrix& x, const Matrix& wx, const Matrix& wh, const Matrix& b,
                    bool reverse) {
  const Eigen::Index frames = x.rows(), hidden = wx.rows();
  Matrix h(frames, hidden);
  Matrix pre = x * wx.transpose();
  Eigen::RowVectorXd prev = Eigen::RowVectorXd::Zero(hidden);
  for (Eigen::Index i = 0; i < frames; ++i) {
    const Eigen::Index t = reverse ? frames - 1 - i : i;
    Eigen::RowVectorXd a = pre.row(t) + prev * wh.transpose() + b;
    h.row(t) = a.array().tanh();
    prev = h.row(t);
  }
  return h;
}

// Adds parameter gradients into dwx/dwh/db and returns d input.
Matrix BackpropRecurrent(const Matrix& x, const Matrix& h, const Matrix& dh_out,
                         const Matrix& wx, const Matrix& wh, bool reverse, Matrix& dwx,
                         Matrix& dwh, Matrix& db) {
  const Eigen::Index frames = x.rows(), hidden = wx.rows();
  Matrix da_all(frames, hidden);
  Eigen::RowVectorXd carry = Eigen::RowVectorXd::Zero(hidden);
  for (Eigen::Index i = frames - 1; i >= 0; --i) {
    const Eigen::Index t = reverse ? frames - 1 - i : i;
    Eigen::RowVectorXd dh = dh_out.row(t) + carry;
    Eigen::RowVectorXd da = dh.array() * (1.0 - h.row(t).array().square());
    da_all.row(t) = da;
    const Eigen::Index prev = reverse ? t + 1 : t - 1;
    if (i > 0) dwh += da.transpose() * h.row(prev);
    carry = da * wh;
  }
  dwx += da_all.transpose() * x;
  db += da_all.colwise().sum();
  return da_all * wx;
}

}  // namespace

AcousticModel::AcousticModel(std::vector<LayerSpec> layers, std::uint64_t seed)
    : layers_(std::move(layers)) {
  Validate();
  std::mt19937_64 rng(seed);
  for (const LayerSpec& l : layers_) {
    param_offset_.push_back(static_cast<int>(params_.size()));
    if (l.kind == LayerKind::kAffine) {
      params_.push_back(Uniform(l.out, l.in, 1.0 / std::sqrt(l.in), rng));
      params_.push_back(Matrix::Zero(1, l.out));
    } else if (l.kind == LayerKind::kRecurrent) {
      for (int dir = 0; dir < (l.bidirectional ? 2 : 1); ++dir) {
        params_.push_back(Uniform(l.out, l.in, 1.0 / std::sqrt(l.in), rng));
        params_.push_back(Uniform(l.out, l.out, 1.0 / std::sqrt(l.out), rng));
        params_.push_back(Matrix::Zero(1, l.out));
      }
    }
  }
}

void AcousticModel::Validate() const {
  if (layers_.empty()) throw DataError("model: no layers");
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const LayerSpec& l = layers_[i];
    if (l.in <= 0 || l.out <= 0) throw DataError("model: layer dimensions must be positive");
    if (l.kind == LayerKind::kTanh && l.in != l.out) throw DataError("model: tanh must keep its width");
    if (i > 0 && l.in != layers_[i - 1].OutputDim()) {
      throw DataError("model: layer " + std::to_string(i) + " input width does not match");
    }
  }
  if (layers_.back().kind != LayerKind::kAffine) throw DataError("model: last layer must be affine");
}

std::size_t AcousticModel::NumParameters() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += static_cast<std::size_t>(p.size());
  return n;
}

PosteriorMatrix AcousticModel::Forward(const Matrix& features) const {
  return PosteriorMatrix(ForwardLogProbs(features), 1e-8);
}

Matrix AcousticModel::ForwardLogProbs(const Matrix& features, ForwardCache* cache,
                                      std::mt19937_64* dropout_rng) const {
  if (features.cols() != input_dim()) {
    throw DataError("model: feature width " + std::to_string(features.cols()) + ", expected " +
                    std::to_string(input_dim()));
  }
  if (cache) *cache = ForwardCache{};
  Matrix x = features;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const LayerSpec& l = layers_[i];
    const Matrix* p = params_.data() + param_offset_[i];
    Matrix y;
    switch (l.kind) {
      case LayerKind::kAffine:
        y = x * p[0].transpose();
        y.rowwise() += p[1].row(0);
        break;
      case LayerKind::kTanh:
        y = x.array().tanh();
        break;
      case LayerKind::kRecurrent:
        if (l.bidirectional) {
          y.resize(x.rows(), 2 * l.out);
          y.leftCols(l.out) = RunRecurrent(x, p[0], p[1], p[2], false);
          y.rightCols(l.out) = RunRecurrent(x, p[3], p[4], p[5], true);
        } else {
          y = RunRecurrent(x, p[0], p[1], p[2], false);
        }
        break;
    }
    Matrix mask;
    if (l.kind == LayerKind::kRecurrent && dropout_rng && dropout_ > 0.0) {
      std::bernoulli_distribution keep(1.0 - dropout_);
      mask.resize(y.rows(), y.cols());
      for (Eigen::Index k = 0; k < mask.size(); ++k) {
        mask.data()[k] = keep(*dropout_rng) ? 1.0 / (1.0 - dropout_) : 0.0;
      }
    }
    if (cache) {
      cache->inputs.push_back(x);
      cache->outputs.push_back(y);
      cache->dropout_masks.push_back(mask);
    }
    x = mask.size() > 0 ? Matrix(y.cwiseProduct(mask)) : std::move(y);
  }
  Matrix log_probs = LogSoftmaxRows(x);
  if (cache) cache->log_probs = log_probs;
  return log_probs;
}

std::vector<Matrix> AcousticModel::Backward(const ForwardCache& cache, const Matrix& upstream) const {
  if (cache.inputs.size() != layers_.size() || upstream.rows() != cache.log_probs.rows() ||
      upstream.cols() != cache.log_probs.cols()) {
    throw DataError("model backward: upstream shape does not match the forward pass");
  }
  std::vector<Matrix> grads;
  grads.reserve(params_.size());
  for (const auto& p : params_) grads.push_back(Matrix::Zero(p.rows(), p.cols()));

  // Log-softmax Jacobian: dz = g - softmax * rowsum(g).
  Matrix softmax = cache.log_probs.array().exp();
  Eigen::VectorXd row_sums = upstream.rowwise().sum();
  Matrix dy = upstream - (softmax.array().colwise() * row_sums.array()).matrix();

  for (std::size_t i = layers_.size(); i-- > 0;) {
    const LayerSpec& l = layers_[i];
    const Matrix* p = params_.data() + param_offset_[i];
    Matrix* g = grads.data() + param_offset_[i];
    const Matrix& x = cache.inputs[i];
    const Matrix& y = cache.outputs[i];
    if (cache.dropout_masks[i].size() > 0) dy = dy.cwiseProduct(cache.dropout_masks[i]);
    Matrix dx;
    switch (l.kind) {
      case LayerKind::kAffine:
        g[0] += dy.transpose() * x;
        g[1] += dy.colwise().sum();
        dx = dy * p[0];
        break;
      case LayerKind::kTanh:
        dx = dy.array() * (1.0 - y.array().square());
        break;
      case LayerKind::kRecurrent:
        if (l.bidirectional) {
          dx = BackpropRecurrent(x, y.leftCols(l.out), dy.leftCols(l.out), p[0], p[1], false, g[0],
                                 g[1], g[2]);
          dx += BackpropRecurrent(x, y.rightCols(l.out), dy.rightCols(l.out), p[3], p[4], true,
                                  g[3], g[4], g[5]);
        } else {
          dx = BackpropRecurrent(x, y, dy, p[0], p[1], false, g[0], g[1], g[2]);
        }
        break;
    }
    dy = std::move(dx);
  }
  return grads;
}

}  // namespace ctccrf::am
