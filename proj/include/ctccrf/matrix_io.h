// ctccrf/matrix_io.h

#ifndef CTCCRF_MATRIX_IO_H_
#define CTCCRF_MATRIX_IO_H_

#include <iosfwd>
#include <map>
#include <string>

#include "ctccrf/common.h"

namespace ctccrf {

/// Log-softmax node potentials, T frames by |S_pi| columns.
class PosteriorMatrix {
 public:
  PosteriorMatrix() = default;
  /// Throws DataError on NaN or on a row whose log-sum-exp is not within
  /// `tolerance` of 0. -inf entries are fine.
  explicit PosteriorMatrix(Matrix values, double tolerance = 1e-5);

  int frames() const { return static_cast<int>(values_.rows()); }
  int width() const { return static_cast<int>(values_.cols()); }
  double operator()(int t, int s) const { return values_(t, s); }
  const Matrix& values() const { return values_; }

 private:
  Matrix values_;
};

/// Row-wise log-softmax.
Matrix LogSoftmaxRows(const Matrix& logits);

/// "CATM", u32 rows, u32 cols, row-major little-endian float32.
void WriteMatrix(const Matrix& m, std::ostream& os);
Matrix ReadMatrix(std::istream& is);
void WriteMatrixFile(const Matrix& m, const std::string& path);
Matrix ReadMatrixFile(const std::string& path);

/// `utterance-id<TAB>value` with 12 significant digits, sorted by id.
void WriteLogPlCache(const std::map<std::string, double>& values, std::ostream& os);
std::map<std::string, double> ReadLogPlCache(std::istream& is);

}  // namespace ctccrf

#endif  // CTCCRF_MATRIX_IO_H_
