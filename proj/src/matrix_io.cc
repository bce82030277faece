// ctccrf/matrix_io.cc

#include "ctccrf/matrix_io.h"

#include <bit>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace ctccrf {

static_assert(std::endian::native == std::endian::little,
              "binary formats are written in host order and assume little-endian");

PosteriorMatrix::PosteriorMatrix(Matrix values, double tolerance) : values_(std::move(values)) {
  for (int t = 0; t < frames(); ++t) {
    double lse = kLogZero;
    for (int s = 0; s < width(); ++s) {
      double v = values_(t, s);
      if (std::isnan(v)) throw DataError("posterior row " + std::to_string(t) + " contains NaN");
      lse = LogAdd(lse, v);
    }
    if (!(std::abs(lse) <= tolerance)) {
      throw DataError("posterior row " + std::to_string(t) + " is not log-normalized");
    }
  }
}

Matrix LogSoftmaxRows(const Matrix& logits) {
  Matrix out(logits.rows(), logits.cols());
  for (Eigen::Index t = 0; t < logits.rows(); ++t) {
    const double m = logits.row(t).maxCoeff();
    const double lse = m + std::log((logits.row(t).array() - m).exp().sum());
    out.row(t) = logits.row(t).array() - lse;
  }
  return out;
}

namespace {

void WriteU32(std::ostream& os, std::uint32_t v) { os.write(reinterpret_cast<const char*>(&v), 4); }

std::uint32_t ReadU32(std::istream& is) {
  std::uint32_t v = 0;
  if (!is.read(reinterpret_cast<char*>(&v), 4)) throw DataError("matrix: truncated header");
  return v;
}

}  // namespace

void WriteMatrix(const Matrix& m, std::ostream& os) {
  os.write("CATM", 4);
  WriteU32(os, static_cast<std::uint32_t>(m.rows()));
  WriteU32(os, static_cast<std::uint32_t>(m.cols()));
  std::vector<float> row(m.cols());
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) row[c] = static_cast<float>(m(r, c));
    os.write(reinterpret_cast<const char*>(row.data()),
             static_cast<std::streamsize>(row.size() * sizeof(float)));
  }
}

Matrix ReadMatrix(std::istream& is) {
  char magic[4];
  if (!is.read(magic, 4) || std::memcmp(magic, "CATM", 4) != 0) {
    throw DataError("matrix: bad magic (expected CATM)");
  }
  const std::uint32_t rows = ReadU32(is), cols = ReadU32(is);
  Matrix m(rows, cols);
  std::vector<float> row(cols);
  for (std::uint32_t r = 0; r < rows; ++r) {
    if (!is.read(reinterpret_cast<char*>(row.data()),
                 static_cast<std::streamsize>(row.size() * sizeof(float)))) {
      throw DataError("matrix: truncated data");
    }
    for (std::uint32_t c = 0; c < cols; ++c) m(r, c) = row[c];
  }
  return m;
}

void WriteMatrixFile(const Matrix& m, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("cannot write " + path);
  WriteMatrix(m, os);
}

Matrix ReadMatrixFile(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open " + path);
  return ReadMatrix(is);
}

void WriteLogPlCache(const std::map<std::string, double>& values, std::ostream& os) {
  char buf[40];
  for (const auto& [id, v] : values) {
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    os << id << '\t' << buf << '\n';
  }
}

std::map<std::string, double> ReadLogPlCache(std::istream& is) {
  std::map<std::string, double> values;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream fields(line);
    std::string id, value;
    if (!(fields >> id >> value)) {
      throw DataError("log_pl cache line " + std::to_string(lineno) + ": expected `id value`");
    }
    try {
      values[id] = std::stod(value);
    } catch (const std::exception&) {
      throw DataError("log_pl cache line " + std::to_string(lineno) + ": bad value");
    }
  }
  return values;
}

}  // namespace ctccrf
