// ctccrf/error_rate.cc

#include "ctccrf/error_rate.h"

#include <algorithm>

#include "ctccrf/common.h"

namespace ctccrf::decode {

double ErrorRate::rate() const {
  if (reference_words == 0) return static_cast<double>(errors());
  return static_cast<double>(errors()) / static_cast<double>(reference_words);
}

namespace {

struct Cell {
  long cost = 0;
  long sub = 0, del = 0, ins = 0;
};

// Minimum edit cost; among equal costs prefer substitutions, then
// deletions, then insertions so breakdowns are stable.
template <typename T>
Cell Align(const std::vector<T>& hyp, const std::vector<T>& ref) {
  const std::size_t n = ref.size(), m = hyp.size();
  std::vector<Cell> prev(m + 1), cur(m + 1);
  for (std::size_t j = 0; j <= m; ++j) prev[j] = {static_cast<long>(j), 0, 0, static_cast<long>(j)};
  for (std::size_t i = 1; i <= n; ++i) {
    cur[0] = {static_cast<long>(i), 0, static_cast<long>(i), 0};
    for (std::size_t j = 1; j <= m; ++j) {
      Cell diag = prev[j - 1];
      if (!(ref[i - 1] == hyp[j - 1])) {
        ++diag.cost;
        ++diag.sub;
      }
      Cell up = prev[j];
      ++up.cost;
      ++up.del;
      Cell left = cur[j - 1];
      ++left.cost;
      ++left.ins;
      Cell best = diag;
      if (up.cost < best.cost) best = up;
      if (left.cost < best.cost) best = left;
      cur[j] = best;
    }
    std::swap(prev, cur);
  }
  return prev[m];
}

}  // namespace

template <typename T>
ErrorRate EvaluateErrorRate(const std::vector<std::vector<T>>& hyp,
                            const std::vector<std::vector<T>>& ref) {
  if (hyp.size() != ref.size()) {
    throw DataError("error rate: " + std::to_string(hyp.size()) + " hypotheses for " +
                    std::to_string(ref.size()) + " references");
  }
  ErrorRate er;
  for (std::size_t k = 0; k < hyp.size(); ++k) {
    const Cell c = Align(hyp[k], ref[k]);
    er.substitutions += c.sub;
    er.deletions += c.del;
    er.insertions += c.ins;
    er.reference_words += static_cast<long>(ref[k].size());
  }
  return er;
}

template ErrorRate EvaluateErrorRate(const std::vector<std::vector<int>>&,
                                     const std::vector<std::vector<int>>&);
template ErrorRate EvaluateErrorRate(const std::vector<std::vector<std::string>>&,
                                     const std::vector<std::vector<std::string>>&);

}  // namespace ctccrf::decode
