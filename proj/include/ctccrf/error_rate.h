// ctccrf/error_rate.h

#ifndef CTCCRF_ERROR_RATE_H_
#define CTCCRF_ERROR_RATE_H_

#include <string>
#include <vector>

namespace ctccrf::decode {

struct ErrorRate {
  long substitutions = 0;
  long deletions = 0;
  long insertions = 0;
  long reference_words = 0;

  long errors() const { return substitutions + deletions + insertions; }
  /// errors / reference words; 0 for an empty reference corpus with no
  /// errors, errors otherwise.
  double rate() const;
};

/// Corpus-level Levenshtein alignment. Throws DataError if the lists differ
/// in length.
template <typename T>
ErrorRate EvaluateErrorRate(const std::vector<std::vector<T>>& hyp,
                            const std::vector<std::vector<T>>& ref);

extern template ErrorRate EvaluateErrorRate(const std::vector<std::vector<int>>&,
                                            const std::vector<std::vector<int>>&);
extern template ErrorRate EvaluateErrorRate(
    const std::vector<std::vector<std::string>>&,
    const std::vector<std::vector<std::string>>&);

}  // namespace ctccrf::decode

#endif  // CTCCRF_ERROR_RATE_H_
