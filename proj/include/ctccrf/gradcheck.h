// ctccrf/gradcheck.h
//
// Random fixtures and randomized self-checks of the loss against the
// brute-force oracles. Shared by the `gradcheck` subcommand, the test suites
// and the acceptance suite.

#ifndef CTCCRF_GRADCHECK_H_
#define CTCCRF_GRADCHECK_H_

#include <cstdint>
#include <random>

#include "ctccrf/alphabet.h"
#include "ctccrf/common.h"
#include "ctccrf/ngram.h"
#include "ctccrf/wfst.h"

namespace ctccrf::oracle {

/// Random log-softmax rows; larger `scale` gives spikier rows.
Matrix RandomLogSoftmax(std::mt19937_64& rng, int frames, int width, double scale = 2.0);

/// Absolute-discounting LM estimated from a random corpus over the
/// alphabet's labels, with the full label set as vocabulary so that LM word
/// id equals label state id.
lm::NGramModel RandomLabelLm(std::mt19937_64& rng, const Alphabet& alphabet, int order,
                             int sentences = 6);

/// Random tropical graph over the alphabet's state symbols with `num_words`
/// output words; epsilon-input arcs only move to higher states.
fst::Wfst RandomDecodingGraph(std::mt19937_64& rng, const Alphabet& alphabet, int num_states,
                              int num_arcs, int num_words);

struct CheckResult {
  int cases = 0;
  double max_error = 0.0;
};

/// Numerator and denominator scores against enumeration of every state
/// sequence (T <= 5, one or two labels, unigram or bigram LM). Absolute error.
CheckResult CheckLossAgainstEnumeration(int cases, std::uint64_t seed);

/// Loss gradient with respect to the potentials against central differences
/// (h = 1e-4). Relative error.
CheckResult CheckPotentialGradients(int cases, std::uint64_t seed);

/// Loss gradient with respect to the parameters of a small recurrent model
/// (under 500 parameters) against central differences. Relative error.
CheckResult CheckModelGradients(int cases, std::uint64_t seed);

}  // namespace ctccrf::oracle

#endif  // CTCCRF_GRADCHECK_H_
