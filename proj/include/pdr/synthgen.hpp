#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "pdr/records.hpp"

namespace pdr {

// Synthetic member/non-member corpus with a decaying entropy profile
//   h(t) = h_inf + (h0 - h_inf) * exp(-lambda * (t-1))
// and a member log-probability boost boost0 * exp(-gamma * (t-1)).
struct SynthParams {
    std::size_t length = 128;
    std::size_t n_members = 500;
    std::size_t n_nonmembers = 500;
    double h0 = 6.0;
    double h_inf = 1.0;
    double lambda = 0.05;
    double boost0 = 1.5;
    double gamma = 0.08;
    double noise = 1.0;
    std::uint64_t seed = 42;
};

inline constexpr double kSynthSigmaMin = 0.05;

void validate(const SynthParams& params);

double synth_entropy(const SynthParams& params, std::size_t position);

// Members first ("m-0".."m-<n-1>"), then non-members ("n-0"..).
std::vector<SequenceRecord> generate_corpus(const SynthParams& params, unsigned threads = 1);

} // namespace pdr
