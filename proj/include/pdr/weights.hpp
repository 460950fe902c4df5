#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pdr/records.hpp"

namespace pdr {

enum class WeightFamily { constant, linear, exponential, polynomial, entropy_sample, entropy_dataset };
enum class Ordering { forward, reverse, random };

std::string_view to_string(WeightFamily family);
std::string_view to_string(Ordering ordering);
WeightFamily parse_weight_family(std::string_view name);
Ordering parse_ordering(std::string_view name);

// Fully determines the positional weight vector for any sequence length.
struct WeightSpec {
    WeightFamily family = WeightFamily::linear;
    double alpha = 1.0;
    Ordering ordering = Ordering::forward;
    std::uint64_t ordering_seed = 0;
    // Linear family only: alpha is replaced by the sample's loss slope.
    bool alpha_from_slope = false;
};

// Throws ValidationError when alpha is outside the family's range.
void validate(const WeightSpec& spec);

// Decay profile starting at w(1) = 1:
//   linear       1 - alpha * (t-1)/(T-1),   0 <= alpha <= 1
//   exponential  exp(-alpha * (t-1)),       alpha >= 0
//   polynomial   (1 - (t-1)/(T-1))^alpha,   alpha > 0
//   constant     1
// For T = 1 every family yields [1].
std::vector<double> decay_weights(WeightFamily family, double alpha, std::size_t length);

// Linear profile without the alpha range check; used for slope-derived alpha.
std::vector<double> linear_weights_unchecked(double alpha, std::size_t length);

// forward: unchanged; reverse: reversed; random: Fisher-Yates permutation
// seeded from (seed, sample_id), independent of call order.
std::vector<double> apply_ordering(std::vector<double> weights, Ordering ordering, std::uint64_t seed,
                                   std::string_view sample_id);

// Least-squares slope of losses against positions 1..T. Requires T >= 2.
double camia_slope(std::span<const double> losses);

// entropy / max(entropy). Throws if empty or all zero.
std::vector<double> entropy_weights_sample(std::span<const double> entropy);

// Position-wise mean entropy over the records that reach each position,
// normalized by its maximum. Positions no record reaches get weight 0.
std::vector<double> entropy_weights_dataset(const std::vector<SequenceRecord>& corpus, std::size_t max_length);

// Retained prefix length max(1, ceil(rho * T)) for rho in (0, 1].
std::size_t truncation_prefix(double rho, std::size_t length);

// Weights for one record under `spec`, including ordering.
// `dataset_weights` is required for entropy_dataset and must cover the record's length.
std::vector<double> build_weights(const WeightSpec& spec, const SequenceRecord& record,
                                  std::span<const double> dataset_weights = {});

} // namespace pdr
