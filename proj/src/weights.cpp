#include "pdr/weights.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "pdr/error.hpp"
#include "pdr/rng.hpp"

namespace pdr {

std::string_view to_string(WeightFamily family) {
    switch (family) {
    case WeightFamily::constant: return "constant";
    case WeightFamily::linear: return "linear";
    case WeightFamily::exponential: return "exponential";
    case WeightFamily::polynomial: return "polynomial";
    case WeightFamily::entropy_sample: return "entropy_sample";
    case WeightFamily::entropy_dataset: return "entropy_dataset";
    }
    return "?";
}

std::string_view to_string(Ordering ordering) {
    switch (ordering) {
    case Ordering::forward: return "forward";
    case Ordering::reverse: return "reverse";
    case Ordering::random: return "random";
    }
    return "?";
}

WeightFamily parse_weight_family(std::string_view name) {
    for (auto f : {WeightFamily::constant, WeightFamily::linear, WeightFamily::exponential, WeightFamily::polynomial,
                   WeightFamily::entropy_sample, WeightFamily::entropy_dataset}) {
        if (name == to_string(f)) {
            return f;
        }
    }
    throw UsageError("unknown weight family '" + std::string(name) + "'");
}

Ordering parse_ordering(std::string_view name) {
    for (auto o : {Ordering::forward, Ordering::reverse, Ordering::random}) {
        if (name == to_string(o)) {
            return o;
        }
    }
    throw UsageError("unknown ordering '" + std::string(name) + "'");
}

namespace {

void check_alpha(WeightFamily family, double alpha) {
    if (!std::isfinite(alpha)) {
        throw ValidationError("alpha must be finite");
    }
    switch (family) {
    case WeightFamily::linear:
        if (alpha < 0.0 || alpha > 1.0) {
            throw ValidationError("linear decay requires 0 <= alpha <= 1");
        }
        break;
    case WeightFamily::exponential:
        if (alpha < 0.0) {
            throw ValidationError("exponential decay requires alpha >= 0");
        }
        break;
    case WeightFamily::polynomial:
        if (alpha <= 0.0) {
            throw ValidationError("polynomial decay requires alpha > 0");
        }
        break;
    default:
        break;
    }
}

// (t-1)/(T-1) for zero-based index i.
double relative_position(std::size_t i, std::size_t length) {
    return static_cast<double>(i) / static_cast<double>(length - 1);
}

} // namespace

void validate(const WeightSpec& spec) {
    if (spec.alpha_from_slope) {
        if (spec.family != WeightFamily::linear) {
            throw ValidationError("slope-derived alpha is only defined for the linear family");
        }
        return;
    }
    check_alpha(spec.family, spec.alpha);
}

std::vector<double> linear_weights_unchecked(double alpha, std::size_t length) {
    if (length == 0) {
        throw ValidationError("sequence length must be >= 1");
    }
    std::vector<double> w(length, 1.0);
    if (length == 1) {
        return w;
    }
    for (std::size_t i = 0; i < length; ++i) {
        w[i] = 1.0 - alpha * relative_position(i, length);
    }
    return w;
}

std::vector<double> decay_weights(WeightFamily family, double alpha, std::size_t length) {
    if (length == 0) {
        throw ValidationError("sequence length must be >= 1");
    }
    check_alpha(family, alpha);
    std::vector<double> w(length, 1.0);
    switch (family) {
    case WeightFamily::constant:
        break;
    case WeightFamily::linear:
        return linear_weights_unchecked(alpha, length);
    case WeightFamily::exponential:
        for (std::size_t i = 0; i < length; ++i) {
            w[i] = std::exp(-alpha * static_cast<double>(i));
        }
        break;
    case WeightFamily::polynomial:
        if (length > 1) {
            for (std::size_t i = 0; i < length; ++i) {
                w[i] = std::pow(1.0 - relative_position(i, length), alpha);
            }
        }
        break;
    case WeightFamily::entropy_sample:
    case WeightFamily::entropy_dataset:
        throw UsageError("entropy weights are data-derived; use build_weights");
    }
    return w;
}

std::vector<double> apply_ordering(std::vector<double> weights, Ordering ordering, std::uint64_t seed,
                                   std::string_view sample_id) {
    switch (ordering) {
    case Ordering::forward:
        break;
    case Ordering::reverse:
        std::reverse(weights.begin(), weights.end());
        break;
    case Ordering::random: {
        SplitMix64 rng(derive_seed(seed, sample_id));
        for (std::size_t i = weights.size(); i > 1; --i) {
            const std::size_t j = static_cast<std::size_t>(rng.below(i));
            std::swap(weights[i - 1], weights[j]);
        }
        break;
    }
    }
    return weights;
}

double camia_slope(std::span<const double> losses) {
    const std::size_t n = losses.size();
    if (n < 2) {
        throw ValidationError("loss slope needs at least two positions");
    }
    const double t_bar = (static_cast<double>(n) + 1.0) / 2.0;
    double l_bar = 0.0;
    for (const double l : losses) {
        l_bar += l;
    }
    l_bar /= static_cast<double>(n);

    double num = 0.0;
    double den = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dt = static_cast<double>(i + 1) - t_bar;
        num += dt * (losses[i] - l_bar);
        den += dt * dt;
    }
    return num / den;
}

std::vector<double> entropy_weights_sample(std::span<const double> entropy) {
    if (entropy.empty()) {
        throw ValidationError("entropy weights need per-token entropy");
    }
    const double peak = *std::max_element(entropy.begin(), entropy.end());
    if (!(peak > 0.0)) {
        throw ValidationError("entropy weights are undefined when all entropies are zero");
    }
    std::vector<double> w(entropy.begin(), entropy.end());
    for (double& v : w) {
        v /= peak;
    }
    return w;
}

std::vector<double> entropy_weights_dataset(const std::vector<SequenceRecord>& corpus, std::size_t max_length) {
    if (max_length == 0) {
        throw ValidationError("dataset entropy profile length must be >= 1");
    }
    std::vector<double> sums(max_length, 0.0);
    std::vector<std::size_t> counts(max_length, 0);
    for (const auto& r : corpus) {
        if (!r.entropy) {
            continue;
        }
        const std::size_t n = std::min(max_length, r.entropy->size());
        for (std::size_t i = 0; i < n; ++i) {
            sums[i] += (*r.entropy)[i];
            ++counts[i];
        }
    }
    if (counts[0] == 0) {
        throw ValidationError("no record in the corpus carries entropy");
    }
    std::vector<double> means(max_length, 0.0);
    for (std::size_t i = 0; i < max_length; ++i) {
        if (counts[i] > 0) {
            means[i] = sums[i] / static_cast<double>(counts[i]);
        }
    }
    return entropy_weights_sample(means);
}

std::size_t truncation_prefix(double rho, std::size_t length) {
    if (!(rho > 0.0 && rho <= 1.0)) {
        throw ValidationError("truncation fraction must lie in (0, 1]");
    }
    const auto kept = static_cast<std::size_t>(std::ceil(rho * static_cast<double>(length)));
    return std::clamp<std::size_t>(kept, 1, std::max<std::size_t>(length, 1));
}

std::vector<double> build_weights(const WeightSpec& spec, const SequenceRecord& record,
                                  std::span<const double> dataset_weights) {
    validate(spec);
    const std::size_t length = record.length();
    std::vector<double> w;
    switch (spec.family) {
    case WeightFamily::constant:
        // ordering is irrelevant for an all-ones vector
        return std::vector<double>(length, 1.0);
    case WeightFamily::linear:
        if (spec.alpha_from_slope) {
            double alpha = 0.0;
            if (length >= 2) {
                std::vector<double> losses(record.logp.size());
                std::transform(record.logp.begin(), record.logp.end(), losses.begin(), [](double v) { return -v; });
                alpha = camia_slope(losses);
            }
            w = linear_weights_unchecked(alpha, length);
        } else {
            w = decay_weights(spec.family, spec.alpha, length);
        }
        break;
    case WeightFamily::exponential:
    case WeightFamily::polynomial:
        w = decay_weights(spec.family, spec.alpha, length);
        break;
    case WeightFamily::entropy_sample:
        if (!record.entropy) {
            throw ValidationError("record '" + record.id + "': entropy weights require entropy");
        }
        w = entropy_weights_sample(*record.entropy);
        break;
    case WeightFamily::entropy_dataset:
        if (dataset_weights.size() < length) {
            throw ValidationError("record '" + record.id + "': dataset entropy profile shorter than the sequence");
        }
        w.assign(dataset_weights.begin(), dataset_weights.begin() + static_cast<std::ptrdiff_t>(length));
        break;
    }
    return apply_ordering(std::move(w), spec.ordering, spec.ordering_seed, record.id);
}

} // namespace pdr
