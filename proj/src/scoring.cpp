#include "pdr/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_map>

#include "pdr/error.hpp"
#include "pdr/parallel.hpp"

namespace pdr {

std::string_view to_string(Method method) {
    switch (method) {
    case Method::loss: return "loss";
    case Method::ref: return "ref";
    case Method::zlib: return "zlib";
    case Method::lowercase: return "lowercase";
    case Method::min_k: return "min_k";
    case Method::min_k_pp: return "min_k_pp";
    }
    return "?";
}

std::string_view to_string(SelectionStage stage) {
    return stage == SelectionStage::after ? "after" : "before";
}

Method parse_method(std::string_view name) {
    for (auto m : {Method::loss, Method::ref, Method::zlib, Method::lowercase, Method::min_k, Method::min_k_pp}) {
        if (name == to_string(m)) {
            return m;
        }
    }
    throw UsageError("unknown method '" + std::string(name) + "'");
}

SelectionStage parse_stage(std::string_view name) {
    if (name == "after") {
        return SelectionStage::after;
    }
    if (name == "before") {
        return SelectionStage::before;
    }
    throw UsageError("unknown selection stage '" + std::string(name) + "'");
}

bool supports_weights(Method method) noexcept {
    return method != Method::zlib && method != Method::lowercase;
}

void validate(const ScoreSpec& spec) {
    if (!(spec.k_percent > 0.0 && spec.k_percent <= 100.0)) {
        throw ValidationError("k must lie in (0, 100]");
    }
    if (spec.weights) {
        if (!supports_weights(spec.method)) {
            throw ValidationError("positional weights are not defined for the " + std::string(to_string(spec.method)) +
                                  " score; use loss, ref, min_k or min_k_pp");
        }
        validate(*spec.weights);
    }
    if (spec.truncation_rho && !(*spec.truncation_rho > 0.0 && *spec.truncation_rho <= 1.0)) {
        throw ValidationError("truncation fraction must lie in (0, 1]");
    }
}

namespace {

void check_weights(const SequenceRecord& record, std::span<const double> weights) {
    if (!weights.empty() && weights.size() != record.length()) {
        throw ValidationError("record '" + record.id + "': weight vector has " + std::to_string(weights.size()) +
                              " entries for a sequence of length " + std::to_string(record.length()));
    }
}

double weighted_mean(std::span<const double> values, std::span<const double> weights) {
    double sum = 0.0;
    for (std::size_t t = 0; t < values.size(); ++t) {
        sum += weights.empty() ? values[t] : weights[t] * values[t];
    }
    return sum / static_cast<double>(values.size());
}

double plain_mean(std::span<const double> values) {
    return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
}

[[noreturn]] void missing(const SequenceRecord& record, std::string_view what) {
    throw ValidationError("record '" + record.id + "': " + std::string(what));
}

} // namespace

double score_loss(const SequenceRecord& record, std::span<const double> weights) {
    check_weights(record, weights);
    return weighted_mean(record.logp, weights);
}

double score_ref(const SequenceRecord& record, std::span<const double> weights) {
    if (!record.logp_ref) {
        missing(record, "reference statistics required (logp_ref)");
    }
    check_weights(record, weights);
    const auto& ref = *record.logp_ref;
    std::vector<double> diff(record.length());
    for (std::size_t t = 0; t < diff.size(); ++t) {
        diff[t] = record.logp[t] - ref[t];
    }
    return weighted_mean(diff, weights);
}

double score_zlib(const SequenceRecord& record) {
    if (!record.zlib_len) {
        missing(record, "zlib_len required");
    }
    const double total = std::accumulate(record.logp.begin(), record.logp.end(), 0.0);
    return total / static_cast<double>(*record.zlib_len);
}

double score_lowercase(const SequenceRecord& record) {
    if (!record.mean_logp_lower) {
        missing(record, "mean_logp_lower required");
    }
    return plain_mean(record.logp) - *record.mean_logp_lower;
}

std::vector<double> zscores(const SequenceRecord& record) {
    if (!record.mu || !record.sigma) {
        missing(record, "mu and sigma required");
    }
    const auto& mu = *record.mu;
    const auto& sigma = *record.sigma;
    std::vector<double> z(record.length());
    for (std::size_t t = 0; t < z.size(); ++t) {
        z[t] = (record.logp[t] - mu[t]) / std::max(sigma[t], kSigmaFloor);
    }
    return z;
}

std::vector<std::size_t> select_min_k(std::span<const double> values, double k_percent) {
    if (values.empty()) {
        throw ValidationError("cannot select from an empty sequence");
    }
    if (!(k_percent > 0.0 && k_percent <= 100.0)) {
        throw ValidationError("k must lie in (0, 100]");
    }
    const std::size_t n = values.size();
    const auto floor_count = static_cast<std::size_t>(std::floor(k_percent / 100.0 * static_cast<double>(n)));
    const std::size_t m = std::clamp<std::size_t>(floor_count, 1, n);

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    const auto less = [&](std::size_t a, std::size_t b) {
        return values[a] < values[b] || (values[a] == values[b] && a < b);
    };
    std::nth_element(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(m - 1), order.end(), less);
    order.resize(m);
    std::sort(order.begin(), order.end());
    return order;
}

std::vector<std::size_t> min_k_selection(std::span<const double> values, double k_percent,
                                         std::span<const double> weights, SelectionStage stage) {
    if (weights.empty() || stage == SelectionStage::after) {
        return select_min_k(values, k_percent);
    }
    if (weights.size() != values.size()) {
        throw ValidationError("weight vector length does not match the sequence");
    }
    std::vector<double> weighted(values.size());
    for (std::size_t t = 0; t < values.size(); ++t) {
        weighted[t] = weights[t] * values[t];
    }
    return select_min_k(weighted, k_percent);
}

double min_k_average(std::span<const double> values, double k_percent, std::span<const double> weights,
                     SelectionStage stage) {
    if (!weights.empty() && weights.size() != values.size()) {
        throw ValidationError("weight vector length does not match the sequence");
    }
    // Both stages average w(t) * value(t); they differ only in which positions are selected.
    const auto selected = min_k_selection(values, k_percent, weights, stage);
    double sum = 0.0;
    for (const std::size_t t : selected) {
        sum += weights.empty() ? values[t] : weights[t] * values[t];
    }
    return sum / static_cast<double>(selected.size());
}

double score_min_k(const SequenceRecord& record, double k_percent, std::span<const double> weights,
                   SelectionStage stage) {
    check_weights(record, weights);
    return min_k_average(record.logp, k_percent, weights, stage);
}

double score_min_k_pp(const SequenceRecord& record, double k_percent, std::span<const double> weights,
                      SelectionStage stage) {
    check_weights(record, weights);
    return min_k_average(zscores(record), k_percent, weights, stage);
}

namespace {

double dispatch(const ScoreSpec& spec, const SequenceRecord& record, std::span<const double> weights) {
    switch (spec.method) {
    case Method::loss: return score_loss(record, weights);
    case Method::ref: return score_ref(record, weights);
    case Method::zlib: return score_zlib(record);
    case Method::lowercase: return score_lowercase(record);
    case Method::min_k: return score_min_k(record, spec.k_percent, weights, spec.stage);
    case Method::min_k_pp: return score_min_k_pp(record, spec.k_percent, weights, spec.stage);
    }
    throw UsageError("unknown method");
}

} // namespace

double score_value(const ScoreSpec& spec, const SequenceRecord& record, std::span<const double> dataset_weights) {
    validate(spec);
    validate(record);

    const SequenceRecord* view = &record;
    SequenceRecord cut;
    if (spec.truncation_rho) {
        const std::size_t prefix = truncation_prefix(*spec.truncation_rho, record.length());
        if (prefix < record.length()) {
            cut = truncated(record, prefix);
            view = &cut;
        }
    }

    std::vector<double> weights;
    if (spec.weights) {
        weights = build_weights(*spec.weights, *view, dataset_weights);
    }
    const double value = dispatch(spec, *view, weights);
    if (!std::isfinite(value)) {
        throw ValidationError("record '" + record.id + "': score is not finite");
    }
    return value;
}

ScoredSample score(const ScoreSpec& spec, const SequenceRecord& record, std::span<const double> dataset_weights) {
    return ScoredSample{record.id, record.label, score_value(spec, record, dataset_weights)};
}

double fsd_score(const SequenceRecord& base, const SequenceRecord& finetuned, const ScoreSpec& spec,
                 std::span<const double> dataset_weights) {
    if (base.id != finetuned.id) {
        throw ValidationError("FSD pair has mismatched ids '" + base.id + "' and '" + finetuned.id + "'");
    }
    if (base.length() != finetuned.length()) {
        throw ValidationError("FSD pair '" + base.id + "' has mismatched lengths");
    }
    return score_value(spec, base, dataset_weights) - score_value(spec, finetuned, dataset_weights);
}

namespace {

std::vector<double> dataset_profile(const ScoreSpec& spec, const std::vector<SequenceRecord>& corpus) {
    if (!spec.weights || spec.weights->family != WeightFamily::entropy_dataset) {
        return {};
    }
    std::size_t max_length = 0;
    for (const auto& r : corpus) {
        max_length = std::max(max_length, r.length());
    }
    if (max_length == 0) {
        return {};
    }
    return entropy_weights_dataset(corpus, max_length);
}

} // namespace

std::vector<ScoredSample> score_corpus(const ScoreSpec& spec, const std::vector<SequenceRecord>& corpus,
                                       unsigned threads) {
    validate(spec);
    const auto profile = dataset_profile(spec, corpus);
    std::vector<ScoredSample> out(corpus.size());
    parallel_for(corpus.size(), threads, [&](std::size_t i) { out[i] = score(spec, corpus[i], profile); });
    return out;
}

std::vector<ScoredSample> fsd_score_corpus(const ScoreSpec& spec, const std::vector<SequenceRecord>& base,
                                           const std::vector<SequenceRecord>& finetuned, unsigned threads) {
    validate(spec);
    std::unordered_map<std::string_view, const SequenceRecord*> by_id;
    by_id.reserve(finetuned.size());
    for (const auto& r : finetuned) {
        if (!by_id.emplace(r.id, &r).second) {
            throw ValidationError("duplicate id '" + r.id + "' in fine-tuned corpus");
        }
    }
    if (by_id.size() != base.size()) {
        throw ValidationError("FSD corpora differ in size (" + std::to_string(base.size()) + " vs " +
                              std::to_string(finetuned.size()) + ")");
    }
    // Each model's dataset profile comes from its own corpus.
    const auto base_profile = dataset_profile(spec, base);
    const auto ft_profile = dataset_profile(spec, finetuned);

    std::vector<ScoredSample> out(base.size());
    parallel_for(base.size(), threads, [&](std::size_t i) {
        const auto& b = base[i];
        const auto it = by_id.find(b.id);
        if (it == by_id.end()) {
            throw ValidationError("record '" + b.id + "' missing from fine-tuned corpus");
        }
        const auto& f = *it->second;
        if (b.length() != f.length()) {
            throw ValidationError("FSD pair '" + b.id + "' has mismatched lengths");
        }
        out[i] = ScoredSample{b.id, b.label, score_value(spec, b, base_profile) - score_value(spec, f, ft_profile)};
    });
    return out;
}

} // namespace pdr
