#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pdr/records.hpp"

namespace pdr {

struct RocPoint {
    double fpr = 0.0;
    double tpr = 0.0;
    bool operator==(const RocPoint&) const = default;
};

// Mann-Whitney AUROC; ties get half credit. Requires both classes.
double auroc(std::span<const ScoredSample> samples);

// Empirical ROC over distinct thresholds, from (0,0) to (1,1).
std::vector<RocPoint> roc_points(std::span<const ScoredSample> samples);

// Largest TPR over thresholds with FPR <= max_fpr (no interpolation).
double tpr_at_fpr(std::span<const ScoredSample> samples, double max_fpr);

struct MetricSummary {
    double mean = 0.0;
    double std = 0.0; // sample standard deviation over valid replicates
    double ci_low = 0.0;
    double ci_high = 0.0;
    bool operator==(const MetricSummary&) const = default;
};

struct BootstrapSummary {
    std::size_t n_replicates = 0;
    std::size_t n_valid = 0;
    MetricSummary auroc;
    MetricSummary tpr;
    bool operator==(const BootstrapSummary&) const = default;
};

struct EvalReport {
    double auroc = 0.0;
    double tpr_at_fpr = 0.0;
    double target_fpr = 0.005;
    std::size_t n_members = 0;
    std::size_t n_nonmembers = 0;
    std::optional<BootstrapSummary> bootstrap;
    bool operator==(const EvalReport&) const = default;
};

struct PairedReport {
    double delta_mean = 0.0;
    double p_value = 1.0;
    std::size_t n_replicates = 0;
    std::size_t n_valid = 0;
    bool operator==(const PairedReport&) const = default;
};

inline constexpr double kDefaultTargetFpr = 0.005;

EvalReport evaluate(std::span<const ScoredSample> samples, double max_fpr = kDefaultTargetFpr);

// Index draw for bootstrap replicate `replicate`: n indices in [0, n) with
// replacement from SplitMix64 seeded by derive_seed(seed, replicate).
std::vector<std::size_t> bootstrap_indices(std::size_t n, std::uint64_t seed, std::size_t replicate);

// Point metrics plus the resampling summary. Single-class replicates are
// discarded; the 95% CI uses nearest-rank 2.5th/97.5th percentiles.
EvalReport bootstrap_eval(std::span<const ScoredSample> samples, std::size_t n_replicates, std::uint64_t seed,
                          double max_fpr = kDefaultTargetFpr, unsigned threads = 1);

// Shared-index paired comparison of AUROC(a) - AUROC(b); p = #{delta <= 0} / n_valid.
// `b` is joined to `a` by id; ids and labels must match exactly.
PairedReport paired_bootstrap(std::span<const ScoredSample> a, std::span<const ScoredSample> b,
                              std::size_t n_replicates, std::uint64_t seed, unsigned threads = 1);

// Nearest-rank percentile of an ascending-sorted sample, p in (0, 100].
double nearest_rank_percentile(std::span<const double> sorted, double p);

// One-line JSON serializations and a human-readable table.
std::string to_json_line(const EvalReport& report);
std::string to_json_line(const PairedReport& report);
std::string to_table(const EvalReport& report);
std::string to_table(const PairedReport& report);

} // namespace pdr
