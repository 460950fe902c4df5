#include "pdr/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include <fmt/format.h>
#include <json.hpp>

#include "pdr/error.hpp"
#include "pdr/parallel.hpp"
#include "pdr/rng.hpp"

namespace pdr {
namespace {

struct Labeled {
    double score;
    bool member;
};

struct ClassCounts {
    std::size_t members = 0;
    std::size_t nonmembers = 0;
};

ClassCounts count_classes(std::span<const Labeled> xs) {
    ClassCounts c;
    for (const auto& x : xs) {
        (x.member ? c.members : c.nonmembers) += 1;
    }
    return c;
}

void require_both_classes(const ClassCounts& c) {
    if (c.members == 0 || c.nonmembers == 0) {
        throw ValidationError("evaluation needs at least one member and one non-member (got " +
                              std::to_string(c.members) + " and " + std::to_string(c.nonmembers) + ")");
    }
}

std::vector<Labeled> to_labeled(std::span<const ScoredSample> samples) {
    std::vector<Labeled> out;
    out.reserve(samples.size());
    for (const auto& s : samples) {
        if (!std::isfinite(s.score)) {
            throw ValidationError("score for '" + s.id + "' is not finite");
        }
        out.push_back({s.score, s.label});
    }
    return out;
}

// Sorts descending by score in place.
void sort_descending(std::vector<Labeled>& xs) {
    std::sort(xs.begin(), xs.end(), [](const Labeled& a, const Labeled& b) { return a.score > b.score; });
}

// Walks tie groups from the highest score down, calling fn(tp, fp) after each group.
template <typename Fn>
void sweep_thresholds(const std::vector<Labeled>& sorted_desc, Fn&& fn) {
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t i = 0;
    while (i < sorted_desc.size()) {
        const double s = sorted_desc[i].score;
        while (i < sorted_desc.size() && sorted_desc[i].score == s) {
            (sorted_desc[i].member ? tp : fp) += 1;
            ++i;
        }
        fn(tp, fp);
    }
}

// AUROC on a descending-sorted sample with known class counts.
double auroc_sorted(const std::vector<Labeled>& sorted_desc, const ClassCounts& c) {
    // Doubled Mann-Whitney U counted in integers: 2 per won pair, 1 per tie.
    std::uint64_t twice_u = 0;
    std::size_t nonmembers_above = 0;
    std::size_t i = 0;
    while (i < sorted_desc.size()) {
        const double s = sorted_desc[i].score;
        std::size_t pm = 0;
        std::size_t pn = 0;
        while (i < sorted_desc.size() && sorted_desc[i].score == s) {
            (sorted_desc[i].member ? pm : pn) += 1;
            ++i;
        }
        const std::size_t nonmembers_below = c.nonmembers - nonmembers_above - pn;
        twice_u += 2 * static_cast<std::uint64_t>(pm) * nonmembers_below + static_cast<std::uint64_t>(pm) * pn;
        nonmembers_above += pn;
    }
    return static_cast<double>(twice_u) /
           (2.0 * static_cast<double>(c.members) * static_cast<double>(c.nonmembers));
}

double tpr_sorted(const std::vector<Labeled>& sorted_desc, const ClassCounts& c, double max_fpr) {
    double best = 0.0;
    const double p = static_cast<double>(c.members);
    const double n = static_cast<double>(c.nonmembers);
    sweep_thresholds(sorted_desc, [&](std::size_t tp, std::size_t fp) {
        if (static_cast<double>(fp) / n <= max_fpr) {
            best = std::max(best, static_cast<double>(tp) / p);
        }
    });
    return best;
}

void check_fpr(double max_fpr) {
    if (!(max_fpr > 0.0 && max_fpr < 1.0)) {
        throw ValidationError("target FPR must lie in (0, 1)");
    }
}

MetricSummary summarize(std::vector<double> values) {
    MetricSummary m;
    const double n = static_cast<double>(values.size());
    double sum = 0.0;
    for (const double v : values) {
        sum += v;
    }
    m.mean = sum / n;
    double ss = 0.0;
    for (const double v : values) {
        ss += (v - m.mean) * (v - m.mean);
    }
    m.std = values.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
    std::sort(values.begin(), values.end());
    m.ci_low = nearest_rank_percentile(values, 2.5);
    m.ci_high = nearest_rank_percentile(values, 97.5);
    return m;
}

struct Replicate {
    bool valid = false;
    double first = 0.0;
    double second = 0.0;
};

std::vector<Labeled> gather(std::span<const Labeled> xs, const std::vector<std::size_t>& idx) {
    std::vector<Labeled> out;
    out.reserve(idx.size());
    for (const std::size_t i : idx) {
        out.push_back(xs[i]);
    }
    return out;
}

} // namespace

double auroc(std::span<const ScoredSample> samples) {
    auto xs = to_labeled(samples);
    const auto c = count_classes(xs);
    require_both_classes(c);
    sort_descending(xs);
    return auroc_sorted(xs, c);
}

std::vector<RocPoint> roc_points(std::span<const ScoredSample> samples) {
    auto xs = to_labeled(samples);
    const auto c = count_classes(xs);
    require_both_classes(c);
    sort_descending(xs);
    std::vector<RocPoint> out{{0.0, 0.0}};
    sweep_thresholds(xs, [&](std::size_t tp, std::size_t fp) {
        out.push_back({static_cast<double>(fp) / static_cast<double>(c.nonmembers),
                       static_cast<double>(tp) / static_cast<double>(c.members)});
    });
    return out;
}

double tpr_at_fpr(std::span<const ScoredSample> samples, double max_fpr) {
    check_fpr(max_fpr);
    auto xs = to_labeled(samples);
    const auto c = count_classes(xs);
    require_both_classes(c);
    sort_descending(xs);
    return tpr_sorted(xs, c, max_fpr);
}

EvalReport evaluate(std::span<const ScoredSample> samples, double max_fpr) {
    check_fpr(max_fpr);
    auto xs = to_labeled(samples);
    const auto c = count_classes(xs);
    require_both_classes(c);
    sort_descending(xs);
    EvalReport r;
    r.auroc = auroc_sorted(xs, c);
    r.tpr_at_fpr = tpr_sorted(xs, c, max_fpr);
    r.target_fpr = max_fpr;
    r.n_members = c.members;
    r.n_nonmembers = c.nonmembers;
    return r;
}

double nearest_rank_percentile(std::span<const double> sorted, double p) {
    if (sorted.empty()) {
        throw ValidationError("percentile of an empty sample");
    }
    const auto rank = static_cast<std::size_t>(std::ceil(p / 100.0 * static_cast<double>(sorted.size())));
    return sorted[std::clamp<std::size_t>(rank, 1, sorted.size()) - 1];
}

std::vector<std::size_t> bootstrap_indices(std::size_t n, std::uint64_t seed, std::size_t replicate) {
    SplitMix64 rng(derive_seed(seed, static_cast<std::uint64_t>(replicate)));
    std::vector<std::size_t> idx(n);
    for (auto& i : idx) {
        i = static_cast<std::size_t>(rng.below(n));
    }
    return idx;
}

EvalReport bootstrap_eval(std::span<const ScoredSample> samples, std::size_t n_replicates, std::uint64_t seed,
                          double max_fpr, unsigned threads) {
    if (n_replicates == 0) {
        throw ValidationError("bootstrap needs at least one replicate");
    }
    EvalReport report = evaluate(samples, max_fpr);
    const auto xs = to_labeled(samples);

    std::vector<Replicate> reps(n_replicates);
    parallel_for(n_replicates, threads, [&](std::size_t r) {
        auto draw = gather(xs, bootstrap_indices(xs.size(), seed, r));
        const auto c = count_classes(draw);
        if (c.members == 0 || c.nonmembers == 0) {
            return;
        }
        sort_descending(draw);
        reps[r] = {true, auroc_sorted(draw, c), tpr_sorted(draw, c, max_fpr)};
    });

    std::vector<double> aurocs;
    std::vector<double> tprs;
    for (const auto& rep : reps) {
        if (rep.valid) {
            aurocs.push_back(rep.first);
            tprs.push_back(rep.second);
        }
    }
    if (aurocs.empty()) {
        throw ValidationError("no bootstrap replicate contained both classes");
    }
    BootstrapSummary b;
    b.n_replicates = n_replicates;
    b.n_valid = aurocs.size();
    b.auroc = summarize(std::move(aurocs));
    b.tpr = summarize(std::move(tprs));
    report.bootstrap = b;
    return report;
}

PairedReport paired_bootstrap(std::span<const ScoredSample> a, std::span<const ScoredSample> b,
                              std::size_t n_replicates, std::uint64_t seed, unsigned threads) {
    if (n_replicates == 0) {
        throw ValidationError("bootstrap needs at least one replicate");
    }
    if (a.size() != b.size()) {
        throw ValidationError("paired comparison needs the same samples (" + std::to_string(a.size()) + " vs " +
                              std::to_string(b.size()) + ")");
    }
    std::unordered_map<std::string_view, const ScoredSample*> b_by_id;
    b_by_id.reserve(b.size());
    for (const auto& s : b) {
        if (!b_by_id.emplace(s.id, &s).second) {
            throw ValidationError("duplicate id '" + s.id + "'");
        }
    }
    const auto xa = to_labeled(a);
    std::vector<Labeled> xb;
    xb.reserve(a.size());
    for (const auto& s : a) {
        const auto it = b_by_id.find(s.id);
        if (it == b_by_id.end()) {
            throw ValidationError("id '" + s.id + "' missing from the second score set");
        }
        if (it->second->label != s.label) {
            throw ValidationError("label mismatch for id '" + s.id + "'");
        }
        if (!std::isfinite(it->second->score)) {
            throw ValidationError("score for '" + s.id + "' is not finite");
        }
        xb.push_back({it->second->score, it->second->label});
    }
    require_both_classes(count_classes(xa));

    std::vector<Replicate> reps(n_replicates);
    parallel_for(n_replicates, threads, [&](std::size_t r) {
        const auto idx = bootstrap_indices(xa.size(), seed, r);
        auto da = gather(xa, idx);
        const auto c = count_classes(da);
        if (c.members == 0 || c.nonmembers == 0) {
            return;
        }
        auto db = gather(xb, idx);
        sort_descending(da);
        sort_descending(db);
        reps[r] = {true, auroc_sorted(da, c), auroc_sorted(db, c)};
    });

    PairedReport out;
    out.n_replicates = n_replicates;
    double delta_sum = 0.0;
    std::size_t non_positive = 0;
    for (const auto& rep : reps) {
        if (!rep.valid) {
            continue;
        }
        const double delta = rep.first - rep.second;
        delta_sum += delta;
        if (delta <= 0.0) {
            ++non_positive;
        }
        ++out.n_valid;
    }
    if (out.n_valid == 0) {
        throw ValidationError("no bootstrap replicate contained both classes");
    }
    out.delta_mean = delta_sum / static_cast<double>(out.n_valid);
    out.p_value = static_cast<double>(non_positive) / static_cast<double>(out.n_valid);
    return out;
}

namespace {

nlohmann::json summary_json(const MetricSummary& m) {
    return {{"mean", m.mean}, {"std", m.std}, {"ci_low", m.ci_low}, {"ci_high", m.ci_high}};
}

} // namespace

std::string to_json_line(const EvalReport& r) {
    nlohmann::json obj = {{"auroc", r.auroc},
                          {"tpr_at_fpr", r.tpr_at_fpr},
                          {"target_fpr", r.target_fpr},
                          {"n_members", r.n_members},
                          {"n_nonmembers", r.n_nonmembers}};
    if (r.bootstrap) {
        obj["bootstrap"] = {{"n_replicates", r.bootstrap->n_replicates},
                            {"n_valid", r.bootstrap->n_valid},
                            {"auroc", summary_json(r.bootstrap->auroc)},
                            {"tpr_at_fpr", summary_json(r.bootstrap->tpr)}};
    }
    return obj.dump();
}

std::string to_json_line(const PairedReport& r) {
    nlohmann::json obj = {{"delta_mean", r.delta_mean},
                          {"p_value", r.p_value},
                          {"n_replicates", r.n_replicates},
                          {"n_valid", r.n_valid}};
    return obj.dump();
}

std::string to_table(const EvalReport& r) {
    std::string out;
    out += fmt::format("members      {}\n", r.n_members);
    out += fmt::format("non-members  {}\n", r.n_nonmembers);
    const std::string tpr_label = fmt::format("TPR@{:g}%FPR", r.target_fpr * 100.0);
    if (!r.bootstrap) {
        out += fmt::format("{:<16} {:.4f}\n", "AUROC", r.auroc);
        out += fmt::format("{:<16} {:.4f}\n", tpr_label, r.tpr_at_fpr);
        return out;
    }
    const auto& b = *r.bootstrap;
    out += fmt::format("replicates   {} ({} valid)\n", b.n_replicates, b.n_valid);
    out += fmt::format("{:<16} {:>8} {:>8} {:>8} {:>8} {:>8}\n", "metric", "point", "mean", "std", "ci_low",
                       "ci_high");
    out += fmt::format("{:<16} {:>8.4f} {:>8.4f} {:>8.4f} {:>8.4f} {:>8.4f}\n", "AUROC", r.auroc, b.auroc.mean,
                       b.auroc.std, b.auroc.ci_low, b.auroc.ci_high);
    out += fmt::format("{:<16} {:>8.4f} {:>8.4f} {:>8.4f} {:>8.4f} {:>8.4f}\n", tpr_label, r.tpr_at_fpr,
                       b.tpr.mean, b.tpr.std, b.tpr.ci_low, b.tpr.ci_high);
    return out;
}

std::string to_table(const PairedReport& r) {
    std::string out;
    out += fmt::format("replicates   {} ({} valid)\n", r.n_replicates, r.n_valid);
    out += fmt::format("delta AUROC  {:+.4f}\n", r.delta_mean);
    out += fmt::format("p-value      {:.4f}\n", r.p_value);
    return out;
}

} // namespace pdr
