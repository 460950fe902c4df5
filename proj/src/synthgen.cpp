#include "pdr/synthgen.hpp"

#include <algorithm>
#include <cmath>

#include "pdr/error.hpp"
#include "pdr/parallel.hpp"
#include "pdr/rng.hpp"

namespace pdr {
namespace {

// Correlation between target and reference per-token noise.
constexpr double kRefNoiseCorrelation = 0.5;
constexpr std::int64_t kBytesPerToken = 4;

void require(bool ok, const char* message) {
    if (!ok) {
        throw ValidationError(message);
    }
}

SequenceRecord make_record(const SynthParams& p, std::size_t index) {
    const bool member = index < p.n_members;
    const std::size_t local = member ? index : index - p.n_members;
    SplitMix64 rng(derive_seed(p.seed, static_cast<std::uint64_t>(index)));

    SequenceRecord r;
    r.id = (member ? "m-" : "n-") + std::to_string(local);
    r.label = member;
    r.source = "synthetic";

    const std::size_t n = p.length;
    r.logp.resize(n);
    std::vector<double> ref(n), mu(n), sigma(n), entropy(n);
    double lower_sum = 0.0;
    const double ref_mix = std::sqrt(1.0 - kRefNoiseCorrelation * kRefNoiseCorrelation);

    for (std::size_t i = 0; i < n; ++i) {
        const double h = synth_entropy(p, i + 1);
        entropy[i] = h;
        mu[i] = -h;
        sigma[i] = std::max(h / 2.0, kSynthSigmaMin);

        const double g = rng.normal();
        const double g_ref = rng.normal();
        const double g_lower = rng.normal();

        const double boost = member ? p.boost0 * std::exp(-p.gamma * static_cast<double>(i)) : 0.0;
        r.logp[i] = std::min(0.0, mu[i] + boost + p.noise * g);
        ref[i] = std::min(0.0, mu[i] + p.noise * (kRefNoiseCorrelation * g + ref_mix * g_ref));
        lower_sum += std::min(0.0, mu[i] + p.noise * g_lower);
    }
    r.logp_ref = std::move(ref);
    r.mu = std::move(mu);
    r.sigma = std::move(sigma);
    r.entropy = std::move(entropy);
    r.mean_logp_lower = lower_sum / static_cast<double>(n);
    r.byte_len = kBytesPerToken * static_cast<std::int64_t>(n);
    r.zlib_len = std::max<std::int64_t>(1, *r.byte_len / 2);
    return r;
}

} // namespace

void validate(const SynthParams& p) {
    require(p.length >= 1, "synthetic length must be >= 1");
    require(p.n_members >= 1 && p.n_nonmembers >= 1, "synthetic corpus needs members and non-members");
    for (const double v : {p.h0, p.h_inf, p.lambda, p.boost0, p.gamma, p.noise}) {
        require(std::isfinite(v), "synthetic parameters must be finite");
    }
    require(p.h_inf >= 0.0 && p.h0 >= p.h_inf, "entropy profile needs h0 >= h_inf >= 0");
    require(p.lambda >= 0.0, "entropy decay rate must be >= 0");
    require(p.boost0 >= 0.0, "memorization boost must be >= 0");
    require(p.gamma >= 0.0, "boost decay rate must be >= 0");
    require(p.noise > 0.0, "noise scale must be > 0");
}

double synth_entropy(const SynthParams& p, std::size_t position) {
    return p.h_inf + (p.h0 - p.h_inf) * std::exp(-p.lambda * static_cast<double>(position - 1));
}

std::vector<SequenceRecord> generate_corpus(const SynthParams& params, unsigned threads) {
    validate(params);
    std::vector<SequenceRecord> out(params.n_members + params.n_nonmembers);
    parallel_for(out.size(), threads, [&](std::size_t i) { out[i] = make_record(params, i); });
    return out;
}

} // namespace pdr
