#include "pdr/profile.hpp"

#include <algorithm>

#include "pdr/error.hpp"

namespace pdr {

ProfileStat parse_profile_stat(std::string_view name) {
    if (name == "entropy") {
        return ProfileStat::entropy;
    }
    if (name == "logp") {
        return ProfileStat::logp;
    }
    throw UsageError("unknown statistic '" + std::string(name) + "' (expected entropy or logp)");
}

std::string_view to_string(ProfileStat stat) {
    return stat == ProfileStat::entropy ? "entropy" : "logp";
}

namespace {

const std::vector<double>* statistic(const SequenceRecord& r, ProfileStat stat) {
    if (stat == ProfileStat::logp) {
        return &r.logp;
    }
    return r.entropy ? &*r.entropy : nullptr;
}

template <typename Keep>
PositionProfile accumulate(const std::vector<SequenceRecord>& corpus, ProfileStat stat, Keep keep) {
    PositionProfile p;
    std::vector<double> sums;
    for (const auto& r : corpus) {
        if (!keep(r)) {
            continue;
        }
        const auto* values = statistic(r, stat);
        if (values == nullptr) {
            continue;
        }
        if (values->size() > sums.size()) {
            sums.resize(values->size(), 0.0);
            p.count.resize(values->size(), 0);
        }
        for (std::size_t i = 0; i < values->size(); ++i) {
            sums[i] += (*values)[i];
            ++p.count[i];
        }
    }
    p.mean.resize(sums.size());
    for (std::size_t i = 0; i < sums.size(); ++i) {
        p.mean[i] = sums[i] / static_cast<double>(p.count[i]);
    }
    return p;
}

} // namespace

PositionProfile position_profile(const std::vector<SequenceRecord>& corpus, ProfileStat stat) {
    auto p = accumulate(corpus, stat, [](const SequenceRecord&) { return true; });
    if (p.mean.empty()) {
        throw ValidationError("no record carries " + std::string(to_string(stat)));
    }
    return p;
}

LabeledProfile position_profile_by_label(const std::vector<SequenceRecord>& corpus, ProfileStat stat) {
    LabeledProfile out;
    out.members = accumulate(corpus, stat, [](const SequenceRecord& r) { return r.label; });
    out.nonmembers = accumulate(corpus, stat, [](const SequenceRecord& r) { return !r.label; });
    if (out.members.mean.empty() && out.nonmembers.mean.empty()) {
        throw ValidationError("no record carries " + std::string(to_string(stat)));
    }
    return out;
}

} // namespace pdr
