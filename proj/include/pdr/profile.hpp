#pragma once

#include <cstddef>
#include <string_view>
#include <vector>

#include "pdr/records.hpp"

namespace pdr {

enum class ProfileStat { entropy, logp };

ProfileStat parse_profile_stat(std::string_view name);
std::string_view to_string(ProfileStat stat);

// Per-position mean of one statistic over the records reaching that position.
struct PositionProfile {
    std::vector<double> mean;
    std::vector<std::size_t> count;
};

struct LabeledProfile {
    PositionProfile members;
    PositionProfile nonmembers;
};

// Throws ValidationError if no record carries the statistic.
PositionProfile position_profile(const std::vector<SequenceRecord>& corpus, ProfileStat stat);
LabeledProfile position_profile_by_label(const std::vector<SequenceRecord>& corpus, ProfileStat stat);

} // namespace pdr
