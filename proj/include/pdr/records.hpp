#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace pdr {

// Token-level statistics of one text sample under the target model.
//
// All per-token sequences are indexed by predicted-token position and share
// the same length T >= 1. Log-probabilities are natural log.
struct SequenceRecord {
    std::string id;
    bool label = false; // true = member
    std::optional<std::string> source;

    std::vector<double> logp;
    std::optional<std::vector<double>> logp_ref;
    std::optional<std::vector<double>> mu;
    std::optional<std::vector<double>> sigma;
    std::optional<std::vector<double>> entropy;

    std::optional<double> mean_logp_lower;
    std::optional<std::int64_t> byte_len;
    std::optional<std::int64_t> zlib_len;

    std::size_t length() const noexcept { return logp.size(); }

    bool operator==(const SequenceRecord&) const = default;
};

struct ScoredSample {
    std::string id;
    bool label = false;
    double score = 0.0; // higher = more member-like

    bool operator==(const ScoredSample&) const = default;
};

// Throws ValidationError describing the first violated invariant.
void validate(const SequenceRecord& record);
void validate(const ScoredSample& sample);

// Returns a copy with every per-token sequence cut to its first `prefix` entries.
SequenceRecord truncated(const SequenceRecord& record, std::size_t prefix);

// Canonical corpus format: one JSON object per line, optionally gzip-wrapped
// (detected by magic bytes). Blank lines are skipped; unknown keys are ignored.
std::vector<SequenceRecord> parse_records(std::istream& in);
std::vector<SequenceRecord> parse_records(std::string_view text);
SequenceRecord parse_record_line(std::string_view line, std::size_t line_no);
void write_records(std::ostream& out, const std::vector<SequenceRecord>& records);
std::string record_to_line(const SequenceRecord& record);

// Score files: one {"id","label","score"} object per line.
std::vector<ScoredSample> parse_scores(std::istream& in);
std::vector<ScoredSample> parse_scores(std::string_view text);
void write_scores(std::ostream& out, const std::vector<ScoredSample>& samples);

// Reads a whole file or stdin ("-"), transparently inflating gzip.
std::string read_input(const std::string& path);

// Inflates gzip data if it starts with the gzip magic bytes, else returns it unchanged.
std::string maybe_gunzip(std::string data);

} // namespace pdr
