#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "pdr/records.hpp"
#include "pdr/weights.hpp"

namespace pdr {

enum class Method { loss, ref, zlib, lowercase, min_k, min_k_pp };
enum class SelectionStage { after, before };

std::string_view to_string(Method method);
std::string_view to_string(SelectionStage stage);
Method parse_method(std::string_view name);
SelectionStage parse_stage(std::string_view name);

// True for the methods positional weights can be applied to.
bool supports_weights(Method method) noexcept;

struct ScoreSpec {
    Method method = Method::loss;
    double k_percent = 20.0;
    std::optional<WeightSpec> weights;
    SelectionStage stage = SelectionStage::after;
    std::optional<double> truncation_rho;
};

void validate(const ScoreSpec& spec);

inline constexpr double kSigmaFloor = 1e-12;

// Each takes an optional weight vector; an empty span means unweighted.
double score_loss(const SequenceRecord& record, std::span<const double> weights = {});
double score_ref(const SequenceRecord& record, std::span<const double> weights = {});
double score_zlib(const SequenceRecord& record);
double score_lowercase(const SequenceRecord& record);

std::vector<double> zscores(const SequenceRecord& record);

// Zero-based positions of the max(1, floor(k/100 * T)) smallest values,
// ties to the earlier position, returned in ascending order.
std::vector<std::size_t> select_min_k(std::span<const double> values, double k_percent);

// Positions the Min-k% average draws from: selection on the raw values for
// stage=after or when unweighted, on weights*values for stage=before.
std::vector<std::size_t> min_k_selection(std::span<const double> values, double k_percent,
                                         std::span<const double> weights, SelectionStage stage);

// Min-k% average over `values` with optional weights applied after or before selection.
double min_k_average(std::span<const double> values, double k_percent, std::span<const double> weights,
                     SelectionStage stage);

double score_min_k(const SequenceRecord& record, double k_percent, std::span<const double> weights = {},
                   SelectionStage stage = SelectionStage::after);
double score_min_k_pp(const SequenceRecord& record, double k_percent, std::span<const double> weights = {},
                      SelectionStage stage = SelectionStage::after);

// Raw score of one record under `spec` (truncation, weights and dispatch).
double score_value(const ScoreSpec& spec, const SequenceRecord& record,
                   std::span<const double> dataset_weights = {});

ScoredSample score(const ScoreSpec& spec, const SequenceRecord& record,
                   std::span<const double> dataset_weights = {});

// score(spec, base) - score(spec, finetuned); records must share id and length.
double fsd_score(const SequenceRecord& base, const SequenceRecord& finetuned, const ScoreSpec& spec,
                 std::span<const double> dataset_weights = {});

// Scores a corpus in input order. For entropy_dataset weights the dataset
// profile is computed from `corpus` itself. Output is independent of `threads`.
std::vector<ScoredSample> score_corpus(const ScoreSpec& spec, const std::vector<SequenceRecord>& corpus,
                                       unsigned threads = 1);

// FSD over two corpora joined on id; output follows `base` order.
std::vector<ScoredSample> fsd_score_corpus(const ScoreSpec& spec, const std::vector<SequenceRecord>& base,
                                           const std::vector<SequenceRecord>& finetuned, unsigned threads = 1);

} // namespace pdr
