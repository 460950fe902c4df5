#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "pdr/records.hpp"
#include "pdr/scoring.hpp"

namespace pdr::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kData = 2, kInternal = 3 };

// Hyperparameter defaults per decay family: linear 1.0, polynomial 2.0,
// exponential 0.02 for ref/min_k_pp and 0.002 for loss/min_k.
double default_alpha(WeightFamily family, Method method);

struct SweepRow {
    Method method;
    std::string family; // "none" when unweighted
    double alpha = 0.0;
    double rho = 1.0;
    double auroc = 0.0;
    double tpr_at_fpr = 0.0;
};

// One row per (method, alpha); `base.weights` supplies family/ordering.
std::vector<SweepRow> alpha_sweep(const std::vector<SequenceRecord>& corpus, const std::vector<Method>& methods,
                                  const ScoreSpec& base, const std::vector<double>& alphas, double max_fpr,
                                  unsigned threads);

// One row per (method, retain fraction), keeping `base.weights` as given.
std::vector<SweepRow> truncation_sweep(const std::vector<SequenceRecord>& corpus, const std::vector<Method>& methods,
                                       const ScoreSpec& base, const std::vector<double>& fractions, double max_fpr,
                                       unsigned threads);

std::string sweep_table(const std::vector<SweepRow>& rows);

// Entry point shared by the `pdr` binary and the tests. "-" paths mean the given streams.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace pdr::cli
