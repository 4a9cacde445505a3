#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "vcat/data.hpp"

namespace vcat {

struct ImputeOptions {
  int iterations = 10;
  std::uint64_t seed = 0;
};

struct ImputeResult {
  TrialDataset dataset;
  /// One line per conditional model that fell back to marginal sampling.
  std::vector<std::string> warnings;
};

/// Single chained-equations imputation.
///
/// Numeric, categorical and outcome columns with missing cells are visited
/// in increasing order of missingness, `iterations` times. Each visit
/// regresses the column on every other modelled column (arm included,
/// enrolment order excluded) using the rows where it was observed, then
/// redraws the originally-missing cells:
///   - numeric: OLS prediction plus N(0, residual sd) noise;
///   - binary (outcome or two categories): Bernoulli from an IRLS logistic fit;
///   - categorical: one-vs-rest logistic fits, normalised, then a categorical draw.
/// A singular design or non-converged fit falls back to sampling the
/// column's observed marginal and records a warning. Observed cells are
/// never modified. Throws if a modelled column is entirely missing.
ImputeResult impute_chained(const TrialDataset& ds, const ImputeOptions& options);

}  // namespace vcat
