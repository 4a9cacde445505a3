#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "vcat/data.hpp"
#include "vcat/generators.hpp"

namespace vcat {

/// Cartesian grid of hyperparameter values. Candidates are enumerated in
/// odometer order: the last axis varies fastest.
class HyperGrid {
 public:
  using Axis = std::pair<std::string, std::vector<nlohmann::json>>;

  HyperGrid() = default;
  explicit HyperGrid(std::vector<Axis> axes);

  /// Parses {"name": [v1, v2, ...], ...}, keeping the document's key order.
  static HyperGrid from_json(const nlohmann::ordered_json& doc);

  /// Number of candidates; 0 for a grid without parameters.
  std::size_t size() const noexcept;
  HyperParams candidate(std::size_t index) const;
  const std::vector<Axis>& axes() const noexcept { return axes_; }

 private:
  std::vector<Axis> axes_;
};

struct TuningResult {
  HyperParams best_params;
  std::size_t best_index = 0;
  double best_score = 0;
  std::vector<HyperParams> candidates;
  std::vector<double> mean_scores;               // per candidate
  std::vector<std::vector<double>> fold_scores;  // per candidate, (set, fold) flattened

  nlohmann::json to_json() const;
};

/// Shuffles 0..n-1 by seed and cuts it into `folds` contiguous chunks whose
/// sizes differ by at most one.
std::vector<std::vector<std::size_t>> fold_partition(std::size_t n, std::size_t folds, std::uint64_t seed);

/// Seeds used for one cross-validation run; identical across candidates so
/// that candidates are compared on common random numbers.
struct FoldSeeds {
  std::uint64_t fit = 0;
  std::uint64_t sample = 0;
};
std::uint64_t partition_seed(std::uint64_t cv_seed);
FoldSeeds fold_seeds(std::uint64_t cv_seed, std::size_t fold);

/// Scores one (candidate, fold): fit on `fit_part`, compare against `held_out`.
using CandidateScorer = std::function<double(const HyperParams& params, const TrialDataset& fit_part,
                                             const TrialDataset& held_out, const FoldSeeds& seeds)>;

/// Default scorer: fit the configured generator with `params`, sample as many
/// records as the held-out fold, return general_score(held_out, batch).overall.
CandidateScorer fidelity_scorer(const GeneratorConfig& base);

struct CvOptions {
  std::size_t folds = 5;
  std::uint64_t seed = 0;
  unsigned jobs = 1;
};

TuningResult grid_search_cv(const GeneratorConfig& base, const TrialDataset& train, const HyperGrid& grid,
                            const CvOptions& options, const CandidateScorer& scorer = {});

struct MultiSetOptions {
  std::size_t num_sets = 3;
  std::size_t folds = 5;
  std::uint64_t seed = 0;
  unsigned jobs = 1;
};

/// Seeds for the j-th training set of multi_trainset_tune.
std::uint64_t tuning_set_draw_seed(std::uint64_t seed, std::size_t set);
std::uint64_t tuning_set_cv_seed(std::uint64_t seed, std::size_t set);

/// Draws num_sets training sets of size n, cross-validates every candidate
/// on each, and picks the candidate with the best score averaged over sets.
TuningResult multi_trainset_tune(const GeneratorConfig& base, const TrialDataset& ds, std::size_t n,
                                 const HyperGrid& grid, const MultiSetOptions& options,
                                 const CandidateScorer& scorer = {});

}  // namespace vcat
