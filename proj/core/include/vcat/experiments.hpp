#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "vcat/data.hpp"
#include "vcat/estimators.hpp"
#include "vcat/generators.hpp"
#include "vcat/tuning.hpp"

namespace vcat {

struct CategoricalCovariate {
  std::string name;
  std::vector<std::string> categories;
  std::vector<double> probabilities;
};

/// Desk-scale two-arm trial with binary outcome.
///
/// Patients are enrolled in a seeded random arm order. The control event
/// probability moves linearly from p_control_start (first enrolled patient)
/// to p_control_start + drift (last enrolled patient); the treated probability
/// is constant. Covariates are independent of everything else: numeric ones
/// are standard normal, categorical ones follow their probabilities.
struct SimSpec {
  std::size_t m0 = 1000;
  std::size_t m1 = 1000;
  double p_treated = 0.3;
  double p_control_start = 0.3;
  double drift = 0.0;
  std::size_t numeric_covariates = 1;
  std::vector<CategoricalCovariate> categorical;
  std::uint64_t seed = 0;

  void validate() const;
  nlohmann::json to_json() const;
  static SimSpec from_json(const nlohmann::json& doc);
};

TrialDataset simulate_trial(const SimSpec& spec);

/// Pearson correlation; throws on unequal lengths, fewer than two points or
/// zero variance.
double correlation(std::span<const double> x, std::span<const double> y);

/// |tau - tau_bar| / |tau_bar| as a percentage; nullopt when tau_bar is 0.
std::optional<double> relative_difference(double tau, double tau_bar);

struct ScenarioOptions {
  GeneratorConfig generator;
  std::size_t replicates = 999;  // l
  std::uint64_t seed = 0;
  unsigned jobs = 1;
  std::optional<HyperGrid> grid;  // tune before fitting when set
  std::size_t folds = 5;
  std::size_t tuning_sets = 3;  // sensitivity scenario only
};

struct ReplicateSummary {
  std::size_t replicate = 0;
  std::uint64_t generated_events = 0;
  double control_mean = 0;
  double control_variance = 0;
  double tau = 0;
};

struct NFirstReport {
  std::size_t n = 0, s = 0, l = 0;
  GeneratorKind kind = GeneratorKind::bootstrap;
  HyperParams params;
  std::optional<TuningResult> tuning;
  EffectEstimate rct, one_shot, averaged;
  DecisionLabel rct_label, one_shot_label, averaged_label;
  std::optional<double> one_shot_relative_difference;  // percent
  std::optional<double> averaged_relative_difference;  // percent
  std::vector<ReplicateSummary> replicates;

  nlohmann::json to_json() const;
  /// One row per procedure (rct, one_shot, averaged).
  void write_estimates_csv(std::ostream& out) const;
  /// One row per averaged-procedure replicate.
  void write_replicates_csv(std::ostream& out) const;
};

struct SetResult {
  std::size_t index = 0;
  double training_effect = 0;  // treated mean minus training-set mean
  EffectEstimate estimate;     // averaged procedure
  DecisionLabel label;
};

struct DecisionCounts {
  std::size_t significant_positive = 0;
  std::size_t significant_negative = 0;
  std::size_t incompatible = 0;
};

DecisionCounts tally(std::span<const SetResult> sets);

/// Indices (into a k-long list) of the sets shown in the interval plot:
/// sets ordered by training effect, keeping the first, every `stride`-th and
/// the last.
std::vector<std::size_t> panel_selection(std::span<const SetResult> sets, std::size_t stride = 20);

struct Histogram {
  std::vector<double> edges;
  std::vector<std::size_t> counts;
};
Histogram histogram(std::span<const double> values, std::size_t bins);

struct SensitivityReport {
  std::size_t n = 0, s = 0, k = 0, l = 0;
  GeneratorKind kind = GeneratorKind::bootstrap;
  HyperParams params;
  std::optional<TuningResult> tuning;
  EffectEstimate rct;
  DecisionLabel rct_label;
  std::vector<SetResult> sets;
  DecisionCounts counts;
  MseResult error;
  std::optional<double> correlation;  // training effect vs averaged effect
  std::vector<std::size_t> panel;
  Histogram tau_histogram;

  nlohmann::json to_json() const;
  void write_sets_csv(std::ostream& out) const;
  void write_panel_csv(std::ostream& out) const;
};

/// Seeds: derive_seed({master, scenario, set, slot}) with slot 0 = training-set
/// draw, 1 = fit, 2 = one-shot batch (n-first only), 3 + j = averaged replicate j.
std::uint64_t task_seed(std::uint64_t master, std::uint64_t scenario, std::uint64_t set, std::uint64_t slot);
inline constexpr std::uint64_t kDrawSlot = 0;
inline constexpr std::uint64_t kFitSlot = 1;
inline constexpr std::uint64_t kOneShotSlot = 2;
inline constexpr std::uint64_t kFirstReplicateSlot = 3;

/// Stops control recruitment after the n earliest-enrolled controls and
/// completes the arm with m0 - n generated patients.
NFirstReport run_n_first(const TrialDataset& ds, std::size_t n, const ScenarioOptions& options);

/// Repeats the averaged procedure over k training sets drawn uniformly
/// without replacement from the control arm.
SensitivityReport run_sensitivity(const TrialDataset& ds, std::size_t n, std::size_t k,
                                  const ScenarioOptions& options);

}  // namespace vcat
