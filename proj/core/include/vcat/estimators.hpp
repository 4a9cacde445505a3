#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "vcat/data.hpp"

namespace vcat {

/// |z| for a two-sided 95% normal interval.
inline constexpr double kZ975 = 1.959964;

enum class Procedure { rct, one_shot, averaged };
std::string to_string(Procedure p);

/// Binary outcome counts for one arm. Mean and variance follow the
/// divide-by-arm-size convention; for 0/1 data the variance is
/// events * (size - events) / size^2 exactly.
struct ArmCounts {
  std::uint64_t events = 0;
  std::uint64_t size = 0;

  double mean() const;
  double variance() const;

  static ArmCounts of(std::span<const int> outcomes);
};

/// Risk difference with its normal interval [tau - delta, tau + delta].
struct EffectEstimate {
  double tau = 0;
  double sigma2_control = 0;  // control-side variance component
  double se = 0;
  double delta = 0;
  double ci_low = 0;
  double ci_high = 0;
  Procedure procedure = Procedure::rct;
  std::size_t replicates = 0;  // l for the averaged procedure, 1 otherwise
  /// Averaged procedure only: z * sqrt(sigma2_control), the interval written
  /// without the arm-size scaling. Reported, never used for decisions.
  double delta_unscaled = 0;

  nlohmann::json to_json() const;
};

struct DecisionLabel {
  enum class Significance { significant_positive, significant_negative, non_significant };
  Significance significance = Significance::non_significant;
  bool incompatible_with_rct = false;

  bool significant() const { return significance != Significance::non_significant; }
};
std::string to_string(DecisionLabel::Significance s);

/// Treated mean minus control mean of the full trial.
EffectEstimate rct_effect(const TrialDataset& ds);
EffectEstimate rct_effect(const ArmCounts& treated, const ArmCounts& control);

/// One generated batch completes the control arm: m0 = n + s.
EffectEstimate one_shot(std::span<const int> train_y, std::span<const int> gen_y, const ArmCounts& treated);
/// As above, checking that n + s equals the planned control size m0.
EffectEstimate one_shot(std::span<const int> train_y, std::span<const int> gen_y, const ArmCounts& treated,
                        std::size_t m0);

/// l generated batches of equal length; effects and control variances are
/// averaged over the replicates.
EffectEstimate averaged(std::span<const int> train_y, std::span<const std::vector<int>> gen_batches,
                        const ArmCounts& treated);
/// Count form: train_events of n training outcomes, batch_events[j] events
/// in each batch of size s.
EffectEstimate averaged_counts(const ArmCounts& train, std::span<const std::uint64_t> batch_events, std::size_t s,
                               const ArmCounts& treated);

DecisionLabel classify(const EffectEstimate& est, const EffectEstimate& rct);

struct MseResult {
  double mse = 0;
  double rmse = 0;
};
MseResult mse(std::span<const double> taus, double tau_bar);

}  // namespace vcat
