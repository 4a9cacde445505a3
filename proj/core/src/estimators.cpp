#include "vcat/estimators.hpp"

#include <cmath>
#include <numeric>

#include "vcat/error.hpp"

namespace vcat {

namespace {

constexpr std::uint64_t kExactLimit = std::uint64_t{1} << 53;

// num / den, rounded once when both integers are exactly representable, so
// that equal rationals give bitwise-equal doubles.
double ratio(std::uint64_t num, std::uint64_t den) {
  if (num <= kExactLimit && den <= kExactLimit) return static_cast<double>(num) / static_cast<double>(den);
  return static_cast<double>(static_cast<long double>(num) / static_cast<long double>(den));
}

EffectEstimate make_estimate(const ArmCounts& treated, double control_mean, double control_var, std::uint64_t m0,
                             Procedure procedure, std::size_t replicates) {
  if (treated.size == 0) throw ValidationError("treated arm is empty");
  if (m0 == 0) throw ValidationError("control arm is empty");
  EffectEstimate e;
  e.procedure = procedure;
  e.replicates = replicates;
  e.tau = treated.mean() - control_mean;
  e.sigma2_control = control_var;
  e.se = std::sqrt(treated.variance() / static_cast<double>(treated.size) + control_var / static_cast<double>(m0));
  e.delta = kZ975 * e.se;
  e.ci_low = e.tau - e.delta;
  e.ci_high = e.tau + e.delta;
  return e;
}

std::uint64_t count_events(std::span<const int> y) {
  std::uint64_t events = 0;
  for (int v : y) {
    if (v != 0 && v != 1) throw ValidationError("outcomes must be 0 or 1");
    events += static_cast<std::uint64_t>(v);
  }
  return events;
}

}  // namespace

std::string to_string(Procedure p) {
  switch (p) {
    case Procedure::rct: return "rct";
    case Procedure::one_shot: return "one_shot";
    case Procedure::averaged: return "averaged";
  }
  return "unknown";
}

std::string to_string(DecisionLabel::Significance s) {
  switch (s) {
    case DecisionLabel::Significance::significant_positive: return "significant_positive";
    case DecisionLabel::Significance::significant_negative: return "significant_negative";
    case DecisionLabel::Significance::non_significant: return "non_significant";
  }
  return "unknown";
}

double ArmCounts::mean() const { return ratio(events, size); }

double ArmCounts::variance() const { return ratio(events * (size - events), size * size); }

ArmCounts ArmCounts::of(std::span<const int> outcomes) { return {count_events(outcomes), outcomes.size()}; }

nlohmann::json EffectEstimate::to_json() const {
  nlohmann::json j{{"procedure", to_string(procedure)},
                   {"tau", tau},
                   {"se", se},
                   {"delta", delta},
                   {"ci_low", ci_low},
                   {"ci_high", ci_high},
                   {"sigma2_control", sigma2_control}};
  if (procedure == Procedure::averaged) {
    j["replicates"] = replicates;
    j["delta_unscaled"] = delta_unscaled;
  }
  return j;
}

EffectEstimate rct_effect(const ArmCounts& treated, const ArmCounts& control) {
  return make_estimate(treated, control.mean(), control.variance(), control.size, Procedure::rct, 1);
}

EffectEstimate rct_effect(const TrialDataset& ds) {
  ds.require_analysable();
  if (ds.m0() == 0 || ds.m1() == 0) throw ValidationError("rct_effect: both arms need at least one patient");
  ArmCounts treated{0, ds.m1()}, control{0, ds.m0()};
  for (std::size_t i = 0; i < ds.size(); ++i) {
    (ds.arm(i) == 1 ? treated : control).events += static_cast<std::uint64_t>(ds.outcome(i));
  }
  return rct_effect(treated, control);
}

EffectEstimate one_shot(std::span<const int> train_y, std::span<const int> gen_y, const ArmCounts& treated) {
  const std::uint64_t m0 = train_y.size() + gen_y.size();
  const ArmCounts control{count_events(train_y) + count_events(gen_y), m0};
  return make_estimate(treated, control.mean(), control.variance(), m0, Procedure::one_shot, 1);
}

EffectEstimate one_shot(std::span<const int> train_y, std::span<const int> gen_y, const ArmCounts& treated,
                        std::size_t m0) {
  if (train_y.size() + gen_y.size() != m0) {
    throw ValidationError("one_shot: n + s = " + std::to_string(train_y.size() + gen_y.size()) +
                          " differs from m0 = " + std::to_string(m0));
  }
  return one_shot(train_y, gen_y, treated);
}

EffectEstimate averaged_counts(const ArmCounts& train, std::span<const std::uint64_t> batch_events, std::size_t s,
                               const ArmCounts& treated) {
  const std::uint64_t l = batch_events.size();
  if (l == 0) throw ValidationError("averaged: need at least one generated batch");
  const std::uint64_t m0 = train.size + s;
  std::uint64_t events = 0;
  std::uint64_t spread = 0;  // sum over replicates of K_j (m0 - K_j)
  for (std::uint64_t g : batch_events) {
    if (g > s) throw ValidationError("averaged: batch has more events than records");
    const std::uint64_t k = train.events + g;
    events += k;
    spread += k * (m0 - k);
  }
  const double control_mean = ratio(events, l * m0);
  const double control_var = ratio(spread, l * m0 * m0);
  EffectEstimate e = make_estimate(treated, control_mean, control_var, m0, Procedure::averaged, l);
  e.delta_unscaled = kZ975 * std::sqrt(control_var);
  return e;
}

EffectEstimate averaged(std::span<const int> train_y, std::span<const std::vector<int>> gen_batches,
                        const ArmCounts& treated) {
  if (gen_batches.empty()) throw ValidationError("averaged: need at least one generated batch");
  const std::size_t s = gen_batches.front().size();
  std::vector<std::uint64_t> events;
  events.reserve(gen_batches.size());
  for (const auto& batch : gen_batches) {
    if (batch.size() != s) throw ValidationError("averaged: ragged batches (lengths differ)");
    events.push_back(count_events(batch));
  }
  return averaged_counts(ArmCounts::of(train_y), events, s, treated);
}

DecisionLabel classify(const EffectEstimate& est, const EffectEstimate& rct) {
  DecisionLabel label;
  if (est.ci_low > 0) {
    label.significance = DecisionLabel::Significance::significant_positive;
  } else if (est.ci_high < 0) {
    label.significance = DecisionLabel::Significance::significant_negative;
  }
  label.incompatible_with_rct = est.ci_low > rct.ci_high || est.ci_high < rct.ci_low;
  return label;
}

MseResult mse(std::span<const double> taus, double tau_bar) {
  if (taus.empty()) throw ValidationError("mse: no estimates");
  double sum = 0;
  for (double t : taus) sum += (t - tau_bar) * (t - tau_bar);
  MseResult r;
  r.mse = sum / static_cast<double>(taus.size());
  r.rmse = std::sqrt(r.mse);
  return r;
}

}  // namespace vcat
