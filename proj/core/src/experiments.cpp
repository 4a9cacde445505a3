#include "vcat/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

#include "vcat/csv.hpp"
#include "vcat/error.hpp"
#include "vcat/parallel.hpp"
#include "vcat/seed.hpp"

namespace vcat {

namespace {

bool is_probability(double p) { return p >= 0.0 && p <= 1.0; }

nlohmann::json optional_number(const std::optional<double>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

std::string optional_text(const std::optional<double>& v) { return v ? format_number(*v) : std::string(); }

nlohmann::json label_json(const DecisionLabel& label) {
  return {{"significance", to_string(label.significance)}, {"incompatible_with_rct", label.incompatible_with_rct}};
}

ArmCounts treated_counts(const TrialDataset& ds) {
  ArmCounts treated{0, 0};
  for (std::size_t r : ds.treated_rows()) {
    treated.events += static_cast<std::uint64_t>(ds.outcome(r));
    ++treated.size;
  }
  return treated;
}

std::size_t rank_after_all(const TrialDataset& ds) {
  std::size_t first = ds.size();
  const std::size_t col = ds.schema().order_index();
  for (std::size_t i = 0; i < ds.size(); ++i) {
    first = std::max(first, static_cast<std::size_t>(std::max(0.0, ds.cell(i, col))) + 1);
  }
  return first;
}

std::uint64_t count_ones(const std::vector<int>& y) {
  return static_cast<std::uint64_t>(std::count(y.begin(), y.end(), 1));
}

GeneratorConfig with_params(GeneratorConfig config, const HyperParams& best) {
  if (!config.params.is_object()) config.params = HyperParams::object();
  for (const auto& [key, value] : best.items()) config.params[key] = value;
  return config;
}

csv::Row estimate_cells(const EffectEstimate& e) {
  return {format_number(e.tau), format_number(e.se), format_number(e.delta), format_number(e.ci_low),
          format_number(e.ci_high)};
}

}  // namespace

std::optional<double> relative_difference(double tau, double tau_bar) {
  if (tau_bar == 0.0) return std::nullopt;
  return std::abs(tau - tau_bar) / std::abs(tau_bar) * 100.0;
}

void SimSpec::validate() const {
  if (m0 < 1 || m1 < 1) throw ValidationError("simulate: both arms need at least one patient");
  if (!is_probability(p_treated)) throw ValidationError("simulate: p_treated outside [0, 1]");
  if (!is_probability(p_control_start)) throw ValidationError("simulate: p_control_start outside [0, 1]");
  if (!is_probability(p_control_start + drift)) throw ValidationError("simulate: drifted control probability outside [0, 1]");
  for (const auto& c : categorical) {
    if (c.categories.empty() || c.categories.size() != c.probabilities.size()) {
      throw ValidationError("simulate: covariate '" + c.name + "' needs one probability per category");
    }
    double total = 0;
    for (double p : c.probabilities) {
      if (!is_probability(p)) throw ValidationError("simulate: covariate '" + c.name + "' has a bad probability");
      total += p;
    }
    if (std::abs(total - 1.0) > 1e-9) throw ValidationError("simulate: probabilities of '" + c.name + "' do not sum to 1");
  }
}

nlohmann::json SimSpec::to_json() const {
  nlohmann::json cats = nlohmann::json::array();
  for (const auto& c : categorical) {
    cats.push_back({{"name", c.name}, {"categories", c.categories}, {"probabilities", c.probabilities}});
  }
  return {{"m0", m0}, {"m1", m1}, {"p_treated", p_treated}, {"p_control_start", p_control_start},
          {"drift", drift}, {"numeric_covariates", numeric_covariates}, {"categorical", cats}, {"seed", seed}};
}

SimSpec SimSpec::from_json(const nlohmann::json& doc) {
  SimSpec spec;
  try {
    spec.m0 = doc.value("m0", spec.m0);
    spec.m1 = doc.value("m1", spec.m1);
    spec.p_treated = doc.value("p_treated", spec.p_treated);
    spec.p_control_start = doc.value("p_control_start", spec.p_control_start);
    spec.drift = doc.value("drift", spec.drift);
    spec.numeric_covariates = doc.value("numeric_covariates", spec.numeric_covariates);
    spec.seed = doc.value("seed", spec.seed);
    if (doc.contains("categorical")) {
      for (const auto& c : doc.at("categorical")) {
        spec.categorical.push_back({c.at("name").get<std::string>(), c.at("categories").get<std::vector<std::string>>(),
                                    c.at("probabilities").get<std::vector<double>>()});
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("simulate: ") + e.what());
  }
  return spec;
}

TrialDataset simulate_trial(const SimSpec& spec) {
  spec.validate();
  std::vector<ColumnSpec> columns{{"enrolment", ColumnKind::enrolment_order, {}}, {"arm", ColumnKind::arm, {}}};
  for (std::size_t j = 0; j < spec.numeric_covariates; ++j) {
    columns.push_back({"x" + std::to_string(j + 1), ColumnKind::numeric, {}});
  }
  for (const auto& c : spec.categorical) columns.push_back({c.name, ColumnKind::categorical, c.categories});
  columns.push_back({"outcome", ColumnKind::outcome, {}});
  Schema schema(std::move(columns));

  const std::size_t m = spec.m0 + spec.m1;
  std::vector<int> arms(m, 0);
  std::fill(arms.begin() + static_cast<std::ptrdiff_t>(spec.m0), arms.end(), 1);
  Engine rng = make_engine(derive_seed({spec.seed, scenario_id::simulation}));
  std::shuffle(arms.begin(), arms.end(), rng);

  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<std::discrete_distribution<int>> cat_dists;
  for (const auto& c : spec.categorical) cat_dists.emplace_back(c.probabilities.begin(), c.probabilities.end());

  const std::size_t width = schema.size();
  std::vector<double> cells(m * width);
  for (std::size_t r = 0; r < m; ++r) {
    double* row = cells.data() + r * width;
    std::size_t col = 0;
    row[col++] = static_cast<double>(r);
    row[col++] = arms[r];
    for (std::size_t j = 0; j < spec.numeric_covariates; ++j) row[col++] = normal(rng);
    for (auto& d : cat_dists) row[col++] = d(rng);
    const double progress = m > 1 ? static_cast<double>(r) / static_cast<double>(m - 1) : 0.0;
    const double p = arms[r] == 1 ? spec.p_treated : spec.p_control_start + spec.drift * progress;
    row[col] = unit(rng) < p ? 1.0 : 0.0;
  }
  return TrialDataset(std::move(schema), std::move(cells));
}

double correlation(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw ValidationError("correlation: lengths differ");
  if (x.size() < 2) throw ValidationError("correlation: need at least two points");
  const auto n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (!(sxx > 0) || !(syy > 0)) throw ValidationError("correlation: zero variance");
  return sxy / std::sqrt(sxx * syy);
}

std::uint64_t task_seed(std::uint64_t master, std::uint64_t scenario, std::uint64_t set, std::uint64_t slot) {
  return derive_seed({master, scenario, set, slot});
}

DecisionCounts tally(std::span<const SetResult> sets) {
  DecisionCounts c;
  for (const SetResult& s : sets) {
    c.significant_positive += s.label.significance == DecisionLabel::Significance::significant_positive;
    c.significant_negative += s.label.significance == DecisionLabel::Significance::significant_negative;
    c.incompatible += s.label.incompatible_with_rct;
  }
  return c;
}

std::vector<std::size_t> panel_selection(std::span<const SetResult> sets, std::size_t stride) {
  std::vector<std::size_t> order(sets.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return sets[a].training_effect < sets[b].training_effect;
  });
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < order.size(); i += stride) out.push_back(order[i]);
  if (!order.empty() && (order.size() - 1) % stride != 0) out.push_back(order.back());
  return out;
}

Histogram histogram(std::span<const double> values, std::size_t bins) {
  Histogram h;
  if (values.empty() || bins == 0) return h;
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  const double width = (*hi - *lo) / static_cast<double>(bins);
  h.counts.assign(bins, 0);
  for (std::size_t b = 0; b <= bins; ++b) h.edges.push_back(*lo + width * static_cast<double>(b));
  h.edges.back() = *hi;
  for (double v : values) {
    std::size_t b = width > 0 ? static_cast<std::size_t>((v - *lo) / width) : 0;
    h.counts[std::min(b, bins - 1)]++;
  }
  return h;
}

nlohmann::json NFirstReport::to_json() const {
  nlohmann::json j{{"scenario", "n_first"},
                   {"n", n},
                   {"s", s},
                   {"l", l},
                   {"generator", to_string(kind)},
                   {"hyperparams", params},
                   {"rct", rct.to_json()},
                   {"one_shot", one_shot.to_json()},
                   {"averaged", averaged.to_json()},
                   {"labels",
                    {{"rct", label_json(rct_label)},
                     {"one_shot", label_json(one_shot_label)},
                     {"averaged", label_json(averaged_label)}}},
                   {"relative_difference_pct",
                    {{"one_shot", optional_number(one_shot_relative_difference)},
                     {"averaged", optional_number(averaged_relative_difference)}}}};
  j["tuning"] = tuning ? tuning->to_json() : nlohmann::json(nullptr);
  return j;
}

void NFirstReport::write_estimates_csv(std::ostream& out) const {
  csv::write_row(out, {"procedure", "tau", "se", "delta", "ci_low", "ci_high", "significance",
                       "incompatible_with_rct", "relative_difference_pct"});
  auto row = [&](const EffectEstimate& e, const DecisionLabel& label, const std::optional<double>& rel) {
    csv::Row r{to_string(e.procedure)};
    auto cells = estimate_cells(e);
    r.insert(r.end(), cells.begin(), cells.end());
    r.push_back(to_string(label.significance));
    r.push_back(label.incompatible_with_rct ? "1" : "0");
    r.push_back(optional_text(rel));
    csv::write_row(out, r);
  };
  row(rct, rct_label, std::nullopt);
  row(one_shot, one_shot_label, one_shot_relative_difference);
  row(averaged, averaged_label, averaged_relative_difference);
}

void NFirstReport::write_replicates_csv(std::ostream& out) const {
  csv::write_row(out, {"replicate", "generated_events", "control_mean", "control_variance", "tau"});
  for (const auto& r : replicates) {
    csv::write_row(out, {std::to_string(r.replicate), std::to_string(r.generated_events), format_number(r.control_mean),
                         format_number(r.control_variance), format_number(r.tau)});
  }
}

nlohmann::json SensitivityReport::to_json() const {
  nlohmann::json panel_rows = nlohmann::json::array();
  for (std::size_t i : panel) {
    const SetResult& r = sets[i];
    panel_rows.push_back({{"set", r.index}, {"training_effect", r.training_effect}, {"tau", r.estimate.tau},
                          {"ci_low", r.estimate.ci_low}, {"ci_high", r.estimate.ci_high}});
  }
  nlohmann::json j{{"scenario", "sensitivity"},
                   {"n", n},
                   {"s", s},
                   {"k", k},
                   {"l", l},
                   {"generator", to_string(kind)},
                   {"hyperparams", params},
                   {"rct", rct.to_json()},
                   {"rct_label", label_json(rct_label)},
                   {"counts",
                    {{"significant_positive", counts.significant_positive},
                     {"significant_negative", counts.significant_negative},
                     {"incompatible", counts.incompatible}}},
                   {"mse", error.mse},
                   {"rmse", error.rmse},
                   {"correlation", optional_number(correlation)},
                   {"panel", panel_rows},
                   {"tau_histogram", {{"edges", tau_histogram.edges}, {"counts", tau_histogram.counts}}}};
  j["tuning"] = tuning ? tuning->to_json() : nlohmann::json(nullptr);
  return j;
}

void SensitivityReport::write_sets_csv(std::ostream& out) const {
  csv::write_row(out, {"set", "training_effect", "tau", "se", "delta", "ci_low", "ci_high", "delta_unscaled",
                       "significance", "incompatible_with_rct"});
  for (const SetResult& r : sets) {
    csv::Row row{std::to_string(r.index), format_number(r.training_effect)};
    auto cells = estimate_cells(r.estimate);
    row.insert(row.end(), cells.begin(), cells.end());
    row.push_back(format_number(r.estimate.delta_unscaled));
    row.push_back(to_string(r.label.significance));
    row.push_back(r.label.incompatible_with_rct ? "1" : "0");
    csv::write_row(out, row);
  }
}

void SensitivityReport::write_panel_csv(std::ostream& out) const {
  csv::write_row(out, {"order", "set", "training_effect", "tau", "ci_low", "ci_high", "rct_tau", "rct_ci_low",
                       "rct_ci_high"});
  std::size_t order = 0;
  for (std::size_t i : panel) {
    const SetResult& r = sets[i];
    csv::write_row(out, {std::to_string(order++), std::to_string(r.index), format_number(r.training_effect),
                         format_number(r.estimate.tau), format_number(r.estimate.ci_low),
                         format_number(r.estimate.ci_high), format_number(rct.tau), format_number(rct.ci_low),
                         format_number(rct.ci_high)});
  }
}

NFirstReport run_n_first(const TrialDataset& ds, std::size_t n, const ScenarioOptions& options) {
  ds.require_analysable();
  if (options.replicates < 1) throw ValidationError("n-first: l must be >= 1");
  const TrainingSet selection = select_n_first(ds, n);
  const TrialDataset train = selection.resolve(ds);
  const std::uint64_t master = options.seed;
  constexpr std::uint64_t scenario = scenario_id::n_first;

  NFirstReport report;
  report.n = n;
  report.s = ds.m0() - n;
  report.l = options.replicates;
  report.kind = options.generator.kind;

  GeneratorConfig config = options.generator;
  if (options.grid) {
    CvOptions cv{options.folds, task_seed(master, scenario_id::tuning, 0, 0), options.jobs};
    report.tuning = grid_search_cv(config, train, *options.grid, cv);
    config = with_params(config, report.tuning->best_params);
  }
  report.params = config.params;

  const ArmCounts treated = treated_counts(ds);
  const std::vector<int> train_y = ds.outcomes(selection.rows(ds));
  const ArmCounts train_counts = ArmCounts::of(train_y);

  report.rct = rct_effect(ds);
  report.rct_label = classify(report.rct, report.rct);

  const GeneratorModel model = fit(config, train, task_seed(master, scenario, 0, kFitSlot), rank_after_all(ds));
  const std::size_t s = report.s;

  const std::vector<int> one_shot_y = sample_outcomes(model, s, task_seed(master, scenario, 0, kOneShotSlot));
  report.one_shot = one_shot(train_y, one_shot_y, treated, ds.m0());

  std::vector<std::uint64_t> events(options.replicates);
  parallel_for(options.replicates, options.jobs, [&](std::size_t j) {
    events[j] = count_ones(sample_outcomes(model, s, task_seed(master, scenario, 0, kFirstReplicateSlot + j)));
  });
  report.averaged = averaged_counts(train_counts, events, s, treated);

  report.one_shot_label = classify(report.one_shot, report.rct);
  report.averaged_label = classify(report.averaged, report.rct);
  report.one_shot_relative_difference = relative_difference(report.one_shot.tau, report.rct.tau);
  report.averaged_relative_difference = relative_difference(report.averaged.tau, report.rct.tau);

  const std::uint64_t m0 = ds.m0();
  for (std::size_t j = 0; j < events.size(); ++j) {
    const ArmCounts control{train_counts.events + events[j], m0};
    report.replicates.push_back(
        {j, events[j], control.mean(), control.variance(), treated.mean() - control.mean()});
  }
  return report;
}

SensitivityReport run_sensitivity(const TrialDataset& ds, std::size_t n, std::size_t k,
                                  const ScenarioOptions& options) {
  ds.require_analysable();
  if (k < 1) throw ValidationError("sensitivity: k must be >= 1");
  if (options.replicates < 1) throw ValidationError("sensitivity: l must be >= 1");
  if (n < 1 || n > ds.m0()) {
    throw ValidationError("sensitivity: n = " + std::to_string(n) + " outside [1, " + std::to_string(ds.m0()) + "]");
  }
  const std::uint64_t master = options.seed;
  constexpr std::uint64_t scenario = scenario_id::sensitivity;

  SensitivityReport report;
  report.n = n;
  report.s = ds.m0() - n;
  report.k = k;
  report.l = options.replicates;
  report.kind = options.generator.kind;

  GeneratorConfig config = options.generator;
  if (options.grid) {
    MultiSetOptions tune{options.tuning_sets, options.folds, task_seed(master, scenario_id::tuning, 1, 0),
                         options.jobs};
    report.tuning = multi_trainset_tune(config, ds, n, *options.grid, tune);
    config = with_params(config, report.tuning->best_params);
  }
  report.params = config.params;

  const ArmCounts treated = treated_counts(ds);
  report.rct = rct_effect(ds);
  report.rct_label = classify(report.rct, report.rct);
  const std::size_t s = report.s;
  const std::size_t first_rank = rank_after_all(ds);

  report.sets.resize(k);
  parallel_for(k, options.jobs, [&](std::size_t set) {
    const TrainingSet selection = draw_training_set(ds, n, task_seed(master, scenario, set, kDrawSlot));
    const TrialDataset train = selection.resolve(ds);
    ArmCounts train_counts{0, train.size()};
    for (std::size_t i = 0; i < train.size(); ++i) train_counts.events += static_cast<std::uint64_t>(train.outcome(i));

    const GeneratorModel model = fit(config, train, task_seed(master, scenario, set, kFitSlot), first_rank);
    std::vector<std::uint64_t> events(options.replicates);
    for (std::size_t j = 0; j < options.replicates; ++j) {
      events[j] = count_ones(sample_outcomes(model, s, task_seed(master, scenario, set, kFirstReplicateSlot + j)));
    }
    SetResult& r = report.sets[set];
    r.index = set;
    r.training_effect = treated.mean() - train_counts.mean();
    r.estimate = averaged_counts(train_counts, events, s, treated);
    r.label = classify(r.estimate, report.rct);
  });

  report.counts = tally(report.sets);
  std::vector<double> taus, effects;
  for (const SetResult& r : report.sets) {
    taus.push_back(r.estimate.tau);
    effects.push_back(r.training_effect);
  }
  report.error = mse(taus, report.rct.tau);
  try {
    report.correlation = correlation(effects, taus);
  } catch (const ValidationError&) {
    report.correlation = std::nullopt;
  }
  report.panel = panel_selection(report.sets);
  report.tau_histogram = histogram(taus, 20);
  return report;
}

}  // namespace vcat
