// Acceptance runner: prints one PASS/FAIL line per criterion and exits
// nonzero when any criterion fails or exceeds its time budget.

#include <chrono>
#include <cmath>
#include <cstring>
#include <functional>
#include <iomanip>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <boost/math/distributions/hypergeometric.hpp>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "vcat/estimators.hpp"
#include "vcat/experiments.hpp"
#include "vcat/fidelity.hpp"
#include "vcat/parallel.hpp"
#include "vcat/seed.hpp"
#include "vcat/subprocess.hpp"
#include "vcat/tuning.hpp"

namespace {

namespace fs = std::filesystem;
using vcat::GeneratorKind;

struct Verdict {
  bool pass = false;
  std::string detail;
};

bool same_bits(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; }

std::string fmt(double v, int precision = 4) {
  std::ostringstream s;
  s << std::setprecision(precision) << v;
  return s.str();
}

vcat::ScenarioOptions scenario(GeneratorKind kind, std::size_t l, std::uint64_t seed) {
  vcat::ScenarioOptions o;
  o.generator.kind = kind;
  o.replicates = l;
  o.seed = seed;
  o.jobs = vcat::default_jobs();
  return o;
}

vcat::SimSpec null_trial(std::uint64_t seed) {
  vcat::SimSpec s;
  s.m0 = 2000;
  s.m1 = 2000;
  s.p_treated = 0.3;
  s.p_control_start = 0.3;
  s.numeric_covariates = 2;
  s.categorical = {{"region", {"north", "south", "east", "west"}, {0.4, 0.3, 0.2, 0.1}}};
  s.seed = seed;
  return s;
}

std::vector<int> bernoulli(std::mt19937_64& rng, std::size_t n, double p) {
  std::bernoulli_distribution d(p);
  std::vector<int> v(n);
  for (auto& x : v) x = d(rng);
  return v;
}

Verdict degenerate_identity() {
  std::vector<vcat::GeneratorConfig> generators(4);
  generators[0].kind = GeneratorKind::bootstrap;
  generators[1].kind = GeneratorKind::marginals;
  generators[2].kind = GeneratorKind::copula;
  generators[3].kind = GeneratorKind::external;
  generators[3].executable = VCAT_MOCK_GENERATOR;
  generators[3].work_dir = fixtures::scratch("acceptance_degenerate");

  std::size_t checks = 0;
  for (std::uint64_t seed = 1; seed <= 4; ++seed) {
    auto spec = null_trial(seed);
    spec.m0 = 3 + 40 * seed;
    spec.m1 = 2 + 30 * seed;
    spec.p_treated = 0.1 * static_cast<double>(seed);
    const auto ds = vcat::simulate_trial(spec);
    for (const auto& g : generators) {
      vcat::ScenarioOptions o = scenario(g.kind, 5, seed);
      o.generator = g;
      const auto r = vcat::run_n_first(ds, ds.m0(), o);
      const auto sens = vcat::run_sensitivity(ds, ds.m0(), 1, o);
      for (const auto* e : {&r.one_shot, &r.averaged, &sens.sets[0].estimate}) {
        const bool equal = same_bits(e->tau, r.rct.tau) && same_bits(e->delta, r.rct.delta) &&
                           same_bits(e->ci_low, r.rct.ci_low) && same_bits(e->ci_high, r.rct.ci_high);
        if (!equal) {
          return {false, vcat::to_string(g.kind) + " seed " + std::to_string(seed) + ": " +
                             vcat::to_string(e->procedure) + " differs from rct"};
        }
        ++checks;
      }
    }
  }
  return {true, std::to_string(checks) + " bitwise comparisons over 4 datasets x 4 generators"};
}

Verdict estimator_oracle_suite() {
  using Sig = vcat::DecisionLabel::Significance;
  std::mt19937_64 rng(20240601);
  double worst = 0;
  std::size_t boundary_hits = 0;
  auto track = [&](double a, double b) { worst = std::max(worst, std::abs(a - b)); };
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t m0 = 1 + rng() % 20;
    const std::size_t n = 1 + rng() % m0;
    const std::size_t l = 1 + rng() % 5;
    const auto treated = bernoulli(rng, 1 + rng() % 20, 0.5);
    const auto train = bernoulli(rng, n, 0.4);
    std::vector<std::vector<int>> batches;
    for (std::size_t j = 0; j < l; ++j) batches.push_back(bernoulli(rng, m0 - n, 0.4));
    const auto counts = vcat::ArmCounts::of(treated);

    const auto os = vcat::one_shot(train, batches[0], counts, m0);
    const auto os_ref = oracle::one_shot(train, batches[0], treated);
    track(os.tau, os_ref.tau);
    track(os.delta, os_ref.delta);
    track(os.ci_low, os_ref.lo);
    track(os.ci_high, os_ref.hi);

    const auto av = vcat::averaged(train, batches, counts);
    const auto av_ref = oracle::averaged(train, batches, treated);
    track(av.tau, av_ref.tau);
    track(av.sigma2_control, av_ref.sigma2);
    track(av.delta, av_ref.delta);

    std::vector<double> taus;
    for (const auto& b : batches) taus.push_back(oracle::one_shot(train, b, treated).tau);
    track(vcat::mse(taus, os_ref.tau).mse, oracle::mse(taus, os_ref.tau).first);

    // Intervals on a 0.01 grid so that endpoints often coincide with 0 and each other.
    auto grid = [&](int lo, int hi) { return static_cast<double>(lo + static_cast<int>(rng() % (hi - lo + 1))) / 100; };
    vcat::EffectEstimate est, rct;
    est.ci_low = grid(-5, 5);
    est.ci_high = est.ci_low + grid(0, 5);
    rct.ci_low = grid(-5, 5);
    rct.ci_high = rct.ci_low + grid(0, 5);
    for (const auto& [e, r] : {std::pair{est, rct}, std::pair{av, vcat::rct_effect(counts, vcat::ArmCounts::of(train))}}) {
      const auto label = vcat::classify(e, r);
      const auto sign = oracle::significance(e.ci_low, e.ci_high);
      boundary_hits += e.ci_low == 0 || e.ci_high == 0 || e.ci_low == r.ci_high || e.ci_high == r.ci_low;
      if ((label.significance == Sig::significant_positive) != (sign == oracle::Sign::positive) ||
          (label.significance == Sig::significant_negative) != (sign == oracle::Sign::negative) ||
          label.incompatible_with_rct != oracle::disjoint(e.ci_low, e.ci_high, r.ci_low, r.ci_high)) {
        return {false, "classify disagrees with the interval oracle on instance " + std::to_string(trial)};
      }
    }
  }
  if (worst > 1e-12) return {false, "max deviation " + fmt(worst) + " > 1e-12"};
  return {true, "1000 instances, max deviation " + fmt(worst) + ", " + std::to_string(boundary_hits) +
                    " classify boundary cases"};
}

Verdict distribution_mirroring() {
  const auto ds = vcat::simulate_trial(null_trial(101));
  const std::size_t n = 200, l = 999;
  const auto r = vcat::run_n_first(ds, n, scenario(GeneratorKind::bootstrap, l, 7));
  const auto train = oracle::mean_var(ds.outcomes(vcat::select_n_first(ds, n).rows(ds)));
  std::vector<int> treated;
  for (std::size_t i : ds.treated_rows()) treated.push_back(ds.outcome(i));
  const double target = oracle::mean_var(treated).mean - train.mean;
  const double bound = 3 * std::sqrt(train.var / static_cast<double>(r.s * l));
  const double gap = std::abs(r.averaged.tau - target);
  return {gap <= bound, "|tau_av - target| = " + fmt(gap) + ", bound " + fmt(bound)};
}

Verdict panel_c_correlation() {
  const auto ds = vcat::simulate_trial(null_trial(101));
  std::string detail;
  bool pass = true;
  for (auto kind : {GeneratorKind::bootstrap, GeneratorKind::copula}) {
    const auto r = vcat::run_sensitivity(ds, ds.m0() / 10, 200, scenario(kind, 999, 11));
    std::vector<double> x, y;
    for (const auto& s : r.sets) x.push_back(s.training_effect), y.push_back(s.estimate.tau);
    const double direct = oracle::pearson(x, y);
    const bool ok = r.correlation && *r.correlation >= 0.9 && std::abs(*r.correlation - direct) <= 1e-12;
    pass = pass && ok;
    if (!detail.empty()) detail += ", ";
    detail += vcat::to_string(kind) + " r = " + (r.correlation ? fmt(*r.correlation, 6) : std::string("n/a"));
  }
  return {pass, detail};
}

Verdict drift_inflation() {
  constexpr std::size_t k = 200;
  constexpr double drift = 0.05;
  std::size_t significant[2] = {0, 0};
  for (int condition = 0; condition < 2; ++condition) {
    const double d = condition == 0 ? 0.0 : drift;
    for (std::size_t i = 0; i < k; ++i) {
      auto spec = null_trial(vcat::derive_seed({2024, static_cast<std::uint64_t>(condition), i}));
      spec.m0 = 10000;
      spec.m1 = 10000;
      spec.drift = d;
      spec.p_treated = spec.p_control_start + d / 2;
      spec.numeric_covariates = 0;
      spec.categorical.clear();
      const auto ds = vcat::simulate_trial(spec);
      const auto r = vcat::run_n_first(ds, ds.m0() / 10, scenario(GeneratorKind::bootstrap, 999, i));
      significant[condition] += r.averaged_label.significant();
    }
  }
  // One-sided Fisher exact test: P(X >= a) for X hypergeometric given the
  // total number of significant labels.
  const std::size_t a = significant[1];
  const std::size_t total = significant[0] + significant[1];
  double p = 1.0;
  if (a > 0 && total > 0) {
    const boost::math::hypergeometric_distribution<double> h(total, k, 2 * k);
    p = boost::math::cdf(boost::math::complement(h, a - 1));
  }
  const bool pass = significant[1] > significant[0] && p < 0.01;
  return {pass, "significant " + std::to_string(significant[1]) + "/200 with drift vs " +
                    std::to_string(significant[0]) + "/200 without, Fisher one-sided p = " + fmt(p, 3)};
}

Verdict fidelity_metrics() {
  std::vector<std::string> failures;
  auto near = [&](double got, double want, const std::string& what) {
    if (!(std::abs(got - want) <= 1e-12)) failures.push_back(what + " = " + fmt(got, 17));
  };
  auto exact = [&](double got, double want, const std::string& what) {
    if (got != want) failures.push_back(what + " = " + fmt(got, 17));
  };
  const std::vector<double> u{1, 2, 3, 4}, v{4, 1, 3, 2};
  exact(vcat::ks_complement(u, u), 1.0, "ks identity");
  exact(vcat::tv_complement(std::vector<int>{0, 1, 2}, std::vector<int>{0, 1, 2}), 1.0, "tv identity");
  exact(*vcat::pearson_similarity(u, v, u, v), 1.0, "pearson identity");
  exact(vcat::contingency_similarity(std::vector<int>{0, 1}, std::vector<int>{1, 1}, std::vector<int>{0, 1},
                                     std::vector<int>{1, 1}),
        1.0, "contingency identity");
  near(vcat::ks_complement(std::vector<double>{0, 0}, std::vector<double>{1, 1}), 0.0, "ks disjoint");
  near(vcat::ks_complement(std::vector<double>{0, 1}, std::vector<double>{0, 2}), 0.5, "ks [0,1] vs [0,2]");
  near(vcat::tv_complement(std::vector<int>{0, 1}, std::vector<int>{0, 0}), 0.5, "tv [.5,.5] vs [1,0]");
  near(vcat::tv_complement(std::vector<int>{0, 1}, std::vector<int>{2, 3}), 0.0, "tv disjoint");
  const std::vector<double> x{1, -1, 0, 0}, z{0, 0, 1, -1};
  std::vector<double> y8(4), y4(4);
  for (int i = 0; i < 4; ++i) {
    y8[i] = 0.8 * x[i] + 0.6 * z[i];
    y4[i] = 0.4 * x[i] + std::sqrt(1 - 0.16) * z[i];
  }
  near(*vcat::pearson_similarity(x, y8, x, y4), 0.8, "pearson 0.8 vs 0.4");
  const std::vector<double> neg{-1, -2, -3, -4};
  near(*vcat::pearson_similarity(u, u, u, neg), 0.0, "pearson 1 vs -1");
  near(vcat::contingency_similarity(std::vector<int>{0}, std::vector<int>{0}, std::vector<int>{1}, std::vector<int>{1}),
       0.0, "contingency disjoint");
  near(vcat::contingency_similarity(std::vector<int>{0, 0}, std::vector<int>{0, 1}, std::vector<int>{0},
                                    std::vector<int>{0}),
       0.5, "contingency half");

  const auto real = vcat::simulate_trial(null_trial(5));
  auto syn_spec = null_trial(6);
  syn_spec.p_control_start = 0.4;
  const auto syn = vcat::simulate_trial(syn_spec);
  exact(vcat::general_score(real.view(), real.view()).overall, 1.0, "general score identity");
  const auto q = vcat::general_score(real.view(), syn.view());
  double sum = 0;
  for (const auto& [name, s] : q.column_scores) sum += s;
  for (const auto& p : q.pair_scores) sum += p.score;
  near(q.overall, sum / static_cast<double>(q.column_scores.size() + q.pair_scores.size()), "general score mean");

  if (!failures.empty()) {
    std::string detail;
    for (const auto& f : failures) detail += f + "; ";
    return {false, detail};
  }
  return {true, "identity, 10 hand-computed cases and general-score mean (overall " + fmt(q.overall) + ")"};
}

Verdict tuning_oracle() {
  const auto ds = vcat::simulate_trial(null_trial(77));
  const auto train = vcat::select_n_first(ds, 500).resolve(ds);
  const nlohmann::json values = nlohmann::json::array({1e-6, 1e-4, 1e-2, 0.1, 0.3, 0.6});
  const vcat::HyperGrid grid({{"shrinkage", std::vector<nlohmann::json>(values.begin(), values.end())}});
  vcat::GeneratorConfig base;
  base.kind = GeneratorKind::copula;
  const std::uint64_t cv_seed = 99;
  const auto result = vcat::grid_search_cv(base, train, grid, {5, cv_seed, vcat::default_jobs()});

  const auto parts = vcat::fold_partition(train.size(), 5, vcat::partition_seed(cv_seed));
  std::vector<double> means;
  for (std::size_t c = 0; c < grid.size(); ++c) {
    double sum = 0;
    for (std::size_t f = 0; f < 5; ++f) {
      std::vector<bool> held_mask(train.size(), false);
      for (std::size_t i : parts[f]) held_mask[i] = true;
      std::vector<std::size_t> held, rest;
      for (std::size_t i = 0; i < train.size(); ++i) (held_mask[i] ? held : rest).push_back(i);
      vcat::GeneratorConfig config = base;
      config.params = grid.candidate(c);
      const auto seeds = vcat::fold_seeds(cv_seed, f);
      const auto held_out = train.subset(held);
      const auto model = vcat::fit(config, train.subset(rest), seeds.fit);
      const double score =
          vcat::general_score(held_out.view(), vcat::sample(model, held_out.size(), seeds.sample).view()).overall;
      if (!same_bits(score, result.fold_scores[c][f])) {
        return {false, "fold score differs for candidate " + std::to_string(c) + " fold " + std::to_string(f)};
      }
      sum += score;
    }
    means.push_back(sum / 5);
  }
  std::size_t best = 0;
  for (std::size_t c = 1; c < means.size(); ++c) {
    if (means[c] > means[best]) best = c;
  }
  const bool pass = best == result.best_index && result.best_params == grid.candidate(best);
  return {pass, "argmax candidate " + std::to_string(result.best_index) + " (" + result.best_params.dump() +
                    "), oracle " + std::to_string(best)};
}

Verdict cli_determinism() {
  const fs::path exe = VCAT_SIM_EXE;
  const auto dir = fixtures::scratch("acceptance_determinism");
  fixtures::write_file(dir / "sim.json",
                       R"({"simulation": {"m0": 1000, "m1": 1000, "numeric_covariates": 2, "drift": 0.05}})");
  auto r = vcat::run_process(exe, {"simulate", "--config", (dir / "sim.json").string(), "--seed", "5", "--out",
                                   (dir / "trial").string()});
  if (r.exit_code != 0) return {false, "simulate failed: " + r.stderr_text};
  fixtures::write_file(dir / "sens.json", R"({"data": "trial/data.csv", "schema": "trial/schema.json",
    "generator": {"kind": "copula"}, "n": 100, "k": 100, "l": 99, "seed": 8})");
  for (const char* jobs : {"1", "8"}) {
    r = vcat::run_process(exe, {"sensitivity", "--config", (dir / "sens.json").string(), "--jobs", jobs, "--out",
                                (dir / (std::string("jobs") + jobs)).string()});
    if (r.exit_code != 0) return {false, std::string("sensitivity --jobs ") + jobs + " failed: " + r.stderr_text};
  }
  for (const char* name : {"report.json", "sets.csv", "panel.csv", "manifest.json"}) {
    const auto a = fixtures::read_file(dir / "jobs1" / name);
    if (a.empty() || a != fixtures::read_file(dir / "jobs8" / name)) {
      return {false, std::string(name) + " differs between --jobs 1 and --jobs 8"};
    }
  }
  return {true, "report.json, sets.csv, panel.csv and manifest.json byte-identical"};
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    double limit_seconds;
    std::function<Verdict()> run;
  };
  const std::vector<Criterion> criteria{
      {"degenerate-augmentation identity", 1, degenerate_identity},
      {"estimator oracle suite", 10, estimator_oracle_suite},
      {"distribution mirroring", 30, distribution_mirroring},
      {"panel-c correlation", 300, panel_c_correlation},
      {"drift inflation", 300, drift_inflation},
      {"fidelity metrics", 1, fidelity_metrics},
      {"tuning argmax oracle", 60, tuning_oracle},
      {"determinism across --jobs", 600, cli_determinism},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = c.run();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = secs < c.limit_seconds;
    const bool pass = v.pass && in_time;
    failed += !pass;
    std::cout << (pass ? "PASS" : "FAIL") << "  " << c.name << ": " << v.detail << " [" << fmt(secs, 3) << " s, limit "
              << c.limit_seconds << " s" << (in_time ? "" : ", over budget") << "]" << std::endl;
  }
  std::cout << (failed == 0 ? "ALL PASS" : std::to_string(failed) + " FAILED") << std::endl;
  return failed == 0 ? 0 : 1;
}
