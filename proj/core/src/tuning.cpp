#include "vcat/tuning.hpp"

#include <numeric>

#include "vcat/error.hpp"
#include "vcat/fidelity.hpp"
#include "vcat/parallel.hpp"
#include "vcat/seed.hpp"

namespace vcat {

namespace {

constexpr std::uint64_t kPartitionTag = 0x70617274;  // "part"
constexpr std::uint64_t kFitTag = 0x666974;          // "fit"
constexpr std::uint64_t kSampleTag = 0x73616d70;     // "samp"
constexpr std::uint64_t kDrawTag = 0x64726177;       // "draw"
constexpr std::uint64_t kCvTag = 0x6376;             // "cv"

// Scores every (candidate, fold) of one training set; result[c][f].
std::vector<std::vector<double>> score_matrix(const TrialDataset& train, const HyperGrid& grid, std::size_t folds,
                                              std::uint64_t cv_seed, unsigned jobs, const CandidateScorer& scorer) {
  if (grid.size() == 0) throw ValidationError("grid search: empty grid");
  if (folds < 2) throw ValidationError("grid search: need at least 2 folds");
  if (train.size() < folds) {
    throw ValidationError("grid search: " + std::to_string(folds) + " folds exceed " +
                          std::to_string(train.size()) + " training records");
  }
  const auto parts = fold_partition(train.size(), folds, partition_seed(cv_seed));
  std::vector<TrialDataset> fit_parts(folds), held_out(folds);
  for (std::size_t f = 0; f < folds; ++f) {
    std::vector<std::size_t> rest;
    for (std::size_t g = 0; g < folds; ++g) {
      if (g != f) rest.insert(rest.end(), parts[g].begin(), parts[g].end());
    }
    std::sort(rest.begin(), rest.end());
    std::vector<std::size_t> held(parts[f]);
    std::sort(held.begin(), held.end());
    fit_parts[f] = train.subset(rest);
    held_out[f] = train.subset(held);
  }

  const std::size_t candidates = grid.size();
  std::vector<std::vector<double>> scores(candidates, std::vector<double>(folds));
  parallel_for(candidates * folds, jobs, [&](std::size_t task) {
    const std::size_t c = task / folds;
    const std::size_t f = task % folds;
    scores[c][f] = scorer(grid.candidate(c), fit_parts[f], held_out[f], fold_seeds(cv_seed, f));
  });
  return scores;
}

double mean_of(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

TuningResult finish(const HyperGrid& grid, std::vector<std::vector<double>> fold_scores,
                    std::vector<double> mean_scores) {
  TuningResult r;
  for (std::size_t c = 0; c < grid.size(); ++c) r.candidates.push_back(grid.candidate(c));
  r.best_index = 0;
  for (std::size_t c = 1; c < mean_scores.size(); ++c) {
    if (mean_scores[c] > mean_scores[r.best_index]) r.best_index = c;
  }
  r.best_params = r.candidates[r.best_index];
  r.best_score = mean_scores[r.best_index];
  r.fold_scores = std::move(fold_scores);
  r.mean_scores = std::move(mean_scores);
  return r;
}

}  // namespace

HyperGrid::HyperGrid(std::vector<Axis> axes) : axes_(std::move(axes)) {
  for (const auto& [name, values] : axes_) {
    if (values.empty()) throw ValidationError("grid: parameter '" + name + "' has no candidate values");
  }
}

HyperGrid HyperGrid::from_json(const nlohmann::ordered_json& doc) {
  if (!doc.is_object()) throw ValidationError("grid must be a JSON object of value lists");
  std::vector<Axis> axes;
  for (const auto& [key, value] : doc.items()) {
    if (!value.is_array()) throw ValidationError("grid: parameter '" + key + "' must list candidate values");
    std::vector<nlohmann::json> values;
    for (const auto& v : value) values.push_back(nlohmann::json::parse(v.dump()));
    axes.emplace_back(key, std::move(values));
  }
  return HyperGrid(std::move(axes));
}

std::size_t HyperGrid::size() const noexcept {
  if (axes_.empty()) return 0;
  std::size_t n = 1;
  for (const auto& axis : axes_) n *= axis.second.size();
  return n;
}

HyperParams HyperGrid::candidate(std::size_t index) const {
  HyperParams params = HyperParams::object();
  for (auto it = axes_.rbegin(); it != axes_.rend(); ++it) {
    const std::size_t k = it->second.size();
    params[it->first] = it->second[index % k];
    index /= k;
  }
  return params;
}

nlohmann::json TuningResult::to_json() const {
  nlohmann::json cands = nlohmann::json::array();
  for (std::size_t c = 0; c < candidates.size(); ++c) {
    cands.push_back({{"index", c}, {"params", candidates[c]}, {"mean_score", mean_scores[c]},
                     {"fold_scores", fold_scores[c]}});
  }
  return {{"best_index", best_index}, {"best_params", best_params}, {"best_score", best_score},
          {"candidates", cands}};
}

std::vector<std::vector<std::size_t>> fold_partition(std::size_t n, std::size_t folds, std::uint64_t seed) {
  if (folds < 1 || folds > n) throw ValidationError("fold_partition: need 1 <= folds <= n");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Engine rng = make_engine(seed);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<std::vector<std::size_t>> parts(folds);
  std::size_t start = 0;
  for (std::size_t f = 0; f < folds; ++f) {
    const std::size_t len = n / folds + (f < n % folds ? 1 : 0);
    parts[f].assign(order.begin() + static_cast<std::ptrdiff_t>(start),
                    order.begin() + static_cast<std::ptrdiff_t>(start + len));
    start += len;
  }
  return parts;
}

std::uint64_t partition_seed(std::uint64_t cv_seed) { return derive_seed({cv_seed, kPartitionTag}); }

FoldSeeds fold_seeds(std::uint64_t cv_seed, std::size_t fold) {
  return {derive_seed({cv_seed, kFitTag, fold}), derive_seed({cv_seed, kSampleTag, fold})};
}

std::uint64_t tuning_set_draw_seed(std::uint64_t seed, std::size_t set) { return derive_seed({seed, kDrawTag, set}); }
std::uint64_t tuning_set_cv_seed(std::uint64_t seed, std::size_t set) { return derive_seed({seed, kCvTag, set}); }

CandidateScorer fidelity_scorer(const GeneratorConfig& base) {
  return [base](const HyperParams& params, const TrialDataset& fit_part, const TrialDataset& held_out,
                const FoldSeeds& seeds) {
    GeneratorConfig config = base;
    config.params = params;
    const GeneratorModel model = fit(config, fit_part, seeds.fit);
    const SyntheticBatch batch = sample(model, held_out.size(), seeds.sample);
    return general_score(held_out.view(), batch.view()).overall;
  };
}

TuningResult grid_search_cv(const GeneratorConfig& base, const TrialDataset& train, const HyperGrid& grid,
                            const CvOptions& options, const CandidateScorer& scorer) {
  const CandidateScorer score = scorer ? scorer : fidelity_scorer(base);
  auto folds = score_matrix(train, grid, options.folds, options.seed, options.jobs, score);
  std::vector<double> means;
  for (const auto& f : folds) means.push_back(mean_of(f));
  return finish(grid, std::move(folds), std::move(means));
}

TuningResult multi_trainset_tune(const GeneratorConfig& base, const TrialDataset& ds, std::size_t n,
                                 const HyperGrid& grid, const MultiSetOptions& options,
                                 const CandidateScorer& scorer) {
  if (options.num_sets < 1) throw ValidationError("multi_trainset_tune: num_sets must be >= 1");
  const CandidateScorer score = scorer ? scorer : fidelity_scorer(base);
  const std::size_t candidates = grid.size();
  std::vector<std::vector<double>> flat(candidates);
  std::vector<double> set_mean_sum(candidates, 0.0);
  for (std::size_t set = 0; set < options.num_sets; ++set) {
    const TrialDataset train = draw_training_set(ds, n, tuning_set_draw_seed(options.seed, set)).resolve(ds);
    const auto m = score_matrix(train, grid, options.folds, tuning_set_cv_seed(options.seed, set), options.jobs, score);
    for (std::size_t c = 0; c < candidates; ++c) {
      flat[c].insert(flat[c].end(), m[c].begin(), m[c].end());
      set_mean_sum[c] += mean_of(m[c]);
    }
  }
  std::vector<double> means(candidates);
  for (std::size_t c = 0; c < candidates; ++c) means[c] = set_mean_sum[c] / static_cast<double>(options.num_sets);
  return finish(grid, std::move(flat), std::move(means));
}

}  // namespace vcat
