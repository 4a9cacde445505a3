#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "vcat/data.hpp"

namespace vcat {

enum class GeneratorKind { bootstrap, marginals, copula, external };

std::string to_string(GeneratorKind kind);
GeneratorKind generator_kind_from_string(const std::string& name);

/// Hyperparameters as a JSON object. Native kinds accept:
///   copula:    {"shrinkage": double >= 0}       (default 1e-6)
///   marginals: {"alpha": double >= 0}           (default 0, Laplace smoothing)
///   bootstrap: {}
/// External generators receive the object verbatim as <model-dir>/hyperparams.json.
using HyperParams = nlohmann::json;

struct GeneratorConfig {
  GeneratorKind kind = GeneratorKind::bootstrap;
  HyperParams params = HyperParams::object();
  std::filesystem::path executable;  // external only
  std::filesystem::path work_dir;    // external only; model directories are created here
};

/// Empirical distribution of one column.
struct ColumnMarginal {
  std::size_t column = 0;
  bool numeric = false;
  std::vector<double> sorted_values;  // numeric: training values, ascending
  std::vector<double> cumulative;     // categorical: P(code <= c), last entry 1
};

struct BootstrapParams {
  std::vector<double> cells;  // training rows, row-major
  std::size_t rows = 0;
};

struct MarginalParams {
  std::vector<ColumnMarginal> columns;
};

struct CopulaParams {
  std::vector<ColumnMarginal> columns;  // one per latent dimension
  Eigen::MatrixXd correlation;          // Gaussian-rank correlation of the latent scores
  Eigen::MatrixXd cholesky;             // lower factor of the regularised correlation
  double shrinkage = 0;                 // weight on the identity that made the factor exist
};

struct ExternalParams {
  std::filesystem::path executable;
  std::filesystem::path model_dir;
};

/// A fitted generator: training-to-parameters map applied, ready to sample.
/// Immutable once fitted; sample() may be called concurrently.
struct GeneratorModel {
  GeneratorKind kind = GeneratorKind::bootstrap;
  Schema schema;
  HyperParams hyperparams = HyperParams::object();
  std::size_t latent_dim = 0;  // copula: number of latent columns
  std::string prior;           // "standard normal" for copula, "none" otherwise
  std::size_t first_rank = 0;  // enrolment order given to the first generated record
  std::variant<BootstrapParams, MarginalParams, CopulaParams, ExternalParams> params;
};

/// s generated control-arm records. Arm is 0 and enrolment order runs
/// first_rank, first_rank + 1, ... so generated patients follow all real ones.
struct SyntheticBatch {
  Schema schema;
  std::vector<double> cells;
  std::size_t rows = 0;

  std::size_t size() const noexcept { return rows; }
  TableView view() const { return {&schema, cells, rows}; }
  std::vector<int> outcomes() const;
  int outcome(std::size_t i) const;
  TrialDataset to_dataset() const { return TrialDataset(schema, cells); }
};

/// Fits a generator on `train` (complete records with an outcome column).
/// `first_rank` defaults to one past the largest enrolment order in `train`.
GeneratorModel fit(const GeneratorConfig& config, const TrialDataset& train, std::uint64_t seed);
GeneratorModel fit(const GeneratorConfig& config, const TrialDataset& train, std::uint64_t seed,
                   std::size_t first_rank);

/// Draws s records. Deterministic in (model, s, seed).
SyntheticBatch sample(const GeneratorModel& model, std::size_t s, std::uint64_t seed);

/// Outcome column only; equal to sample(model, s, seed).outcomes().
std::vector<int> sample_outcomes(const GeneratorModel& model, std::size_t s, std::uint64_t seed);

/// Runs the external protocol end to end on files already on disk:
///   <exe> fit --train <csv> --schema <json> --model-dir <dir> --seed <u64>
///   <exe> sample --model-dir <dir> --n <s> --seed <u64> --out <csv>
/// Every output row is validated against the schema.
SyntheticBatch external_fit_sample(const std::filesystem::path& executable, const std::filesystem::path& train_csv,
                                   const std::filesystem::path& schema_json, std::size_t s, std::uint64_t seed,
                                   const std::filesystem::path& model_dir);

// Building blocks shared with tests.
double normal_cdf(double x);
double normal_quantile(double p);
/// Normal scores of a numeric sample: Phi^-1(average rank / (n + 1)).
std::vector<double> normal_scores(std::span<const double> values);

}  // namespace vcat
