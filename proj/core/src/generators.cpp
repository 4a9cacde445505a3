#include "vcat/generators.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <fstream>
#include <numeric>

#include <boost/math/distributions/normal.hpp>

#include "vcat/error.hpp"
#include "vcat/seed.hpp"
#include "vcat/subprocess.hpp"

namespace vcat {

std::string to_string(GeneratorKind kind) {
  switch (kind) {
    case GeneratorKind::bootstrap: return "bootstrap";
    case GeneratorKind::marginals: return "marginals";
    case GeneratorKind::copula: return "copula";
    case GeneratorKind::external: return "external";
  }
  return "unknown";
}

GeneratorKind generator_kind_from_string(const std::string& name) {
  if (name == "bootstrap") return GeneratorKind::bootstrap;
  if (name == "marginals") return GeneratorKind::marginals;
  if (name == "copula") return GeneratorKind::copula;
  if (name == "external") return GeneratorKind::external;
  throw ValidationError("unknown generator kind '" + name + "'");
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double normal_quantile(double p) {
  static const boost::math::normal_distribution<double> standard;
  return boost::math::quantile(standard, p);
}

std::vector<double> normal_scores(std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> scores(n);
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
    const double average_rank = 0.5 * static_cast<double>(i + j) + 1.0;  // 1-based
    const double z = normal_quantile(average_rank / static_cast<double>(n + 1));
    for (std::size_t k = i; k <= j; ++k) scores[order[k]] = z;
    i = j + 1;
  }
  return scores;
}

std::vector<int> SyntheticBatch::outcomes() const {
  std::vector<int> out(rows);
  const std::size_t col = schema.outcome_index();
  for (std::size_t i = 0; i < rows; ++i) out[i] = static_cast<int>(cells[i * schema.size() + col]);
  return out;
}

int SyntheticBatch::outcome(std::size_t i) const {
  return static_cast<int>(cells[i * schema.size() + schema.outcome_index()]);
}

namespace {

double hyper_double(const HyperParams& params, const char* key, double fallback) {
  if (!params.contains(key)) return fallback;
  const auto& v = params.at(key);
  if (!v.is_number()) throw ValidationError(std::string("hyperparameter '") + key + "' must be a number");
  const double x = v.get<double>();
  if (!(x >= 0) || !std::isfinite(x)) throw ValidationError(std::string("hyperparameter '") + key + "' must be >= 0");
  return x;
}

void check_keys(const HyperParams& params, GeneratorKind kind, std::initializer_list<const char*> allowed) {
  if (params.is_null()) return;
  if (!params.is_object()) throw ValidationError("hyperparameters must be a JSON object");
  for (const auto& [key, value] : params.items()) {
    const bool known = std::any_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; });
    if (!known) throw ValidationError("unknown hyperparameter '" + key + "' for generator " + to_string(kind));
  }
}

bool generated(ColumnKind kind) { return kind != ColumnKind::arm && kind != ColumnKind::enrolment_order; }

std::vector<std::size_t> generated_columns(const Schema& schema) {
  std::vector<std::size_t> cols;
  for (std::size_t c = 0; c < schema.size(); ++c) {
    if (generated(schema.column(c).kind)) cols.push_back(c);
  }
  return cols;
}

ColumnMarginal fit_marginal(const TrialDataset& train, std::size_t col, double alpha) {
  ColumnMarginal m;
  m.column = col;
  const std::size_t k = train.schema().category_count(col);
  if (k == 0) {
    m.numeric = true;
    m.sorted_values.reserve(train.size());
    for (std::size_t i = 0; i < train.size(); ++i) m.sorted_values.push_back(train.cell(i, col));
    std::sort(m.sorted_values.begin(), m.sorted_values.end());
    return m;
  }
  std::vector<double> counts(k, alpha);
  for (std::size_t i = 0; i < train.size(); ++i) counts[static_cast<std::size_t>(train.cell(i, col))] += 1.0;
  const double total = std::accumulate(counts.begin(), counts.end(), 0.0);
  m.cumulative.resize(k);
  double acc = 0;
  for (std::size_t c = 0; c < k; ++c) {
    acc += counts[c];
    m.cumulative[c] = acc / total;
  }
  m.cumulative.back() = 1.0;
  return m;
}

double invert_marginal(const ColumnMarginal& m, double u) {
  if (m.numeric) {
    const std::size_t n = m.sorted_values.size();
    const auto idx = std::min(n - 1, static_cast<std::size_t>(u * static_cast<double>(n)));
    return m.sorted_values[idx];
  }
  const auto it = std::upper_bound(m.cumulative.begin(), m.cumulative.end(), u);
  const auto code = std::min<std::ptrdiff_t>(it - m.cumulative.begin(),
                                             static_cast<std::ptrdiff_t>(m.cumulative.size()) - 1);
  return static_cast<double>(code);
}

std::vector<double> latent_scores(const TrialDataset& train, const ColumnMarginal& m) {
  const std::size_t col = m.column;
  if (m.numeric) {
    std::vector<double> values(train.size());
    for (std::size_t i = 0; i < train.size(); ++i) values[i] = train.cell(i, col);
    return normal_scores(values);
  }
  std::vector<double> mid(m.cumulative.size());
  for (std::size_t c = 0; c < mid.size(); ++c) {
    const double lo = c == 0 ? 0.0 : m.cumulative[c - 1];
    mid[c] = m.cumulative[c] > lo ? normal_quantile(0.5 * (lo + m.cumulative[c])) : 0.0;
  }
  std::vector<double> out(train.size());
  for (std::size_t i = 0; i < train.size(); ++i) out[i] = mid[static_cast<std::size_t>(train.cell(i, col))];
  return out;
}

Eigen::MatrixXd pearson_matrix(const Eigen::MatrixXd& z) {
  const Eigen::Index q = z.cols();
  const Eigen::RowVectorXd mean = z.colwise().mean();
  const Eigen::MatrixXd centred = z.rowwise() - mean;
  const Eigen::MatrixXd cov = centred.transpose() * centred;
  Eigen::MatrixXd r = Eigen::MatrixXd::Identity(q, q);
  for (Eigen::Index a = 0; a < q; ++a) {
    for (Eigen::Index b = 0; b < a; ++b) {
      const double denom = std::sqrt(cov(a, a) * cov(b, b));
      const double rho = denom > 0 ? std::clamp(cov(a, b) / denom, -1.0, 1.0) : 0.0;
      r(a, b) = r(b, a) = rho;
    }
  }
  return r;
}

CopulaParams fit_copula(const TrialDataset& train, double shrinkage) {
  CopulaParams p;
  for (std::size_t col : generated_columns(train.schema())) p.columns.push_back(fit_marginal(train, col, 0.0));
  const auto q = static_cast<Eigen::Index>(p.columns.size());
  Eigen::MatrixXd z(static_cast<Eigen::Index>(train.size()), q);
  for (Eigen::Index j = 0; j < q; ++j) {
    const auto scores = latent_scores(train, p.columns[static_cast<std::size_t>(j)]);
    z.col(j) = Eigen::Map<const Eigen::VectorXd>(scores.data(), static_cast<Eigen::Index>(scores.size()));
  }
  p.correlation = pearson_matrix(z);

  const Eigen::MatrixXd identity = Eigen::MatrixXd::Identity(q, q);
  double lambda = shrinkage;
  for (;;) {
    const Eigen::MatrixXd shrunk = (1.0 - lambda) * p.correlation + lambda * identity;
    Eigen::LLT<Eigen::MatrixXd> llt(shrunk);
    if (llt.info() == Eigen::Success && llt.matrixL().toDenseMatrix().allFinite()) {
      p.cholesky = llt.matrixL();
      p.shrinkage = lambda;
      return p;
    }
    if (lambda >= 1.0) throw std::runtime_error("copula: correlation matrix cannot be factorised");
    lambda = lambda == 0 ? 1e-6 : std::min(1.0, lambda * 10.0);
  }
}

void finish_rows(const Schema& schema, std::vector<double>& cells, std::size_t rows, std::size_t first_rank) {
  const std::size_t width = schema.size();
  for (std::size_t i = 0; i < rows; ++i) {
    cells[i * width + schema.arm_index()] = 0.0;
    cells[i * width + schema.order_index()] = static_cast<double>(first_rank + i);
  }
}

std::atomic<std::uint64_t> model_counter{0};

std::string hex(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

void run_protocol(const std::filesystem::path& exe, const std::vector<std::string>& args, const char* step) {
  const ProcessResult r = run_process(exe, args);
  if (r.exit_code != 0) {
    throw ProtocolError("external generator " + exe.filename().string() + " " + step + " exited with code " +
                            std::to_string(r.exit_code) + (r.stderr_text.empty() ? "" : ": " + r.stderr_text),
                        r.stderr_text);
  }
}

SyntheticBatch read_external_batch(const std::filesystem::path& out_csv, const Schema& schema, std::size_t s,
                                   std::size_t first_rank) {
  TrialDataset parsed;
  try {
    parsed = load_csv(out_csv, schema, CsvOptions{.allow_empty = true});
  } catch (const ValidationError& e) {
    throw ProtocolError(std::string("external generator output invalid: ") + e.what());
  }
  if (parsed.size() != s) {
    throw ProtocolError("external generator output: row count mismatch (expected " + std::to_string(s) + ", got " +
                        std::to_string(parsed.size()) + ")");
  }
  for (std::size_t c = 0; c < schema.size(); ++c) {
    if (parsed.missing_count(c) > 0) {
      throw ProtocolError("external generator output: column '" + schema.column(c).name + "' has missing cells");
    }
  }
  SyntheticBatch batch{schema, std::vector<double>(parsed.cells().begin(), parsed.cells().end()), s};
  finish_rows(schema, batch.cells, s, first_rank);
  return batch;
}

}  // namespace

GeneratorModel fit(const GeneratorConfig& config, const TrialDataset& train, std::uint64_t seed) {
  std::size_t first_rank = 0;
  const std::size_t order_col = train.schema().order_index();
  for (std::size_t i = 0; i < train.size(); ++i) {
    first_rank = std::max(first_rank, static_cast<std::size_t>(std::max(0.0, train.cell(i, order_col))) + 1);
  }
  return fit(config, train, seed, first_rank);
}

GeneratorModel fit(const GeneratorConfig& config, const TrialDataset& train, std::uint64_t seed,
                   std::size_t first_rank) {
  train.require_analysable();
  GeneratorModel model;
  model.kind = config.kind;
  model.schema = train.schema();
  model.hyperparams = config.params.is_null() ? HyperParams::object() : config.params;
  model.prior = "none";
  model.first_rank = first_rank;
  const std::size_t n = train.size();

  switch (config.kind) {
    case GeneratorKind::bootstrap: {
      check_keys(model.hyperparams, config.kind, {});
      if (n < 1) throw ValidationError("bootstrap generator needs at least 1 training record");
      model.params = BootstrapParams{std::vector<double>(train.cells().begin(), train.cells().end()), n};
      break;
    }
    case GeneratorKind::marginals: {
      check_keys(model.hyperparams, config.kind, {"alpha"});
      if (n < 2) throw ValidationError("marginals generator needs at least 2 training records");
      const double alpha = hyper_double(model.hyperparams, "alpha", 0.0);
      MarginalParams p;
      for (std::size_t col : generated_columns(train.schema())) p.columns.push_back(fit_marginal(train, col, alpha));
      model.params = std::move(p);
      break;
    }
    case GeneratorKind::copula: {
      check_keys(model.hyperparams, config.kind, {"shrinkage"});
      if (n < 2) throw ValidationError("copula generator needs at least 2 training records");
      const double shrinkage = hyper_double(model.hyperparams, "shrinkage", 1e-6);
      if (shrinkage > 1) throw ValidationError("hyperparameter 'shrinkage' must be <= 1");
      auto p = fit_copula(train, shrinkage);
      model.latent_dim = p.columns.size();
      model.prior = "standard normal";
      model.params = std::move(p);
      break;
    }
    case GeneratorKind::external: {
      if (config.executable.empty()) throw ValidationError("external generator: no executable configured");
      if (n < 1) throw ValidationError("external generator needs at least 1 training record");
      const auto dir = (config.work_dir.empty() ? std::filesystem::temp_directory_path() : config.work_dir) /
                       ("model-" + hex(seed) + "-" + std::to_string(model_counter.fetch_add(1)));
      std::filesystem::create_directories(dir);
      const auto train_csv = dir / "train.csv";
      const auto schema_json = dir / "schema.json";
      write_csv(train_csv, train.view());
      save_schema(schema_json, train.schema());
      {
        std::ofstream hp(dir / "hyperparams.json");
        hp << model.hyperparams.dump(2) << '\n';
      }
      run_protocol(config.executable,
                   {"fit", "--train", train_csv.string(), "--schema", schema_json.string(), "--model-dir",
                    dir.string(), "--seed", std::to_string(seed)},
                   "fit");
      model.params = ExternalParams{config.executable, dir};
      break;
    }
  }
  return model;
}

SyntheticBatch sample(const GeneratorModel& model, std::size_t s, std::uint64_t seed) {
  const Schema& schema = model.schema;
  const std::size_t width = schema.size();
  SyntheticBatch batch{schema, {}, s};
  if (s == 0) return batch;

  Engine rng = make_engine(seed);
  std::visit(
      [&](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, ExternalParams>) {
          const auto out = p.model_dir / ("sample-" + hex(seed) + ".csv");
          run_protocol(p.executable,
                       {"sample", "--model-dir", p.model_dir.string(), "--n", std::to_string(s), "--seed",
                        std::to_string(seed), "--out", out.string()},
                       "sample");
          batch = read_external_batch(out, schema, s, model.first_rank);
          std::error_code ec;
          std::filesystem::remove(out, ec);
          return;
        } else {
          batch.cells.assign(s * width, 0.0);
          if constexpr (std::is_same_v<T, BootstrapParams>) {
            std::uniform_int_distribution<std::size_t> pick(0, p.rows - 1);
            for (std::size_t i = 0; i < s; ++i) {
              const std::size_t r = pick(rng);
              std::copy_n(p.cells.begin() + static_cast<std::ptrdiff_t>(r * width), width,
                          batch.cells.begin() + static_cast<std::ptrdiff_t>(i * width));
            }
          } else if constexpr (std::is_same_v<T, MarginalParams>) {
            std::uniform_real_distribution<double> unit(0.0, 1.0);
            for (std::size_t i = 0; i < s; ++i) {
              for (const ColumnMarginal& m : p.columns) batch.cells[i * width + m.column] = invert_marginal(m, unit(rng));
            }
          } else if constexpr (std::is_same_v<T, CopulaParams>) {
            std::normal_distribution<double> normal(0.0, 1.0);
            const std::size_t q = p.columns.size();
            std::vector<double> z(q);
            for (std::size_t i = 0; i < s; ++i) {
              for (auto& v : z) v = normal(rng);
              for (std::size_t a = 0; a < q; ++a) {
                double x = 0;
                for (std::size_t b = 0; b <= a; ++b) {
                  x += p.cholesky(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) * z[b];
                }
                const ColumnMarginal& m = p.columns[a];
                batch.cells[i * width + m.column] = invert_marginal(m, normal_cdf(x));
              }
            }
          }
          finish_rows(schema, batch.cells, s, model.first_rank);
        }
      },
      model.params);
  return batch;
}

std::vector<int> sample_outcomes(const GeneratorModel& model, std::size_t s, std::uint64_t seed) {
  return sample(model, s, seed).outcomes();
}

SyntheticBatch external_fit_sample(const std::filesystem::path& executable, const std::filesystem::path& train_csv,
                                   const std::filesystem::path& schema_json, std::size_t s, std::uint64_t seed,
                                   const std::filesystem::path& model_dir) {
  const Schema schema = load_schema(schema_json);
  const TrialDataset train = load_csv(train_csv, schema);
  std::size_t first_rank = train.size();
  std::filesystem::create_directories(model_dir);
  run_protocol(executable,
               {"fit", "--train", train_csv.string(), "--schema", schema_json.string(), "--model-dir",
                model_dir.string(), "--seed", std::to_string(seed)},
               "fit");
  const auto out = model_dir / ("sample-" + hex(seed) + ".csv");
  run_protocol(executable,
               {"sample", "--model-dir", model_dir.string(), "--n", std::to_string(s), "--seed", std::to_string(seed),
                "--out", out.string()},
               "sample");
  return read_external_batch(out, schema, s, first_rank);
}

}  // namespace vcat
