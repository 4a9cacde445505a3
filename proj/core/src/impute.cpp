#include "vcat/impute.hpp"

#include <algorithm>
#include <numeric>

#include "vcat/error.hpp"
#include "vcat/regression.hpp"
#include "vcat/seed.hpp"

namespace vcat {

namespace {

bool modelled(ColumnKind kind) {
  return kind == ColumnKind::numeric || kind == ColumnKind::categorical || kind == ColumnKind::outcome;
}

bool predictor(ColumnKind kind) { return modelled(kind) || kind == ColumnKind::arm; }

class ChainedImputer {
 public:
  ChainedImputer(const TrialDataset& ds, const ImputeOptions& options)
      : schema_(ds.schema()),
        rows_(ds.size()),
        cells_(ds.cells().begin(), ds.cells().end()),
        rng_(make_engine(options.seed)),
        iterations_(options.iterations) {
    for (std::size_t c = 0; c < schema_.size(); ++c) {
      if (!modelled(schema_.column(c).kind)) continue;
      const std::size_t missing = ds.missing_count(c);
      if (missing == rows_ && rows_ > 0) {
        throw ValidationError("impute_chained: column '" + schema_.column(c).name + "' is entirely missing");
      }
      if (missing > 0) targets_.push_back(c);
    }
    std::stable_sort(targets_.begin(), targets_.end(), [&](std::size_t a, std::size_t b) {
      return ds.missing_count(a) < ds.missing_count(b);
    });
    missing_rows_.resize(schema_.size());
    observed_rows_.resize(schema_.size());
    for (std::size_t c : targets_) {
      for (std::size_t i = 0; i < rows_; ++i) {
        (is_missing(at(i, c)) ? missing_rows_[c] : observed_rows_[c]).push_back(i);
      }
    }
  }

  bool needed() const { return !targets_.empty(); }

  ImputeResult run() {
    for (std::size_t c : targets_) draw_marginal(c);
    for (int it = 1; it <= iterations_; ++it) {
      for (std::size_t c : targets_) visit(c, it);
    }
    return {TrialDataset(schema_, std::move(cells_)), std::move(warnings_)};
  }

 private:
  double& at(std::size_t i, std::size_t c) { return cells_[i * schema_.size() + c]; }

  void draw_marginal(std::size_t c) {
    const auto& observed = observed_rows_[c];
    std::uniform_int_distribution<std::size_t> pick(0, observed.size() - 1);
    for (std::size_t i : missing_rows_[c]) at(i, c) = at(observed[pick(rng_)], c);
  }

  void fallback(std::size_t c, int iteration, const char* why) {
    warnings_.push_back("impute_chained: column '" + schema_.column(c).name + "', sweep " +
                        std::to_string(iteration) + ": " + why + "; sampled from observed marginal");
    draw_marginal(c);
  }

  // Design matrix over the given rows: intercept, standardised numeric
  // predictors, 0/1 indicators for binary columns and treatment-coded dummies
  // for categorical ones. Columns constant on `fit_rows` are dropped.
  std::pair<Eigen::MatrixXd, Eigen::MatrixXd> design(std::size_t target) {
    const auto& fit_rows = observed_rows_[target];
    const auto& new_rows = missing_rows_[target];
    std::vector<std::vector<double>> fit_cols, new_cols;
    auto add = [&](auto&& value) {
      std::vector<double> f(fit_rows.size()), n(new_rows.size());
      for (std::size_t r = 0; r < fit_rows.size(); ++r) f[r] = value(fit_rows[r]);
      for (std::size_t r = 0; r < new_rows.size(); ++r) n[r] = value(new_rows[r]);
      const auto [lo, hi] = std::minmax_element(f.begin(), f.end());
      if (f.empty() || *lo == *hi) return;
      fit_cols.push_back(std::move(f));
      new_cols.push_back(std::move(n));
    };
    for (std::size_t c = 0; c < schema_.size(); ++c) {
      if (c == target || !predictor(schema_.column(c).kind)) continue;
      const ColumnKind kind = schema_.column(c).kind;
      if (kind == ColumnKind::numeric) {
        double mean = 0, sq = 0;
        for (std::size_t i : fit_rows) mean += at(i, c);
        mean /= static_cast<double>(fit_rows.size());
        for (std::size_t i : fit_rows) sq += (at(i, c) - mean) * (at(i, c) - mean);
        const double sd = std::sqrt(sq / static_cast<double>(fit_rows.size()));
        const double scale = sd > 0 ? sd : 1.0;
        add([&, c, mean, scale](std::size_t i) { return (at(i, c) - mean) / scale; });
      } else {
        const std::size_t k = schema_.category_count(c);
        for (std::size_t level = 1; level < k; ++level) {
          add([&, c, level](std::size_t i) { return at(i, c) == static_cast<double>(level) ? 1.0 : 0.0; });
        }
      }
    }
    const Eigen::Index p = static_cast<Eigen::Index>(fit_cols.size()) + 1;
    Eigen::MatrixXd xf(static_cast<Eigen::Index>(fit_rows.size()), p);
    Eigen::MatrixXd xn(static_cast<Eigen::Index>(new_rows.size()), p);
    xf.col(0).setOnes();
    xn.col(0).setOnes();
    for (std::size_t j = 0; j < fit_cols.size(); ++j) {
      const auto col = static_cast<Eigen::Index>(j) + 1;
      xf.col(col) = Eigen::Map<const Eigen::VectorXd>(fit_cols[j].data(), static_cast<Eigen::Index>(fit_cols[j].size()));
      xn.col(col) = Eigen::Map<const Eigen::VectorXd>(new_cols[j].data(), static_cast<Eigen::Index>(new_cols[j].size()));
    }
    return {std::move(xf), std::move(xn)};
  }

  void visit(std::size_t c, int iteration) {
    const auto& fit_rows = observed_rows_[c];
    const auto& new_rows = missing_rows_[c];
    auto [xf, xn] = design(c);

    Eigen::VectorXd y(static_cast<Eigen::Index>(fit_rows.size()));
    for (std::size_t r = 0; r < fit_rows.size(); ++r) y[static_cast<Eigen::Index>(r)] = at(fit_rows[r], c);

    if (schema_.column(c).kind == ColumnKind::numeric) {
      if (xf.rows() <= xf.cols()) return fallback(c, iteration, "too few observed rows");
      const LinearFit fit = fit_linear(xf, y);
      if (!fit.full_rank) return fallback(c, iteration, "singular design matrix");
      std::normal_distribution<double> noise(0.0, 1.0);
      const Eigen::VectorXd pred = xn * fit.coefficients;
      for (std::size_t r = 0; r < new_rows.size(); ++r) {
        at(new_rows[r], c) = pred[static_cast<Eigen::Index>(r)] + fit.residual_sd * noise(rng_);
      }
      return;
    }

    const std::size_t k = schema_.category_count(c);
    std::vector<std::size_t> present;
    for (std::size_t level = 0; level < k; ++level) {
      if ((y.array() == static_cast<double>(level)).any()) present.push_back(level);
    }
    if (present.size() == 1) {
      for (std::size_t i : new_rows) at(i, c) = static_cast<double>(present[0]);
      return;
    }

    // Probability of each present level for every row to impute.
    Eigen::MatrixXd prob(xn.rows(), static_cast<Eigen::Index>(present.size()));
    const bool binary = present.size() == 2;
    const std::size_t fits = binary ? 1 : present.size();
    for (std::size_t j = 0; j < fits; ++j) {
      const std::size_t level = binary ? present[1] : present[j];
      const Eigen::VectorXd indicator = (y.array() == static_cast<double>(level)).cast<double>();
      const LogisticFit fit = fit_logistic(xf, indicator);
      if (!fit.converged) return fallback(c, iteration, "logistic fit did not converge");
      const Eigen::VectorXd eta = xn * fit.coefficients;
      for (Eigen::Index r = 0; r < eta.size(); ++r) {
        if (binary) {
          prob(r, 1) = logistic(eta[r]);
          prob(r, 0) = 1.0 - prob(r, 1);
        } else {
          prob(r, static_cast<Eigen::Index>(j)) = logistic(eta[r]);
        }
      }
    }
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (std::size_t r = 0; r < new_rows.size(); ++r) {
      const auto row = static_cast<Eigen::Index>(r);
      const double total = prob.row(row).sum();
      double u = unit(rng_) * total;
      std::size_t choice = present.back();
      for (std::size_t j = 0; j < present.size(); ++j) {
        u -= prob(row, static_cast<Eigen::Index>(j));
        if (u < 0) {
          choice = present[j];
          break;
        }
      }
      at(new_rows[r], c) = static_cast<double>(choice);
    }
  }

  const Schema& schema_;
  std::size_t rows_;
  std::vector<double> cells_;
  Engine rng_;
  int iterations_;
  std::vector<std::size_t> targets_;
  std::vector<std::vector<std::size_t>> missing_rows_;
  std::vector<std::vector<std::size_t>> observed_rows_;
  std::vector<std::string> warnings_;
};

}  // namespace

ImputeResult impute_chained(const TrialDataset& ds, const ImputeOptions& options) {
  if (options.iterations < 1) throw ValidationError("impute_chained: iterations must be >= 1");
  ChainedImputer imputer(ds, options);
  if (!imputer.needed()) return {ds, {}};
  return imputer.run();
}

}  // namespace vcat
