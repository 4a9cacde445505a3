#pragma once

#include <Eigen/Dense>

namespace vcat {

struct LinearFit {
  Eigen::VectorXd coefficients;
  double residual_sd = 0;
  bool full_rank = false;
};

/// Ordinary least squares through column-pivoted QR.
LinearFit fit_linear(const Eigen::MatrixXd& x, const Eigen::VectorXd& y);

struct LogisticFit {
  Eigen::VectorXd coefficients;
  int iterations = 0;
  bool converged = false;
};

struct IrlsOptions {
  int max_iterations = 25;
  double tolerance = 1e-8;  // max absolute coefficient change
};

/// Logistic regression by iteratively reweighted least squares. Returns
/// converged = false on separation, a singular weighted design, or when the
/// iteration budget runs out; the caller decides the fallback.
LogisticFit fit_logistic(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const IrlsOptions& options = {});

inline double logistic(double eta) { return 1.0 / (1.0 + std::exp(-eta)); }

}  // namespace vcat
