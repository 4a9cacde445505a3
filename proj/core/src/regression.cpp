#include "vcat/regression.hpp"

#include <cmath>

namespace vcat {

LinearFit fit_linear(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
  LinearFit fit;
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
  fit.full_rank = qr.rank() == x.cols();
  if (!fit.full_rank) return fit;
  fit.coefficients = qr.solve(y);
  const double rss = (y - x * fit.coefficients).squaredNorm();
  const double dof = std::max<double>(1.0, static_cast<double>(x.rows() - x.cols()));
  fit.residual_sd = std::sqrt(rss / dof);
  return fit;
}

LogisticFit fit_logistic(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const IrlsOptions& options) {
  LogisticFit fit;
  const Eigen::Index p = x.cols();
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
  for (int it = 1; it <= options.max_iterations; ++it) {
    const Eigen::VectorXd eta = x * beta;
    Eigen::VectorXd mu(eta.size()), w(eta.size()), z(eta.size());
    for (Eigen::Index i = 0; i < eta.size(); ++i) {
      mu[i] = logistic(eta[i]);
      w[i] = std::max(mu[i] * (1.0 - mu[i]), 1e-12);
      z[i] = eta[i] + (y[i] - mu[i]) / w[i];
    }
    const Eigen::MatrixXd xtwx = x.transpose() * w.asDiagonal() * x;
    const Eigen::VectorXd xtwz = x.transpose() * (w.array() * z.array()).matrix();
    Eigen::LDLT<Eigen::MatrixXd> ldlt(xtwx);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive() ||
        ldlt.vectorD().minCoeff() <= 1e-12 * std::max(1.0, ldlt.vectorD().maxCoeff())) {
      fit.iterations = it;
      return fit;
    }
    const Eigen::VectorXd next = ldlt.solve(xtwz);
    if (!next.allFinite()) {
      fit.iterations = it;
      return fit;
    }
    const double change = (next - beta).cwiseAbs().maxCoeff();
    beta = next;
    fit.iterations = it;
    if (change < options.tolerance) {
      fit.converged = true;
      break;
    }
  }
  fit.coefficients = beta;
  return fit;
}

}  // namespace vcat
