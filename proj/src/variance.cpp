#include "reppi/variance.hpp"

#include <cmath>

#include "reppi/linalg.hpp"

namespace reppi {

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    throw ConfigError("normal_quantile: p must lie in (0, 1)");
  }
  // Acklam's rational approximation (relative error < 1.15e-9).
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                             2.445134137142996e+00, 3.754408661907416e+00};
  const double p_low = 0.02425;

  if (p < p_low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  if (p <= 1.0 - p_low) {
    const double q = p - 0.5;
    const double r = q * q;
    return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) *
           q /
           (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  }
  const double q = std::sqrt(-2.0 * std::log(1.0 - p));
  return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
         ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
}

MatrixXd sandwich_xy_only(const MatrixXd& hessian_hat,
                          const MatrixXd& grad_cov) {
  const MatrixXd hinv = invert_sym_jittered(hessian_hat);
  return project_psd(hinv * grad_cov * hinv).matrix;
}

MatrixXd sandwich_xy_only(const SandwichInputs& inputs) {
  return sandwich_xy_only(inputs.hessian_hat, inputs.grad_cov);
}

MatrixXd ppi_variance(const SandwichInputs& inputs) {
  const MatrixXd resid_cov = inputs.grad_cov - inputs.cross_cov -
                             inputs.cross_cov.transpose() + inputs.score_cov;
  const MatrixXd middle =
      inputs.r_hat * inputs.score_cov_pooled + resid_cov;
  const MatrixXd hinv = invert_sym_jittered(inputs.hessian_hat);
  return project_psd(hinv * middle * hinv).matrix;
}

ReppiVarianceResult reppi_variance(const std::vector<SandwichInputs>& rotations,
                                   const VectorXd& weights, double r_hat) {
  if (rotations.empty()) throw DataError("reppi_variance: no rotations");
  if (weights.size() != static_cast<Eigen::Index>(rotations.size())) {
    throw DataError("reppi_variance: weight count disagrees");
  }
  if (std::abs(weights.sum() - 1.0) > 1e-8) {
    throw DataError("reppi_variance: weights must sum to 1");
  }
  if (r_hat <= 0.0) throw DataError("reppi_variance: r_hat must be positive");

  const auto d = rotations.front().hessian_hat.rows();
  ReppiVarianceResult out;
  MatrixXd total = MatrixXd::Zero(d, d);
  for (std::size_t k = 0; k < rotations.size(); ++k) {
    const auto& rot = rotations[k];
    MatrixXd middle = rot.grad_cov;
    if (sym_singular_after_jitter(rot.score_cov)) {
      // No usable score signal; fall back to the XY-only sandwich.
      ++out.delta_dropped;
    } else {
      const MatrixXd ratio = solve_sym_jittered(rot.score_cov,
                                                rot.cross_cov.transpose());
      middle -= (rot.cross_cov * ratio) / (1.0 + r_hat);
    }
    const MatrixXd hinv = invert_sym_jittered(rot.hessian_hat);
    total += weights[static_cast<Eigen::Index>(k)] * (hinv * middle * hinv);
  }
  PsdProjection proj = project_psd(total);
  out.sigma = proj.matrix;
  out.psd_projected = proj.clipped;
  return out;
}

Interval confidence_interval(const VectorXd& theta, const MatrixXd& sigma,
                             int n, double level) {
  if (!(level > 0.0 && level < 1.0)) {
    throw ConfigError("confidence level must lie in (0, 1)");
  }
  if (n < 1) throw DataError("confidence_interval: n must be positive");
  if (sigma.rows() != theta.size() || sigma.cols() != theta.size()) {
    throw DataError("confidence_interval: sigma dimension disagrees");
  }
  const double z = normal_quantile(0.5 * (1.0 + level));
  Interval ci;
  ci.lower = theta;
  ci.upper = theta;
  for (Eigen::Index j = 0; j < theta.size(); ++j) {
    const double var = sigma(j, j);
    if (var < 0.0) {
      throw NumericalError("confidence_interval: negative variance diagonal");
    }
    const double halfwidth = z * std::sqrt(var / n);
    ci.lower[j] -= halfwidth;
    ci.upper[j] += halfwidth;
  }
  return ci;
}

double gaussian_quadratic_trace(const MatrixXd& sigma_x,
                                const VectorXd& theta) {
  if (sigma_x.rows() != sigma_x.cols() || sigma_x.rows() != theta.size()) {
    throw DataError("gaussian_quadratic_trace: dimension mismatch");
  }
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(symmetrized(sigma_x));
  if (es.info() != Eigen::Success || es.eigenvalues().minCoeff() <= 0.0) {
    throw NumericalError("gaussian_quadratic_trace: sigma_x must be positive definite");
  }
  const double trace_inv = es.eigenvalues().cwiseInverse().sum();
  return theta.squaredNorm() + trace_inv * theta.dot(sigma_x * theta);
}

}  // namespace reppi
