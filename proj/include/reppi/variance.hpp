#pragma once

#include <vector>

#include "reppi/common.hpp"

namespace reppi {

// Standard normal quantile. Acklam-style rational approximation, absolute
// error below 1e-8; keeps interval construction bit-stable across platforms.
double normal_quantile(double p);

// Plug-in moment matrices for the sandwich estimators. Which fields are used
// depends on the estimator:
//   sandwich_xy_only   hessian_hat, grad_cov
//   ppi_variance       hessian_hat, grad_cov, cross_cov, score_cov (labeled
//                      imputed-gradient covariance), score_cov_pooled, r_hat
//   reppi_variance     hessian_hat, grad_cov, cross_cov = Cov(grad l, s),
//                      score_cov = Cov(s), one entry per fold rotation
struct SandwichInputs {
  MatrixXd hessian_hat;
  MatrixXd grad_cov;
  MatrixXd cross_cov;
  MatrixXd score_cov;
  MatrixXd score_cov_pooled;
  double r_hat = 1.0;
};

// H^-1 Cov(grad l) H^-1, symmetrized and floored at PSD.
MatrixXd sandwich_xy_only(const MatrixXd& hessian_hat, const MatrixXd& grad_cov);
MatrixXd sandwich_xy_only(const SandwichInputs& inputs);

// H^-1 [ r Cov(grad g)_pooled + Cov(grad l - grad g)_labeled ] H^-1.
// The residual covariance expands over labeled-row moments:
// grad_cov - cross_cov - cross_cov' + score_cov.
MatrixXd ppi_variance(const SandwichInputs& inputs);

struct ReppiVarianceResult {
  MatrixXd sigma;
  bool psd_projected = false;
  int delta_dropped = 0;  // rotations whose score covariance was unusable
};

// Weighted average over fold rotations of
//   H^-1 [ Cov(grad l) - (1+r)^-1 C_{l,s} C_s^-1 C_{s,l} ] H^-1,
// symmetrized, with negative eigenvalues projected to zero.
ReppiVarianceResult reppi_variance(const std::vector<SandwichInputs>& rotations,
                                   const VectorXd& weights, double r_hat);

struct Interval {
  VectorXd lower;
  VectorXd upper;
};

// Per-coordinate theta_j +/- z_{(1+level)/2} sqrt(sigma_jj / n).
Interval confidence_interval(const VectorXd& theta, const MatrixXd& sigma,
                             int n, double level);

// Tr(S^-1 Cov(X X' theta) S^-1) for X ~ N(0, S):
// |theta|^2 + Tr(S^-1) theta' S theta. Requires S positive definite.
double gaussian_quadratic_trace(const MatrixXd& sigma_x, const VectorXd& theta);

}  // namespace reppi
