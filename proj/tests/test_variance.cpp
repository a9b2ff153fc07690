#include <doctest.h>

#include <cmath>

#include "reppi/linalg.hpp"
#include "reppi/rng.hpp"
#include "reppi/variance.hpp"

using namespace reppi;

TEST_CASE("normal quantile accuracy") {
  CHECK(std::abs(normal_quantile(0.95) - 1.6448536269514722) <= 1e-8);
  CHECK(std::abs(normal_quantile(0.975) - 1.9599639845400545) <= 1e-8);
  CHECK(std::abs(normal_quantile(0.5)) <= 1e-12);
  CHECK(std::abs(normal_quantile(0.005) + normal_quantile(0.995)) <= 1e-9);
  CHECK(std::abs(normal_quantile(1e-6) + 4.753424308822899) <= 1e-7);
  CHECK_THROWS_AS(normal_quantile(0.0), ConfigError);
  CHECK_THROWS_AS(normal_quantile(1.0), ConfigError);
}

TEST_CASE("confidence interval halfwidths") {
  VectorXd theta = VectorXd::Zero(1);
  MatrixXd sigma = MatrixXd::Identity(1, 1);

  Interval ci = confidence_interval(theta, sigma, 100, 0.90);
  CHECK(std::abs((ci.upper[0] - ci.lower[0]) / 2.0 - 0.16448536269514722) <= 1e-8);

  sigma(0, 0) = 4.0;
  ci = confidence_interval(theta, sigma, 400, 0.95);
  CHECK(std::abs((ci.upper[0] - ci.lower[0]) / 2.0 - 0.19599639845400545) <= 1e-8);

  sigma(0, 0) = 0.0;
  theta[0] = 1.5;
  ci = confidence_interval(theta, sigma, 10, 0.90);
  CHECK(ci.lower[0] == doctest::Approx(1.5));
  CHECK(ci.upper[0] == doctest::Approx(1.5));
}

TEST_CASE("xy-only sandwich with identity hessian is the gradient covariance") {
  // Mean estimation: H = 1, gradient covariance = sample variance of y.
  MatrixXd h = MatrixXd::Identity(1, 1);
  MatrixXd cov(1, 1);
  cov << 1.0;  // sample variance of {1, 2, 3}
  CHECK(sandwich_xy_only(h, cov)(0, 0) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("well-specified OLS sandwich approaches the noise variance") {
  Rng rng(2024);
  const int n = 20000;
  const double noise_var = 0.5;
  MatrixXd x(n, 1);
  MatrixXd grads(n, 1);
  // y = x + eps; at theta = 1 the gradient is x * (x - y) = -x * eps.
  for (int i = 0; i < n; ++i) {
    const double xi = rng.normal();
    const double eps = std::sqrt(noise_var) * rng.normal();
    x(i, 0) = xi;
    grads(i, 0) = -xi * eps;
  }
  const MatrixXd h = x.transpose() * x / n;
  const MatrixXd sigma = sandwich_xy_only(h, sample_covariance(grads));
  CHECK(sigma(0, 0) == doctest::Approx(noise_var).epsilon(0.05));
}

TEST_CASE("ppi variance with zero imputed gradient reduces to the xy sandwich") {
  Rng rng(3);
  const int d = 2;
  MatrixXd grads(50, d);
  for (int i = 0; i < 50; ++i) grads.row(i) = rng.normal_vector(d).transpose();

  SandwichInputs inputs;
  inputs.hessian_hat = MatrixXd::Identity(d, d) * 1.7;
  inputs.grad_cov = sample_covariance(grads);
  inputs.cross_cov = MatrixXd::Zero(d, d);
  inputs.score_cov = MatrixXd::Zero(d, d);
  inputs.score_cov_pooled = MatrixXd::Zero(d, d);
  inputs.r_hat = 0.25;

  const MatrixXd lhs = ppi_variance(inputs);
  const MatrixXd rhs = sandwich_xy_only(inputs.hessian_hat, inputs.grad_cov);
  CHECK((lhs - rhs).norm() <= 1e-12);
}

TEST_CASE("ppi variance with perfect imputation keeps only the r term") {
  Rng rng(4);
  const int d = 2;
  MatrixXd grads(60, d);
  for (int i = 0; i < 60; ++i) grads.row(i) = rng.normal_vector(d).transpose();
  MatrixXd pooled(90, d);
  pooled.topRows(60) = grads;
  for (int i = 60; i < 90; ++i) pooled.row(i) = rng.normal_vector(d).transpose();

  SandwichInputs inputs;
  inputs.hessian_hat = MatrixXd::Identity(d, d);
  inputs.grad_cov = sample_covariance(grads);
  inputs.cross_cov = inputs.grad_cov;   // grad g = grad l on labeled rows
  inputs.score_cov = inputs.grad_cov;
  inputs.score_cov_pooled = sample_covariance(pooled);
  inputs.r_hat = 1.0 / 9.0;

  const MatrixXd sigma = ppi_variance(inputs);
  const MatrixXd expected =
      project_psd(inputs.r_hat * inputs.score_cov_pooled).matrix;
  CHECK((sigma - expected).norm() <= 1e-12);
}

TEST_CASE("reppi variance drops the correction for uncorrelated scores") {
  Rng rng(5);
  const int d = 2;
  MatrixXd grads(80, d);
  for (int i = 0; i < 80; ++i) grads.row(i) = rng.normal_vector(d).transpose();

  SandwichInputs rot;
  rot.hessian_hat = MatrixXd::Identity(d, d) * 2.0;
  rot.grad_cov = sample_covariance(grads);
  rot.cross_cov = MatrixXd::Zero(d, d);
  rot.score_cov = MatrixXd::Identity(d, d);

  VectorXd weights = VectorXd::Ones(1);
  const ReppiVarianceResult out = reppi_variance({rot}, weights, 0.5);
  const MatrixXd expected = sandwich_xy_only(rot.hessian_hat, rot.grad_cov);
  CHECK((out.sigma - expected).norm() <= 1e-12);
  CHECK(out.delta_dropped == 0);
}

TEST_CASE("reppi variance with perfect scores leaves the minimal fraction") {
  Rng rng(6);
  const int d = 3;
  MatrixXd grads(100, d);
  for (int i = 0; i < 100; ++i) grads.row(i) = rng.normal_vector(d).transpose();
  const MatrixXd cov = sample_covariance(grads);

  SandwichInputs rot;
  rot.hessian_hat = MatrixXd::Identity(d, d);
  rot.grad_cov = cov;
  rot.cross_cov = cov;  // s = grad l
  rot.score_cov = cov;

  const double r_hat = 1.0 / 9.0;
  VectorXd weights = VectorXd::Ones(1);
  const ReppiVarianceResult out = reppi_variance({rot}, weights, r_hat);
  const MatrixXd expected = project_psd(r_hat / (1.0 + r_hat) * cov).matrix;
  CHECK((out.sigma - expected).norm() <= 1e-10);
}

TEST_CASE("reppi variance flags unusable score covariance") {
  SandwichInputs rot;
  rot.hessian_hat = MatrixXd::Identity(2, 2);
  rot.grad_cov = MatrixXd::Identity(2, 2);
  rot.cross_cov = MatrixXd::Ones(2, 2);
  rot.score_cov = MatrixXd::Zero(2, 2);  // constant scores

  VectorXd weights = VectorXd::Ones(1);
  const ReppiVarianceResult out = reppi_variance({rot}, weights, 0.1);
  CHECK(out.delta_dropped == 1);
  CHECK((out.sigma - MatrixXd::Identity(2, 2)).norm() <= 1e-12);
}

TEST_CASE("reppi variance projects indefinite plug-ins to psd") {
  SandwichInputs rot;
  rot.hessian_hat = MatrixXd::Identity(1, 1);
  rot.grad_cov = MatrixXd::Identity(1, 1);
  rot.cross_cov = MatrixXd::Ones(1, 1) * 2.0;  // overstated correlation
  rot.score_cov = MatrixXd::Identity(1, 1);

  VectorXd weights = VectorXd::Ones(1);
  const ReppiVarianceResult out = reppi_variance({rot}, weights, 0.1);
  CHECK(out.psd_projected);
  CHECK(out.sigma(0, 0) == doctest::Approx(0.0));
}

TEST_CASE("reppi variance validates weights") {
  SandwichInputs rot;
  rot.hessian_hat = MatrixXd::Identity(1, 1);
  rot.grad_cov = MatrixXd::Identity(1, 1);
  rot.cross_cov = MatrixXd::Zero(1, 1);
  rot.score_cov = MatrixXd::Identity(1, 1);
  VectorXd bad = VectorXd::Constant(1, 0.5);
  CHECK_THROWS_AS(reppi_variance({rot}, bad, 0.1), DataError);
}

TEST_CASE("gaussian quadratic trace closed forms") {
  const int d = 4;
  VectorXd e1 = VectorXd::Zero(d);
  e1[0] = 1.0;
  CHECK(gaussian_quadratic_trace(MatrixXd::Identity(d, d), e1) ==
        doctest::Approx(1.0 + d).epsilon(1e-12));

  CHECK(gaussian_quadratic_trace(MatrixXd::Identity(d, d), VectorXd::Zero(d)) ==
        doctest::Approx(0.0));

  MatrixXd diag = MatrixXd::Zero(2, 2);
  diag(0, 0) = 1.0;
  diag(1, 1) = 4.0;
  CHECK(gaussian_quadratic_trace(diag, VectorXd::Ones(2)) ==
        doctest::Approx(8.25).epsilon(1e-12));

  MatrixXd not_pd = MatrixXd::Zero(2, 2);
  not_pd(0, 0) = 1.0;
  not_pd(1, 1) = -1.0;
  CHECK_THROWS_AS(gaussian_quadratic_trace(not_pd, VectorXd::Ones(2)),
                  NumericalError);
}

TEST_CASE("gaussian quadratic trace matches Monte Carlo") {
  Rng rng(777);
  const int d = 3;
  MatrixXd a(d, d);
  for (int i = 0; i < d; ++i) a.row(i) = rng.normal_vector(d).transpose();
  const MatrixXd sigma_x =
      a * a.transpose() / d + 0.5 * MatrixXd::Identity(d, d);
  const VectorXd theta = rng.normal_vector(d);

  const Eigen::LLT<MatrixXd> chol(sigma_x);
  const MatrixXd l = chol.matrixL();
  const int m = 200000;
  MatrixXd rows(m, d);
  for (int i = 0; i < m; ++i) {
    const VectorXd x = l * rng.normal_vector(d);
    rows.row(i) = (x * (x.dot(theta))).transpose();
  }
  const MatrixXd inv = invert_sym_jittered(sigma_x);
  const double mc = (inv * sample_covariance(rows) * inv).trace();
  const double closed = gaussian_quadratic_trace(sigma_x, theta);
  CHECK(std::abs(mc - closed) <= 0.03 * closed);
}
