#include <doctest.h>

#include <cmath>

#include "reppi/recalibrate.hpp"
#include "reppi/rng.hpp"
#include "reppi/simulation.hpp"

using namespace reppi;

TEST_CASE("linear recalibrator interpolates affine targets") {
  Rng rng(11);
  const int m = 40, p = 3, d_out = 2;
  MatrixXd features(m, p);
  for (int i = 0; i < m; ++i) {
    features.row(i) = rng.normal_vector(p).transpose();
  }
  MatrixXd coef(d_out, p);
  coef << 1.0, -2.0, 0.5, 0.0, 3.0, 1.0;
  VectorXd intercept(d_out);
  intercept << 0.25, -1.0;
  MatrixXd targets = features * coef.transpose();
  targets.rowwise() += intercept.transpose();

  const FittedRecalibrator fit =
      fit_recalibrator({RecalibratorKind::Linear}, features, targets);
  const MatrixXd predicted = fit.predict_rows(features);
  CHECK((predicted - targets).cwiseAbs().maxCoeff() <= 1e-8);
}

TEST_CASE("linear recalibrator coefficient example") {
  // Targets built from coefficients (b0, bx, byhat) = (1, 2, 3).
  Rng rng(5);
  const int m = 12;
  MatrixXd features(m, 2);
  MatrixXd targets(m, 1);
  for (int i = 0; i < m; ++i) {
    features(i, 0) = rng.normal();
    features(i, 1) = rng.normal();
    targets(i, 0) = 1.0 + 2.0 * features(i, 0) + 3.0 * features(i, 1);
  }
  const FittedRecalibrator fit =
      fit_recalibrator({RecalibratorKind::Linear}, features, targets);
  CHECK(predict(fit, VectorXd::Ones(1), 2.0)[0] ==
        doctest::Approx(9.0).epsilon(1e-9));
}

TEST_CASE("bin recalibrator computes group means with global fallback") {
  MatrixXd features(3, 2);
  features << 0.0, 1.0, 5.0, 1.0, -2.0, 2.0;
  MatrixXd targets(3, 1);
  targets << 1.0, 3.0, 5.0;
  const FittedRecalibrator fit =
      fit_recalibrator({RecalibratorKind::Bin}, features, targets);

  CHECK(predict(fit, VectorXd::Zero(1), 1.0)[0] == doctest::Approx(2.0));
  CHECK(predict(fit, VectorXd::Zero(1), 2.0)[0] == doctest::Approx(5.0));
  // Unseen bin falls back to the global training mean.
  CHECK(predict(fit, VectorXd::Zero(1), 7.0)[0] == doctest::Approx(3.0));
}

TEST_CASE("zero recalibrator predicts the zero vector") {
  MatrixXd features = MatrixXd::Random(5, 2);
  MatrixXd targets = MatrixXd::Random(5, 3);
  const FittedRecalibrator fit =
      fit_recalibrator({RecalibratorKind::Zero}, features, targets);
  CHECK(fit.predict(VectorXd::Ones(2)).norm() == 0.0);
  CHECK(fit.output_dim() == 3);
}

TEST_CASE("knn recalibrator returns its own training point at k=1") {
  Rng rng(21);
  const int m = 20;
  MatrixXd features(m, 2);
  MatrixXd targets(m, 2);
  for (int i = 0; i < m; ++i) {
    features.row(i) = rng.normal_vector(2).transpose();
    targets.row(i) = rng.normal_vector(2).transpose();
  }
  RecalibratorSpec spec{RecalibratorKind::Knn, 1};
  const FittedRecalibrator fit = fit_recalibrator(spec, features, targets);
  for (int i = 0; i < m; ++i) {
    const VectorXd out = fit.predict(features.row(i).transpose());
    CHECK((out - targets.row(i).transpose()).norm() <= 1e-12);
  }
}

TEST_CASE("linear predictions are Lipschitz in the coefficient norm") {
  Rng rng(33);
  const int m = 50;
  MatrixXd features(m, 3);
  MatrixXd targets(m, 2);
  for (int i = 0; i < m; ++i) {
    features.row(i) = rng.normal_vector(3).transpose();
    targets.row(i) = rng.normal_vector(2).transpose();
  }
  const FittedRecalibrator fit =
      fit_recalibrator({RecalibratorKind::Linear}, features, targets);
  const double coef_norm = fit.coefficients().norm();
  for (int k = 0; k < 50; ++k) {
    const VectorXd u = rng.normal_vector(3);
    const VectorXd v = rng.normal_vector(3);
    CHECK((fit.predict(u) - fit.predict(v)).norm() <=
          coef_norm * (u - v).norm() + 1e-12);
  }
}

TEST_CASE("recalibrator input validation") {
  MatrixXd features = MatrixXd::Random(1, 2);
  MatrixXd targets = MatrixXd::Random(1, 1);
  CHECK_THROWS_AS(fit_recalibrator({RecalibratorKind::Bin}, features, targets),
                  DataError);

  MatrixXd small_features = MatrixXd::Random(3, 2);
  MatrixXd small_targets = MatrixXd::Random(3, 1);
  CHECK_THROWS_AS(
      fit_recalibrator({RecalibratorKind::Linear}, small_features, small_targets),
      DataError);

  RecalibratorSpec bad_knn{RecalibratorKind::Knn, 0};
  CHECK_THROWS_AS(fit_recalibrator(bad_knn, small_features, small_targets),
                  ConfigError);

  const FittedRecalibrator fit = fit_recalibrator(
      {RecalibratorKind::Zero}, MatrixXd::Random(4, 2), MatrixXd::Random(4, 1));
  CHECK_THROWS_AS(fit.predict(VectorXd::Ones(3)), DataError);
}

TEST_CASE("linear outcome regression recovers E[Y | X, Yhat] in the mismatch design") {
  // d = 1, Y = W g + X t + eps, Yhat = W g: E[Y | X, Yhat] = t X + Yhat,
  // so the fitted map should approach coefficients (0, 1, 1).
  ScenarioSpec spec;
  spec.kind = ScenarioKind::ModalityMismatch;
  spec.d = 1;
  spec.n = 5000;
  spec.big_n = 1;
  spec.sigma2 = 1.0;
  spec.sigma_x2 = 5.0;
  spec.sigma_w2 = 5.0;
  spec.theta = VectorXd::Ones(1);
  spec.gamma = VectorXd::Ones(1);
  spec.seed = 424242;
  const GeneratedData data = generate(spec);

  MatrixXd features(spec.n, 2);
  features.col(0) = data.labeled.x.col(0);
  features.col(1) = data.labeled.yhat;
  MatrixXd targets = data.labeled.y;

  const FittedRecalibrator fit =
      fit_recalibrator({RecalibratorKind::Linear}, features, targets);
  const MatrixXd& coef = fit.coefficients();
  CHECK(std::abs(coef(0, 0) - 0.0) <= 0.05);
  CHECK(std::abs(coef(0, 1) - 1.0) <= 0.05);
  CHECK(std::abs(coef(0, 2) - 1.0) <= 0.05);
}

TEST_CASE("bin outcome regression recovers the mixture means") {
  ScenarioSpec spec;
  spec.kind = ScenarioKind::DiscretePredictions;
  spec.d = 1;
  spec.n = 5000;
  spec.big_n = 1;
  spec.sigma2 = 1.0;
  spec.mu << -2.0, 0.0, 4.0;
  spec.seed = 31337;
  const GeneratedData data = generate(spec);

  MatrixXd features(spec.n, 2);
  features.col(0) = data.labeled.x.col(0);
  features.col(1) = data.labeled.yhat;
  const FittedRecalibrator fit = fit_recalibrator(
      {RecalibratorKind::Bin}, features, MatrixXd(data.labeled.y));

  for (int z = 1; z <= 3; ++z) {
    int count = 0;
    for (int i = 0; i < spec.n; ++i) {
      if (data.labeled.yhat[i] == z) ++count;
    }
    REQUIRE(count > 0);
    const double se = std::sqrt(spec.sigma2 / count);
    const double predicted = predict(fit, VectorXd::Ones(1), z)[0];
    CHECK(std::abs(predicted - spec.mu[z - 1]) <= 3.0 * se);
  }
}
