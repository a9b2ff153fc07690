#include "reppi/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "reppi/linalg.hpp"
#include "reppi/optimize.hpp"
#include "reppi/rng.hpp"
#include "reppi/variance.hpp"

namespace reppi {

namespace {

MatrixXd take_rows(const MatrixXd& m, const std::vector<int>& idx) {
  MatrixXd out(static_cast<Eigen::Index>(idx.size()), m.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) out.row(i) = m.row(idx[i]);
  return out;
}

VectorXd take(const VectorXd& v, const std::vector<int>& idx) {
  VectorXd out(static_cast<Eigen::Index>(idx.size()));
  for (std::size_t i = 0; i < idx.size(); ++i) out[i] = v[idx[i]];
  return out;
}

MatrixXd with_yhat_column(const MatrixXd& x, const VectorXd& yhat) {
  MatrixXd features(x.rows(), x.cols() + 1);
  features.leftCols(x.cols()) = x;
  features.col(x.cols()) = yhat;
  return features;
}

EstimateResult assemble_result(const VectorXd& theta, const MatrixXd& sigma,
                               int n, double level) {
  EstimateResult result;
  result.theta = theta;
  result.sigma = sigma;
  result.level = level;
  const Interval ci = confidence_interval(theta, sigma, n, level);
  result.ci_lower = ci.lower;
  result.ci_upper = ci.upper;
  return result;
}

// Minimizer of the three-term objective
//   mean_lab l(x,y) - lambda * (mean_lab l(x,yhat) - mean_unlab l(x,yhat)).
// Squared error reduces to a linear system; the labeled quadratic terms of
// the loss and the imputed loss cancel, leaving the Gram matrix
// (1-lambda) G_lab + lambda G_unlab. Logistic uses damped Newton with a
// gradient-descent fallback since lambda > 1 can break convexity.
VectorXd solve_scaled_imputed_objective(const LossModel& model,
                                        const LabeledDataset& labeled,
                                        const UnlabeledDataset& unlabeled,
                                        double lambda, const VectorXd& init,
                                        SolveInfo* info) {
  const double n = labeled.n();
  const double big_n = unlabeled.n();

  if (model.family == Family::SquaredError) {
    const MatrixXd gram_lab = labeled.x.transpose() * labeled.x / n;
    const MatrixXd gram_unlab =
        unlabeled.x.transpose() * unlabeled.x / big_n;
    const MatrixXd gram = (1.0 - lambda) * gram_lab + lambda * gram_unlab;
    const VectorXd rhs = labeled.x.transpose() * labeled.y / n -
                         lambda * labeled.x.transpose() * labeled.yhat / n +
                         lambda * unlabeled.x.transpose() * unlabeled.yhat / big_n;
    VectorXd theta = solve_sym_jittered(gram, rhs);
    if (info) {
      info->iterations = 0;
      info->grad_norm = (gram * theta - rhs).norm();
    }
    return theta;
  }

  NewtonResult newton = newton_minimize(
      [&](const VectorXd& theta) {
        return average_loss(model, theta, labeled.x, labeled.y) -
               lambda * (average_loss(model, theta, labeled.x, labeled.yhat) -
                         average_loss(model, theta, unlabeled.x, unlabeled.yhat));
      },
      [&](const VectorXd& theta) {
        return (average_gradient(model, theta, labeled.x, labeled.y) -
                lambda *
                    (average_gradient(model, theta, labeled.x, labeled.yhat) -
                     average_gradient(model, theta, unlabeled.x,
                                      unlabeled.yhat)))
            .eval();
      },
      [&](const VectorXd& theta) {
        return ((1.0 - lambda) * average_hessian(model, theta, labeled.x) +
                lambda * average_hessian(model, theta, unlabeled.x))
            .eval();
      },
      init);
  if (info) {
    info->iterations = newton.iterations;
    info->grad_norm = newton.grad_norm;
  }
  if (!newton.converged) {
    std::ostringstream msg;
    msg << "imputed-loss objective did not converge (gradient norm "
        << newton.grad_norm << ")";
    throw NumericalError(msg.str());
  }
  return newton.theta;
}

}  // namespace

std::array<int, 3> FoldAssignment::sizes() const {
  std::array<int, 3> counts{0, 0, 0};
  for (int f : fold_of) counts[static_cast<std::size_t>(f)] += 1;
  return counts;
}

std::vector<int> FoldAssignment::indices_of(int fold) const {
  std::vector<int> idx;
  for (int i = 0; i < static_cast<int>(fold_of.size()); ++i) {
    if (fold_of[static_cast<std::size_t>(i)] == fold) idx.push_back(i);
  }
  return idx;
}

FoldAssignment make_folds(int n, std::uint64_t seed) {
  if (n < 3) throw DataError("make_folds: need n >= 3 for three folds");
  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  rng.shuffle(order);

  // First n mod 3 folds receive the extra element.
  std::array<int, 3> sizes;
  for (int f = 0; f < 3; ++f) sizes[f] = n / 3 + (f < n % 3 ? 1 : 0);

  FoldAssignment folds;
  folds.seed = seed;
  folds.fold_of.assign(static_cast<std::size_t>(n), 0);
  int pos = 0;
  for (int f = 0; f < 3; ++f) {
    for (int i = 0; i < sizes[f]; ++i, ++pos) {
      folds.fold_of[static_cast<std::size_t>(order[pos])] = f;
    }
  }
  return folds;
}

PowerMatrix compute_power_matrix(const MatrixXd& grad_true,
                                 const MatrixXd& s_hat) {
  const auto m = grad_true.rows();
  const auto d = grad_true.cols();
  if (s_hat.rows() != m) {
    throw DataError("compute_power_matrix: row counts differ");
  }
  if (m <= d) {
    std::ostringstream msg;
    msg << "compute_power_matrix: " << m << " rows for dimension " << d
        << "; use a larger fold (need at least d+1 rows)";
    throw DataError(msg.str());
  }
  if (!grad_true.allFinite() || !s_hat.allFinite()) {
    throw DataError("compute_power_matrix: non-finite inputs");
  }

  const MatrixXd score_cov = sample_covariance(s_hat);
  PowerMatrix out;
  if (sym_singular_after_jitter(score_cov)) {
    // Constant scores carry no signal; zero protection, like lambda = 0.
    out.m = MatrixXd::Zero(d, s_hat.cols());
    out.degenerate = true;
    return out;
  }
  const MatrixXd cross = sample_cross_covariance(grad_true, s_hat);
  out.m = solve_sym_jittered(score_cov, cross.transpose()).transpose();
  return out;
}

EstimateResult fit_xy_only(const LabeledDataset& data, const LossModel& model,
                           double level) {
  validate(data);
  check_binary_outcomes(model, data.y);
  const int n = data.n();
  const int d = data.dim();
  if (n < d + 1) {
    throw DataError("fit_xy_only: need at least d+1 labeled rows");
  }

  SolveInfo info;
  const VectorXd theta = solve_shifted(model, data.x, data.y,
                                       VectorXd::Zero(d), VectorXd::Zero(d),
                                       {}, &info);
  const MatrixXd hess = average_hessian(model, theta, data.x);
  const MatrixXd grad_cov =
      sample_covariance(gradient_rows(model, theta, data.x, data.y));
  const MatrixXd sigma = sandwich_xy_only(hess, grad_cov);

  EstimateResult result = assemble_result(theta, sigma, n, level);
  result.diagnostics["newton_iterations"] = info.iterations;
  result.diagnostics["gradient_norm"] = info.grad_norm;
  return result;
}

EstimateResult fit_ppi(const LabeledDataset& labeled,
                       const UnlabeledDataset& unlabeled,
                       const LossModel& model, double level) {
  validate(labeled, unlabeled);
  check_binary_outcomes(model, labeled.y);
  const int n = labeled.n();
  const int d = labeled.dim();
  if (n < d + 1) throw DataError("fit_ppi: need at least d+1 labeled rows");
  const double r_hat = static_cast<double>(n) / unlabeled.n();

  SolveInfo info;
  const VectorXd theta = solve_scaled_imputed_objective(
      model, labeled, unlabeled, 1.0, VectorXd::Zero(d), &info);

  const MatrixXd hess = average_hessian(model, theta, labeled.x);
  const MatrixXd grad_lab = gradient_rows(model, theta, labeled.x, labeled.y);
  const MatrixXd imputed_lab =
      gradient_rows(model, theta, labeled.x, labeled.yhat);
  const MatrixXd imputed_unlab =
      gradient_rows(model, theta, unlabeled.x, unlabeled.yhat);
  MatrixXd imputed_pooled(n + unlabeled.n(), d);
  imputed_pooled.topRows(n) = imputed_lab;
  imputed_pooled.bottomRows(unlabeled.n()) = imputed_unlab;

  SandwichInputs inputs;
  inputs.hessian_hat = hess;
  inputs.grad_cov = sample_covariance(grad_lab);
  inputs.cross_cov = sample_cross_covariance(grad_lab, imputed_lab);
  inputs.score_cov = sample_covariance(imputed_lab);
  inputs.score_cov_pooled = sample_covariance(imputed_pooled);
  inputs.r_hat = r_hat;

  EstimateResult result =
      assemble_result(theta, ppi_variance(inputs), n, level);
  result.diagnostics["newton_iterations"] = info.iterations;
  result.diagnostics["gradient_norm"] = info.grad_norm;
  result.diagnostics["r_hat"] = r_hat;
  return result;
}

EstimateResult fit_ppi_plus_plus(const LabeledDataset& labeled,
                                 const UnlabeledDataset& unlabeled,
                                 const LossModel& model, double level) {
  validate(labeled, unlabeled);
  check_binary_outcomes(model, labeled.y);
  const int n = labeled.n();
  const int d = labeled.dim();
  if (n < d + 1) {
    throw DataError("fit_ppi_plus_plus: need at least d+1 labeled rows");
  }
  const double r_hat = static_cast<double>(n) / unlabeled.n();

  // Power tuning at an initial XY-only fit.
  const VectorXd theta0 = solve_shifted(model, labeled.x, labeled.y,
                                        VectorXd::Zero(d), VectorXd::Zero(d));
  const MatrixXd hess0 = average_hessian(model, theta0, labeled.x);
  const MatrixXd hinv0 = invert_sym_jittered(hess0);
  const MatrixXd grad0 = gradient_rows(model, theta0, labeled.x, labeled.y);
  const MatrixXd imputed0_lab =
      gradient_rows(model, theta0, labeled.x, labeled.yhat);
  const MatrixXd imputed0_unlab =
      gradient_rows(model, theta0, unlabeled.x, unlabeled.yhat);
  MatrixXd imputed0_pooled(n + unlabeled.n(), d);
  imputed0_pooled.topRows(n) = imputed0_lab;
  imputed0_pooled.bottomRows(unlabeled.n()) = imputed0_unlab;

  const double numerator =
      (hinv0 * sample_cross_covariance(grad0, imputed0_lab) * hinv0).trace();
  const double denominator =
      (hinv0 * sample_covariance(imputed0_pooled) * hinv0).trace();
  const double xy_trace =
      (hinv0 * sample_covariance(grad0) * hinv0).trace();
  const double scale = std::max({1e-300, std::abs(numerator), xy_trace});

  if (denominator <= 1e-12 * scale) {
    // Constant imputed gradients: no tuning signal, fall back to XY-only.
    EstimateResult result = fit_xy_only(labeled, model, level);
    result.diagnostics["lambda_hat"] = 0.0;
    result.diagnostics["lambda_zero_guard"] = 1.0;
    result.diagnostics["r_hat"] = r_hat;
    return result;
  }

  const double lambda = numerator / denominator / (1.0 + r_hat);

  SolveInfo info;
  const VectorXd theta = solve_scaled_imputed_objective(
      model, labeled, unlabeled, lambda, theta0, &info);

  // Plug-in variance at the final estimate with grad g = lambda grad l(x,yhat).
  const MatrixXd hess = average_hessian(model, theta, labeled.x);
  const MatrixXd grad_lab = gradient_rows(model, theta, labeled.x, labeled.y);
  const MatrixXd imputed_lab =
      gradient_rows(model, theta, labeled.x, labeled.yhat);
  const MatrixXd imputed_unlab =
      gradient_rows(model, theta, unlabeled.x, unlabeled.yhat);
  MatrixXd imputed_pooled(n + unlabeled.n(), d);
  imputed_pooled.topRows(n) = imputed_lab;
  imputed_pooled.bottomRows(unlabeled.n()) = imputed_unlab;

  SandwichInputs inputs;
  inputs.hessian_hat = hess;
  inputs.grad_cov = sample_covariance(grad_lab);
  inputs.cross_cov = lambda * sample_cross_covariance(grad_lab, imputed_lab);
  inputs.score_cov = lambda * lambda * sample_covariance(imputed_lab);
  inputs.score_cov_pooled = lambda * lambda * sample_covariance(imputed_pooled);
  inputs.r_hat = r_hat;

  EstimateResult result =
      assemble_result(theta, ppi_variance(inputs), n, level);
  result.diagnostics["newton_iterations"] = info.iterations;
  result.diagnostics["gradient_norm"] = info.grad_norm;
  result.diagnostics["lambda_hat"] = lambda;
  result.diagnostics["r_hat"] = r_hat;
  return result;
}

namespace {

// Recalibrated score rows s(x, yhat) = x (mu(x'theta0) - m_hat(x, yhat)),
// the GLM form of E[grad l_theta0 | x, yhat] with the outcome regression
// m_hat plugged into the gradient's outcome slot.
MatrixXd score_rows(const LossModel& model, const VectorXd& theta0,
                    const MatrixXd& x, const VectorXd& yhat,
                    const FittedRecalibrator& recal) {
  const VectorXd m_hat =
      recal.predict_rows(with_yhat_column(x, yhat)).col(0);
  return gradient_rows(model, theta0, x, m_hat);
}

}  // namespace

ReppiDetail fit_reppi_detailed(const LabeledDataset& labeled,
                               const UnlabeledDataset& unlabeled,
                               const LossModel& model,
                               const RecalibratorSpec& recal, double level,
                               std::uint64_t seed) {
  validate(labeled, unlabeled);
  validate(recal);
  check_binary_outcomes(model, labeled.y);
  const int n = labeled.n();
  const int d = labeled.dim();
  if (n < 3 * (d + 2)) {
    throw DataError("fit_reppi: need at least 3(d+2) labeled rows");
  }
  const double r_hat = static_cast<double>(n) / unlabeled.n();
  const bool zero_recal = recal.kind == RecalibratorKind::Zero;

  ReppiDetail detail;
  detail.folds = make_folds(n, seed);

  // (init, recal, estimation) fold triples, rotated as (1,2,3), (3,1,2), (2,3,1).
  constexpr std::array<std::array<int, 3>, 3> kRotations = {
      {{0, 1, 2}, {2, 0, 1}, {1, 2, 0}}};

  VectorXd theta = VectorXd::Zero(d);
  std::vector<SandwichInputs> moments;
  VectorXd weights(3);
  int newton_total = 0;

  for (int k = 0; k < 3; ++k) {
    ReppiRotation rot;
    rot.init_fold = kRotations[k][0];
    rot.recal_fold = kRotations[k][1];
    rot.estimation_fold = kRotations[k][2];

    const auto idx_init = detail.folds.indices_of(rot.init_fold);
    const auto idx_recal = detail.folds.indices_of(rot.recal_fold);
    const auto idx_est = detail.folds.indices_of(rot.estimation_fold);

    const MatrixXd x_init = take_rows(labeled.x, idx_init);
    const VectorXd y_init = take(labeled.y, idx_init);
    const MatrixXd x_est = take_rows(labeled.x, idx_est);
    const VectorXd y_est = take(labeled.y, idx_est);
    const VectorXd yhat_est = take(labeled.yhat, idx_est);

    // Initial estimator on the init fold.
    rot.theta_init = solve_shifted(model, x_init, y_init, VectorXd::Zero(d),
                                   VectorXd::Zero(d));

    // Recalibrate the outcome on the recal fold.
    MatrixXd scores_est;
    MatrixXd scores_unlab;
    if (zero_recal) {
      scores_est = MatrixXd::Zero(x_est.rows(), d);
      scores_unlab = MatrixXd::Zero(unlabeled.n(), d);
    } else {
      const MatrixXd x_recal = take_rows(labeled.x, idx_recal);
      const VectorXd yhat_recal = take(labeled.yhat, idx_recal);
      const MatrixXd targets = take(labeled.y, idx_recal);
      const FittedRecalibrator fitted = fit_recalibrator(
          recal, with_yhat_column(x_recal, yhat_recal), targets);
      scores_est = score_rows(model, rot.theta_init, x_est, yhat_est, fitted);
      scores_unlab =
          score_rows(model, rot.theta_init, unlabeled.x, unlabeled.yhat, fitted);
    }

    // Power matrix on the estimation fold.
    const MatrixXd grad_init =
        gradient_rows(model, rot.theta_init, x_est, y_est);
    const PowerMatrix power = compute_power_matrix(grad_init, scores_est);
    rot.power_matrix = power.m;
    rot.power_degenerate = power.degenerate;
    rot.power_condition =
        power.degenerate ? 0.0 : condition_number(power.m);

    // Solve the shifted objective on the estimation fold. The
    // estimating equation is
    //   mean_est grad l_theta = (1+r)^-1 M (mean_est s - mean_unlab s).
    const VectorXd shift =
        power.m *
        (scores_est.colwise().mean() - scores_unlab.colwise().mean())
            .transpose() /
        (1.0 + r_hat);
    SolveInfo info;
    rot.theta =
        solve_shifted(model, x_est, y_est, shift, rot.theta_init, {}, &info);
    newton_total += info.iterations;

    // Held-out plug-in moments for the variance.
    SandwichInputs rot_inputs;
    rot_inputs.hessian_hat = average_hessian(model, rot.theta, x_est);
    const MatrixXd grad_final = gradient_rows(model, rot.theta, x_est, y_est);
    rot_inputs.grad_cov = sample_covariance(grad_final);
    rot_inputs.cross_cov = sample_cross_covariance(grad_final, scores_est);
    rot_inputs.score_cov = sample_covariance(scores_est);
    moments.push_back(std::move(rot_inputs));

    const double weight =
        static_cast<double>(idx_est.size()) / static_cast<double>(n);
    weights[k] = weight;
    theta += weight * rot.theta;
    detail.rotations.push_back(std::move(rot));
  }

  const ReppiVarianceResult var = reppi_variance(moments, weights, r_hat);
  detail.result = assemble_result(theta, var.sigma, n, level);

  auto& diag = detail.result.diagnostics;
  const auto sizes = detail.folds.sizes();
  diag["fold_size_1"] = sizes[0];
  diag["fold_size_2"] = sizes[1];
  diag["fold_size_3"] = sizes[2];
  for (int k = 0; k < 3; ++k) {
    diag["power_condition_" + std::to_string(k + 1)] =
        detail.rotations[static_cast<std::size_t>(k)].power_condition;
    diag["power_degenerate_" + std::to_string(k + 1)] =
        detail.rotations[static_cast<std::size_t>(k)].power_degenerate ? 1.0
                                                                       : 0.0;
  }
  diag["delta_dropped"] = var.delta_dropped;
  diag["psd_projected"] = var.psd_projected ? 1.0 : 0.0;
  diag["newton_iterations"] = newton_total;
  diag["r_hat"] = r_hat;
  return detail;
}

EstimateResult fit_reppi(const LabeledDataset& labeled,
                         const UnlabeledDataset& unlabeled,
                         const LossModel& model, const RecalibratorSpec& recal,
                         double level, std::uint64_t seed) {
  return fit_reppi_detailed(labeled, unlabeled, model, recal, level, seed)
      .result;
}

}  // namespace reppi
