#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "reppi/common.hpp"
#include "reppi/data.hpp"
#include "reppi/loss.hpp"
#include "reppi/recalibrate.hpp"

namespace reppi {

// Balanced three-fold split of labeled row indices. A seeded Fisher-Yates
// permutation assigns rows; the first n mod 3 folds get the extra element.
// Deterministic in (n, seed).
struct FoldAssignment {
  std::vector<int> fold_of;  // entries in {0, 1, 2}
  std::uint64_t seed = 0;

  std::array<int, 3> sizes() const;
  std::vector<int> indices_of(int fold) const;
};

FoldAssignment make_folds(int n, std::uint64_t seed);

struct PowerMatrix {
  MatrixXd m;
  bool degenerate = false;  // score covariance carried no usable signal
};

// Cov(grad_true, s_hat) Cov(s_hat)^-1 with the 1/(m-1) convention and ridge
// jitter on the inverse. A score covariance with no signal (constant scores)
// yields the zero matrix, flagged as degenerate. Requires m >= d+1 rows.
PowerMatrix compute_power_matrix(const MatrixXd& grad_true,
                                 const MatrixXd& s_hat);

// Baseline M-estimator on labeled rows only (imputed loss g = 0).
EstimateResult fit_xy_only(const LabeledDataset& data, const LossModel& model,
                           double level);

// Unified estimator with g = l: debiases the prediction-based objective by
// the labeled/unlabeled imputed-loss mean difference.
EstimateResult fit_ppi(const LabeledDataset& labeled,
                       const UnlabeledDataset& unlabeled,
                       const LossModel& model, double level);

// Power-tuned imputed loss g = lambda * l with the variance-optimal scalar
// lambda estimated from sandwiched gradient covariances.
EstimateResult fit_ppi_plus_plus(const LabeledDataset& labeled,
                                 const UnlabeledDataset& unlabeled,
                                 const LossModel& model, double level);

// Recalibrated estimator: three-fold cross-fitting, a learned score
// s(x, yhat) approximating E[grad l | x, yhat], and the power matrix guard.
EstimateResult fit_reppi(const LabeledDataset& labeled,
                         const UnlabeledDataset& unlabeled,
                         const LossModel& model, const RecalibratorSpec& recal,
                         double level, std::uint64_t seed);

// Per-rotation internals exposed for testing and diagnostics.
struct ReppiRotation {
  int init_fold = 0;
  int recal_fold = 0;
  int estimation_fold = 0;
  VectorXd theta_init;
  VectorXd theta;
  MatrixXd power_matrix;
  double power_condition = 0.0;
  bool power_degenerate = false;
};

struct ReppiDetail {
  EstimateResult result;
  FoldAssignment folds;
  std::vector<ReppiRotation> rotations;
};

ReppiDetail fit_reppi_detailed(const LabeledDataset& labeled,
                               const UnlabeledDataset& unlabeled,
                               const LossModel& model,
                               const RecalibratorSpec& recal, double level,
                               std::uint64_t seed);

}  // namespace reppi
