#pragma once

#include <map>
#include <string>
#include <vector>

#include "reppi/common.hpp"

namespace reppi {

enum class RecalibratorKind { Zero, Linear, Bin, Knn };

std::string to_string(RecalibratorKind kind);
RecalibratorKind recalibrator_kind_from_string(const std::string& name);

struct RecalibratorSpec {
  RecalibratorKind kind = RecalibratorKind::Linear;
  int knn_k = 5;  // Knn only
};

void validate(const RecalibratorSpec& spec);

// A fitted multi-output regressor mapping feature vectors (x..., yhat) to
// target vectors. Immutable once fitted; safe for concurrent prediction.
//
//   Zero    constant zero vector
//   Linear  per-output OLS on (1, features)
//   Bin     mean target per distinct yhat value (last feature column),
//           with the global training mean as fallback for unseen values
//   Knn     mean target of the k nearest training rows, Euclidean distance
//           on per-column standardized features
class FittedRecalibrator {
 public:
  VectorXd predict(const VectorXd& features) const;

  // Row-wise predict; returns m x d_out.
  MatrixXd predict_rows(const MatrixXd& features) const;

  RecalibratorKind kind() const { return kind_; }
  int output_dim() const { return d_out_; }
  int feature_dim() const { return d_feat_; }

  // Linear only: d_out x (p+1) coefficients, intercept first.
  const MatrixXd& coefficients() const;
  // Bin only: fitted bin means keyed by exact yhat value.
  const std::map<double, VectorXd>& bin_means() const;
  const VectorXd& global_mean() const;

  friend FittedRecalibrator fit_recalibrator(const RecalibratorSpec& spec,
                                             const MatrixXd& features,
                                             const MatrixXd& targets);

 private:
  RecalibratorKind kind_ = RecalibratorKind::Zero;
  int d_out_ = 0;
  int d_feat_ = 0;

  MatrixXd coef_;                       // Linear
  std::map<double, VectorXd> bins_;     // Bin
  VectorXd global_mean_;                // Bin fallback
  MatrixXd train_features_;             // Knn (standardized)
  MatrixXd train_targets_;              // Knn
  VectorXd feat_mean_, feat_scale_;     // Knn standardization
  int knn_k_ = 1;
};

// Fits the regressor described by spec on m feature rows (columns x, yhat)
// and m target rows. Linear requires m >= feature_dim + 2.
FittedRecalibrator fit_recalibrator(const RecalibratorSpec& spec,
                                    const MatrixXd& features,
                                    const MatrixXd& targets);

// Convenience wrapper assembling the feature vector (x..., yhat).
VectorXd predict(const FittedRecalibrator& recal, const VectorXd& x,
                 double yhat);

}  // namespace reppi
