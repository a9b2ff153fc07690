#pragma once

#include <map>
#include <string>

#include "reppi/common.hpp"

namespace reppi {

// Rows with observed outcomes: covariates X, outcomes Y, predictions Yhat.
struct LabeledDataset {
  MatrixXd x;
  VectorXd y;
  VectorXd yhat;

  int n() const { return static_cast<int>(x.rows()); }
  int dim() const { return static_cast<int>(x.cols()); }
};

// Rows where only (X, Yhat) are observed.
struct UnlabeledDataset {
  MatrixXd x;
  VectorXd yhat;

  int n() const { return static_cast<int>(x.rows()); }
  int dim() const { return static_cast<int>(x.cols()); }
};

void validate(const LabeledDataset& data);
void validate(const UnlabeledDataset& data);
// Checks column compatibility of a labeled/unlabeled pair.
void validate(const LabeledDataset& labeled, const UnlabeledDataset& unlabeled);

struct EstimateResult {
  VectorXd theta;
  MatrixXd sigma;  // estimated asymptotic covariance of sqrt(n)(theta_hat - theta*)
  VectorXd ci_lower;
  VectorXd ci_upper;
  double level = 0.9;
  std::map<std::string, double> diagnostics;
};

}  // namespace reppi
