#pragma once

#include "reppi/common.hpp"
#include "reppi/data.hpp"

namespace reppi {

enum class Family { SquaredError, Logistic };

// GLM loss specification. The mean function mu is the identity for squared
// error and the sigmoid for logistic regression, so that
//   grad l_theta(x, y)  = x (mu(x'theta) - y)
//   hess l_theta(x, y)  = mu'(x'theta) x x'
// Mean estimation is squared error on a single constant-1 design column.
struct LossModel {
  Family family = Family::SquaredError;
  bool intercept_only = false;

  static LossModel squared_error() { return {Family::SquaredError, false}; }
  static LossModel logistic() { return {Family::Logistic, false}; }
  static LossModel mean_estimation() { return {Family::SquaredError, true}; }

  double mean(double t) const;
  double mean_derivative(double t) const;
};

// Pointwise loss. SquaredError: (y - x'theta)^2 / 2.
// Logistic: log(1 + exp(x'theta)) - y * x'theta, y in {0, 1}.
double loss(const LossModel& model, const VectorXd& theta, const VectorXd& x,
            double y);

VectorXd gradient(const LossModel& model, const VectorXd& theta,
                  const VectorXd& x, double y);

MatrixXd hessian(const LossModel& model, const VectorXd& theta,
                 const VectorXd& x, double y);

// Batch helpers. These accept arbitrary real outcomes so the same code path
// evaluates imputed losses at surrogate values; the binary-outcome check for
// logistic models is applied by callers that fit on true outcomes.
double average_loss(const LossModel& model, const VectorXd& theta,
                    const MatrixXd& x, const VectorXd& y);
MatrixXd gradient_rows(const LossModel& model, const VectorXd& theta,
                       const MatrixXd& x, const VectorXd& y);
VectorXd average_gradient(const LossModel& model, const VectorXd& theta,
                          const MatrixXd& x, const VectorXd& y);
// (1/m) sum mu'(x_i'theta) x_i x_i'; does not depend on outcomes.
MatrixXd average_hessian(const LossModel& model, const VectorXd& theta,
                         const MatrixXd& x);

void check_binary_outcomes(const LossModel& model, const VectorXd& y);

struct SolveOptions {
  double tol = 1e-10;  // on the gradient norm of the shifted objective
  int max_iter = 100;
};

struct SolveInfo {
  int iterations = 0;
  double grad_norm = 0.0;
};

// Minimizes (1/n) sum_i l_theta(x_i, y_i) - theta'shift, which stays convex
// for any shift. Squared error is solved in closed form via the normal
// equations; logistic by damped Newton with a halving line search.
VectorXd solve_shifted(const LossModel& model, const MatrixXd& x,
                       const VectorXd& y, const VectorXd& shift,
                       const VectorXd& init, const SolveOptions& options = {},
                       SolveInfo* info = nullptr);

VectorXd solve_shifted(const LossModel& model, const LabeledDataset& data,
                       const VectorXd& shift, const VectorXd& init,
                       const SolveOptions& options = {},
                       SolveInfo* info = nullptr);

}  // namespace reppi
