#pragma once

#include <functional>

#include "reppi/common.hpp"

namespace reppi {

struct NewtonOptions {
  double tol = 1e-10;  // on the gradient norm
  int max_iter = 100;
};

struct NewtonResult {
  VectorXd theta;
  int iterations = 0;
  double grad_norm = 0.0;
  bool converged = false;
};

// Damped Newton with a halving Armijo line search. Falls back to the
// steepest-descent direction whenever the Newton step is unavailable or not
// a descent direction (the objective need not be convex).
NewtonResult newton_minimize(
    const std::function<double(const VectorXd&)>& objective,
    const std::function<VectorXd(const VectorXd&)>& grad,
    const std::function<MatrixXd(const VectorXd&)>& hess, VectorXd init,
    const NewtonOptions& options = {});

}  // namespace reppi
