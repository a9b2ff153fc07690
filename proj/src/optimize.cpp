#include "reppi/optimize.hpp"

#include "reppi/linalg.hpp"

namespace reppi {

NewtonResult newton_minimize(
    const std::function<double(const VectorXd&)>& objective,
    const std::function<VectorXd(const VectorXd&)>& grad,
    const std::function<MatrixXd(const VectorXd&)>& hess, VectorXd init,
    const NewtonOptions& options) {
  NewtonResult result;
  result.theta = std::move(init);
  double f = objective(result.theta);

  for (result.iterations = 0; result.iterations < options.max_iter;
       ++result.iterations) {
    const VectorXd g = grad(result.theta);
    result.grad_norm = g.norm();
    if (result.grad_norm <= options.tol) {
      result.converged = true;
      return result;
    }

    VectorXd direction;
    try {
      direction = solve_sym_jittered(hess(result.theta), -g);
    } catch (const NumericalError&) {
      direction = -g;
    }
    if (g.dot(direction) >= 0.0) direction = -g;

    const double slope = g.dot(direction);
    double step = 1.0;
    bool accepted = false;
    for (int halving = 0; halving < 60; ++halving) {
      const VectorXd candidate = result.theta + step * direction;
      const double f_new = objective(candidate);
      if (f_new <= f + 1e-4 * step * slope) {
        result.theta = candidate;
        f = f_new;
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;  // no improvement at any step size
  }

  result.grad_norm = grad(result.theta).norm();
  result.converged = result.grad_norm <= options.tol;
  return result;
}

}  // namespace reppi
