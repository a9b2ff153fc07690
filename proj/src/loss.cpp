#include "reppi/loss.hpp"

#include <cmath>
#include <sstream>

#include "reppi/linalg.hpp"
#include "reppi/optimize.hpp"

namespace reppi {

namespace {

double sigmoid(double t) {
  if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

// log(1 + exp(t)) without overflow.
double softplus(double t) {
  return std::max(t, 0.0) + std::log1p(std::exp(-std::abs(t)));
}

void check_dims(const VectorXd& theta, const VectorXd& x) {
  if (theta.size() != x.size()) {
    throw DataError("loss model: theta and x dimensions disagree");
  }
}

void check_binary(const LossModel& model, double y) {
  if (model.family == Family::Logistic && y != 0.0 && y != 1.0) {
    throw DataError("logistic loss requires outcomes in {0, 1}");
  }
}

}  // namespace

double LossModel::mean(double t) const {
  return family == Family::SquaredError ? t : sigmoid(t);
}

double LossModel::mean_derivative(double t) const {
  if (family == Family::SquaredError) return 1.0;
  const double s = sigmoid(t);
  return s * (1.0 - s);
}

double loss(const LossModel& model, const VectorXd& theta, const VectorXd& x,
            double y) {
  check_dims(theta, x);
  check_binary(model, y);
  const double t = x.dot(theta);
  if (model.family == Family::SquaredError) {
    const double r = y - t;
    return 0.5 * r * r;
  }
  return softplus(t) - y * t;
}

VectorXd gradient(const LossModel& model, const VectorXd& theta,
                  const VectorXd& x, double y) {
  check_dims(theta, x);
  check_binary(model, y);
  return x * (model.mean(x.dot(theta)) - y);
}

MatrixXd hessian(const LossModel& model, const VectorXd& theta,
                 const VectorXd& x, double /*y*/) {
  check_dims(theta, x);
  return model.mean_derivative(x.dot(theta)) * (x * x.transpose());
}

double average_loss(const LossModel& model, const VectorXd& theta,
                    const MatrixXd& x, const VectorXd& y) {
  const VectorXd t = x * theta;
  double total = 0.0;
  if (model.family == Family::SquaredError) {
    total = 0.5 * (y - t).squaredNorm();
  } else {
    for (Eigen::Index i = 0; i < t.size(); ++i) {
      total += softplus(t[i]) - y[i] * t[i];
    }
  }
  return total / static_cast<double>(x.rows());
}

MatrixXd gradient_rows(const LossModel& model, const VectorXd& theta,
                       const MatrixXd& x, const VectorXd& y) {
  VectorXd t = x * theta;
  if (model.family == Family::Logistic) {
    for (Eigen::Index i = 0; i < t.size(); ++i) t[i] = sigmoid(t[i]);
  }
  return x.array().colwise() * (t - y).array();
}

VectorXd average_gradient(const LossModel& model, const VectorXd& theta,
                          const MatrixXd& x, const VectorXd& y) {
  VectorXd t = x * theta;
  if (model.family == Family::Logistic) {
    for (Eigen::Index i = 0; i < t.size(); ++i) t[i] = sigmoid(t[i]);
  }
  return x.transpose() * (t - y) / static_cast<double>(x.rows());
}

MatrixXd average_hessian(const LossModel& model, const VectorXd& theta,
                         const MatrixXd& x) {
  const auto m = x.rows();
  if (model.family == Family::SquaredError) {
    return x.transpose() * x / static_cast<double>(m);
  }
  VectorXd w = x * theta;
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    w[i] = model.mean_derivative(w[i]);
  }
  return x.transpose() * w.asDiagonal() * x / static_cast<double>(m);
}

void check_binary_outcomes(const LossModel& model, const VectorXd& y) {
  if (model.family != Family::Logistic) return;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    if (y[i] != 0.0 && y[i] != 1.0) {
      throw DataError("logistic loss requires outcomes in {0, 1}");
    }
  }
}

VectorXd solve_shifted(const LossModel& model, const MatrixXd& x,
                       const VectorXd& y, const VectorXd& shift,
                       const VectorXd& init, const SolveOptions& options,
                       SolveInfo* info) {
  const int d = static_cast<int>(x.cols());
  if (y.size() != x.rows()) throw DataError("solve_shifted: y rows disagree");
  if (shift.size() != d || init.size() != d) {
    throw DataError("solve_shifted: shift/init dimension disagrees");
  }
  check_binary_outcomes(model, y);

  if (model.family == Family::SquaredError) {
    // Normal equations: (X'X/n) theta = X'y/n + shift.
    const double n = static_cast<double>(x.rows());
    const MatrixXd gram = x.transpose() * x / n;
    const VectorXd rhs = x.transpose() * y / n + shift;
    VectorXd theta = solve_sym_jittered(gram, rhs);
    if (info) {
      info->iterations = 0;
      info->grad_norm = (average_gradient(model, theta, x, y) - shift).norm();
    }
    return theta;
  }

  // Damped Newton on f(theta) = mean loss - theta'shift.
  NewtonResult newton = newton_minimize(
      [&](const VectorXd& theta) {
        return average_loss(model, theta, x, y) - theta.dot(shift);
      },
      [&](const VectorXd& theta) {
        return (average_gradient(model, theta, x, y) - shift).eval();
      },
      [&](const VectorXd& theta) { return average_hessian(model, theta, x); },
      init, {options.tol, options.max_iter});

  if (info) {
    info->iterations = newton.iterations;
    info->grad_norm = newton.grad_norm;
  }
  if (!newton.converged) {
    std::ostringstream msg;
    msg << "solve_shifted did not converge after " << newton.iterations
        << " iterations (gradient norm " << newton.grad_norm << ")";
    throw NumericalError(msg.str());
  }
  return newton.theta;
}

VectorXd solve_shifted(const LossModel& model, const LabeledDataset& data,
                       const VectorXd& shift, const VectorXd& init,
                       const SolveOptions& options, SolveInfo* info) {
  validate(data);
  return solve_shifted(model, data.x, data.y, shift, init, options, info);
}

}  // namespace reppi
