#include "reppi/linalg.hpp"

#include <cmath>
#include <limits>

namespace reppi {

namespace {

constexpr double kJitterScale = 1e-10;

// Near-singularity test for a symmetric matrix: smallest eigenvalue at or
// below a relative floor.
bool near_singular(const MatrixXd& a) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(a, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) return true;
  const double scale = es.eigenvalues().cwiseAbs().maxCoeff();
  if (scale == 0.0) return true;
  return es.eigenvalues().minCoeff() <= scale * 1e-13;
}

}  // namespace

MatrixXd symmetrized(const MatrixXd& a) { return 0.5 * (a + a.transpose()); }

PsdProjection project_psd(const MatrixXd& a) {
  MatrixXd sym = symmetrized(a);
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(sym);
  if (es.info() != Eigen::Success) {
    throw NumericalError("project_psd: eigendecomposition failed");
  }
  VectorXd vals = es.eigenvalues();
  const double scale = vals.cwiseAbs().maxCoeff();
  const double tol = scale * 1e-14;
  PsdProjection out;
  for (int i = 0; i < vals.size(); ++i) {
    if (vals[i] < 0.0) {
      if (vals[i] < -tol) out.clipped = true;
      vals[i] = 0.0;
    }
  }
  out.matrix = symmetrized(es.eigenvectors() * vals.asDiagonal() *
                           es.eigenvectors().transpose());
  return out;
}

MatrixXd solve_sym_jittered(const MatrixXd& a, const MatrixXd& b) {
  if (a.rows() != a.cols() || a.rows() != b.rows()) {
    throw DataError("solve_sym_jittered: dimension mismatch");
  }
  MatrixXd sym = symmetrized(a);
  if (near_singular(sym)) {
    const double jitter = kJitterScale * sym.trace() / sym.rows();
    sym += jitter * MatrixXd::Identity(sym.rows(), sym.cols());
    if (near_singular(sym)) {
      throw NumericalError("singular matrix after ridge jitter");
    }
  }
  MatrixXd x = sym.ldlt().solve(b);
  if (!x.allFinite()) {
    throw NumericalError("symmetric solve produced non-finite values");
  }
  return x;
}

MatrixXd invert_sym_jittered(const MatrixXd& a) {
  return solve_sym_jittered(a, MatrixXd::Identity(a.rows(), a.cols()));
}

bool sym_singular_after_jitter(const MatrixXd& a) {
  MatrixXd sym = symmetrized(a);
  if (!near_singular(sym)) return false;
  const double jitter = kJitterScale * sym.trace() / sym.rows();
  sym += jitter * MatrixXd::Identity(sym.rows(), sym.cols());
  return near_singular(sym);
}

MatrixXd sample_covariance(const MatrixXd& rows) {
  return sample_cross_covariance(rows, rows);
}

MatrixXd sample_cross_covariance(const MatrixXd& a, const MatrixXd& b) {
  const auto m = a.rows();
  if (m != b.rows()) {
    throw DataError("sample_cross_covariance: row counts differ");
  }
  if (m < 2) {
    throw DataError("sample_cross_covariance: need at least 2 rows");
  }
  MatrixXd ac = a.rowwise() - a.colwise().mean();
  MatrixXd bc = b.rowwise() - b.colwise().mean();
  return (ac.transpose() * bc) / static_cast<double>(m - 1);
}

double condition_number(const MatrixXd& a) {
  Eigen::JacobiSVD<MatrixXd> svd(a);
  const auto& sv = svd.singularValues();
  if (sv.size() == 0 || sv.minCoeff() <= 0.0) {
    return std::numeric_limits<double>::infinity();
  }
  return sv.maxCoeff() / sv.minCoeff();
}

}  // namespace reppi
