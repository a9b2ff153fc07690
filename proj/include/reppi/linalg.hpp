#pragma once

#include "reppi/common.hpp"

namespace reppi {

MatrixXd symmetrized(const MatrixXd& a);

struct PsdProjection {
  MatrixXd matrix;
  bool clipped = false;  // true if a negative eigenvalue was floored to 0
};

// Symmetrize, then floor negative eigenvalues at zero.
PsdProjection project_psd(const MatrixXd& a);

// Solve A X = B for symmetric A. If the smallest eigenvalue indicates
// near-singularity, retries once with ridge jitter (1e-10 * trace/d) * I.
// Throws NumericalError if the system stays singular after jitter.
MatrixXd solve_sym_jittered(const MatrixXd& a, const MatrixXd& b);

MatrixXd invert_sym_jittered(const MatrixXd& a);

// True when A has no usable signal for inversion even with jitter
// (e.g. the zero matrix from constant scores).
bool sym_singular_after_jitter(const MatrixXd& a);

// Sample covariance of row vectors, 1/(m-1) convention. Requires m >= 2.
MatrixXd sample_covariance(const MatrixXd& rows);

// Cov(A, B) with the same convention; rows must pair up.
MatrixXd sample_cross_covariance(const MatrixXd& a, const MatrixXd& b);

// Ratio of extreme singular values (inf if rank-deficient).
double condition_number(const MatrixXd& a);

}  // namespace reppi
