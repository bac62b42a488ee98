#pragma once

#include <Eigen/Dense>

namespace hyran {

// Solves A x = b for symmetric positive-definite A via Cholesky. If the
// factorization fails (which the V >= I invariant should rule out) the call
// falls back to a pseudo-solve; the fallback is counted and reported on
// stderr rather than hidden.
Eigen::VectorXd solve_spd(const Eigen::MatrixXd& A, const Eigen::VectorXd& b);

// Number of pseudo-solve fallbacks observed so far in this process.
long numeric_fallback_count();

// Lower Cholesky factor of a symmetric positive-definite matrix.
// Throws NumericError when the factorization fails.
Eigen::MatrixXd chol_lower(const Eigen::MatrixXd& A);

}  // namespace hyran
