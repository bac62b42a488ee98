#include "hyran/linalg.hpp"

#include <atomic>
#include <cstdio>

#include "hyran/errors.hpp"

namespace hyran {

namespace {
std::atomic<long> g_fallbacks{0};
}

long numeric_fallback_count() { return g_fallbacks.load(); }

Eigen::VectorXd solve_spd(const Eigen::MatrixXd& A, const Eigen::VectorXd& b) {
  if (!A.allFinite() || !b.allFinite()) throw NumericError("solve_spd: non-finite input");
  Eigen::LLT<Eigen::MatrixXd> llt(A);
  if (llt.info() == Eigen::Success) return llt.solve(b);
  if (g_fallbacks.fetch_add(1) == 0) {
    std::fprintf(stderr, "hyran: Cholesky failed, using pseudo-solve fallback\n");
  }
  return A.completeOrthogonalDecomposition().solve(b);
}

Eigen::MatrixXd chol_lower(const Eigen::MatrixXd& A) {
  Eigen::LLT<Eigen::MatrixXd> llt(A);
  if (llt.info() != Eigen::Success) throw NumericError("chol_lower: factorization failed");
  return llt.matrixL();
}

}  // namespace hyran
