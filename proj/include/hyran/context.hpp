#pragma once

#include <Eigen/Dense>

#include "hyran/errors.hpp"

namespace hyran {

// One round's context vectors, stored column-wise (d x N).
// Invariants: d >= 1, N >= 2, every column has Euclidean norm <= 1 (with a
// small numeric slack), all entries finite.
class ContextSet {
 public:
  ContextSet(Eigen::MatrixXd vectors, long round) : x_(std::move(vectors)), round_(round) {
    if (x_.rows() < 1 || x_.cols() < 2)
      throw std::invalid_argument("ContextSet: need d >= 1 and N >= 2");
    if (round_ < 1) throw std::invalid_argument("ContextSet: round must be positive");
    if (!x_.allFinite()) throw std::invalid_argument("ContextSet: non-finite entries");
    for (Eigen::Index i = 0; i < x_.cols(); ++i) {
      if (x_.col(i).norm() > 1.0 + 1e-9)
        throw std::invalid_argument("ContextSet: context norm exceeds 1");
    }
  }

  int dim() const { return static_cast<int>(x_.rows()); }
  int num_arms() const { return static_cast<int>(x_.cols()); }
  long round() const { return round_; }
  const Eigen::MatrixXd& matrix() const { return x_; }
  Eigen::VectorXd arm(int i) const { return x_.col(i); }

 private:
  Eigen::MatrixXd x_;
  long round_;
};

}  // namespace hyran
