#pragma once

#include <Eigen/Dense>

#include "xrm/dataset.hpp"

namespace xrm::testing {

inline Eigen::MatrixXd random_matrix(CounterRng& rng, Index rows, Index cols, double zero_fraction = 0.0) {
  Eigen::MatrixXd A(rows, cols);
  for (Index i = 0; i < A.size(); ++i) A.data()[i] = rng.uniform() < zero_fraction ? 0.0 : rng.normal();
  return A;
}

inline Eigen::VectorXd random_vector(CounterRng& rng, Index n) { return random_matrix(rng, n, 1); }

}  // namespace xrm::testing
