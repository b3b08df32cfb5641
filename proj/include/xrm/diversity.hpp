#pragma once

#include <cstddef>

#include <Eigen/Dense>

namespace xrm {

/// Number of coordinates where u(i) * v(i) != 0 (exact zero test).
std::size_t exclusivity(const Eigen::Ref<const Eigen::VectorXd>& u, const Eigen::Ref<const Eigen::VectorXd>& v);

/// Sum of |u(i)| * |v(i)|.
double relaxed_exclusivity(const Eigen::Ref<const Eigen::VectorXd>& u, const Eigen::Ref<const Eigen::VectorXd>& v);

/// 1/2 * sum over rows j of (sum over columns c of |W(j,c)|)^2, i.e. half the
/// squared l1,2 norm of W^T. Throws DataError on non-finite input.
double exclusivity_regularizer(const Eigen::Ref<const Eigen::MatrixXd>& W);

struct DiversityReport {
  Eigen::MatrixXd pairwise_relaxed_exclusivity;  // C x C
  Eigen::MatrixXi pairwise_exclusivity;          // C x C
  double regularizer_value = 0.0;
};

DiversityReport diversity_report(const Eigen::Ref<const Eigen::MatrixXd>& W);

}  // namespace xrm
