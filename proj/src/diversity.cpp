#include "xrm/diversity.hpp"

#include <string>

#include "xrm/error.hpp"

namespace xrm {

namespace {

void require_same_length(Eigen::Index a, Eigen::Index b) {
  if (a != b) throw DataError("vector lengths differ: " + std::to_string(a) + " vs " + std::to_string(b));
}

}  // namespace

std::size_t exclusivity(const Eigen::Ref<const Eigen::VectorXd>& u, const Eigen::Ref<const Eigen::VectorXd>& v) {
  require_same_length(u.size(), v.size());
  std::size_t count = 0;
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    if (u(i) * v(i) != 0.0) ++count;
  }
  return count;
}

double relaxed_exclusivity(const Eigen::Ref<const Eigen::VectorXd>& u, const Eigen::Ref<const Eigen::VectorXd>& v) {
  require_same_length(u.size(), v.size());
  return u.cwiseAbs().dot(v.cwiseAbs());
}

double exclusivity_regularizer(const Eigen::Ref<const Eigen::MatrixXd>& W) {
  if (!W.allFinite()) throw DataError("weight matrix contains NaN or Inf");
  return 0.5 * W.cwiseAbs().rowwise().sum().squaredNorm();
}

DiversityReport diversity_report(const Eigen::Ref<const Eigen::MatrixXd>& W) {
  if (W.cols() < 1) throw DataError("diversity report needs at least one component");
  const Eigen::Index C = W.cols();
  DiversityReport report;
  report.regularizer_value = exclusivity_regularizer(W);
  report.pairwise_relaxed_exclusivity.resize(C, C);
  report.pairwise_exclusivity.resize(C, C);
  for (Eigen::Index a = 0; a < C; ++a) {
    for (Eigen::Index b = a; b < C; ++b) {
      const double r = relaxed_exclusivity(W.col(a), W.col(b));
      const int x = static_cast<int>(exclusivity(W.col(a), W.col(b)));
      report.pairwise_relaxed_exclusivity(a, b) = report.pairwise_relaxed_exclusivity(b, a) = r;
      report.pairwise_exclusivity(a, b) = report.pairwise_exclusivity(b, a) = x;
    }
  }
  return report;
}

}  // namespace xrm
