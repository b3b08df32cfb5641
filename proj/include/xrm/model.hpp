#pragma once

#include <cmath>
#include <filesystem>

#include <Eigen/Dense>

#include "json.hpp"
#include "xrm/dataset.hpp"

namespace xrm {

inline constexpr const char* kModelFormat = "xrm-model/1";

/// Trained ensemble of C linear components. The averaged predictor
/// (w_e, b_e) is derived from W and b on construction and never stored apart.
class EnsembleModel {
 public:
  EnsembleModel(Eigen::MatrixXd W, Eigen::VectorXd b, double lambda, double loss_power);

  const Eigen::MatrixXd& W() const noexcept { return W_; }
  const Eigen::VectorXd& b() const noexcept { return b_; }
  const Eigen::VectorXd& w_e() const noexcept { return w_e_; }
  double b_e() const noexcept { return b_e_; }
  double lambda() const noexcept { return lambda_; }
  double loss_power() const noexcept { return loss_power_; }
  Index feature_count() const noexcept { return W_.rows(); }
  Index component_count() const noexcept { return W_.cols(); }

 private:
  Eigen::MatrixXd W_;
  Eigen::VectorXd b_;
  Eigen::VectorXd w_e_;
  double b_e_;
  double lambda_;
  double loss_power_;
};

/// (1 - margin)_+^p
inline double hinge_power(double margin, double p) {
  const double slack = 1.0 - margin;
  if (slack <= 0.0) return 0.0;
  if (p == 1.0) return slack;
  if (p == 2.0) return slack * slack;
  return std::pow(slack, p);
}

double decision_value(const EnsembleModel& model, const Eigen::Ref<const Eigen::VectorXd>& x);

/// Sign of the decision value; an exact zero maps to +1.
int predict(const EnsembleModel& model, const Eigen::Ref<const Eigen::VectorXd>& x);

/// Hinge loss of the averaged predictor, summed over instances.
double ensemble_loss(const EnsembleModel& model, const DataSet& data, double p);

/// Sum over components and instances of the per-component hinge loss.
double total_component_loss(const Eigen::MatrixXd& W, const Eigen::VectorXd& b, const DataSet& data, double p);

/// total_component_loss / C.
double average_component_loss(const EnsembleModel& model, const DataSet& data, double p);

struct EnsembleBound {
  bool holds = false;
  double ensemble_loss = 0.0;
  double average_component_loss = 0.0;
};

/// Checks that the averaged predictor's loss does not exceed the mean
/// component loss (Jensen), with an absolute slack of 1e-9.
EnsembleBound verify_ensemble_bound(const EnsembleModel& model, const DataSet& data, double p);

/// Fraction of instances whose predicted label differs from y.
double test_error(const EnsembleModel& model, const DataSet& data);

nlohmann::json model_to_json(const EnsembleModel& model);
EnsembleModel model_from_json(const nlohmann::json& j);
void save_model(const std::filesystem::path& path, const EnsembleModel& model);
EnsembleModel load_model(const std::filesystem::path& path);

}  // namespace xrm
