#include "xrm/model.hpp"

#include <cmath>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

namespace xrm {

namespace {

void require_features(const EnsembleModel& model, Index features) {
  if (features != model.feature_count()) {
    throw DataError("model has " + std::to_string(model.feature_count()) + " features, data has " +
                    std::to_string(features));
  }
}

}  // namespace

EnsembleModel::EnsembleModel(Eigen::MatrixXd W, Eigen::VectorXd b, double lambda, double loss_power)
    : W_(std::move(W)), b_(std::move(b)), lambda_(lambda), loss_power_(loss_power) {
  if (W_.rows() < 1 || W_.cols() < 1) throw DataError("model needs at least one feature and one component");
  if (b_.size() != W_.cols()) {
    throw DataError("bias count " + std::to_string(b_.size()) + " does not match component count " +
                    std::to_string(W_.cols()));
  }
  if (!W_.allFinite() || !b_.allFinite()) throw DataError("model parameters contain NaN or Inf");
  w_e_ = W_.rowwise().mean();
  b_e_ = b_.mean();
}

double decision_value(const EnsembleModel& model, const Eigen::Ref<const Eigen::VectorXd>& x) {
  require_features(model, x.size());
  return x.dot(model.w_e()) + model.b_e();
}

int predict(const EnsembleModel& model, const Eigen::Ref<const Eigen::VectorXd>& x) {
  return decision_value(model, x) >= 0.0 ? 1 : -1;
}

double ensemble_loss(const EnsembleModel& model, const DataSet& data, double p) {
  require_features(model, data.feature_count());
  const Eigen::VectorXd margins =
      ((data.X().transpose() * model.w_e()).array() + model.b_e()) * data.y().array();
  double loss = 0.0;
  for (Index i = 0; i < margins.size(); ++i) loss += hinge_power(margins(i), p);
  return loss;
}

double total_component_loss(const Eigen::MatrixXd& W, const Eigen::VectorXd& b, const DataSet& data, double p) {
  if (W.rows() != data.feature_count()) throw DataError("weight rows do not match feature count");
  const Eigen::MatrixXd margins =
      ((data.X().transpose() * W).rowwise() + b.transpose()).array().colwise() * data.y().array();
  double loss = 0.0;
  for (Index c = 0; c < margins.cols(); ++c) {
    for (Index i = 0; i < margins.rows(); ++i) loss += hinge_power(margins(i, c), p);
  }
  return loss;
}

double average_component_loss(const EnsembleModel& model, const DataSet& data, double p) {
  require_features(model, data.feature_count());
  return total_component_loss(model.W(), model.b(), data, p) / static_cast<double>(model.component_count());
}

EnsembleBound verify_ensemble_bound(const EnsembleModel& model, const DataSet& data, double p) {
  EnsembleBound bound;
  bound.ensemble_loss = ensemble_loss(model, data, p);
  bound.average_component_loss = average_component_loss(model, data, p);
  bound.holds = bound.ensemble_loss <= bound.average_component_loss + 1e-9;
  return bound;
}

double test_error(const EnsembleModel& model, const DataSet& data) {
  require_features(model, data.feature_count());
  Index wrong = 0;
  for (Index i = 0; i < data.instance_count(); ++i) {
    if (predict(model, data.X().col(i)) != static_cast<int>(data.y()(i))) ++wrong;
  }
  return static_cast<double>(wrong) / static_cast<double>(data.instance_count());
}

nlohmann::json model_to_json(const EnsembleModel& model) {
  const auto& W = model.W();
  std::vector<double> weights;
  weights.reserve(static_cast<std::size_t>(W.size()));
  for (Index j = 0; j < W.rows(); ++j) {
    for (Index c = 0; c < W.cols(); ++c) weights.push_back(W(j, c));
  }
  return {
      {"format", kModelFormat},
      {"features", W.rows()},
      {"components", W.cols()},
      {"W", weights},
      {"b", std::vector<double>(model.b().data(), model.b().data() + model.b().size())},
      {"lambda", model.lambda()},
      {"p", model.loss_power()},
  };
}

EnsembleModel model_from_json(const nlohmann::json& j) {
  try {
    if (j.at("format").get<std::string>() != kModelFormat) {
      throw DataError("unsupported model format '" + j.at("format").get<std::string>() + "'");
    }
    const auto rows = j.at("features").get<Index>();
    const auto cols = j.at("components").get<Index>();
    const auto weights = j.at("W").get<std::vector<double>>();
    const auto biases = j.at("b").get<std::vector<double>>();
    if (rows < 1 || cols < 1 || static_cast<Index>(weights.size()) != rows * cols) {
      throw DataError("model W has " + std::to_string(weights.size()) + " entries, expected " +
                      std::to_string(rows) + " x " + std::to_string(cols));
    }
    Eigen::MatrixXd W(rows, cols);
    for (Index r = 0; r < rows; ++r) {
      for (Index c = 0; c < cols; ++c) W(r, c) = weights[static_cast<std::size_t>(r * cols + c)];
    }
    Eigen::VectorXd b = Eigen::Map<const Eigen::VectorXd>(biases.data(), static_cast<Index>(biases.size()));
    return EnsembleModel(std::move(W), std::move(b), j.at("lambda").get<double>(), j.at("p").get<double>());
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed model JSON: ") + e.what());
  }
}

void save_model(const std::filesystem::path& path, const EnsembleModel& model) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << model_to_json(model).dump(2) << '\n';
  if (!out) throw Error("write failed for " + path.string());
}

EnsembleModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  try {
    return model_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

}  // namespace xrm
