#include "xrm/cli.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "xrm/model.hpp"

namespace xrm::cli {

namespace {

// Thrown for unreadable inputs so run() can map it to kExitMissingFile.
class MissingFile : public Error {
 public:
  using Error::Error;
};

std::string fmt6(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::string percent(double fraction) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f%%", 100.0 * fraction);
  return buf;
}

void require_file(const std::filesystem::path& path, const char* what) {
  if (path.empty()) throw ConfigError(std::string("--") + what + " is required");
  std::error_code ec;
  if (!std::filesystem::is_regular_file(path, ec)) throw MissingFile("no such file: " + path.string());
}

DataSet load_data(const RunSpec& spec) {
  require_file(spec.data_path, "data");
  return load_sparse_text(spec.data_path);
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
  out.close();
  if (!out) throw Error("write failed for " + path.string());
}

void write_json(const std::filesystem::path& path, const nlohmann::json& j) { write_text(path, j.dump(2) + "\n"); }

SolverConfig single_config(const RunSpec& spec) {
  if (spec.lambdas.size() != 1 || spec.components.size() != 1) {
    throw ConfigError("--lambda and --components take a list only for sweep");
  }
  SolverConfig config = spec.config;
  config.lambda = spec.lambdas.front();
  config.components = spec.components.front();
  return config;
}

nlohmann::json standardizer_json(const Standardizer& s) {
  return {{"mean", std::vector<double>(s.mean.data(), s.mean.data() + s.mean.size())},
          {"scale", std::vector<double>(s.scale.data(), s.scale.data() + s.scale.size())}};
}

Standardizer standardizer_from_json(const nlohmann::json& j) {
  const auto mean = j.at("mean").get<std::vector<double>>();
  const auto scale = j.at("scale").get<std::vector<double>>();
  if (mean.size() != scale.size()) throw DataError("standardizer mean and scale differ in length");
  Standardizer s;
  s.mean = Eigen::Map<const Eigen::VectorXd>(mean.data(), static_cast<Index>(mean.size()));
  s.scale = Eigen::Map<const Eigen::VectorXd>(scale.data(), static_cast<Index>(scale.size()));
  return s;
}

struct TrialOutcome {
  double train_error = 0.0;
  double test_error = 0.0;
  int iterations = 0;
  double wall_time = 0.0;
};

TrialOutcome run_trial(const DataSet& data, const SplitSpec& split_spec, int trial, const SolverConfig& config,
                       bool standardize) {
  Split s = split(data, split_spec, trial);
  DataSet train_set = std::move(s.train);
  DataSet test_set = std::move(s.test);
  if (standardize) {
    const Standardizer z = Standardizer::fit(train_set);
    train_set = z.apply(train_set);
    test_set = z.apply(test_set);
  }
  const TrainResult result = train(train_set, config);
  return TrialOutcome{test_error(result.model, train_set), test_error(result.model, test_set),
                      result.report.iterations, result.report.wall_time};
}

double mean_of(const std::vector<double>& v) {
  double sum = 0.0;
  for (double x : v) sum += x;
  return v.empty() ? 0.0 : sum / static_cast<double>(v.size());
}

double sample_std(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

template <typename T>
std::vector<T> parse_list(const std::string& text, const char* flag) {
  std::vector<T> values;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    std::istringstream field(item);
    T value{};
    if (!(field >> value) || !(field >> std::ws).eof()) {
      throw ConfigError(std::string("bad value '") + item + "' for --" + flag);
    }
    values.push_back(value);
  }
  if (values.empty()) throw ConfigError(std::string("--") + flag + " needs at least one value");
  return values;
}

}  // namespace

std::optional<RunSpec> parse_args(int argc, const char* const* argv) {
  CLI::App app{"Diverse ensembles of linear max-margin classifiers", "xrm"};
  app.require_subcommand(1);

  RunSpec spec;
  std::string lambdas = "2";
  std::string components = "10";
  std::string sizes;
  std::string data, model, out;
  long long train_size = spec.split.train_size;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--data", data, "dataset in sparse text format")->required();
    sub->add_option("--model", model, "model JSON (written by train, read by eval)");
    sub->add_option("--out", out, "output report (JSON) or table (CSV)");
    sub->add_option("--lambda", lambdas, "loss weight; comma list for sweep")->capture_default_str();
    sub->add_option("--components", components, "ensemble size; comma list for sweep")->capture_default_str();
    sub->add_option("--p", spec.config.loss_power, "hinge exponent, >= 1")->capture_default_str();
    sub->add_option("--rho", spec.config.rho, "penalty growth factor")->capture_default_str();
    sub->add_option("--outer-tol", spec.config.outer_tol, "objective change that ends training")
        ->capture_default_str();
    sub->add_option("--residual-tol", spec.config.residual_tol, "constraint residual that ends training")
        ->capture_default_str();
    sub->add_option("--max-iters", spec.config.outer_max_iters, "cap on multiplier updates")->capture_default_str();
    sub->add_option("--train-size", train_size, "training instances per trial")->capture_default_str();
    sub->add_option("--trials", spec.split.trials, "number of random splits")->capture_default_str();
    sub->add_option("--seed", spec.split.seed, "split seed")->capture_default_str();
    sub->add_flag("--standardize", spec.standardize, "z-score features using training statistics");
    sub->add_flag("--no-timing", [&](std::int64_t) { spec.timing = false; }, "leave wall times out of outputs");
  };

  CLI::App* train_cmd = app.add_subcommand("train", "train on the whole file, write model and report");
  CLI::App* eval_cmd = app.add_subcommand("eval", "test error of a model, or mean +- std over retrained trials");
  CLI::App* sweep_cmd = app.add_subcommand("sweep", "train/test error over a lambda x components grid");
  CLI::App* bench_cmd = app.add_subcommand("bench", "total training time of 10 runs per training size");
  for (CLI::App* sub : {train_cmd, eval_cmd, sweep_cmd, bench_cmd}) add_common(sub);
  bench_cmd->add_option("--sizes", sizes, "comma list of training sizes")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    std::cout << app.help();
    return std::nullopt;
  } catch (const CLI::Error& e) {
    throw ConfigError(e.what());
  }

  if (train_cmd->parsed()) spec.command = Command::train;
  if (eval_cmd->parsed()) spec.command = Command::eval;
  if (sweep_cmd->parsed()) spec.command = Command::sweep;
  if (bench_cmd->parsed()) spec.command = Command::bench;

  spec.data_path = data;
  spec.model_path = model;
  spec.output_path = out;
  spec.split.train_size = static_cast<Index>(train_size);
  spec.lambdas = parse_list<double>(lambdas, "lambda");
  spec.components = parse_list<int>(components, "components");
  if (!sizes.empty()) {
    for (long long n : parse_list<long long>(sizes, "sizes")) spec.sizes.push_back(static_cast<Index>(n));
  }
  return spec;
}

int cmd_train(const RunSpec& spec, std::ostream& out, std::ostream&) {
  if (spec.model_path.empty()) throw ConfigError("train needs --model for the output model");
  const SolverConfig config = single_config(spec);
  DataSet data = load_data(spec);

  std::optional<Standardizer> z;
  if (spec.standardize) {
    z = Standardizer::fit(data);
    data = z->apply(data);
  }
  const TrainResult result = train(data, config);

  nlohmann::json model_json = model_to_json(result.model);
  if (z) model_json["standardize"] = standardizer_json(*z);
  write_json(spec.model_path, model_json);

  std::filesystem::path report_path = spec.output_path;
  if (report_path.empty()) report_path = std::filesystem::path(spec.model_path).concat(".report.json");
  nlohmann::json report = report_to_json(result.report, spec.timing);
  report["data"] = spec.data_path.string();
  report["standardize"] = spec.standardize;
  write_json(report_path, report);

  out << "final objective " << fmt6(result.report.final_objective) << ", iterations " << result.report.iterations;
  if (spec.timing) out << ", wall time " << fmt6(result.report.wall_time) << " s";
  out << (result.report.converged ? "" : " (iteration cap reached)") << '\n';
  return kExitOk;
}

int cmd_eval(const RunSpec& spec, std::ostream& out, std::ostream&) {
  if (!spec.model_path.empty()) {
    require_file(spec.model_path, "model");
    std::ifstream in(spec.model_path);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      throw DataError("cannot parse model " + spec.model_path.string() + ": " + e.what());
    }
    const EnsembleModel model = model_from_json(j);
    DataSet data = load_data(spec);
    if (j.contains("standardize")) data = standardizer_from_json(j.at("standardize")).apply(data);
    const double error = test_error(model, data);
    out << "test error " << percent(error) << '\n';
    if (!spec.output_path.empty()) {
      write_json(spec.output_path, {{"model", spec.model_path.string()},
                                    {"data", spec.data_path.string()},
                                    {"instances", data.instance_count()},
                                    {"test_error", error}});
    }
    return kExitOk;
  }

  const SolverConfig config = single_config(spec);
  config.validate();
  const DataSet data = load_data(spec);
  std::vector<double> errors;
  nlohmann::json trials = nlohmann::json::array();
  for (int t = 0; t < spec.split.trials; ++t) {
    const TrialOutcome o = run_trial(data, spec.split, t, config, spec.standardize);
    errors.push_back(o.test_error);
    nlohmann::json row = {{"trial", t}, {"train_error", o.train_error}, {"test_error", o.test_error},
                          {"iterations", o.iterations}};
    if (spec.timing) row["wall_time"] = o.wall_time;
    trials.push_back(std::move(row));
  }
  const double mean = mean_of(errors);
  const double sd = sample_std(errors);
  char line[96];
  std::snprintf(line, sizeof line, "test error %.2f +- %.2f %% over %d trials\n", 100.0 * mean, 100.0 * sd,
                spec.split.trials);
  out << line;
  if (!spec.output_path.empty()) {
    write_json(spec.output_path, {{"config", config_to_json(config)},
                                  {"data", spec.data_path.string()},
                                  {"train_size", spec.split.train_size},
                                  {"seed", spec.split.seed},
                                  {"standardize", spec.standardize},
                                  {"trials", std::move(trials)},
                                  {"mean_test_error", mean},
                                  {"std_test_error", sd}});
  }
  return kExitOk;
}

int cmd_sweep(const RunSpec& spec, std::ostream& out, std::ostream&) {
  if (spec.lambdas.empty() || spec.components.empty()) throw ConfigError("sweep grid is empty");
  for (double lambda : spec.lambdas) {
    for (int c : spec.components) {
      SolverConfig config = spec.config;
      config.lambda = lambda;
      config.components = c;
      config.validate();
    }
  }
  const DataSet data = load_data(spec);

  std::ostringstream csv;
  csv << "lambda,components,trial,train_error,test_error,iterations" << (spec.timing ? ",wall_time" : "") << '\n';
  for (double lambda : spec.lambdas) {
    for (int c : spec.components) {
      SolverConfig config = spec.config;
      config.lambda = lambda;
      config.components = c;
      for (int t = 0; t < spec.split.trials; ++t) {
        const TrialOutcome o = run_trial(data, spec.split, t, config, spec.standardize);
        csv << fmt6(lambda) << ',' << c << ',' << t << ',' << fmt6(o.train_error) << ',' << fmt6(o.test_error)
            << ',' << o.iterations;
        if (spec.timing) csv << ',' << fmt6(o.wall_time);
        csv << '\n';
      }
    }
  }
  if (spec.output_path.empty()) {
    out << csv.str();
  } else {
    write_text(spec.output_path, csv.str());
  }
  return kExitOk;
}

int cmd_bench(const RunSpec& spec, std::ostream& out, std::ostream&) {
  if (spec.sizes.empty()) throw ConfigError("bench needs --sizes");
  const SolverConfig config = single_config(spec);
  config.validate();
  const DataSet data = load_data(spec);
  for (Index n : spec.sizes) {
    if (n < 2 || n > data.instance_count()) {
      throw DataError("bench size " + std::to_string(n) + " outside [2, " + std::to_string(data.instance_count()) +
                      "]");
    }
  }

  std::ostringstream csv;
  csv << "n_train,runs,mean_iterations" << (spec.timing ? ",total_seconds" : "") << '\n';
  for (Index n : spec.sizes) {
    double seconds = 0.0;
    long iterations = 0;
    for (int t = 0; t < spec.split.trials; ++t) {
      DataSet train_set = data;
      if (n < data.instance_count()) {
        SplitSpec s = spec.split;
        s.train_size = n;
        train_set = split(data, s, t).train;
      }
      if (spec.standardize) train_set = Standardizer::fit(train_set).apply(train_set);
      const auto started = std::chrono::steady_clock::now();
      const TrainResult result = train(train_set, config);
      seconds += std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
      iterations += result.report.iterations;
    }
    csv << n << ',' << spec.split.trials << ','
        << fmt6(static_cast<double>(iterations) / static_cast<double>(spec.split.trials));
    if (spec.timing) csv << ',' << fmt6(seconds);
    csv << '\n';
  }
  if (spec.output_path.empty()) {
    out << csv.str();
  } else {
    write_text(spec.output_path, csv.str());
  }
  return kExitOk;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  try {
    const auto spec = parse_args(argc, argv);
    if (!spec) return kExitOk;
    switch (spec->command) {
      case Command::train: return cmd_train(*spec, out, err);
      case Command::eval: return cmd_eval(*spec, out, err);
      case Command::sweep: return cmd_sweep(*spec, out, err);
      case Command::bench: return cmd_bench(*spec, out, err);
    }
  } catch (const MissingFile& e) {
    err << "xrm: " << e.what() << '\n';
    return kExitMissingFile;
  } catch (const DivergenceError& e) {
    err << "xrm: solver diverged at " << e.what() << '\n';
    return kExitDiverged;
  } catch (const std::exception& e) {
    err << "xrm: " << e.what() << '\n';
    return kExitError;
  }
  return kExitError;
}

}  // namespace xrm::cli
