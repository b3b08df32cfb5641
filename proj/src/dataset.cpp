#include "xrm/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>

namespace xrm {

namespace {

constexpr int kMaxSplitAttempts = 64;

bool parse_double(std::string_view token, double& value) {
  if (!token.empty() && token.front() == '+') token.remove_prefix(1);
  if (token.empty()) return false;
  const char* end = token.data() + token.size();
  auto [ptr, ec] = std::from_chars(token.data(), end, value);
  return ec == std::errc() && ptr == end;
}

bool parse_index(std::string_view token, unsigned long long& value) {
  if (token.empty()) return false;
  const char* end = token.data() + token.size();
  auto [ptr, ec] = std::from_chars(token.data(), end, value);
  return ec == std::errc() && ptr == end;
}

std::vector<std::string_view> split_whitespace(std::string_view line) {
  std::vector<std::string_view> tokens;
  std::size_t pos = 0;
  while (pos < line.size()) {
    while (pos < line.size() && std::isspace(static_cast<unsigned char>(line[pos]))) ++pos;
    std::size_t start = pos;
    while (pos < line.size() && !std::isspace(static_cast<unsigned char>(line[pos]))) ++pos;
    if (pos > start) tokens.push_back(line.substr(start, pos - start));
  }
  return tokens;
}

std::string format_double(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

}  // namespace

DataSet::DataSet(Eigen::MatrixXd X, Eigen::VectorXd y) : X_(std::move(X)), y_(std::move(y)) {
  if (X_.rows() < 1 || X_.cols() < 1) {
    throw DataError("dataset needs at least one feature and one instance");
  }
  if (y_.size() != X_.cols()) {
    throw DataError("label count " + std::to_string(y_.size()) + " does not match instance count " +
                    std::to_string(X_.cols()));
  }
  for (Index i = 0; i < y_.size(); ++i) {
    if (y_(i) != 1.0 && y_(i) != -1.0) {
      throw DataError("label at instance " + std::to_string(i) + " is not -1 or +1");
    }
  }
  if (!X_.allFinite()) throw DataError("feature matrix contains NaN or Inf");
}

DataSet DataSet::subset(std::span<const Index> indices) const {
  Eigen::MatrixXd X(X_.rows(), static_cast<Index>(indices.size()));
  Eigen::VectorXd y(static_cast<Index>(indices.size()));
  for (std::size_t k = 0; k < indices.size(); ++k) {
    const Index i = indices[k];
    if (i < 0 || i >= instance_count()) throw DataError("subset index out of range");
    X.col(static_cast<Index>(k)) = X_.col(i);
    y(static_cast<Index>(k)) = y_(i);
  }
  return DataSet(std::move(X), std::move(y));
}

Eigen::VectorXd map_labels(const Eigen::VectorXd& raw) {
  std::set<double> values(raw.data(), raw.data() + raw.size());
  if (values.size() != 2) {
    std::string listed;
    for (double v : values) listed += (listed.empty() ? "" : ", ") + format_double(v);
    throw DataError("expected exactly two distinct labels, found {" + listed + "}");
  }
  const double high = *values.rbegin();
  Eigen::VectorXd mapped(raw.size());
  for (Index i = 0; i < raw.size(); ++i) mapped(i) = raw(i) == high ? 1.0 : -1.0;
  return mapped;
}

DataSet parse_sparse_text(std::istream& in) {
  struct Row {
    double label;
    std::vector<std::pair<Index, double>> entries;
  };
  std::vector<Row> rows;
  Index width = 0;
  std::string line;
  std::size_t line_no = 0;

  while (std::getline(in, line)) {
    ++line_no;
    const auto tokens = split_whitespace(line);
    if (tokens.empty()) continue;

    Row row;
    if (!parse_double(tokens[0], row.label) || !std::isfinite(row.label)) {
      throw ParseError(line_no, "label '" + std::string(tokens[0]) + "' is not a number");
    }
    unsigned long long previous = 0;
    for (std::size_t t = 1; t < tokens.size(); ++t) {
      const auto tok = tokens[t];
      const auto colon = tok.find(':');
      if (colon == std::string_view::npos) {
        throw ParseError(line_no, "expected index:value, got '" + std::string(tok) + "'");
      }
      unsigned long long index = 0;
      double value = 0.0;
      if (!parse_index(tok.substr(0, colon), index) || index == 0) {
        throw ParseError(line_no, "bad feature index in '" + std::string(tok) + "'");
      }
      if (!parse_double(tok.substr(colon + 1), value) || !std::isfinite(value)) {
        throw ParseError(line_no, "bad feature value in '" + std::string(tok) + "'");
      }
      if (index <= previous) {
        throw ParseError(line_no, "feature index " + std::to_string(index) + " is not increasing");
      }
      previous = index;
      row.entries.emplace_back(static_cast<Index>(index - 1), value);
      width = std::max(width, static_cast<Index>(index));
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ParseError(0, "empty input");
  if (width == 0) throw ParseError(0, "no features in input");

  Eigen::MatrixXd X = Eigen::MatrixXd::Zero(width, static_cast<Index>(rows.size()));
  Eigen::VectorXd raw(static_cast<Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    raw(static_cast<Index>(i)) = rows[i].label;
    for (const auto& [j, v] : rows[i].entries) X(j, static_cast<Index>(i)) = v;
  }
  // Labels already in {-1,+1} are kept as they are, so a file whose rows
  // all share one class still loads; other encodings go through map_labels.
  const bool signed_labels = (raw.array().abs() == 1.0).all();
  return DataSet(std::move(X), signed_labels ? raw : map_labels(raw));
}

DataSet load_sparse_text(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  return parse_sparse_text(in);
}

void write_sparse_text(std::ostream& out, const DataSet& data) {
  const auto& X = data.X();
  const Index width = data.feature_count();
  const bool pad_width = (X.row(width - 1).array() == 0.0).all();
  for (Index i = 0; i < data.instance_count(); ++i) {
    out << (data.y()(i) > 0 ? "+1" : "-1");
    for (Index j = 0; j < width; ++j) {
      if (X(j, i) != 0.0) out << ' ' << (j + 1) << ':' << format_double(X(j, i));
    }
    if (i == 0 && pad_width) out << ' ' << width << ":0";
    out << '\n';
  }
}

void save_sparse_text(const std::filesystem::path& path, const DataSet& data) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  write_sparse_text(out, data);
  if (!out) throw Error("write failed for " + path.string());
}

Split split(const DataSet& data, const SplitSpec& spec, int trial_index) {
  const Index n = data.instance_count();
  if (spec.train_size < 1 || spec.train_size >= n) {
    throw DataError("train size " + std::to_string(spec.train_size) + " must be in [1, " +
                    std::to_string(n) + ")");
  }
  if (trial_index < 0 || trial_index >= spec.trials) {
    throw DataError("trial index " + std::to_string(trial_index) + " outside [0, " +
                    std::to_string(spec.trials) + ")");
  }

  std::vector<Index> perm(static_cast<std::size_t>(n));
  for (int attempt = 0; attempt < kMaxSplitAttempts; ++attempt) {
    CounterRng rng(CounterRng::derive(spec.seed, static_cast<std::uint64_t>(trial_index),
                                      static_cast<std::uint64_t>(attempt)));
    std::iota(perm.begin(), perm.end(), Index{0});
    for (std::size_t i = perm.size() - 1; i > 0; --i) {
      std::swap(perm[i], perm[rng.below(i + 1)]);
    }
    const auto cut = perm.begin() + spec.train_size;
    const bool has_pos = std::any_of(perm.begin(), cut, [&](Index i) { return data.y()(i) > 0; });
    const bool has_neg = std::any_of(perm.begin(), cut, [&](Index i) { return data.y()(i) < 0; });
    if (!has_pos || !has_neg) continue;

    std::vector<Index> train(perm.begin(), cut);
    std::vector<Index> test(cut, perm.end());
    std::sort(train.begin(), train.end());
    std::sort(test.begin(), test.end());
    return Split{data.subset(train), data.subset(test), std::move(train), std::move(test)};
  }
  throw DataError("no training sample with both classes after " + std::to_string(kMaxSplitAttempts) +
                  " attempts");
}

std::uint64_t CounterRng::mix(std::uint64_t x) noexcept {
  // splitmix64 finalizer
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t CounterRng::derive(std::uint64_t seed, std::uint64_t a, std::uint64_t b) noexcept {
  return mix(mix(mix(seed) ^ a) ^ (b * 0xD1B54A32D192ED03ULL));
}

std::uint64_t CounterRng::next() noexcept {
  ++counter_;
  return mix(key_ ^ mix(counter_));
}

std::uint64_t CounterRng::below(std::uint64_t bound) noexcept {
  const std::uint64_t threshold = (0 - bound) % bound;
  for (;;) {
    const std::uint64_t r = next();
    if (r >= threshold) return r % bound;
  }
}

double CounterRng::uniform() noexcept { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

double CounterRng::normal() noexcept {
  const double u1 = 1.0 - uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

Standardizer Standardizer::fit(const DataSet& data) {
  const auto& X = data.X();
  Standardizer s;
  s.mean = X.rowwise().mean();
  s.scale = ((X.colwise() - s.mean).array().square().rowwise().sum() / static_cast<double>(X.cols()))
                .sqrt()
                .matrix();
  for (Index j = 0; j < s.scale.size(); ++j) {
    if (!(s.scale(j) > 0.0)) s.scale(j) = 1.0;
  }
  return s;
}

DataSet Standardizer::apply(const DataSet& data) const {
  if (data.feature_count() != mean.size()) {
    throw DataError("standardizer fitted on " + std::to_string(mean.size()) + " features, data has " +
                    std::to_string(data.feature_count()));
  }
  Eigen::MatrixXd X = (data.X().colwise() - mean).array().colwise() / scale.array();
  return DataSet(std::move(X), data.y());
}

DataSet make_synthetic(Index instances, Index features, std::uint64_t seed, double separation) {
  if (instances < 2 || features < 1) throw DataError("synthetic data needs >= 2 instances and >= 1 feature");
  CounterRng rng(CounterRng::derive(seed, 0x5e7));
  Eigen::VectorXd direction(features);
  for (Index j = 0; j < features; ++j) direction(j) = rng.normal();
  direction.normalize();

  Eigen::MatrixXd X(features, instances);
  Eigen::VectorXd y(instances);
  for (Index i = 0; i < instances; ++i) {
    y(i) = i == 0 ? 1.0 : i == 1 ? -1.0 : (rng.uniform() < 0.5 ? 1.0 : -1.0);
    for (Index j = 0; j < features; ++j) X(j, i) = rng.normal();
    X.col(i) += (0.5 * separation * y(i)) * direction;
  }
  return DataSet(std::move(X), std::move(y));
}

}  // namespace xrm
