#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "xrm/error.hpp"

namespace xrm {

using Index = Eigen::Index;

/// Binary classification data. X is stored feature-major: one column per
/// instance, so X is M x N. Labels are exactly -1 or +1.
///
/// Immutable after construction; the constructor enforces every invariant.
class DataSet {
 public:
  DataSet(Eigen::MatrixXd X, Eigen::VectorXd y);

  const Eigen::MatrixXd& X() const noexcept { return X_; }
  const Eigen::VectorXd& y() const noexcept { return y_; }
  Index feature_count() const noexcept { return X_.rows(); }
  Index instance_count() const noexcept { return X_.cols(); }

  /// Instances at `indices`, in the given order.
  DataSet subset(std::span<const Index> indices) const;

 private:
  Eigen::MatrixXd X_;
  Eigen::VectorXd y_;
};

/// Maps a two-valued label vector onto {-1,+1}: the larger raw value becomes +1.
Eigen::VectorXd map_labels(const Eigen::VectorXd& raw);

/// Reads `<label> <index>:<value> ...` lines (1-based, strictly increasing indices).
/// Labels already in {-1,+1} are kept; any other two-valued encoding goes through map_labels.
DataSet parse_sparse_text(std::istream& in);
DataSet load_sparse_text(const std::filesystem::path& path);

/// Writes nonzero entries with round-trip precision. If the last feature is
/// zero everywhere an explicit `M:0` entry is emitted so the width survives.
void write_sparse_text(std::ostream& out, const DataSet& data);
void save_sparse_text(const std::filesystem::path& path, const DataSet& data);

struct SplitSpec {
  Index train_size = 150;
  std::uint64_t seed = 1;
  int trials = 10;
};

struct Split {
  DataSet train;
  DataSet test;
  std::vector<Index> train_indices;
  std::vector<Index> test_indices;
};

/// Deterministic random split keyed on (spec.seed, trial_index). The training
/// part always contains both classes; the permutation is redrawn (bounded
/// number of times) until it does.
Split split(const DataSet& data, const SplitSpec& spec, int trial_index);

/// Counter-based generator: the k-th draw is a pure function of (key, k).
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t key) noexcept : key_(key) {}

  std::uint64_t next() noexcept;
  /// Uniform in [0, bound), unbiased.
  std::uint64_t below(std::uint64_t bound) noexcept;
  /// Uniform in [0, 1).
  double uniform() noexcept;
  double normal() noexcept;

  static std::uint64_t mix(std::uint64_t x) noexcept;
  static std::uint64_t derive(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) noexcept;

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

/// Per-feature z-score fitted on one dataset and applied to others.
/// Constant features are centered but not scaled.
struct Standardizer {
  Eigen::VectorXd mean;
  Eigen::VectorXd scale;

  static Standardizer fit(const DataSet& data);
  DataSet apply(const DataSet& data) const;
};

/// Two Gaussian classes in `features` dimensions whose means differ along a
/// random direction by `separation` standard deviations. Label balance is 50/50
/// in expectation; both classes are always present.
DataSet make_synthetic(Index instances, Index features, std::uint64_t seed, double separation = 1.5);

}  // namespace xrm
