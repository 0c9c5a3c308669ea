#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace graphnormals {

using Index = std::int64_t;
using Point3 = Eigen::Vector3d;
using Vector3 = Eigen::Vector3d;

/// Row-major m x 3 storage; its flattened form is [n_1^T, ..., n_m^T]^T.
using RowMatrix3 = Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor>;

/// Ordered, non-empty set of finite 3D points. Indices are stable for the
/// lifetime of the object.
class PointCloud {
 public:
  explicit PointCloud(std::vector<Point3> points);

  Index size() const { return static_cast<Index>(points_.size()); }
  const Point3& operator[](Index i) const { return points_[static_cast<std::size_t>(i)]; }
  const std::vector<Point3>& points() const { return points_; }

 private:
  std::vector<Point3> points_;
};

/// Per-point unit normals. Every row has norm 1 within 1e-9.
class NormalField {
 public:
  static constexpr double kUnitTolerance = 1e-9;

  /// Normalizes each row. Throws on zero-length or non-finite rows.
  static NormalField normalized(RowMatrix3 raw);
  static NormalField normalized(std::span<const Vector3> raw);

  /// Accepts rows that are already unit length; throws otherwise.
  static NormalField from_unit(RowMatrix3 rows);

  Index size() const { return rows_.rows(); }
  Vector3 operator[](Index i) const { return rows_.row(i).transpose(); }
  const RowMatrix3& rows() const { return rows_; }

  /// Flattened 3m view, row i occupying entries [3i, 3i + 3).
  Eigen::Map<const Eigen::VectorXd> flat() const {
    return {rows_.data(), rows_.size()};
  }

 private:
  explicit NormalField(RowMatrix3 rows) : rows_(std::move(rows)) {}
  RowMatrix3 rows_;
};

enum class Weighting { None, DotProduct, InverseDistance, DotProductOverDistance };

inline constexpr Weighting kAllWeightings[] = {Weighting::None, Weighting::DotProduct,
                                               Weighting::InverseDistance,
                                               Weighting::DotProductOverDistance};

std::string_view to_string(Weighting w);
Weighting parse_weighting(std::string_view name);

struct OptimizerConfig {
  Index k = 18;
  double lambda = 0.01;
  /// Step size. Empty selects the automatic Lipschitz-based step.
  std::optional<double> alpha;
  double epsilon = 1e-6;
  double sigma = 1.0;
  Index max_iters = 50000;
  Weighting weighting = Weighting::None;
  std::uint64_t seed = 0;

  /// Throws std::invalid_argument naming the offending field.
  void validate(Index m) const;
};

}  // namespace graphnormals
