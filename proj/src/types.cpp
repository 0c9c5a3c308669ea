#include "graphnormals/types.hpp"

#include <cmath>

namespace graphnormals {

PointCloud::PointCloud(std::vector<Point3> points) : points_(std::move(points)) {
  if (points_.empty()) throw std::invalid_argument("point cloud must contain at least one point");
  for (std::size_t i = 0; i < points_.size(); ++i) {
    if (!points_[i].allFinite())
      throw std::invalid_argument("point " + std::to_string(i) + " has a non-finite coordinate");
  }
}

NormalField NormalField::normalized(RowMatrix3 raw) {
  for (Index i = 0; i < raw.rows(); ++i) {
    const double norm = raw.row(i).norm();
    if (!std::isfinite(norm) || norm == 0.0)
      throw std::invalid_argument("normal " + std::to_string(i) + " cannot be normalized");
    raw.row(i) /= norm;
  }
  return NormalField(std::move(raw));
}

NormalField NormalField::normalized(std::span<const Vector3> raw) {
  RowMatrix3 rows(static_cast<Index>(raw.size()), 3);
  for (std::size_t i = 0; i < raw.size(); ++i) rows.row(static_cast<Index>(i)) = raw[i].transpose();
  return normalized(std::move(rows));
}

NormalField NormalField::from_unit(RowMatrix3 rows) {
  for (Index i = 0; i < rows.rows(); ++i) {
    const double norm = rows.row(i).norm();
    if (!(std::abs(norm - 1.0) <= kUnitTolerance))
      throw std::invalid_argument("normal " + std::to_string(i) + " is not unit length");
  }
  return NormalField(std::move(rows));
}

std::string_view to_string(Weighting w) {
  switch (w) {
    case Weighting::None: return "none";
    case Weighting::DotProduct: return "dot";
    case Weighting::InverseDistance: return "dist";
    case Weighting::DotProductOverDistance: return "dotdist";
  }
  return "unknown";
}

Weighting parse_weighting(std::string_view name) {
  for (Weighting w : kAllWeightings)
    if (name == to_string(w)) return w;
  throw std::invalid_argument("unknown weighting '" + std::string(name) +
                              "' (expected none, dot, dist or dotdist)");
}

void OptimizerConfig::validate(Index m) const {
  if (k < 1) throw std::invalid_argument("k must be a positive integer");
  if (k >= m)
    throw std::invalid_argument("k = " + std::to_string(k) + " must be smaller than the number of points (" +
                                std::to_string(m) + ")");
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw std::invalid_argument("lambda must be >= 0");
  if (alpha && !(*alpha > 0.0 && std::isfinite(*alpha))) throw std::invalid_argument("alpha must be > 0");
  if (!(epsilon > 0.0)) throw std::invalid_argument("epsilon must be > 0");
  if (!(sigma > 0.0) || !std::isfinite(sigma)) throw std::invalid_argument("sigma must be > 0");
  if (max_iters < 0) throw std::invalid_argument("max_iters must be >= 0");
}

}  // namespace graphnormals
