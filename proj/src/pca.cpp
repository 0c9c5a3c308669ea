#include "graphnormals/pca.hpp"

#include <cmath>
#include <stdexcept>

#include <Eigen/Eigenvalues>

namespace graphnormals {

namespace {
constexpr double kDegenerateRatio = 1e-12;
constexpr double kSignThreshold = 1e-12;
}  // namespace

Vector3 canonical_sign(Vector3 n) {
  for (int c = 2; c >= 0; --c) {
    if (std::abs(n[c]) > kSignThreshold) {
      if (n[c] < 0.0) n = -n;
      break;
    }
  }
  return n;
}

PcaNormal pca_normal_from_scatter(const Eigen::Matrix3d& scatter) {
  PcaNormal out;
  const double scale = scatter.cwiseAbs().maxCoeff();
  if (!(scale > 0.0)) {
    out.degenerate = true;
    return out;
  }
  // The iterative solver keeps small eigenvalues accurate relative to the
  // largest, which the degeneracy test depends on; the closed form does not
  // when two eigenvalues nearly coincide.
  const Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> solver(scatter / scale);
  const Eigen::Vector3d values = solver.eigenvalues() * scale;  // ascending
  const Vector3 n = solver.eigenvectors().col(0);

  out.normal = canonical_sign(n.normalized());
  out.min_eigenvalue = std::max(0.0, out.normal.dot(scatter * out.normal));
  const double largest = values[2];
  out.degenerate = values[1] < kDegenerateRatio * largest;
  return out;
}

PcaNormal pca_normal(const Point3& center, std::span<const Point3> neighborhood) {
  if (neighborhood.empty()) throw std::invalid_argument("pca_normal: empty neighborhood");
  Eigen::Matrix3d scatter = Eigen::Matrix3d::Zero();
  for (const auto& x : neighborhood) {
    const Vector3 d = x - center;
    scatter.noalias() += d * d.transpose();
  }
  return pca_normal_from_scatter(scatter);
}

PcaField pca_field(const PointCloud& cloud, const NeighborGraph& graph) {
  const Index m = cloud.size();
  if (graph.neighbors.size() != m) throw std::invalid_argument("pca_field: graph does not match cloud");
  RowMatrix3 rows(m, 3);
  std::vector<bool> degenerate(static_cast<std::size_t>(m));
  std::vector<Point3> hood;
  for (Index i = 0; i < m; ++i) {
    hood.clear();
    for (Index j : graph.neighbors.of(i)) hood.push_back(cloud[j]);
    const PcaNormal r = pca_normal(cloud[i], hood);
    rows.row(i) = r.normal.transpose();
    degenerate[static_cast<std::size_t>(i)] = r.degenerate;
  }
  return {NormalField::normalized(std::move(rows)), std::move(degenerate)};
}

}  // namespace graphnormals
