#pragma once

#include <span>
#include <vector>

#include <Eigen/Core>

#include "graphnormals/knn_graph.hpp"
#include "graphnormals/types.hpp"

namespace graphnormals {

struct PcaNormal {
  Vector3 normal = Vector3::UnitZ();
  double min_eigenvalue = 0.0;
  /// True when the two smallest eigenvalues of the scatter matrix are both
  /// below 1e-12 of the largest; `normal` is then an arbitrary minimizer.
  bool degenerate = false;
};

/// Flips `n` so that its last component with magnitude above 1e-12 is positive.
Vector3 canonical_sign(Vector3 n);

/// Unit minimizer of sum_j <n, x_j - center>^2 (smallest eigenvector of the
/// scatter of the offsets about `center`).
PcaNormal pca_normal(const Point3& center, std::span<const Point3> neighborhood);

/// Same, from a precomputed 3x3 scatter matrix.
PcaNormal pca_normal_from_scatter(const Eigen::Matrix3d& scatter);

struct PcaField {
  NormalField normals;
  std::vector<bool> degenerate;
};

/// Applies pca_normal to every point over its k-NN list.
PcaField pca_field(const PointCloud& cloud, const NeighborGraph& graph);

}  // namespace graphnormals
