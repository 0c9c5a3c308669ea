#pragma once

#include <filesystem>
#include <vector>

#include <Eigen/SparseCore>

#include "graphnormals/types.hpp"

namespace graphnormals {

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor, Index>;

/// Neighbor lists stored flat: entries [i*k, (i+1)*k) are the k nearest
/// neighbors of point i in ascending distance (ties to the lower index).
struct NeighborLists {
  Index k = 0;
  std::vector<Index> indices;

  Index size() const { return k == 0 ? 0 : static_cast<Index>(indices.size()) / k; }
  std::span<const Index> of(Index i) const {
    return {indices.data() + i * k, static_cast<std::size_t>(k)};
  }
};

/// k-nearest-neighbor graph with Gaussian edge weights. The adjacency is
/// symmetrized with the "or" rule: (i, j) is an edge when either point lists
/// the other among its k nearest, so rows of A may have more than k entries.
struct NeighborGraph {
  NeighborLists neighbors;
  SparseMatrix adjacency;
  Eigen::VectorXd degree;
  SparseMatrix laplacian;
};

/// Static kd-tree over a cloud for exact k-nearest-neighbor queries.
class KdTree {
 public:
  explicit KdTree(const std::vector<Point3>& points, Index leaf_size = 16);

  /// The k nearest points to points[query] other than itself, ordered by
  /// (distance, index).
  std::vector<Index> nearest(Index query, Index k) const;

 private:
  struct Node {
    Index begin = 0, end = 0;  // range into order_ (leaves only)
    int axis = -1;             // -1 marks a leaf
    double split = 0.0;
    Index left = -1, right = -1;
  };

  Index build(Index begin, Index end);
  template <typename Heap>
  void search(Index node, const Point3& q, Index query, Index k, Heap& heap) const;

  const std::vector<Point3>& points_;
  Index leaf_size_;
  std::vector<Index> order_;
  std::vector<Node> nodes_;
};

/// Exact k-NN lists. Uses exhaustive search below 64 points, a kd-tree above.
NeighborLists build_knn(const PointCloud& cloud, Index k);

/// A_ij = exp(-|x_i - x_j|^2 / sigma^2) on every symmetrized edge.
SparseMatrix build_adjacency(const PointCloud& cloud, const NeighborLists& neighbors, double sigma);

Eigen::VectorXd degree_vector(const SparseMatrix& adjacency);

/// L = I - D^{-1/2} A D^{-1/2}. Throws if any degree is not positive.
SparseMatrix build_laplacian(const SparseMatrix& adjacency, const Eigen::VectorXd& degree);

/// Sum over the three columns c of N of c^T L c (unscaled by lambda).
double laplacian_quadratic(const SparseMatrix& laplacian, const NormalField& field);

NeighborGraph build_graph(const PointCloud& cloud, Index k, double sigma);

/// Writes "row col value" lines for every stored entry.
void write_coo(const std::filesystem::path& path, const SparseMatrix& matrix);

}  // namespace graphnormals
