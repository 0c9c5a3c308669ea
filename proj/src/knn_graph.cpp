#include "graphnormals/knn_graph.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <queue>
#include <stdexcept>
#include <utility>

#include "graphnormals/cloud_io.hpp"

namespace graphnormals {

namespace {

constexpr Index kExhaustiveBelow = 64;

using Candidate = std::pair<double, Index>;  // (squared distance, index)

// Max-heap on (distance, index): the top is the current worst neighbor.
using CandidateHeap = std::priority_queue<Candidate>;

void offer(CandidateHeap& heap, Index k, Candidate c) {
  if (static_cast<Index>(heap.size()) < k) {
    heap.push(c);
  } else if (c < heap.top()) {
    heap.pop();
    heap.push(c);
  }
}

std::vector<Index> drain_sorted(CandidateHeap& heap) {
  std::vector<Index> out(heap.size());
  for (auto i = static_cast<std::ptrdiff_t>(out.size()) - 1; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = heap.top().second;
    heap.pop();
  }
  return out;
}

}  // namespace

KdTree::KdTree(const std::vector<Point3>& points, Index leaf_size)
    : points_(points), leaf_size_(std::max<Index>(1, leaf_size)), order_(points.size()) {
  std::iota(order_.begin(), order_.end(), Index{0});
  nodes_.reserve(2 * points.size() / static_cast<std::size_t>(leaf_size_) + 1);
  if (!points.empty()) build(0, static_cast<Index>(points.size()));
}

Index KdTree::build(Index begin, Index end) {
  const Index id = static_cast<Index>(nodes_.size());
  nodes_.push_back(Node{begin, end});
  if (end - begin <= leaf_size_) return id;

  Eigen::Vector3d lo = Eigen::Vector3d::Constant(std::numeric_limits<double>::infinity());
  Eigen::Vector3d hi = -lo;
  for (Index i = begin; i < end; ++i) {
    lo = lo.cwiseMin(points_[static_cast<std::size_t>(order_[static_cast<std::size_t>(i)])]);
    hi = hi.cwiseMax(points_[static_cast<std::size_t>(order_[static_cast<std::size_t>(i)])]);
  }
  int axis = 0;
  (hi - lo).maxCoeff(&axis);

  const Index mid = begin + (end - begin) / 2;
  std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                   [&](Index a, Index b) {
                     return points_[static_cast<std::size_t>(a)][axis] <
                            points_[static_cast<std::size_t>(b)][axis];
                   });
  const double split = points_[static_cast<std::size_t>(order_[static_cast<std::size_t>(mid)])][axis];

  const Index left = build(begin, mid);
  const Index right = build(mid, end);
  Node& node = nodes_[static_cast<std::size_t>(id)];
  node.axis = axis;
  node.split = split;
  node.left = left;
  node.right = right;
  return id;
}

template <typename Heap>
void KdTree::search(Index node_id, const Point3& q, Index query, Index k, Heap& heap) const {
  const Node& node = nodes_[static_cast<std::size_t>(node_id)];
  if (node.axis < 0) {
    for (Index i = node.begin; i < node.end; ++i) {
      const Index j = order_[static_cast<std::size_t>(i)];
      if (j == query) continue;
      offer(heap, k, {(points_[static_cast<std::size_t>(j)] - q).squaredNorm(), j});
    }
    return;
  }
  const double diff = q[node.axis] - node.split;
  const Index near = diff < 0.0 ? node.left : node.right;
  const Index far = diff < 0.0 ? node.right : node.left;
  search(near, q, query, k, heap);
  // Equal bounds are still visited so that lower-index ties are found.
  if (static_cast<Index>(heap.size()) < k || diff * diff <= heap.top().first)
    search(far, q, query, k, heap);
}

std::vector<Index> KdTree::nearest(Index query, Index k) const {
  CandidateHeap heap;
  search(0, points_[static_cast<std::size_t>(query)], query, k, heap);
  return drain_sorted(heap);
}

NeighborLists build_knn(const PointCloud& cloud, Index k) {
  const Index m = cloud.size();
  if (k < 1 || k >= m)
    throw std::invalid_argument("build_knn: need 1 <= k < m (k = " + std::to_string(k) +
                                ", m = " + std::to_string(m) + ")");
  NeighborLists lists{k, std::vector<Index>(static_cast<std::size_t>(m * k))};
  auto store = [&](Index i, const std::vector<Index>& nn) {
    std::copy(nn.begin(), nn.end(), lists.indices.begin() + i * k);
  };

  if (m < kExhaustiveBelow) {
    for (Index i = 0; i < m; ++i) {
      CandidateHeap heap;
      for (Index j = 0; j < m; ++j)
        if (j != i) offer(heap, k, {(cloud[j] - cloud[i]).squaredNorm(), j});
      store(i, drain_sorted(heap));
    }
  } else {
    const KdTree tree(cloud.points());
    for (Index i = 0; i < m; ++i) store(i, tree.nearest(i, k));
  }
  return lists;
}

SparseMatrix build_adjacency(const PointCloud& cloud, const NeighborLists& neighbors, double sigma) {
  if (!(sigma > 0.0) || !std::isfinite(sigma))
    throw std::invalid_argument("build_adjacency: sigma must be > 0");
  const Index m = cloud.size();
  if (neighbors.size() != m) throw std::invalid_argument("build_adjacency: neighbor lists do not match cloud");

  std::vector<std::pair<Index, Index>> edges;
  edges.reserve(neighbors.indices.size());
  for (Index i = 0; i < m; ++i) {
    for (Index j : neighbors.of(i)) {
      if (j < 0 || j >= m || j == i) throw std::invalid_argument("build_adjacency: invalid neighbor index");
      edges.emplace_back(std::min(i, j), std::max(i, j));
    }
  }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());

  const double inv_sigma2 = 1.0 / (sigma * sigma);
  std::vector<Eigen::Triplet<double, Index>> triplets;
  triplets.reserve(2 * edges.size());
  for (auto [i, j] : edges) {
    const double w = std::exp(-(cloud[i] - cloud[j]).squaredNorm() * inv_sigma2);
    triplets.emplace_back(i, j, w);
    triplets.emplace_back(j, i, w);
  }
  SparseMatrix a(m, m);
  a.setFromTriplets(triplets.begin(), triplets.end());
  return a;
}

Eigen::VectorXd degree_vector(const SparseMatrix& adjacency) {
  Eigen::VectorXd degree = Eigen::VectorXd::Zero(adjacency.rows());
  for (Index i = 0; i < adjacency.outerSize(); ++i)
    for (SparseMatrix::InnerIterator it(adjacency, i); it; ++it) degree[i] += it.value();
  return degree;
}

SparseMatrix build_laplacian(const SparseMatrix& adjacency, const Eigen::VectorXd& degree) {
  const Index m = adjacency.rows();
  if (adjacency.cols() != m || degree.size() != m)
    throw std::invalid_argument("build_laplacian: dimension mismatch");
  for (Index i = 0; i < m; ++i)
    if (!(degree[i] > 0.0))
      throw std::invalid_argument("build_laplacian: vertex " + std::to_string(i) + " has zero degree");

  std::vector<Eigen::Triplet<double, Index>> triplets;
  triplets.reserve(static_cast<std::size_t>(adjacency.nonZeros() + m));
  for (Index i = 0; i < m; ++i) {
    triplets.emplace_back(i, i, 1.0);
    for (SparseMatrix::InnerIterator it(adjacency, i); it; ++it) {
      const Index j = it.col();
      triplets.emplace_back(i, j, -it.value() / std::sqrt(degree[i] * degree[j]));
    }
  }
  SparseMatrix l(m, m);
  l.setFromTriplets(triplets.begin(), triplets.end());
  return l;
}

double laplacian_quadratic(const SparseMatrix& laplacian, const NormalField& field) {
  if (laplacian.rows() != field.size() || laplacian.cols() != field.size())
    throw std::invalid_argument("laplacian_quadratic: Laplacian is " + std::to_string(laplacian.rows()) +
                                "x" + std::to_string(laplacian.cols()) + " but field has " +
                                std::to_string(field.size()) + " rows");
  const RowMatrix3 ln = laplacian * field.rows();
  return ln.cwiseProduct(field.rows()).sum();
}

NeighborGraph build_graph(const PointCloud& cloud, Index k, double sigma) {
  NeighborGraph g;
  g.neighbors = build_knn(cloud, k);
  g.adjacency = build_adjacency(cloud, g.neighbors, sigma);
  g.degree = degree_vector(g.adjacency);
  g.laplacian = build_laplacian(g.adjacency, g.degree);
  return g;
}

void write_coo(const std::filesystem::path& path, const SparseMatrix& matrix) {
  std::string text;
  for (Index i = 0; i < matrix.outerSize(); ++i)
    for (SparseMatrix::InnerIterator it(matrix, i); it; ++it)
      text += std::to_string(it.row()) + ' ' + std::to_string(it.col()) + ' ' +
              io::format_real(it.value()) + '\n';
  io::write_file_atomic(path, text);
}

}  // namespace graphnormals
