#pragma once

#include <filesystem>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "graphnormals/knn_graph.hpp"
#include "graphnormals/types.hpp"

// Graph-regularized normal estimation.
//
// The objective over a field N with unit rows n_i is
//
//   L(N) = sum_i n_i^T Xc_i^T W_i Xc_i n_i  +  lambda * sum_c N_c^T L N_c
//
// where Xc_i stacks the offsets x_j - x_i of the k neighbors of point i,
// W_i is a diagonal per-neighbor weight (identity when unweighted), L is the
// normalized graph Laplacian and N_c are the three columns of N. It is
// minimized by projected gradient descent: a plain gradient step on the
// flattened field followed by row-wise renormalization. Weights, when
// enabled, are re-evaluated from the current iterate before each step and
// held fixed while differentiating.
namespace graphnormals {

/// Neighbor offsets x_j - x_i for every point, row-aligned with the k-NN lists.
class CenteredNeighborhoods {
 public:
  CenteredNeighborhoods(const PointCloud& cloud, const NeighborLists& neighbors);

  Index size() const { return m_; }
  Index k() const { return k_; }
  const Vector3& offset(Index i, Index j) const { return offsets_[static_cast<std::size_t>(i * k_ + j)]; }
  /// Unweighted scatter Xc_i^T Xc_i.
  const Eigen::Matrix3d& gram(Index i) const { return grams_[static_cast<std::size_t>(i)]; }
  /// Xc_i^T W_i Xc_i for a diagonal W_i given by `weights` (length k).
  Eigen::Matrix3d weighted_gram(Index i, std::span<const double> weights) const;

 private:
  Index m_, k_;
  std::vector<Vector3> offsets_;
  std::vector<Eigen::Matrix3d> grams_;
};

/// Diagonal weights, entry (i, j) for the j-th neighbor of point i.
struct WeightMatrix {
  /// Upper clamp applied to inverse-distance weights.
  static constexpr double kMaxWeight = 1e6;

  Index k = 0;
  std::vector<double> values;

  Index size() const { return k == 0 ? 0 : static_cast<Index>(values.size()) / k; }
  std::span<const double> of(Index i) const { return {values.data() + i * k, static_cast<std::size_t>(k)}; }
};

WeightMatrix compute_weights(const PointCloud& cloud, const NeighborGraph& graph, const NormalField& field,
                             Weighting strategy);

/// Objective value; `weights` absent means W_i = I.
double loss(const CenteredNeighborhoods& hoods, const NeighborGraph& graph, const NormalField& field,
            double lambda, const WeightMatrix* weights = nullptr);

/// Flattened gradient (3m entries) with the weights held constant.
Eigen::VectorXd gradient(const CenteredNeighborhoods& hoods, const NeighborGraph& graph,
                         const NormalField& field, double lambda, const WeightMatrix* weights = nullptr);

struct Projection {
  NormalField field;
  /// Rows whose raw norm was below 1e-12 and were copied from the fallback.
  std::vector<Index> fallback_rows;
};

/// Normalizes each consecutive triple of `raw`. Rows too short to normalize
/// are replaced by the matching row of `fallback`.
Projection project(const Eigen::VectorXd& raw, const NormalField& fallback);

/// Step size 0.9 / h, where h = 2 max_i |M_i|_2 + 4 lambda bounds the Hessian
/// spectral norm for any weights the strategy can produce. Any alpha below
/// 1 / h makes every projected step non-increasing for fixed weights.
double default_step_size(const CenteredNeighborhoods& hoods, double lambda, Weighting strategy);

struct TraceRecord {
  Index iter = 0;
  /// Objective at the iterate entering this step, under its own weights.
  double loss = 0.0;
  /// |n_{t+1} - n_t| over the flattened field.
  double displacement = 0.0;
  double seconds = 0.0;
};

struct EstimateResult {
  NormalField normals;
  std::vector<TraceRecord> trace;
  std::vector<bool> degenerate;  // from the PCA initialization
  std::vector<Index> fallback_rows;
  double alpha = 0.0;
  double initial_loss = 0.0;
  double final_loss = 0.0;
  bool converged = false;
};

/// Runs the full pipeline: graph, PCA initialization, projected descent.
EstimateResult estimate(const PointCloud& cloud, const OptimizerConfig& config);

/// Same, reusing a prebuilt graph (must match config.k).
EstimateResult estimate(const PointCloud& cloud, const NeighborGraph& graph, const OptimizerConfig& config);

void write_trace_csv(const std::filesystem::path& path, const std::vector<TraceRecord>& trace);

}  // namespace graphnormals
