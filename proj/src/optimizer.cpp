#include "graphnormals/optimizer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include <Eigen/Eigenvalues>

#include "graphnormals/cloud_io.hpp"
#include "graphnormals/pca.hpp"

namespace graphnormals {

CenteredNeighborhoods::CenteredNeighborhoods(const PointCloud& cloud, const NeighborLists& neighbors)
    : m_(cloud.size()), k_(neighbors.k) {
  if (neighbors.size() != m_) throw std::invalid_argument("CenteredNeighborhoods: neighbor lists do not match cloud");
  offsets_.resize(static_cast<std::size_t>(m_ * k_));
  grams_.resize(static_cast<std::size_t>(m_));
  for (Index i = 0; i < m_; ++i) {
    Eigen::Matrix3d gram = Eigen::Matrix3d::Zero();
    const auto nn = neighbors.of(i);
    for (Index j = 0; j < k_; ++j) {
      const Vector3 d = cloud[nn[static_cast<std::size_t>(j)]] - cloud[i];
      offsets_[static_cast<std::size_t>(i * k_ + j)] = d;
      gram.noalias() += d * d.transpose();
    }
    grams_[static_cast<std::size_t>(i)] = gram;
  }
}

Eigen::Matrix3d CenteredNeighborhoods::weighted_gram(Index i, std::span<const double> weights) const {
  Eigen::Matrix3d gram = Eigen::Matrix3d::Zero();
  for (Index j = 0; j < k_; ++j) {
    const Vector3& d = offset(i, j);
    gram.noalias() += weights[static_cast<std::size_t>(j)] * d * d.transpose();
  }
  return gram;
}

namespace {

double inverse_distance(double distance) {
  return distance > 0.0 ? std::min(1.0 / distance, WeightMatrix::kMaxWeight) : WeightMatrix::kMaxWeight;
}

void check_shapes(const CenteredNeighborhoods& hoods, const NeighborGraph& graph, const NormalField& field,
                  const WeightMatrix* weights) {
  const Index m = field.size();
  if (hoods.size() != m || graph.laplacian.rows() != m)
    throw std::invalid_argument("field has " + std::to_string(m) + " rows but the graph has " +
                                std::to_string(graph.laplacian.rows()) + " vertices");
  if (weights && (weights->k != hoods.k() || weights->size() != m))
    throw std::invalid_argument("weight matrix does not match the neighborhoods");
}

// n^T Xc^T W Xc n = sum_j w_j <n, d_j>^2, and its gradient 2 sum_j w_j <n, d_j> d_j.
double data_term(const CenteredNeighborhoods& hoods, const NormalField& field, const WeightMatrix* weights,
                 Eigen::VectorXd* grad) {
  double total = 0.0;
  const auto& rows = field.rows();
  for (Index i = 0; i < hoods.size(); ++i) {
    const Vector3 n = rows.row(i).transpose();
    Vector3 g = Vector3::Zero();
    double value = 0.0;
    for (Index j = 0; j < hoods.k(); ++j) {
      const Vector3& d = hoods.offset(i, j);
      const double w = weights ? weights->values[static_cast<std::size_t>(i * hoods.k() + j)] : 1.0;
      const double proj = n.dot(d);
      value += w * proj * proj;
      g += (w * proj) * d;
    }
    total += value;
    if (grad) grad->segment<3>(3 * i) = 2.0 * g;
  }
  return total;
}

}  // namespace

WeightMatrix compute_weights(const PointCloud& cloud, const NeighborGraph& graph, const NormalField& field,
                             Weighting strategy) {
  const Index m = cloud.size();
  const Index k = graph.neighbors.k;
  if (field.size() != m || graph.neighbors.size() != m)
    throw std::invalid_argument("compute_weights: field, graph and cloud sizes differ");
  WeightMatrix w{k, std::vector<double>(static_cast<std::size_t>(m * k), 1.0)};
  if (strategy == Weighting::None) return w;

  for (Index i = 0; i < m; ++i) {
    const auto nn = graph.neighbors.of(i);
    for (Index j = 0; j < k; ++j) {
      const Index other = nn[static_cast<std::size_t>(j)];
      const double dot = std::abs(field[i].dot(field[other]));
      const double dist = (cloud[i] - cloud[other]).norm();
      double value = 1.0;
      switch (strategy) {
        case Weighting::DotProduct: value = dot; break;
        case Weighting::InverseDistance: value = inverse_distance(dist); break;
        case Weighting::DotProductOverDistance:
          value = dist > 0.0 ? std::min(dot / dist, WeightMatrix::kMaxWeight) : dot * WeightMatrix::kMaxWeight;
          break;
        case Weighting::None: break;
      }
      w.values[static_cast<std::size_t>(i * k + j)] = value;
    }
  }
  return w;
}

double loss(const CenteredNeighborhoods& hoods, const NeighborGraph& graph, const NormalField& field,
            double lambda, const WeightMatrix* weights) {
  check_shapes(hoods, graph, field, weights);
  const double value = data_term(hoods, field, weights, nullptr) +
                       lambda * laplacian_quadratic(graph.laplacian, field);
  if (!std::isfinite(value)) throw std::runtime_error("loss evaluated to a non-finite value");
  return value;
}

Eigen::VectorXd gradient(const CenteredNeighborhoods& hoods, const NeighborGraph& graph,
                         const NormalField& field, double lambda, const WeightMatrix* weights) {
  check_shapes(hoods, graph, field, weights);
  Eigen::VectorXd grad(3 * field.size());
  data_term(hoods, field, weights, &grad);
  const RowMatrix3 ln = graph.laplacian * field.rows();
  grad += (2.0 * lambda) * Eigen::Map<const Eigen::VectorXd>(ln.data(), ln.size());
  if (!grad.allFinite()) throw std::runtime_error("gradient has non-finite entries");
  return grad;
}

Projection project(const Eigen::VectorXd& raw, const NormalField& fallback) {
  if (raw.size() != 3 * fallback.size())
    throw std::invalid_argument("project: expected " + std::to_string(3 * fallback.size()) + " entries");
  const Index m = fallback.size();
  RowMatrix3 rows(m, 3);
  std::vector<Index> fallback_rows;
  for (Index i = 0; i < m; ++i) {
    const Vector3 v = raw.segment<3>(3 * i);
    const double norm = v.norm();
    if (norm < 1e-12 || !std::isfinite(norm)) {
      rows.row(i) = fallback.rows().row(i);
      fallback_rows.push_back(i);
    } else {
      rows.row(i) = (v / norm).transpose();
    }
  }
  return {NormalField::from_unit(std::move(rows)), std::move(fallback_rows)};
}

double default_step_size(const CenteredNeighborhoods& hoods, double lambda, Weighting strategy) {
  // |n_i . n_j| <= 1, so the unweighted scatter bounds the dot-product
  // weighting and the clamped inverse distance bounds the combined one.
  const bool distance_weighted =
      strategy == Weighting::InverseDistance || strategy == Weighting::DotProductOverDistance;
  std::vector<double> bound(static_cast<std::size_t>(hoods.k()));
  double max_eigenvalue = 0.0;
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> solver;
  for (Index i = 0; i < hoods.size(); ++i) {
    Eigen::Matrix3d gram;
    if (distance_weighted) {
      for (Index j = 0; j < hoods.k(); ++j)
        bound[static_cast<std::size_t>(j)] = inverse_distance(hoods.offset(i, j).norm());
      gram = hoods.weighted_gram(i, bound);
    } else {
      gram = hoods.gram(i);
    }
    solver.computeDirect(gram, Eigen::EigenvaluesOnly);
    max_eigenvalue = std::max(max_eigenvalue, solver.eigenvalues()[2]);
  }
  // Laplacian eigenvalues lie in [0, 2].
  const double hessian_bound = 2.0 * max_eigenvalue + 4.0 * lambda;
  return hessian_bound > 0.0 ? 0.9 / hessian_bound : 1.0;
}

EstimateResult estimate(const PointCloud& cloud, const OptimizerConfig& config) {
  config.validate(cloud.size());
  return estimate(cloud, build_graph(cloud, config.k, config.sigma), config);
}

EstimateResult estimate(const PointCloud& cloud, const NeighborGraph& graph, const OptimizerConfig& config) {
  using clock = std::chrono::steady_clock;
  config.validate(cloud.size());
  if (graph.neighbors.k != config.k || graph.neighbors.size() != cloud.size())
    throw std::invalid_argument("estimate: graph was built for a different cloud or k");

  const CenteredNeighborhoods hoods(cloud, graph.neighbors);
  PcaField init = pca_field(cloud, graph);
  const bool weighted = config.weighting != Weighting::None;
  const double alpha = config.alpha.value_or(default_step_size(hoods, config.lambda, config.weighting));

  auto current_loss = [&](const NormalField& field, WeightMatrix& weights) {
    if (weighted) weights = compute_weights(cloud, graph, field, config.weighting);
    return loss(hoods, graph, field, config.lambda, weighted ? &weights : nullptr);
  };

  EstimateResult result{init.normals, {}, std::move(init.degenerate), {}, alpha};
  WeightMatrix weights;
  result.initial_loss = current_loss(result.normals, weights);
  double entering_loss = result.initial_loss;

  for (Index t = 0; t < config.max_iters; ++t) {
    const auto start = clock::now();
    if (t > 0) entering_loss = current_loss(result.normals, weights);
    const Eigen::VectorXd grad =
        gradient(hoods, graph, result.normals, config.lambda, weighted ? &weights : nullptr);
    Projection next = project(result.normals.flat() - alpha * grad, result.normals);
    const double displacement = (next.field.flat() - result.normals.flat()).norm();
    result.normals = std::move(next.field);
    result.fallback_rows.insert(result.fallback_rows.end(), next.fallback_rows.begin(), next.fallback_rows.end());
    const double seconds = std::chrono::duration<double>(clock::now() - start).count();
    result.trace.push_back({t, entering_loss, displacement, seconds});
    if (displacement < config.epsilon) {
      result.converged = true;
      break;
    }
  }
  std::sort(result.fallback_rows.begin(), result.fallback_rows.end());
  result.fallback_rows.erase(std::unique(result.fallback_rows.begin(), result.fallback_rows.end()),
                             result.fallback_rows.end());
  result.final_loss = current_loss(result.normals, weights);
  return result;
}

void write_trace_csv(const std::filesystem::path& path, const std::vector<TraceRecord>& trace) {
  std::ostringstream out;
  out << "iter,loss,displacement,seconds\n";
  for (const auto& r : trace)
    out << r.iter << ',' << io::format_real(r.loss) << ',' << io::format_real(r.displacement) << ','
        << io::format_real(r.seconds) << '\n';
  io::write_file_atomic(path, out.str());
}

}  // namespace graphnormals
