#include "graphnormals/segmentation.hpp"

#include <cmath>
#include <iomanip>
#include <map>
#include <numbers>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <Eigen/Geometry>

#include "graphnormals/pca.hpp"

namespace graphnormals {

namespace {

class DisjointSets {
 public:
  explicit DisjointSets(Index n) : parent_(static_cast<std::size_t>(n)) {
    std::iota(parent_.begin(), parent_.end(), Index{0});
  }
  Index find(Index x) {
    while (parent_[static_cast<std::size_t>(x)] != x) {
      auto& p = parent_[static_cast<std::size_t>(x)];
      p = parent_[static_cast<std::size_t>(p)];
      x = p;
    }
    return x;
  }
  // The smaller index becomes the root, so roots are component minima.
  void unite(Index a, Index b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (b < a) std::swap(a, b);
    parent_[static_cast<std::size_t>(b)] = a;
  }

 private:
  std::vector<Index> parent_;
};

}  // namespace

std::vector<int> cluster_by_normal(const NeighborGraph& graph, const NormalField& field, double threshold) {
  if (!(threshold > 0.0 && threshold <= 1.0))
    throw std::invalid_argument("cluster threshold must lie in (0, 1]");
  const Index m = field.size();
  if (graph.adjacency.rows() != m) throw std::invalid_argument("cluster_by_normal: field does not match graph");

  DisjointSets sets(m);
  for (Index i = 0; i < m; ++i) {
    for (SparseMatrix::InnerIterator it(graph.adjacency, i); it; ++it) {
      const Index j = it.col();
      if (j <= i) continue;
      if (std::abs(field[i].dot(field[j])) > threshold) sets.unite(i, j);
    }
  }
  std::vector<int> labels(static_cast<std::size_t>(m), -1);
  int next = 0;
  for (Index i = 0; i < m; ++i) {
    const Index root = sets.find(i);
    auto& root_label = labels[static_cast<std::size_t>(root)];
    if (root == i) root_label = next++;
    labels[static_cast<std::size_t>(i)] = root_label;
  }
  return labels;
}

std::vector<PlaneModel> fit_planes(const PointCloud& cloud, const std::vector<int>& labels) {
  if (static_cast<Index>(labels.size()) != cloud.size())
    throw std::invalid_argument("fit_planes: label count does not match cloud");
  std::map<int, std::vector<Index>> groups;
  for (Index i = 0; i < cloud.size(); ++i) groups[labels[static_cast<std::size_t>(i)]].push_back(i);

  std::vector<PlaneModel> planes;
  for (auto& [label, members] : groups) {
    if (members.size() < 3) continue;
    Vector3 centroid = Vector3::Zero();
    for (Index i : members) centroid += cloud[i];
    centroid /= static_cast<double>(members.size());
    Eigen::Matrix3d scatter = Eigen::Matrix3d::Zero();
    for (Index i : members) {
      const Vector3 d = cloud[i] - centroid;
      scatter.noalias() += d * d.transpose();
    }
    const PcaNormal fit = pca_normal_from_scatter(scatter);
    planes.push_back({label, fit.normal, fit.normal.dot(centroid), std::move(members)});
  }
  return planes;
}

Segmentation make_segmentation(const PointCloud& cloud, std::vector<int> labels) {
  auto planes = fit_planes(cloud, labels);
  return {std::move(labels), std::move(planes)};
}

SegMetrics score(const PointCloud& cloud, const Segmentation& predicted, const Segmentation& truth,
                 double overlap_tolerance) {
  const Index m = cloud.size();
  if (static_cast<Index>(predicted.labels.size()) != m || static_cast<Index>(truth.labels.size()) != m)
    throw std::invalid_argument("score: predicted has " + std::to_string(predicted.labels.size()) +
                                " labels, truth has " + std::to_string(truth.labels.size()) + ", cloud has " +
                                std::to_string(m) + " points");
  if (!(overlap_tolerance > 0.5 && overlap_tolerance <= 1.0))
    throw std::invalid_argument("overlap tolerance must lie in (0.5, 1]");

  const auto np = predicted.planes.size();
  const auto nt = truth.planes.size();
  // Region index of each point on both sides (-1: not in any scored region).
  auto region_of = [m](const std::vector<PlaneModel>& planes) {
    std::vector<long> region(static_cast<std::size_t>(m), -1);
    for (std::size_t r = 0; r < planes.size(); ++r)
      for (Index i : planes[r].members) region[static_cast<std::size_t>(i)] = static_cast<long>(r);
    return region;
  };
  const auto pred_region = region_of(predicted.planes);
  const auto truth_region = region_of(truth.planes);

  std::vector<std::map<std::size_t, double>> overlap(np);  // overlap[p][t]
  for (Index i = 0; i < m; ++i) {
    const long p = pred_region[static_cast<std::size_t>(i)];
    const long t = truth_region[static_cast<std::size_t>(i)];
    if (p >= 0 && t >= 0) overlap[static_cast<std::size_t>(p)][static_cast<std::size_t>(t)] += 1.0;
  }
  auto size_of = [](const PlaneModel& plane) { return static_cast<double>(plane.members.size()); };
  auto get = [&](std::size_t p, std::size_t t) {
    const auto it = overlap[p].find(t);
    return it == overlap[p].end() ? 0.0 : it->second;
  };
  const double tol = overlap_tolerance;

  SegMetrics out;
  std::vector<bool> pred_done(np, false), truth_done(nt, false);
  double matched_points = 0.0, overlap_pct = 0.0, sq_residual = 0.0, residual_count = 0.0, angle_sum = 0.0;

  for (std::size_t p = 0; p < np; ++p) {
    for (const auto& [t, o] : overlap[p]) {
      if (truth_done[t] || o < tol * size_of(predicted.planes[p]) || o < tol * size_of(truth.planes[t])) continue;
      pred_done[p] = truth_done[t] = true;
      ++out.n_correct;
      matched_points += o;
      overlap_pct += 100.0 * o / size_of(truth.planes[t]);
      const PlaneModel& plane = predicted.planes[p];
      for (Index i : plane.members) {
        const double r = plane.normal.dot(cloud[i]) - plane.offset;
        sq_residual += r * r;
        residual_count += 1.0;
      }
      // atan2 stays exact near zero, where acos of a rounded dot product does not.
      const Vector3& tn = truth.planes[t].normal;
      const double angle = std::atan2(plane.normal.cross(tn).norm(), std::abs(plane.normal.dot(tn)));
      angle_sum += angle * 180.0 / std::numbers::pi;
      break;
    }
  }

  // One truth region split across several predictions.
  for (std::size_t t = 0; t < nt; ++t) {
    if (truth_done[t]) continue;
    std::vector<std::size_t> parts;
    double covered = 0.0;
    for (std::size_t p = 0; p < np; ++p) {
      const double o = get(p, t);
      if (!pred_done[p] && o > 0.0 && o >= tol * size_of(predicted.planes[p])) {
        parts.push_back(p);
        covered += o;
      }
    }
    if (parts.size() >= 2 && covered >= tol * size_of(truth.planes[t])) {
      truth_done[t] = true;
      for (auto p : parts) pred_done[p] = true;
      ++out.n_over;
    }
  }

  // One prediction merging several truth regions.
  for (std::size_t p = 0; p < np; ++p) {
    if (pred_done[p]) continue;
    std::vector<std::size_t> parts;
    double covered = 0.0;
    for (const auto& [t, o] : overlap[p]) {
      if (!truth_done[t] && o >= tol * size_of(truth.planes[t])) {
        parts.push_back(t);
        covered += o;
      }
    }
    if (parts.size() >= 2 && covered >= tol * size_of(predicted.planes[p])) {
      pred_done[p] = true;
      for (auto t : parts) truth_done[t] = true;
      ++out.n_under;
    }
  }

  for (bool done : truth_done) out.n_missing += done ? 0 : 1;
  for (bool done : pred_done) out.n_spurious += done ? 0 : 1;

  out.fraction = 100.0 * matched_points / static_cast<double>(m);
  if (out.n_correct > 0) {
    const double n = static_cast<double>(out.n_correct);
    out.correct = overlap_pct / n;
    out.rmse_mm = 1000.0 * std::sqrt(sq_residual / residual_count);
    out.alpha_deg = angle_sum / n;
  } else {
    out.rmse_mm = std::numeric_limits<double>::quiet_NaN();
    out.alpha_deg = std::numeric_limits<double>::quiet_NaN();
  }
  return out;
}

std::string metrics_csv_header() { return "fraction,correct,rmse_mm,alpha_deg,n_o,n_u,n_m,n_s"; }

std::string metrics_csv_row(const SegMetrics& m) {
  std::ostringstream out;
  out << std::setprecision(10) << m.fraction << ',' << m.correct << ',' << m.rmse_mm << ',' << m.alpha_deg << ','
      << m.n_over << ',' << m.n_under << ',' << m.n_missing << ',' << m.n_spurious;
  return out.str();
}

std::string metrics_table(const SegMetrics& m, const std::string& method) {
  std::ostringstream out;
  out << std::left << std::setw(10) << "method" << std::right << std::setw(14) << "fraction [%]" << std::setw(14)
      << "correct [%]" << std::setw(12) << "RMSE [mm]" << std::setw(12) << "alpha [deg]" << std::setw(6) << "n_o"
      << std::setw(6) << "n_u" << std::setw(6) << "n_m" << std::setw(6) << "n_s" << '\n';
  out << std::left << std::setw(10) << method << std::right << std::fixed << std::setprecision(1) << std::setw(14)
      << m.fraction << std::setw(14) << m.correct << std::setw(12) << m.rmse_mm << std::setw(12) << m.alpha_deg
      << std::setw(6) << m.n_over << std::setw(6) << m.n_under << std::setw(6) << m.n_missing << std::setw(6)
      << m.n_spurious << '\n';
  return out.str();
}

}  // namespace graphnormals
