#pragma once

// Independent reference implementations used only by the tests. They favor
// literal, dense constructions over speed and share no code with the library
// beyond its value types.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <functional>
#include <numeric>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include "graphnormals/types.hpp"

namespace oracle {

using graphnormals::Index;
using graphnormals::NormalField;
using graphnormals::Point3;
using graphnormals::PointCloud;
using graphnormals::RowMatrix3;
using graphnormals::Vector3;

inline PointCloud random_cloud(Index m, std::mt19937_64& rng, double extent = 1.0) {
  std::uniform_real_distribution<double> u(-extent, extent);
  std::vector<Point3> pts(static_cast<std::size_t>(m));
  for (auto& p : pts) p = Point3(u(rng), u(rng), u(rng));
  return PointCloud(std::move(pts));
}

inline NormalField random_field(Index m, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  RowMatrix3 rows(m, 3);
  for (Index i = 0; i < m; ++i) rows.row(i) << g(rng), g(rng), g(rng);
  return NormalField::normalized(std::move(rows));
}

/// All-pairs k-NN by full sort on (squared distance, index).
inline std::vector<std::vector<Index>> brute_knn(const PointCloud& cloud, Index k) {
  const Index m = cloud.size();
  std::vector<std::vector<Index>> out(static_cast<std::size_t>(m));
  for (Index i = 0; i < m; ++i) {
    std::vector<std::pair<double, Index>> cand;
    for (Index j = 0; j < m; ++j)
      if (j != i) cand.emplace_back((cloud[i] - cloud[j]).squaredNorm(), j);
    std::sort(cand.begin(), cand.end());
    for (Index t = 0; t < k; ++t) out[static_cast<std::size_t>(i)].push_back(cand[static_cast<std::size_t>(t)].second);
  }
  return out;
}

/// Symmetrized ("either lists the other") dense Gaussian adjacency.
inline Eigen::MatrixXd dense_adjacency(const PointCloud& cloud, const std::vector<std::vector<Index>>& nn,
                                       double sigma) {
  const Index m = cloud.size();
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(m, m);
  for (Index i = 0; i < m; ++i)
    for (Index j : nn[static_cast<std::size_t>(i)]) {
      const double w = std::exp(-(cloud[i] - cloud[j]).squaredNorm() / (sigma * sigma));
      a(i, j) = w;
      a(j, i) = w;
    }
  return a;
}

inline Eigen::MatrixXd dense_laplacian(const Eigen::MatrixXd& a) {
  const Eigen::VectorXd d = a.rowwise().sum();
  const Eigen::VectorXd s = d.cwiseSqrt().cwiseInverse();
  return Eigen::MatrixXd::Identity(a.rows(), a.cols()) - s.asDiagonal() * a * s.asDiagonal();
}

/// R_i: 3 x 3m selector with R_i n = n_i.
inline Eigen::MatrixXd row_selector(Index i, Index m) {
  Eigen::MatrixXd r = Eigen::MatrixXd::Zero(3, 3 * m);
  for (int c = 0; c < 3; ++c) r(c, 3 * i + c) = 1.0;
  return r;
}

/// C_j: m x 3m selector with C_j n = j-th column of N.
inline Eigen::MatrixXd column_selector(int j, Index m) {
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(m, 3 * m);
  for (Index r = 0; r < m; ++r) c(r, 3 * r + j) = 1.0;
  return c;
}

/// The 3m x 3m matrix H with loss = n^T H n, built from explicit selectors,
/// per-point offset matrices Xc_i and diagonal weights W_i.
inline Eigen::MatrixXd dense_hessian_half(const PointCloud& cloud, const std::vector<std::vector<Index>>& nn,
                                          const Eigen::MatrixXd& laplacian, double lambda,
                                          const std::vector<std::vector<double>>* weights = nullptr) {
  const Index m = cloud.size();
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(3 * m, 3 * m);
  for (Index i = 0; i < m; ++i) {
    const auto& list = nn[static_cast<std::size_t>(i)];
    const auto k = static_cast<Index>(list.size());
    Eigen::MatrixXd xc(k, 3);
    Eigen::MatrixXd w = Eigen::MatrixXd::Identity(k, k);
    for (Index j = 0; j < k; ++j) {
      xc.row(j) = (cloud[list[static_cast<std::size_t>(j)]] - cloud[i]).transpose();
      if (weights) w(j, j) = (*weights)[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    }
    const Eigen::MatrixXd r = row_selector(i, m);
    h += r.transpose() * xc.transpose() * w * xc * r;
  }
  for (int j = 0; j < 3; ++j) {
    const Eigen::MatrixXd c = column_selector(j, m);
    h += lambda * c.transpose() * laplacian * c;
  }
  return h;
}

inline Eigen::VectorXd flatten(const NormalField& field) {
  Eigen::VectorXd v(3 * field.size());
  for (Index i = 0; i < field.size(); ++i) v.segment<3>(3 * i) = field[i];
  return v;
}

/// Central differences of f at x with step h.
inline Eigen::VectorXd finite_difference(const std::function<double(const Eigen::VectorXd&)>& f,
                                         const Eigen::VectorXd& x, double h) {
  Eigen::VectorXd g(x.size());
  for (Index i = 0; i < x.size(); ++i) {
    Eigen::VectorXd a = x, b = x;
    a[i] += h;
    b[i] -= h;
    g[i] = (f(a) - f(b)) / (2.0 * h);
  }
  return g;
}

/// Unweighted data term evaluated from its defining double sum, for any
/// (not necessarily unit) flattened field.
inline double literal_data_term(const PointCloud& cloud, const std::vector<std::vector<Index>>& nn,
                                const Eigen::VectorXd& n, const std::vector<std::vector<double>>* weights) {
  double total = 0.0;
  for (Index i = 0; i < cloud.size(); ++i) {
    const Vector3 ni = n.segment<3>(3 * i);
    const auto& list = nn[static_cast<std::size_t>(i)];
    for (std::size_t j = 0; j < list.size(); ++j) {
      const double w = weights ? (*weights)[static_cast<std::size_t>(i)][j] : 1.0;
      const double p = ni.dot(cloud[list[j]] - cloud[i]);
      total += w * p * p;
    }
  }
  return total;
}

inline double literal_objective(const PointCloud& cloud, const std::vector<std::vector<Index>>& nn,
                                const Eigen::MatrixXd& laplacian, double lambda, const Eigen::VectorXd& n,
                                const std::vector<std::vector<double>>* weights = nullptr) {
  double reg = 0.0;
  const Index m = cloud.size();
  for (int c = 0; c < 3; ++c) {
    Eigen::VectorXd col(m);
    for (Index i = 0; i < m; ++i) col[i] = n[3 * i + c];
    reg += col.dot(laplacian * col);
  }
  return literal_data_term(cloud, nn, n, weights) + lambda * reg;
}

inline Eigen::MatrixXd to_dense(const Eigen::SparseMatrix<double, Eigen::RowMajor, Index>& s) {
  return Eigen::MatrixXd(s);
}

inline double angle(const Vector3& a, const Vector3& b) {
  return std::atan2(a.cross(b).norm(), std::abs(a.dot(b)));
}

/// Canonical form of a partition: label of each point replaced by the index
/// of its block's first member.
inline std::vector<int> canonical_partition(const std::vector<int>& labels) {
  std::vector<int> out(labels.size());
  std::vector<std::pair<int, int>> first;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    auto it = std::find_if(first.begin(), first.end(), [&](auto& p) { return p.first == labels[i]; });
    if (it == first.end()) {
      first.emplace_back(labels[i], static_cast<int>(i));
      out[i] = static_cast<int>(i);
    } else {
      out[i] = it->second;
    }
  }
  return out;
}

/// Fresh scratch directory under the system temp path, removed on scope exit.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / ("gn_" + tag + "_" + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

}  // namespace oracle
