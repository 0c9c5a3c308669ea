#include "graphnormals/synthetic.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

#include "graphnormals/cloud_io.hpp"
#include "graphnormals/knn_graph.hpp"

namespace graphnormals {

namespace {

// In-plane coordinates (u, v) on the plane with normal e_axis.
Point3 embed(int axis, double u, double v) {
  Point3 p = Point3::Zero();
  p[(axis + 1) % 3] = u;
  p[(axis + 2) % 3] = v;
  return p;
}

SyntheticScene finish(std::vector<Point3> clean, std::vector<int> labels, double noise_sigma,
                      std::uint64_t seed, std::mt19937_64& rng) {
  std::vector<Point3> noisy = clean;
  if (noise_sigma > 0.0) {
    std::normal_distribution<double> noise(0.0, noise_sigma);
    for (auto& p : noisy)
      for (int c = 0; c < 3; ++c) p[c] += noise(rng);
  }
  RowMatrix3 normals(static_cast<Index>(labels.size()), 3);
  for (std::size_t i = 0; i < labels.size(); ++i)
    normals.row(static_cast<Index>(i)) = Vector3::Unit(labels[i]).transpose();
  return {PointCloud(std::move(noisy)), PointCloud(std::move(clean)), NormalField::from_unit(std::move(normals)),
          std::move(labels), noise_sigma, seed};
}

void check_sigma(double noise_sigma) {
  if (!(noise_sigma >= 0.0) || !std::isfinite(noise_sigma))
    throw std::invalid_argument("noise sigma must be finite and >= 0");
}

}  // namespace

SyntheticScene generate_three_planes(Index points_per_plane, double noise_sigma, std::uint64_t seed,
                                     double spacing) {
  check_sigma(noise_sigma);
  const auto side = static_cast<Index>(std::llround(std::sqrt(static_cast<double>(points_per_plane))));
  if (points_per_plane < 4 || side * side != points_per_plane)
    throw std::invalid_argument("points_per_plane must be a perfect square >= 4 (got " +
                                std::to_string(points_per_plane) + ")");
  if (!(spacing > 0.0) || !std::isfinite(spacing)) throw std::invalid_argument("grid spacing must be > 0");

  std::vector<Point3> clean;
  std::vector<int> labels;
  clean.reserve(static_cast<std::size_t>(3 * points_per_plane));
  for (int axis = 0; axis < 3; ++axis)
    for (Index a = 0; a < side; ++a)
      for (Index b = 0; b < side; ++b) {
        clean.push_back(embed(axis, (static_cast<double>(a) + 0.5) * spacing, (static_cast<double>(b) + 0.5) * spacing));
        labels.push_back(axis);
      }
  std::mt19937_64 rng(seed);
  return finish(std::move(clean), std::move(labels), noise_sigma, seed, rng);
}

SyntheticScene sample_three_planes(Index m, double noise_sigma, std::uint64_t seed) {
  check_sigma(noise_sigma);
  if (m < 3) throw std::invalid_argument("sample_three_planes: need at least 3 points");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<Point3> clean;
  std::vector<int> labels;
  clean.reserve(static_cast<std::size_t>(m));
  for (Index i = 0; i < m; ++i) {
    const int axis = static_cast<int>(i % 3);
    const double u = unit(rng);
    const double v = unit(rng);
    clean.push_back(embed(axis, u, v));
    labels.push_back(axis);
  }
  return finish(std::move(clean), std::move(labels), noise_sigma, seed, rng);
}

std::vector<bool> interior_mask(const SyntheticScene& scene, Index k) {
  const NeighborLists nn = build_knn(scene.clean, k);
  std::vector<bool> mask(scene.labels.size());
  for (Index i = 0; i < nn.size(); ++i) {
    bool inside = true;
    for (Index j : nn.of(i))
      inside = inside && scene.labels[static_cast<std::size_t>(j)] == scene.labels[static_cast<std::size_t>(i)];
    mask[static_cast<std::size_t>(i)] = inside;
  }
  return mask;
}

void write_scene(const std::filesystem::path& prefix, const SyntheticScene& scene) {
  auto with = [&](const char* ext) {
    auto p = prefix;
    p += ext;
    return p;
  };
  io::write_xyz(with(".xyz"), scene.cloud);
  io::write_labels(with(".labels"), scene.labels);
  io::write_normals(with(".normals"), scene.cloud, scene.true_normals);
}

}  // namespace graphnormals
