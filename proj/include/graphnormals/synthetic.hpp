#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "graphnormals/types.hpp"

namespace graphnormals {

/// Three axis-aligned square patches on x = 0, y = 0 and z = 0 meeting at
/// the origin corner. Label p has true normal e_p. Grids are cell-centered
/// (first row half a spacing from the seam), so no point lies on two planes.
struct SyntheticScene {
  PointCloud cloud;
  PointCloud clean;  // before noise
  NormalField true_normals;
  std::vector<int> labels;
  double noise_sigma = 0.0;
  std::uint64_t seed = 0;
};

/// `points_per_plane` must be a perfect square >= 4. Grid coordinates are
/// (a + 1/2) * spacing for a in [0, sqrt(points_per_plane)). Noise is i.i.d.
/// N(0, noise_sigma^2) on every coordinate.
SyntheticScene generate_three_planes(Index points_per_plane, double noise_sigma, std::uint64_t seed,
                                     double spacing = 1.0);

/// Uniformly sampled (not gridded) variant with `m` points in total, used
/// for scaling runs where m must be arbitrary.
SyntheticScene sample_three_planes(Index m, double noise_sigma, std::uint64_t seed);

/// Points whose k nearest neighbors in the noise-free cloud all share their label.
std::vector<bool> interior_mask(const SyntheticScene& scene, Index k);

/// Writes <prefix>.xyz, <prefix>.labels and <prefix>.normals.
void write_scene(const std::filesystem::path& prefix, const SyntheticScene& scene);

}  // namespace graphnormals
