#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "graphnormals/types.hpp"

namespace graphnormals {

/// Mean over points of min(|a_i - b_i|, |a_i + b_i|)^2. Sign-resolved
/// because normals are axial; ranges over [0, 2].
double bias_metric(const NormalField& estimated, const NormalField& truth);

struct SweepSpec {
  std::vector<double> noise_levels{0.025, 0.05, 0.075, 0.1};
  std::vector<double> lambdas{0.001, 0.005, 0.01, 0.05};
  std::vector<Weighting> strategies{std::begin(kAllWeightings), std::end(kAllWeightings)};
  Index repeats = 30;
  std::uint64_t base_seed = 1;
  Index points_per_plane = 100;
  double spacing = 1.0;
  Index jobs = 1;
  bool write_traces = true;
  /// k, epsilon, sigma, max_iters and alpha; lambda and weighting come from the grid.
  OptimizerConfig optimizer;

  void validate() const;
};

/// Reads flat "key = value" lines ('#' comments) into a spec. Recognized
/// keys: sigmas, lambdas, strategies, repeats, seed, points_per_plane, spacing, jobs,
/// traces, k, epsilon, kernel_sigma, max_iters, alpha. Lists are comma separated.
SweepSpec parse_sweep_config(const std::string& text, SweepSpec base = {});
SweepSpec read_sweep_config(const std::filesystem::path& path, SweepSpec base = {});

/// splitmix64-based mix of a base seed with a list of indices.
std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> indices);

struct CellResult {
  double sigma = 0.0;
  double lambda = 0.0;
  Weighting strategy = Weighting::None;
  Index repeat = 0;
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  double bias = 0.0;
  double initial_loss = 0.0;
  double final_loss = 0.0;
  Index iterations = 0;
  bool converged = false;
};

struct AggregateRow {
  double sigma = 0.0;
  double lambda = 0.0;
  Weighting strategy = Weighting::None;
  double mean_bias = 0.0;
  double sd_bias = 0.0;
  double mean_final_loss = 0.0;
  double mean_iters = 0.0;
  Index failed = 0;
};

struct SweepResult {
  std::vector<CellResult> cells;
  std::vector<AggregateRow> aggregate;
};

/// Runs one (sigma, lambda, strategy, repeat) cell. The scene seed depends
/// only on (sigma index, repeat) so strategies and lambdas are compared on
/// identical clouds.
CellResult run_cell(const SweepSpec& spec, std::size_t sigma_index, std::size_t lambda_index,
                    std::size_t strategy_index, Index repeat, const std::filesystem::path& trace_dir = {});

/// Runs every cell (up to spec.jobs in parallel) and writes into `out_dir`:
///   traces/<cell>.csv  iter,loss,displacement,seconds
///   cells.csv          one row per cell
///   aggregate.csv      sigma,lambda,strategy,mean_bias,sd_bias,mean_final_loss,mean_iters
SweepResult run_sweep(const SweepSpec& spec, const std::filesystem::path& out_dir);

std::vector<AggregateRow> aggregate_cells(const SweepSpec& spec, const std::vector<CellResult>& cells);
std::string aggregate_csv(const std::vector<AggregateRow>& rows);
std::string cells_csv(const std::vector<CellResult>& cells);
std::string trace_file_name(const CellResult& cell, std::size_t sigma_index, std::size_t lambda_index);

struct ScalingPoint {
  Index m = 0;
  /// Median wall time of one full descent iteration (weights, loss, gradient, projection).
  double seconds_per_iter = 0.0;
};

/// Times `iters` fixed iterations on uniformly sampled three-plane clouds of each size.
std::vector<ScalingPoint> run_scaling(const std::vector<Index>& sizes, Index k, Index iters, Weighting weighting,
                                      std::uint64_t seed);

/// Least-squares slope of t = c * m and the centered R^2 of that fit.
struct OriginFit {
  double slope = 0.0;
  double r_squared = 0.0;
};
OriginFit fit_through_origin(const std::vector<ScalingPoint>& points);

}  // namespace graphnormals
