// Command-line front end: generate, estimate, cluster, score, sweep, bench.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "graphnormals/cloud_io.hpp"
#include "graphnormals/experiment.hpp"
#include "graphnormals/knn_graph.hpp"
#include "graphnormals/optimizer.hpp"
#include "graphnormals/segmentation.hpp"
#include "graphnormals/synthetic.hpp"

namespace gn = graphnormals;
namespace fs = std::filesystem;

namespace {

struct GenerateArgs {
  gn::Index points_per_plane = 100;
  double sigma = 0.0;
  std::uint64_t seed = 1;
  std::string out;
  gn::Index interior_k = gn::OptimizerConfig{}.k;
  double spacing = 1.0;
};

struct EstimateArgs {
  std::string input, output, trace, weighting = "none", graph_dump;
  gn::OptimizerConfig config;
  double alpha = 0.0;
};

struct ClusterArgs {
  std::string input, output;
  double threshold = 0.95;
  gn::Index k = gn::OptimizerConfig{}.k;
  double sigma = 1.0;
};

struct ScoreArgs {
  std::string points, predicted, truth, csv;
  double tolerance = 0.8;
};

struct SweepArgs {
  std::string config, out;
  std::vector<double> sigmas, lambdas;
  std::vector<std::string> strategies;
  gn::Index repeats = 0, jobs = 0, k = 0, max_iters = -1, points_per_plane = 0;
  std::uint64_t seed = 0;
  double epsilon = 0.0, alpha = 0.0, spacing = 0.0;
  bool no_traces = false;
};

struct BenchArgs {
  std::vector<gn::Index> sizes{1000, 2000, 4000, 8000};
  gn::Index k = 10;
  gn::Index iters = 10;
  std::string weighting = "dotdist";
  std::uint64_t seed = 1;
  std::string csv;
};

void run_generate(const GenerateArgs& a) {
  const auto scene = gn::generate_three_planes(a.points_per_plane, a.sigma, a.seed, a.spacing);
  gn::write_scene(a.out, scene);
  std::vector<int> mask;
  for (bool b : gn::interior_mask(scene, a.interior_k)) mask.push_back(b ? 1 : 0);
  gn::io::write_labels(a.out + ".interior", mask);
  std::cout << "wrote " << scene.cloud.size() << " points to " << a.out << ".{xyz,labels,normals,interior}\n";
}

void run_estimate(EstimateArgs a) {
  a.config.weighting = gn::parse_weighting(a.weighting);
  if (a.alpha > 0.0) a.config.alpha = a.alpha;
  const auto cloud = gn::io::read_xyz(a.input);
  a.config.validate(cloud.size());
  std::cerr << "note: update is n <- normalize(n - alpha * grad L) (descent on the minimized loss)\n";
  const auto graph = gn::build_graph(cloud, a.config.k, a.config.sigma);
  if (!a.graph_dump.empty()) {
    gn::write_coo(a.graph_dump + ".adjacency.coo", graph.adjacency);
    gn::write_coo(a.graph_dump + ".laplacian.coo", graph.laplacian);
  }
  const auto result = gn::estimate(cloud, graph, a.config);
  gn::io::write_normals(a.output, cloud, result.normals);
  if (!a.trace.empty()) gn::write_trace_csv(a.trace, result.trace);
  std::size_t degenerate = 0;
  for (bool d : result.degenerate) degenerate += d ? 1 : 0;
  std::cerr << "alpha=" << result.alpha << " iterations=" << result.trace.size()
            << " converged=" << (result.converged ? "yes" : "no") << " initial_loss=" << result.initial_loss
            << " final_loss=" << result.final_loss << " degenerate_init=" << degenerate << '\n';
}

void run_cluster(const ClusterArgs& a) {
  if (!(a.threshold > 0.0 && a.threshold <= 1.0))
    throw CLI::ValidationError("--threshold", "must lie in (0, 1], got " + std::to_string(a.threshold));
  const auto [cloud, normals] = gn::io::read_normals(a.input);
  const auto graph = gn::build_graph(cloud, a.k, a.sigma);
  const auto labels = gn::cluster_by_normal(graph, normals, a.threshold);
  gn::io::write_labels(a.output, labels);
  int clusters = 0;
  for (int l : labels) clusters = std::max(clusters, l + 1);
  std::cerr << clusters << " clusters\n";
}

void run_score(const ScoreArgs& a) {
  const auto truth = gn::io::read_labeled(a.points, a.truth);
  const auto predicted = gn::io::read_labels(a.predicted);
  if (predicted.size() != truth.labels.size())
    throw gn::io::IoError("predicted label count " + std::to_string(predicted.size()) + " does not match " +
                          std::to_string(truth.labels.size()) + " points");
  const auto metrics = gn::score(truth.cloud, gn::make_segmentation(truth.cloud, predicted),
                                 gn::make_segmentation(truth.cloud, truth.labels), a.tolerance);
  std::cout << gn::metrics_table(metrics);
  if (!a.csv.empty())
    gn::io::write_file_atomic(a.csv, gn::metrics_csv_header() + "\n" + gn::metrics_csv_row(metrics) + "\n");
}

void run_sweep(const SweepArgs& a) {
  gn::SweepSpec spec;
  if (!a.config.empty()) spec = gn::read_sweep_config(a.config, spec);
  if (!a.sigmas.empty()) spec.noise_levels = a.sigmas;
  if (!a.lambdas.empty()) spec.lambdas = a.lambdas;
  if (!a.strategies.empty()) {
    spec.strategies.clear();
    for (const auto& s : a.strategies) spec.strategies.push_back(gn::parse_weighting(s));
  }
  if (a.repeats > 0) spec.repeats = a.repeats;
  if (a.jobs > 0) spec.jobs = a.jobs;
  if (a.seed > 0) spec.base_seed = a.seed;
  if (a.k > 0) spec.optimizer.k = a.k;
  if (a.max_iters >= 0) spec.optimizer.max_iters = a.max_iters;
  if (a.points_per_plane > 0) spec.points_per_plane = a.points_per_plane;
  if (a.epsilon > 0.0) spec.optimizer.epsilon = a.epsilon;
  if (a.alpha > 0.0) spec.optimizer.alpha = a.alpha;
  if (a.spacing > 0.0) spec.spacing = a.spacing;
  if (a.no_traces) spec.write_traces = false;

  const auto result = gn::run_sweep(spec, a.out);
  std::size_t failed = 0;
  for (const auto& c : result.cells) failed += c.ok ? 0 : 1;
  std::cout << gn::aggregate_csv(result.aggregate);
  std::cerr << result.cells.size() << " cells, " << failed << " failed; results in " << a.out << '\n';
  if (failed > 0) throw std::runtime_error(std::to_string(failed) + " sweep cells failed (see cells.csv)");
}

void run_bench(const BenchArgs& a) {
  const auto points = gn::run_scaling(a.sizes, a.k, a.iters, gn::parse_weighting(a.weighting), a.seed);
  const auto fit = gn::fit_through_origin(points);
  std::ostringstream csv;
  csv << "m,seconds_per_iter\n";
  for (const auto& p : points) csv << p.m << ',' << gn::io::format_real(p.seconds_per_iter) << '\n';
  std::cout << csv.str() << "# slope=" << fit.slope << " s/point, R^2=" << fit.r_squared << '\n';
  if (!a.csv.empty()) gn::io::write_file_atomic(a.csv, csv.str());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Graph-regularized surface normal estimation for point clouds"};
  app.require_subcommand(1);

  GenerateArgs gen;
  auto* g = app.add_subcommand("generate", "Write a synthetic three-plane scene");
  g->add_option("--points-per-plane", gen.points_per_plane, "Grid points per plane (perfect square)");
  g->add_option("--sigma", gen.sigma, "Gaussian noise std [m]")->check(CLI::NonNegativeNumber);
  g->add_option("--seed", gen.seed, "RNG seed");
  g->add_option("--interior-k", gen.interior_k, "k used for the interior mask");
  g->add_option("--spacing", gen.spacing, "Grid spacing [m]");
  g->add_option("--out", gen.out, "Output prefix")->required();

  EstimateArgs est;
  auto* e = app.add_subcommand("estimate", "Estimate normals for a point cloud");
  e->add_option("--input,-i", est.input, "Input points (xyz text)")->required()->check(CLI::ExistingFile);
  e->add_option("--output,-o", est.output, "Output 'x y z nx ny nz' file")->required();
  e->add_option("--k", est.config.k, "Neighbors per point");
  e->add_option("--lambda", est.config.lambda, "Laplacian regularization weight");
  e->add_option("--alpha", est.alpha, "Step size (default: automatic)");
  e->add_option("--epsilon", est.config.epsilon, "Stop when the step displacement falls below this");
  e->add_option("--sigma", est.config.sigma, "Adjacency kernel bandwidth");
  e->add_option("--weighting", est.weighting, "none | dot | dist | dotdist");
  e->add_option("--max-iters", est.config.max_iters, "Iteration cap");
  e->add_option("--trace", est.trace, "Write iteration trace CSV");
  e->add_option("--dump-graph", est.graph_dump, "Write adjacency/Laplacian COO files with this prefix");

  ClusterArgs clu;
  auto* c = app.add_subcommand("cluster", "Cluster normals into planes");
  c->add_option("--input,-i", clu.input, "Input 'x y z nx ny nz' file")->required()->check(CLI::ExistingFile);
  c->add_option("--output,-o", clu.output, "Output labels file")->required();
  c->add_option("--threshold", clu.threshold, "Edge kept when |n_i . n_j| exceeds this (0, 1]");
  c->add_option("--k", clu.k, "Neighbors per point");
  c->add_option("--sigma", clu.sigma, "Adjacency kernel bandwidth");

  ScoreArgs sc;
  auto* s = app.add_subcommand("score", "Compare predicted plane labels with ground truth");
  s->add_option("--points", sc.points, "Points file")->required()->check(CLI::ExistingFile);
  s->add_option("--predicted", sc.predicted, "Predicted labels")->required()->check(CLI::ExistingFile);
  s->add_option("--truth", sc.truth, "Ground-truth labels")->required()->check(CLI::ExistingFile);
  s->add_option("--tolerance", sc.tolerance, "Region overlap tolerance (0.5, 1]");
  s->add_option("--csv", sc.csv, "Also write the metrics row as CSV");

  SweepArgs sw;
  auto* w = app.add_subcommand("sweep", "Run the noise x lambda x weighting simulation grid");
  w->add_option("--config", sw.config, "key = value config file (flags override)")->check(CLI::ExistingFile);
  w->add_option("--out", sw.out, "Output directory")->required();
  w->add_option("--sigmas", sw.sigmas, "Noise levels")->delimiter(',');
  w->add_option("--lambdas", sw.lambdas, "Regularization weights")->delimiter(',');
  w->add_option("--strategies", sw.strategies, "Weightings (none,dot,dist,dotdist)")->delimiter(',');
  w->add_option("--repeats", sw.repeats, "Repeats per cell");
  w->add_option("--seed", sw.seed, "Base seed");
  w->add_option("--jobs", sw.jobs, "Parallel cells");
  w->add_option("--k", sw.k, "Neighbors per point");
  w->add_option("--epsilon", sw.epsilon, "Convergence tolerance");
  w->add_option("--max-iters", sw.max_iters, "Iteration cap");
  w->add_option("--points-per-plane", sw.points_per_plane, "Grid points per plane");
  w->add_option("--alpha", sw.alpha, "Step size (default: automatic)");
  w->add_option("--spacing", sw.spacing, "Grid spacing [m]");
  w->add_flag("--no-traces", sw.no_traces, "Skip per-cell trace files");

  BenchArgs be;
  auto* b = app.add_subcommand("bench", "Per-iteration time versus cloud size");
  b->add_option("--sizes", be.sizes, "Cloud sizes")->delimiter(',');
  b->add_option("--k", be.k, "Neighbors per point");
  b->add_option("--iters", be.iters, "Timed iterations per size");
  b->add_option("--weighting", be.weighting, "none | dot | dist | dotdist");
  b->add_option("--seed", be.seed, "Seed");
  b->add_option("--csv", be.csv, "Write timings CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    return app.exit(err);
  }

  try {
    if (*g) run_generate(gen);
    else if (*e) run_estimate(est);
    else if (*c) run_cluster(clu);
    else if (*s) run_score(sc);
    else if (*w) run_sweep(sw);
    else if (*b) run_bench(be);
  } catch (const CLI::Error& err) {
    std::cerr << "error: " << err.what() << '\n';
    return 2;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << '\n';
    return 1;
  }
  return 0;
}
