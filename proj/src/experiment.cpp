#include "graphnormals/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "graphnormals/cloud_io.hpp"
#include "graphnormals/optimizer.hpp"
#include "graphnormals/synthetic.hpp"

namespace graphnormals {

double bias_metric(const NormalField& estimated, const NormalField& truth) {
  if (estimated.size() != truth.size())
    throw std::invalid_argument("bias_metric: " + std::to_string(estimated.size()) + " estimates vs " +
                                std::to_string(truth.size()) + " truth normals");
  double total = 0.0;
  for (Index i = 0; i < truth.size(); ++i) {
    const Vector3 a = estimated[i];
    const Vector3 b = truth[i];
    total += std::min((a - b).squaredNorm(), (a + b).squaredNorm());
  }
  return total / static_cast<double>(truth.size());
}

void SweepSpec::validate() const {
  if (noise_levels.empty() || lambdas.empty() || strategies.empty())
    throw std::invalid_argument("sweep needs at least one noise level, lambda and strategy");
  if (repeats < 1) throw std::invalid_argument("repeats must be >= 1");
  if (jobs < 1) throw std::invalid_argument("jobs must be >= 1");
  for (double s : noise_levels)
    if (!(s >= 0.0)) throw std::invalid_argument("noise levels must be >= 0");
  for (double l : lambdas)
    if (!(l >= 0.0)) throw std::invalid_argument("lambdas must be >= 0");
  const Index m = 3 * points_per_plane;
  OptimizerConfig probe = optimizer;
  probe.validate(m);
}

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

template <typename T>
T parse_value(const std::string& key, const std::string& text) {
  T value{};
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size())
    throw std::invalid_argument("config key '" + key + "': cannot parse '" + text + "'");
  return value;
}

}  // namespace

SweepSpec parse_sweep_config(const std::string& text, SweepSpec spec) {
  std::stringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string body = trim(line.substr(0, line.find('#')));
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config line " + std::to_string(line_no) + ": expected key = value");
    const std::string key = trim(body.substr(0, eq));
    const std::string value = trim(body.substr(eq + 1));
    auto reals = [&] {
      std::vector<double> out;
      for (const auto& item : split_list(value)) out.push_back(parse_value<double>(key, item));
      return out;
    };
    if (key == "sigmas") spec.noise_levels = reals();
    else if (key == "lambdas") spec.lambdas = reals();
    else if (key == "strategies") {
      spec.strategies.clear();
      for (const auto& item : split_list(value)) spec.strategies.push_back(parse_weighting(item));
    } else if (key == "repeats") spec.repeats = parse_value<Index>(key, value);
    else if (key == "seed") spec.base_seed = parse_value<std::uint64_t>(key, value);
    else if (key == "points_per_plane") spec.points_per_plane = parse_value<Index>(key, value);
    else if (key == "spacing") spec.spacing = parse_value<double>(key, value);
    else if (key == "jobs") spec.jobs = parse_value<Index>(key, value);
    else if (key == "traces") spec.write_traces = value == "true" || value == "1";
    else if (key == "k") spec.optimizer.k = parse_value<Index>(key, value);
    else if (key == "epsilon") spec.optimizer.epsilon = parse_value<double>(key, value);
    else if (key == "kernel_sigma") spec.optimizer.sigma = parse_value<double>(key, value);
    else if (key == "max_iters") spec.optimizer.max_iters = parse_value<Index>(key, value);
    else if (key == "alpha") spec.optimizer.alpha = parse_value<double>(key, value);
    else throw std::invalid_argument("config line " + std::to_string(line_no) + ": unknown key '" + key + "'");
  }
  return spec;
}

SweepSpec read_sweep_config(const std::filesystem::path& path, SweepSpec base) {
  std::ifstream in(path);
  if (!in) throw io::IoError("cannot open config '" + path.string() + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_sweep_config(buffer.str(), std::move(base));
}

std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> indices) {
  auto mix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  std::uint64_t h = mix(base);
  for (auto i : indices) h = mix(h ^ mix(i));
  return h;
}

std::string trace_file_name(const CellResult& cell, std::size_t sigma_index, std::size_t lambda_index) {
  return "s" + std::to_string(sigma_index) + "_l" + std::to_string(lambda_index) + "_" +
         std::string(to_string(cell.strategy)) + "_r" + std::to_string(cell.repeat) + ".csv";
}

CellResult run_cell(const SweepSpec& spec, std::size_t sigma_index, std::size_t lambda_index,
                    std::size_t strategy_index, Index repeat, const std::filesystem::path& trace_dir) {
  CellResult cell;
  cell.sigma = spec.noise_levels.at(sigma_index);
  cell.lambda = spec.lambdas.at(lambda_index);
  cell.strategy = spec.strategies.at(strategy_index);
  cell.repeat = repeat;
  cell.seed = derive_seed(spec.base_seed, {sigma_index, static_cast<std::uint64_t>(repeat)});
  try {
    const SyntheticScene scene = generate_three_planes(spec.points_per_plane, cell.sigma, cell.seed, spec.spacing);
    OptimizerConfig config = spec.optimizer;
    config.lambda = cell.lambda;
    config.weighting = cell.strategy;
    config.seed = cell.seed;
    const EstimateResult result = estimate(scene.cloud, config);
    cell.bias = bias_metric(result.normals, scene.true_normals);
    cell.initial_loss = result.initial_loss;
    cell.final_loss = result.final_loss;
    cell.iterations = static_cast<Index>(result.trace.size());
    cell.converged = result.converged;
    if (!trace_dir.empty())
      write_trace_csv(trace_dir / trace_file_name(cell, sigma_index, lambda_index), result.trace);
    cell.ok = true;
  } catch (const std::exception& e) {
    cell.ok = false;
    cell.error = e.what();
  }
  return cell;
}

std::vector<AggregateRow> aggregate_cells(const SweepSpec& spec, const std::vector<CellResult>& cells) {
  std::vector<AggregateRow> rows;
  for (double sigma : spec.noise_levels)
    for (double lambda : spec.lambdas)
      for (Weighting strategy : spec.strategies) {
        AggregateRow row{sigma, lambda, strategy};
        std::vector<const CellResult*> ok;
        for (const auto& c : cells) {
          if (c.sigma != sigma || c.lambda != lambda || c.strategy != strategy) continue;
          if (c.ok) ok.push_back(&c);
          else ++row.failed;
        }
        if (!ok.empty()) {
          const double n = static_cast<double>(ok.size());
          double sum = 0.0, loss = 0.0, iters = 0.0;
          for (const auto* c : ok) {
            sum += c->bias;
            loss += c->final_loss;
            iters += static_cast<double>(c->iterations);
          }
          row.mean_bias = sum / n;
          row.mean_final_loss = loss / n;
          row.mean_iters = iters / n;
          double ss = 0.0;
          for (const auto* c : ok) ss += (c->bias - row.mean_bias) * (c->bias - row.mean_bias);
          row.sd_bias = ok.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
        } else {
          row.mean_bias = row.sd_bias = row.mean_final_loss = row.mean_iters =
              std::numeric_limits<double>::quiet_NaN();
        }
        rows.push_back(row);
      }
  return rows;
}

std::string aggregate_csv(const std::vector<AggregateRow>& rows) {
  std::ostringstream out;
  out << "sigma,lambda,strategy,mean_bias,sd_bias,mean_final_loss,mean_iters\n";
  for (const auto& r : rows)
    out << io::format_real(r.sigma) << ',' << io::format_real(r.lambda) << ',' << to_string(r.strategy) << ','
        << io::format_real(r.mean_bias) << ',' << io::format_real(r.sd_bias) << ','
        << io::format_real(r.mean_final_loss) << ',' << io::format_real(r.mean_iters) << '\n';
  return out.str();
}

std::string cells_csv(const std::vector<CellResult>& cells) {
  std::ostringstream out;
  out << "sigma,lambda,strategy,repeat,seed,status,bias,initial_loss,final_loss,iterations,converged\n";
  for (const auto& c : cells) {
    std::string status = c.ok ? "ok" : "failed: " + c.error;
    for (auto& ch : status)
      if (ch == ',' || ch == '\n') ch = ' ';
    out << io::format_real(c.sigma) << ',' << io::format_real(c.lambda) << ',' << to_string(c.strategy) << ','
        << c.repeat << ',' << c.seed << ',' << status << ',' << io::format_real(c.bias) << ','
        << io::format_real(c.initial_loss) << ',' << io::format_real(c.final_loss) << ',' << c.iterations << ','
        << (c.converged ? 1 : 0) << '\n';
  }
  return out.str();
}

SweepResult run_sweep(const SweepSpec& spec, const std::filesystem::path& out_dir) {
  spec.validate();
  std::filesystem::create_directories(out_dir);
  const auto trace_dir = spec.write_traces ? out_dir / "traces" : std::filesystem::path{};
  if (!trace_dir.empty()) std::filesystem::create_directories(trace_dir);

  struct Task {
    std::size_t s, l, w;
    Index r;
  };
  std::vector<Task> tasks;
  for (std::size_t s = 0; s < spec.noise_levels.size(); ++s)
    for (std::size_t l = 0; l < spec.lambdas.size(); ++l)
      for (std::size_t w = 0; w < spec.strategies.size(); ++w)
        for (Index r = 0; r < spec.repeats; ++r) tasks.push_back({s, l, w, r});

  SweepResult result;
  result.cells.resize(tasks.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < tasks.size(); i = next++) {
      const Task& t = tasks[i];
      result.cells[i] = run_cell(spec, t.s, t.l, t.w, t.r, trace_dir);
    }
  };
  const auto jobs = static_cast<std::size_t>(std::min<Index>(spec.jobs, static_cast<Index>(tasks.size())));
  if (jobs <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t j = 0; j < jobs; ++j) pool.emplace_back(worker);
  }

  result.aggregate = aggregate_cells(spec, result.cells);
  io::write_file_atomic(out_dir / "cells.csv", cells_csv(result.cells));
  io::write_file_atomic(out_dir / "aggregate.csv", aggregate_csv(result.aggregate));
  return result;
}

std::vector<ScalingPoint> run_scaling(const std::vector<Index>& sizes, Index k, Index iters, Weighting weighting,
                                      std::uint64_t seed) {
  if (iters < 1) throw std::invalid_argument("run_scaling: iters must be >= 1");
  std::vector<ScalingPoint> out;
  for (Index m : sizes) {
    const SyntheticScene scene = sample_three_planes(m, 0.01, derive_seed(seed, {static_cast<std::uint64_t>(m)}));
    OptimizerConfig config;
    config.k = k;
    config.weighting = weighting;
    config.max_iters = iters;
    config.epsilon = std::numeric_limits<double>::min();  // run all iterations
    const EstimateResult result = estimate(scene.cloud, config);
    std::vector<double> times;
    for (const auto& r : result.trace) times.push_back(r.seconds);
    std::nth_element(times.begin(), times.begin() + static_cast<std::ptrdiff_t>(times.size() / 2), times.end());
    out.push_back({m, times[times.size() / 2]});
  }
  return out;
}

OriginFit fit_through_origin(const std::vector<ScalingPoint>& points) {
  if (points.size() < 2) throw std::invalid_argument("fit_through_origin: need at least two points");
  double sxy = 0.0, sxx = 0.0, mean_y = 0.0;
  for (const auto& p : points) {
    const double x = static_cast<double>(p.m);
    sxy += x * p.seconds_per_iter;
    sxx += x * x;
    mean_y += p.seconds_per_iter;
  }
  mean_y /= static_cast<double>(points.size());
  OriginFit fit;
  fit.slope = sxy / sxx;
  double ss_res = 0.0, ss_tot = 0.0;
  for (const auto& p : points) {
    const double r = p.seconds_per_iter - fit.slope * static_cast<double>(p.m);
    ss_res += r * r;
    ss_tot += (p.seconds_per_iter - mean_y) * (p.seconds_per_iter - mean_y);
  }
  if (ss_tot > 0.0)
    fit.r_squared = 1.0 - ss_res / ss_tot;
  else
    fit.r_squared = ss_res > 0.0 ? -std::numeric_limits<double>::infinity() : 1.0;
  return fit;
}

}  // namespace graphnormals
