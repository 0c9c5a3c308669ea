#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "graphnormals/knn_graph.hpp"
#include "graphnormals/types.hpp"

namespace graphnormals {

/// Plane {x : <normal, x> = offset} fitted to the member points of one label.
struct PlaneModel {
  int label = 0;
  Vector3 normal = Vector3::UnitZ();
  double offset = 0.0;
  std::vector<Index> members;
};

struct Segmentation {
  std::vector<int> labels;
  std::vector<PlaneModel> planes;
};

/// Plane-extraction quality in the usual benchmark column order.
struct SegMetrics {
  double fraction = 0.0;  // % of all points inside correctly detected regions
  double correct = 0.0;   // mean % overlap over correctly detected pairs
  double rmse_mm = 0.0;   // NaN when nothing matched
  double alpha_deg = 0.0; // NaN when nothing matched
  Index n_over = 0;
  Index n_under = 0;
  Index n_missing = 0;
  Index n_spurious = 0;
  Index n_correct = 0;
};

/// Connected components of the k-NN graph after cutting every edge with
/// |n_i . n_j| <= threshold. Components are numbered in order of their
/// smallest member index.
std::vector<int> cluster_by_normal(const NeighborGraph& graph, const NormalField& field, double threshold);

/// Least-squares plane per label. Labels with fewer than 3 points are skipped.
std::vector<PlaneModel> fit_planes(const PointCloud& cloud, const std::vector<int>& labels);

Segmentation make_segmentation(const PointCloud& cloud, std::vector<int> labels);

/// Region matching with mutual-overlap tolerance (default 0.8): correct
/// detections first, then over- and under-segmentations among the rest;
/// leftover truth regions are missing, leftover predictions are spurious.
SegMetrics score(const PointCloud& cloud, const Segmentation& predicted, const Segmentation& truth,
                 double overlap_tolerance = 0.8);

std::string metrics_csv_header();
std::string metrics_csv_row(const SegMetrics& m);
std::string metrics_table(const SegMetrics& m, const std::string& method = "graph");

}  // namespace graphnormals
