#include <gtest/gtest.h>

#include <random>

#include "graphnormals/knn_graph.hpp"
#include "graphnormals/segmentation.hpp"
#include "graphnormals/synthetic.hpp"
#include "oracles.hpp"

namespace gn = graphnormals;

namespace {

std::size_t count_labels(const std::vector<int>& labels) {
  return std::set<int>(labels.begin(), labels.end()).size();
}

void expect_same(const gn::SegMetrics& a, const gn::SegMetrics& b) {
  EXPECT_DOUBLE_EQ(a.fraction, b.fraction);
  EXPECT_DOUBLE_EQ(a.correct, b.correct);
  if (std::isnan(a.rmse_mm)) {
    EXPECT_TRUE(std::isnan(b.rmse_mm));
  } else {
    EXPECT_NEAR(a.rmse_mm, b.rmse_mm, 1e-9);
    EXPECT_NEAR(a.alpha_deg, b.alpha_deg, 1e-9);
  }
  EXPECT_EQ(a.n_over, b.n_over);
  EXPECT_EQ(a.n_under, b.n_under);
  EXPECT_EQ(a.n_missing, b.n_missing);
  EXPECT_EQ(a.n_spurious, b.n_spurious);
}

// Random partition of m points into blocks of at least 3.
std::vector<int> random_partition(int m, std::mt19937_64& rng) {
  std::vector<int> labels(static_cast<std::size_t>(m));
  std::uniform_int_distribution<int> block(3, std::max(3, m / 2));
  int next = 0, pos = 0;
  while (pos < m) {
    int len = block(rng);
    if (m - pos - len < 3) len = m - pos;
    for (int i = 0; i < len; ++i) labels[static_cast<std::size_t>(pos++)] = next;
    ++next;
  }
  std::shuffle(labels.begin(), labels.end(), rng);
  return labels;
}

}  // namespace

TEST(ClusterByNormal, TrueNormalsGiveThreePlanes) {
  const auto s = gn::generate_three_planes(100, 0.0, 1);
  const auto g = gn::build_graph(s.cloud, 18, 1.0);
  const auto labels = gn::cluster_by_normal(g, s.true_normals, 0.95);
  ASSERT_EQ(count_labels(labels), 3u);
  EXPECT_EQ(oracle::canonical_partition(labels), oracle::canonical_partition(s.labels));
}

TEST(ClusterByNormal, IdenticalNormalsOneComponent) {
  std::mt19937_64 rng(1);
  const auto c = oracle::random_cloud(80, rng);
  const auto g = gn::build_graph(c, 6, 1.0);
  gn::RowMatrix3 rows(80, 3);
  rows.rowwise() = gn::Vector3(0, 1, 0).transpose();
  const auto labels = gn::cluster_by_normal(g, gn::NormalField::from_unit(rows), 0.95);
  EXPECT_EQ(labels, std::vector<int>(80, 0));
}

TEST(ClusterByNormal, ThresholdOneCutsPerturbedEdges) {
  std::mt19937_64 rng(2);
  const auto c = oracle::random_cloud(40, rng);
  const auto g = gn::build_graph(c, 5, 1.0);
  std::vector<gn::Vector3> rows;
  for (int i = 0; i < 40; ++i) rows.emplace_back(1e-4 * i, 0.0, 1.0);
  const auto labels = gn::cluster_by_normal(g, gn::NormalField::normalized(rows), 1.0);
  std::vector<int> expect(40);
  std::iota(expect.begin(), expect.end(), 0);
  EXPECT_EQ(labels, expect);
}

TEST(ClusterByNormal, SignFlipInvariant) {
  std::mt19937_64 rng(3);
  const auto c = oracle::random_cloud(120, rng);
  const auto g = gn::build_graph(c, 8, 1.0);
  const auto f = oracle::random_field(120, rng);
  gn::RowMatrix3 flipped = f.rows();
  std::bernoulli_distribution coin;
  for (gn::Index i = 0; i < 120; ++i)
    if (coin(rng)) flipped.row(i) *= -1.0;
  for (double thr : {0.3, 0.7, 0.95})
    EXPECT_EQ(gn::cluster_by_normal(g, f, thr), gn::cluster_by_normal(g, gn::NormalField::from_unit(flipped), thr));
}

TEST(ClusterByNormal, LabelsOrderedBySmallestMember) {
  std::mt19937_64 rng(4);
  const auto c = oracle::random_cloud(60, rng);
  const auto g = gn::build_graph(c, 4, 1.0);
  const auto labels = gn::cluster_by_normal(g, oracle::random_field(60, rng), 0.8);
  int seen = -1;
  for (int l : labels) {
    EXPECT_LE(l, seen + 1);
    seen = std::max(seen, l);
  }
}

TEST(ClusterByNormal, ValidatesInput) {
  std::mt19937_64 rng(5);
  const auto c = oracle::random_cloud(10, rng);
  const auto g = gn::build_graph(c, 3, 1.0);
  const auto f = oracle::random_field(10, rng);
  EXPECT_THROW(gn::cluster_by_normal(g, f, 0.0), std::invalid_argument);
  EXPECT_THROW(gn::cluster_by_normal(g, f, 1.5), std::invalid_argument);
  EXPECT_THROW(gn::cluster_by_normal(g, oracle::random_field(11, rng), 0.9), std::invalid_argument);
}

TEST(FitPlanes, Examples) {
  gn::PointCloud flat({gn::Point3(0, 0, 0), gn::Point3(1, 0, 0), gn::Point3(0, 1, 0), gn::Point3(1, 1, 0)});
  auto planes = gn::fit_planes(flat, {0, 0, 0, 0});
  ASSERT_EQ(planes.size(), 1u);
  EXPECT_LT((planes[0].normal - gn::Vector3(0, 0, 1)).norm(), 1e-12);
  EXPECT_NEAR(planes[0].offset, 0.0, 1e-12);

  gn::PointCloud raised({gn::Point3(0, 0, 5), gn::Point3(2, 0, 5), gn::Point3(0, 3, 5), gn::Point3(1, 1, 5)});
  planes = gn::fit_planes(raised, {4, 4, 4, 4});
  ASSERT_EQ(planes.size(), 1u);
  EXPECT_EQ(planes[0].label, 4);
  EXPECT_LT((planes[0].normal - gn::Vector3(0, 0, 1)).norm(), 1e-12);
  EXPECT_NEAR(planes[0].offset, 5.0, 1e-12);
}

TEST(FitPlanes, NoisyResidualRmse) {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(-2, 2);
  std::normal_distribution<double> noise(0.0, 0.01);
  std::vector<gn::Point3> pts;
  for (int i = 0; i < 200; ++i) pts.emplace_back(u(rng) + noise(rng), u(rng) + noise(rng), 1.0 + noise(rng));
  const gn::PointCloud cloud(pts);
  const auto planes = gn::fit_planes(cloud, std::vector<int>(200, 0));
  double sq = 0.0;
  for (gn::Index i = 0; i < 200; ++i) sq += std::pow(planes[0].normal.dot(cloud[i]) - planes[0].offset, 2);
  const double rmse = std::sqrt(sq / 200.0);
  EXPECT_GE(rmse, 0.008);
  EXPECT_LE(rmse, 0.012);
}

TEST(FitPlanes, SmallGroupsSkipped) {
  gn::PointCloud c({gn::Point3(0, 0, 0), gn::Point3(1, 0, 0), gn::Point3(0, 1, 0), gn::Point3(5, 5, 5),
                    gn::Point3(6, 5, 5)});
  const auto planes = gn::fit_planes(c, {0, 0, 0, 1, 1});
  ASSERT_EQ(planes.size(), 1u);
  EXPECT_EQ(planes[0].label, 0);
  EXPECT_THROW(gn::fit_planes(c, {0, 0}), std::invalid_argument);
}

TEST(Score, IdentityCase) {
  const auto s = gn::generate_three_planes(100, 0.02, 7);
  const auto truth = gn::make_segmentation(s.cloud, s.labels);
  const auto m = gn::score(s.cloud, truth, truth);
  EXPECT_DOUBLE_EQ(m.fraction, 100.0);
  EXPECT_DOUBLE_EQ(m.correct, 100.0);
  EXPECT_NEAR(m.alpha_deg, 0.0, 1e-12);
  EXPECT_EQ(m.n_over + m.n_under + m.n_missing + m.n_spurious, 0);
  double sq = 0.0;
  for (const auto& p : truth.planes)
    for (gn::Index i : p.members) sq += std::pow(p.normal.dot(s.cloud[i]) - p.offset, 2);
  EXPECT_NEAR(m.rmse_mm, 1000.0 * std::sqrt(sq / 300.0), 1e-9);
}

TEST(Score, IdentityAngleExactlyZero) {
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    const auto s = gn::generate_three_planes(49, 0.05, seed);
    const auto truth = gn::make_segmentation(s.cloud, s.labels);
    EXPECT_EQ(gn::score(s.cloud, truth, truth).alpha_deg, 0.0) << seed;
  }
}

TEST(Score, OverSegmentation) {
  const auto s = gn::generate_three_planes(100, 0.0, 1);
  auto pred = s.labels;
  for (gn::Index i = 0; i < s.cloud.size(); ++i)
    if (s.labels[static_cast<std::size_t>(i)] == 0 && s.cloud[i].y() < 5.0) pred[static_cast<std::size_t>(i)] = 9;
  const auto m = gn::score(s.cloud, gn::make_segmentation(s.cloud, pred), gn::make_segmentation(s.cloud, s.labels));
  EXPECT_EQ(m.n_over, 1);
  EXPECT_EQ(m.n_correct, 2);
  EXPECT_EQ(m.n_under + m.n_missing + m.n_spurious, 0);
  EXPECT_NEAR(m.fraction, 200.0 / 3.0, 1e-12);
}

TEST(Score, UnderSegmentation) {
  const auto s = gn::generate_three_planes(100, 0.0, 1);
  auto pred = s.labels;
  for (auto& l : pred)
    if (l == 1) l = 0;
  const auto m = gn::score(s.cloud, gn::make_segmentation(s.cloud, pred), gn::make_segmentation(s.cloud, s.labels));
  EXPECT_EQ(m.n_under, 1);
  EXPECT_EQ(m.n_correct, 1);
  EXPECT_EQ(m.n_over + m.n_missing + m.n_spurious, 0);
  EXPECT_NEAR(m.fraction, 100.0 / 3.0, 1e-12);
}

TEST(Score, SpuriousRandomCluster) {
  const auto s = gn::generate_three_planes(100, 0.0, 1);
  std::vector<gn::Point3> pts = s.cloud.points();
  auto truth_labels = s.labels;
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(20, 30);
  for (int i = 0; i < 30; ++i) {
    pts.emplace_back(u(rng), u(rng), u(rng));
    truth_labels.push_back(3);
  }
  const gn::PointCloud cloud(pts);
  auto pred_labels = truth_labels;
  for (std::size_t i = 300; i < pred_labels.size(); ++i) pred_labels[i] = 3;
  auto truth_only = truth_labels;
  // Truth leaves the clutter unassigned in groups too small to fit.
  for (std::size_t i = 300; i < truth_only.size(); ++i) truth_only[i] = 100 + static_cast<int>(i);
  const auto m = gn::score(cloud, gn::make_segmentation(cloud, pred_labels), gn::make_segmentation(cloud, truth_only));
  EXPECT_EQ(m.n_spurious, 1);
  EXPECT_EQ(m.n_correct, 3);
  EXPECT_EQ(m.n_missing, 0);
}

TEST(Score, NothingMatchedGivesNan) {
  const auto s = gn::generate_three_planes(100, 0.0, 1);
  const std::vector<int> one(300, 0);
  const auto m = gn::score(s.cloud, gn::make_segmentation(s.cloud, one), gn::make_segmentation(s.cloud, s.labels));
  EXPECT_EQ(m.n_correct, 0);
  EXPECT_TRUE(std::isnan(m.rmse_mm));
  EXPECT_TRUE(std::isnan(m.alpha_deg));
  EXPECT_EQ(m.fraction, 0.0);
}

TEST(Score, ValidatesInput) {
  const auto s = gn::generate_three_planes(16, 0.0, 1);
  const auto seg = gn::make_segmentation(s.cloud, s.labels);
  auto shorter = s.labels;
  shorter.pop_back();
  gn::Segmentation bad{shorter, {}};
  EXPECT_THROW(gn::score(s.cloud, bad, seg), std::invalid_argument);
  EXPECT_THROW(gn::score(s.cloud, seg, seg, 0.5), std::invalid_argument);
  EXPECT_THROW(gn::score(s.cloud, seg, seg, 1.1), std::invalid_argument);
}

TEST(Score, RelabelingSymmetry) {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 20; ++trial) {
    const auto c = oracle::random_cloud(90, rng);
    const auto truth = random_partition(90, rng);
    auto pred = truth;
    std::uniform_int_distribution<int> pick(0, 89);
    for (int i = 0; i < 15; ++i) std::swap(pred[static_cast<std::size_t>(pick(rng))], pred[static_cast<std::size_t>(pick(rng))]);
    const auto base = gn::score(c, gn::make_segmentation(c, pred), gn::make_segmentation(c, truth));
    auto relabel = [&](std::vector<int> v) {
      std::vector<int> ids(90);
      std::iota(ids.begin(), ids.end(), 50);
      std::shuffle(ids.begin(), ids.end(), rng);
      for (auto& l : v) l = ids[static_cast<std::size_t>(l)];
      return v;
    };
    expect_same(base, gn::score(c, gn::make_segmentation(c, relabel(pred)), gn::make_segmentation(c, truth)));
    expect_same(base, gn::score(c, gn::make_segmentation(c, pred), gn::make_segmentation(c, relabel(truth))));
  }
}

TEST(Score, PerfectIffIdenticalPartitions) {
  std::mt19937_64 rng(10);
  std::uniform_int_distribution<int> size(12, 100);
  for (int trial = 0; trial < 200; ++trial) {
    const int m = size(rng);
    const auto c = oracle::random_cloud(m, rng);
    const auto truth = random_partition(m, rng);
    auto pred = trial % 2 == 0 ? truth : random_partition(m, rng);
    if (trial % 4 == 1) {
      std::uniform_int_distribution<int> pick(0, m - 1);
      pred = truth;
      std::swap(pred[static_cast<std::size_t>(pick(rng))], pred[static_cast<std::size_t>(pick(rng))]);
    }
    const auto s = gn::score(c, gn::make_segmentation(c, pred), gn::make_segmentation(c, truth));
    const bool perfect = s.fraction == 100.0 && s.n_over + s.n_under + s.n_missing + s.n_spurious == 0;
    const bool identical = oracle::canonical_partition(pred) == oracle::canonical_partition(truth);
    EXPECT_EQ(perfect, identical) << "trial " << trial;
  }
}

TEST(Metrics, CsvAndTable) {
  gn::SegMetrics m{78.5, 81.3, 14.1, 2.1, 1, 1, 8, 19, 3};
  EXPECT_EQ(gn::metrics_csv_header(), "fraction,correct,rmse_mm,alpha_deg,n_o,n_u,n_m,n_s");
  EXPECT_EQ(gn::metrics_csv_row(m), "78.5,81.3,14.1,2.1,1,1,8,19");
  const auto table = gn::metrics_table(m);
  EXPECT_NE(table.find("78.5"), std::string::npos);
  EXPECT_NE(table.find("n_s"), std::string::npos);
}
