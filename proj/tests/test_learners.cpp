#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <random>

#include "poisonlab/common.hpp"
#include "poisonlab/learners.hpp"
#include "poisonlab/rng.hpp"

using namespace poisonlab;
using Eigen::Vector2d;
using Eigen::VectorXd;

namespace {

VectorXd pt(double v) {
  VectorXd x(1);
  x << v;
  return x;
}

Dataset line_dataset(std::initializer_list<std::pair<double, int>> pts) {
  Dataset d(1);
  for (const auto& [x, y] : pts) d.push_back({pt(x), y});
  return d;
}

}  // namespace

TEST_CASE("kernel smoother hand values") {
  Dataset two = line_dataset({{0.0, 0}, {1.0, 1}});
  KernelSmootherModel m(two, 1.0);
  // (0*1 + 1*e^{-1/2}) / (1 + e^{-1/2})
  CHECK(m.predict_prob(pt(0.0)) == doctest::Approx(0.37754066879814546).epsilon(1e-14));
  CHECK(m.predict_prob(pt(0.5)) == doctest::Approx(0.5).epsilon(1e-14));

  Dataset three = line_dataset({{0.0, 0}, {1.0, 1}, {2.0, 1}});
  KernelSmootherModel m3(three, 0.7);
  CHECK(m3.predict_prob(pt(0.5)) == doctest::Approx(0.530499373028499).epsilon(1e-12));
}

TEST_CASE("kernel smoother localizes at small bandwidth") {
  Dataset d = line_dataset({{0.0, 0}, {1.0, 1}, {2.0, 0}});
  KernelSmootherModel m(d, 1e-6);
  CHECK(m.predict_prob(pt(1.0)) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(m.predict_prob(pt(2.0)) == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("kernel smoother with no usable weight has no opinion") {
  Dataset d = line_dataset({{0.0, 0}, {0.1, 1}});
  KernelSmootherModel m(d, 1e-3);
  // every kernel term is exp(-(>=1e6)); the denominator underflows to zero
  CHECK(m.predict_prob(pt(100.0)) == 0.5);
}

TEST_CASE("kernel smoother predictions ignore training order") {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<LabeledPoint> pts;
  for (int i = 0; i < 60; ++i) pts.push_back({pt(g(rng)), i % 2});
  Dataset a(pts, 1);
  std::shuffle(pts.begin(), pts.end(), rng);
  Dataset b(pts, 1);
  KernelSmootherModel ma(a, 0.4), mb(b, 0.4);
  for (double q : {-2.0, -0.3, 0.0, 0.7, 1.9})
    CHECK(ma.predict_prob(pt(q)) == mb.predict_prob(pt(q)));
}

TEST_CASE("kernel smoother rejects bad construction") {
  Dataset d = line_dataset({{0.0, 0}});
  CHECK_THROWS_AS(KernelSmootherModel(d, 0.0), precondition_error);
  CHECK_THROWS_AS(KernelSmootherModel(d, -1.0), precondition_error);
  CHECK_THROWS_AS(KernelSmootherModel(Dataset(1), 1.0), precondition_error);
}

TEST_CASE("knn hand behavior") {
  Dataset d = line_dataset({{0.0, 0}, {1.0, 1}, {2.0, 1}, {3.0, 0}});
  KnnModel one(d, 1);
  CHECK(one.predict_prob(pt(0.2)) == 0.0);
  CHECK(one.predict_prob(pt(1.9)) == 1.0);
  KnnModel all(d, 4);
  CHECK(all.predict_prob(pt(50.0)) == doctest::Approx(0.5));
  KnnModel two(d, 2);
  CHECK(two.predict_prob(pt(0.4)) == doctest::Approx(0.5));
  CHECK_THROWS_AS(KnnModel(d, 0), precondition_error);
  CHECK_THROWS_AS(KnnModel(d, 5), precondition_error);
}

TEST_CASE("knn distance ties rank the smaller label first") {
  // query at 1.0 sees points at distance 1 on both sides with opposite labels;
  // with k=1 the (distance, label) ordering must pick the label-0 point.
  Dataset d = line_dataset({{0.0, 1}, {2.0, 0}});
  KnnModel m(d, 1);
  CHECK(m.predict_prob(pt(1.0)) == 0.0);
}

TEST_CASE("classify thresholds at one half with ties to zero") {
  Dataset d = line_dataset({{0.0, 0}, {1.0, 1}});
  KernelSmootherModel m(d, 1.0);
  CHECK(classify(m, pt(0.5)) == 0);   // exactly 0.5
  CHECK(classify(m, pt(0.9)) == 1);
  CHECK(classify(m, pt(0.0)) == 0);
}

TEST_CASE("default bandwidth grid shape") {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> g(0.0, 2.0);
  Dataset d(1);
  for (int i = 0; i < 100; ++i) d.push_back({pt(g(rng)), i % 2});
  auto grid = default_bandwidth_grid(d, 3);
  REQUIRE(grid.size() == 16);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    CHECK(grid[i] > 0.0);
    if (i) CHECK(grid[i] > grid[i - 1]);
  }
  // geometric: constant ratio between neighbors
  double ratio = grid[1] / grid[0];
  for (std::size_t i = 2; i < grid.size(); ++i)
    CHECK(grid[i] / grid[i - 1] == doctest::Approx(ratio).epsilon(1e-9));
  CHECK(grid.back() / grid.front() == doctest::Approx(80.0).epsilon(1e-9));
}

TEST_CASE("cross-validation picks from the grid and is deterministic") {
  std::mt19937_64 rng(15);
  std::normal_distribution<double> g0(-2.0, 0.8), g1(2.0, 0.8);
  Dataset d(1);
  for (int i = 0; i < 80; ++i) d.push_back({pt(i % 2 ? g1(rng) : g0(rng)), i % 2});

  std::vector<double> grid = {0.3, 1.0, 3.0};
  double h = cv_bandwidth(d, grid, 5, 42);
  CHECK(std::find(grid.begin(), grid.end(), h) != grid.end());
  CHECK(cv_bandwidth(d, grid, 5, 42) == h);

  // grid order must not matter
  CHECK(cv_bandwidth(d, {3.0, 0.3, 1.0}, 5, 42) == h);
  CHECK(cv_bandwidth(d, {2.5}, 5, 1) == 2.5);

  int k = cv_k(d, {1, 3, 5}, 5, 42);
  CHECK((k == 1 || k == 3 || k == 5));
  CHECK(cv_k(d, {5, 1, 3}, 5, 42) == k);
}

TEST_CASE("cross-validation preconditions") {
  Dataset d = line_dataset({{0.0, 0}, {1.0, 1}, {2.0, 0}});
  CHECK_THROWS_AS(cv_bandwidth(d, {1.0}, 1, 0), precondition_error);
  CHECK_THROWS_AS(cv_bandwidth(d, {1.0}, 4, 0), precondition_error);  // folds > n
  CHECK_THROWS_AS(cv_bandwidth(d, {}, 2, 0), precondition_error);
  CHECK_THROWS_AS(cv_bandwidth(d, {0.0}, 2, 0), precondition_error);
  CHECK_THROWS_AS(cv_k(d, {0}, 2, 0), precondition_error);
}

TEST_CASE("fit_with_cv wires the smoother and the neighbor model") {
  std::mt19937_64 rng(23);
  std::normal_distribution<double> g0(-2.0, 1.0), g1(2.0, 1.0);
  Dataset d(1);
  for (int i = 0; i < 60; ++i) d.push_back({pt(i % 2 ? g1(rng) : g0(rng)), i % 2});

  LearnerConfig kc;
  kc.type = LearnerConfig::Type::kKernelSmoother;
  FittedModel fm = fit_with_cv(d, kc, 77);
  REQUIRE(fm.model != nullptr);
  CHECK(fm.hyperparameter > 0.0);
  double p = fm.model->predict_prob(pt(2.0));
  CHECK(p >= 0.0);
  CHECK(p <= 1.0);
  CHECK(p > 0.5);  // deep inside class 1

  LearnerConfig nc;
  nc.type = LearnerConfig::Type::kKnn;
  FittedModel fn = fit_with_cv(d, nc, 77);
  REQUIRE(fn.model != nullptr);
  CHECK(fn.hyperparameter >= 1.0);
  CHECK(fn.model->predict_prob(pt(-2.0)) < 0.5);

  // explicit grid restricts the choice
  LearnerConfig single;
  single.bandwidth_grid = {0.9};
  FittedModel fs = fit_with_cv(d, single, 5);
  CHECK(fs.hyperparameter == 0.9);
}
