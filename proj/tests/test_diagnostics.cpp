#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <random>
#include <sstream>

#include "poisonlab/common.hpp"
#include "poisonlab/diagnostics.hpp"

using namespace poisonlab;
using Eigen::MatrixXd;
using Eigen::Vector2d;
using Eigen::VectorXd;

namespace {

Dataset tiny_dataset() {
  // first coordinate -2, 0, 2 (sample variance 4); second pinned at 1
  Dataset d(2);
  d.push_back({Vector2d(-2.0, 1.0), 0});
  d.push_back({Vector2d(0.0, 1.0), 1});
  d.push_back({Vector2d(2.0, 1.0), 0});
  return d;
}

}  // namespace

TEST_CASE("relative change against an explicit trigger") {
  Dataset d = tiny_dataset();
  auto diags = relative_change(d, Trigger(Vector2d(1.0, 0.0)));
  REQUIRE(diags.size() == 2);

  CHECK(diags[0].index == 0);
  CHECK(diags[0].variance == doctest::Approx(4.0));
  CHECK(diags[0].std_dev == doctest::Approx(2.0));
  CHECK(diags[0].abs_change == doctest::Approx(1.0));
  CHECK(diags[0].relative_change == doctest::Approx(0.5));
  CHECK_FALSE(diags[0].infinite);

  // dimension 2 has zero spread and is untouched: change 0, not infinite
  CHECK(diags[1].variance == doctest::Approx(0.0));
  CHECK(diags[1].relative_change == 0.0);
  CHECK_FALSE(diags[1].infinite);

  // the same zero-spread dimension becomes infinite once the trigger moves it
  auto hot = relative_change(d, Trigger(Vector2d(0.0, 0.1)));
  CHECK(hot[1].infinite);
  CHECK(std::isinf(hot[1].relative_change));
  CHECK(hot[1].abs_change == doctest::Approx(0.1));
}

TEST_CASE("relative change from a paired sample") {
  Dataset clean = tiny_dataset();
  Trigger t(Vector2d(0.5, 0.0));
  Dataset shifted(2);
  for (const auto& p : clean.points()) shifted.push_back({p.x + t.eta(), p.y});

  auto from_trigger = relative_change(clean, t);
  auto from_pairs = relative_change(clean, shifted);
  REQUIRE(from_pairs.size() == from_trigger.size());
  for (std::size_t i = 0; i < from_pairs.size(); ++i) {
    CHECK(from_pairs[i].variance == doctest::Approx(from_trigger[i].variance));
    CHECK(from_pairs[i].abs_change == doctest::Approx(from_trigger[i].abs_change));
    CHECK(from_pairs[i].relative_change ==
          doctest::Approx(from_trigger[i].relative_change));
  }
}

TEST_CASE("relative change needs two points and matching dimensions") {
  Dataset one(2);
  one.push_back({Vector2d(0.0, 0.0), 0});
  CHECK_THROWS_AS(relative_change(one, Trigger(Vector2d(1.0, 0.0))), precondition_error);
  Dataset d = tiny_dataset();
  CHECK_THROWS_AS(relative_change(d, Trigger(VectorXd::Ones(3))), precondition_error);
}

TEST_CASE("degenerate directions of a matrix") {
  MatrixXd cov(2, 2);
  cov << 1.0, 0.0, 0.0, 1e-14;
  auto dirs = degenerate_directions(cov, 1e-10);
  REQUIRE(dirs.size() == 1);
  CHECK(dirs[0].variance <= 1e-10);
  CHECK(std::abs(dirs[0].direction(1)) == doctest::Approx(1.0));
  CHECK(dirs[0].direction(1) > 0.0);

  CHECK(degenerate_directions(MatrixXd::Identity(3, 3), 1e-10).empty());

  // least variance first
  MatrixXd two = MatrixXd::Zero(3, 3);
  two(0, 0) = 5.0;
  two(1, 1) = 1e-13;
  two(2, 2) = 1e-15;
  auto both = degenerate_directions(two, 1e-10);
  REQUIRE(both.size() == 2);
  CHECK(both[0].variance <= both[1].variance);
}

TEST_CASE("degenerate directions of a sampled dataset") {
  // 1000 draws from N(0, diag(1, 1e-14)) essentially pin the second axis
  std::mt19937_64 rng(77);
  std::normal_distribution<double> g(0.0, 1.0);
  Dataset d(2);
  for (int i = 0; i < 1000; ++i)
    d.push_back({Vector2d(g(rng), 1e-7 * g(rng)), 0});
  auto dirs = degenerate_directions(d, 1e-10);
  REQUIRE(dirs.size() == 1);
  CHECK(std::abs(dirs[0].direction(1)) == doctest::Approx(1.0).epsilon(1e-6));

  Dataset tiny(2);
  tiny.push_back({Vector2d(0, 0), 0});
  CHECK_THROWS_AS(degenerate_directions(tiny, 1e-10), precondition_error);
}

TEST_CASE("diagnostics CSV is stable") {
  Dataset d = tiny_dataset();
  auto diags = relative_change(d, Trigger(Vector2d(1.0, 0.1)));
  std::ostringstream os;
  write_diagnostics_csv(os, diags);
  CHECK(os.str() ==
        "dim,variance,relative_change,degenerate_flag\n"
        "1,4,0.5,0\n"
        "2,0,inf,1\n");
}
