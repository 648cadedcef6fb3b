#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <set>
#include <sstream>
#include <string>

#include <json.hpp>

#include "poisonlab/common.hpp"
#include "poisonlab/csv.hpp"
#include "poisonlab/harness.hpp"

using namespace poisonlab;
using nlohmann::json;

namespace {

// A cheap, fully valid config: 1x1 grid, tiny sample sizes.
const char* kTinyConfig = R"({
  "distribution": {
    "mean0": [3.0, 0.0],
    "mean1": [-3.0, 0.0],
    "covariance": [[3.0, 0.0], [0.0, 0.5]],
    "prior1": 0.5
  },
  "n": 60,
  "rho": 0.2,
  "trigger_grid": {"norms": [3.0], "angles_deg": [90.0]},
  "learner": {"type": "kernel-smoother", "bandwidth_grid": [0.5, 1.0], "folds": 5},
  "losses": [{"kind": "power", "gamma": 1.0}],
  "n_test": 150,
  "reps": 3,
  "master_seed": 5,
  "kappa": 1.5
})";

std::string with_patch(const std::string& base, const char* pointer, json value) {
  json j = json::parse(base);
  j[json::json_pointer(pointer)] = std::move(value);
  return j.dump();
}

std::string without_key(const std::string& base, const char* pointer) {
  json j = json::parse(base);
  json::json_pointer p(pointer);
  j[p.parent_pointer()].erase(p.back());
  return j.dump();
}

void expect_config_error(const std::string& text, const char* needle) {
  try {
    parse_config(text);
    FAIL_CHECK("expected config_error mentioning '" << needle << "'");
  } catch (const config_error& e) {
    CHECK(std::string(e.what()).find(needle) != std::string::npos);
  }
}

}  // namespace

TEST_CASE("a valid config parses into the declared values") {
  ExperimentConfig c = parse_config(kTinyConfig);
  CHECK(c.mean0(0) == 3.0);
  CHECK(c.mean1(0) == -3.0);
  CHECK(c.covariance(0, 0) == 3.0);
  CHECK(c.prior1 == 0.5);
  CHECK(c.n == 60);
  CHECK(c.rho == 0.2);
  CHECK(c.trigger_grid.norms == std::vector<double>{3.0});
  CHECK(c.trigger_grid.angles_deg == std::vector<double>{90.0});
  CHECK(c.learner.type == LearnerConfig::Type::kKernelSmoother);
  CHECK(c.learner.bandwidth_grid == std::vector<double>{0.5, 1.0});
  CHECK(c.learner.folds == 5);
  REQUIRE(c.losses.size() == 1);
  CHECK(c.losses[0].kind == LossSpec::Kind::kPower);
  CHECK(c.losses[0].gamma == 1.0);
  CHECK(c.n_test == 150);
  CHECK(c.reps == 3);
  CHECK(c.master_seed == 5);
  CHECK(c.kappa == 1.5);
}

TEST_CASE("config validation names the offending path") {
  expect_config_error("{ not json", "JSON");
  expect_config_error(with_patch(kTinyConfig, "/rho", 1.5), "rho");
  expect_config_error(with_patch(kTinyConfig, "/distribution/prior1", 0.0), "prior1");
  expect_config_error(with_patch(kTinyConfig, "/n", 0), "n");
  expect_config_error(with_patch(kTinyConfig, "/learner/folds", 1), "folds");
  expect_config_error(with_patch(kTinyConfig, "/learner/type", "forest"), "type");
  expect_config_error(with_patch(kTinyConfig, "/losses", json::array()), "losses");
  expect_config_error(with_patch(kTinyConfig, "/kappa", -1.0), "kappa");
  expect_config_error(without_key(kTinyConfig, "/distribution/mean0"), "mean0");

  // unknown keys are rejected, not ignored
  json extra = json::parse(kTinyConfig);
  extra["extra_knob"] = 1;
  expect_config_error(extra.dump(), "extra_knob");
  json deep = json::parse(kTinyConfig);
  deep["learner"]["mystery"] = true;
  expect_config_error(deep.dump(), "mystery");

  // zero-one losses take no gamma
  json zl = json::parse(kTinyConfig);
  zl["losses"] = json::array({{{"kind", "zero-one"}, {"gamma", 2.0}}});
  expect_config_error(zl.dump(), "gamma");

  // a grid must be norms+angles or explicit vectors, not both
  json both = json::parse(kTinyConfig);
  both["trigger_grid"]["vectors"] = json::array({json::array({0.0, 1.0})});
  expect_config_error(both.dump(), "trigger_grid");

  // n must cover the folds or cross-validation cannot run
  expect_config_error(with_patch(kTinyConfig, "/n", 4), "n");
}

TEST_CASE("canonical serialization is key-order independent and value sensitive") {
  ExperimentConfig a = parse_config(kTinyConfig);

  json j2 = json::parse(kTinyConfig);
  j2.erase("n_test");
  j2.erase("master_seed");
  j2["n_test"] = 150;
  j2["master_seed"] = 5;
  ExperimentConfig b = parse_config(j2.dump());
  CHECK(canonical_config_json(a) == canonical_config_json(b));
  CHECK(config_hash(a) == config_hash(b));

  ExperimentConfig c = parse_config(with_patch(kTinyConfig, "/rho", 0.25));
  CHECK(canonical_config_json(a) != canonical_config_json(c));
  CHECK(config_hash(a) != config_hash(c));
  CHECK(config_hash(a).size() == 16);
}

TEST_CASE("defaults are materialized into the canonical form") {
  json j = json::parse(kTinyConfig);
  j.erase("kappa");
  j.erase("n_test");
  ExperimentConfig c = parse_config(j.dump());
  CHECK(c.kappa == 1.5);
  CHECK(c.n_test == 1000);
  std::string canon = canonical_config_json(c);
  CHECK(canon.find("\"kappa\"") != std::string::npos);
  CHECK(canon.find("\"n_test\"") != std::string::npos);
}

TEST_CASE("the benchmark config is the documented one") {
  ExperimentConfig c = figure4_config(17);
  CHECK(c.mean0(0) == 3.0);
  CHECK(c.mean1(0) == -3.0);
  CHECK(c.covariance(0, 0) == 3.0);
  CHECK(c.covariance(1, 1) == 0.5);
  CHECK(c.n == 100);
  CHECK(c.rho == 0.2);
  CHECK(c.trigger_grid.norms == std::vector<double>{1.0, 3.0, 5.0});
  CHECK(c.trigger_grid.angles_deg == std::vector<double>{0.0, 45.0, 90.0, 135.0, 180.0});
  CHECK(c.learner.type == LearnerConfig::Type::kKernelSmoother);
  CHECK(c.losses.size() == 1);
  CHECK(c.losses[0].kind == LossSpec::Kind::kZeroOne);
  CHECK(c.reps == 20);
  CHECK(c.n_test == 1000);
  CHECK(c.master_seed == 17);
  CHECK(figure4_config(3).master_seed == 3);
}

TEST_CASE("trigger grid expansion") {
  ExperimentConfig c = figure4_config(17);
  auto model = make_model(c);
  auto cells = expand_trigger_grid(c, model);
  REQUIRE(cells.size() == 15);
  // norms outer, angles inner
  CHECK(cells[0].norm == 1.0);
  CHECK(cells[0].angle_deg == 0.0);
  CHECK(cells[4].angle_deg == 180.0);
  CHECK(cells[5].norm == 3.0);
  for (const auto& cell : cells)
    CHECK(cell.trigger.norm() == doctest::Approx(cell.norm));

  // explicit vectors report their measured geometry
  ExperimentConfig ev = parse_config(kTinyConfig);
  ev.trigger_grid.norms.clear();
  ev.trigger_grid.angles_deg.clear();
  ev.trigger_grid.vectors = {Eigen::Vector2d(0.0, 1.0)};
  auto vcells = expand_trigger_grid(ev, model);
  REQUIRE(vcells.size() == 1);
  CHECK(vcells[0].norm == doctest::Approx(1.0));
  CHECK(vcells[0].angle_deg == doctest::Approx(270.0));
}

TEST_CASE("sweep row structure for a 1x1 grid") {
  ExperimentConfig c = parse_config(kTinyConfig);
  SweepResult r = run_sweep(c, true);
  // clean, backdoor, poisoned, then the shared baseline row
  REQUIRE(r.rows.size() == 4);
  CHECK(r.rows[0].reference == "clean");
  CHECK(r.rows[1].reference == "backdoor");
  CHECK(r.rows[2].reference == "poisoned");
  CHECK(r.rows[3].reference == "baseline");
  CHECK(r.config_hash == config_hash(c));

  for (const auto& row : r.rows) {
    CHECK(row.loss == "power(1)");
    CHECK(row.reps == 3);
    CHECK(row.config_hash == r.config_hash);
    CHECK(row.seed == 5);
    CHECK(std::isfinite(row.mean));
  }
  // attack rows share one success flag; the baseline row has none
  CHECK(r.rows[0].success_flag == r.rows[1].success_flag);
  CHECK((r.rows[0].success_flag == 0 || r.rows[0].success_flag == 1));
  CHECK(r.rows[3].success_flag == -1);
  CHECK(std::isnan(r.rows[3].norm));
  CHECK(r.rows[0].baseline_clean_error == r.rows[3].mean);

  SweepResult no_poi = run_sweep(c, false);
  REQUIRE(no_poi.rows.size() == 3);
  CHECK(no_poi.rows[2].reference == "baseline");
  // dropping the poisoned reference must not move the other arms
  CHECK(no_poi.rows[0].mean == r.rows[0].mean);
  CHECK(no_poi.rows[1].mean == r.rows[1].mean);
}

TEST_CASE("sweeps are deterministic and seed-sensitive") {
  ExperimentConfig c = parse_config(kTinyConfig);
  SweepResult a = run_sweep(c, true);
  SweepResult b = run_sweep(c, true);
  std::ostringstream sa, sb;
  write_sweep_csv(sa, a);
  write_sweep_csv(sb, b);
  CHECK(sa.str() == sb.str());

  ExperimentConfig c2 = parse_config(with_patch(kTinyConfig, "/master_seed", 6));
  SweepResult d = run_sweep(c2, true);
  CHECK(d.rows[0].mean != a.rows[0].mean);
}

TEST_CASE("degenerate models drop the poisoned rows from sweeps") {
  json j = json::parse(kTinyConfig);
  j["distribution"]["covariance"] = json::array({json::array({3.0, 0.0}),
                                                 json::array({0.0, 0.0})});
  j["trigger_grid"] = {{"vectors", json::array({json::array({0.0, 0.1})})}};
  ExperimentConfig c = parse_config(j.dump());
  SweepResult r = run_sweep(c, true);
  REQUIRE(r.rows.size() == 3);  // clean, backdoor, baseline; poisoned unavailable
  CHECK(r.rows[0].reference == "clean");
  CHECK(r.rows[1].reference == "backdoor");
  CHECK(r.rows[2].reference == "baseline");
}

TEST_CASE("sweep CSV and JSON carry the same table") {
  ExperimentConfig c = parse_config(kTinyConfig);
  SweepResult r = run_sweep(c, true);

  std::ostringstream os;
  write_sweep_csv(os, r);
  std::istringstream is(os.str());
  std::string header;
  REQUIRE(csv_getline(is, header));
  CHECK(header ==
        "norm,angle_deg,reference,loss,mean,ci_half_width,reps,"
        "baseline_clean_error,success_flag,config_hash,seed");
  int rows = 0;
  std::string line;
  while (csv_getline(is, line)) {
    auto fields = csv_split(line);
    REQUIRE(fields.size() == 11);
    CHECK(parse_double(fields[4]) == r.rows[rows].mean);
    ++rows;
  }
  CHECK(rows == 4);
  CHECK(os.str().rfind("# tool=poisonlab-0.1.0 config_hash=" + r.config_hash, 0) == 0);

  json j = json::parse(sweep_json(r));
  CHECK(j["tool"] == "poisonlab-0.1.0");
  CHECK(j["config_hash"] == r.config_hash);
  CHECK(j["master_seed"] == 5);
  REQUIRE(j["rows"].size() == 4);
  CHECK(j["rows"][0]["reference"] == "clean");
  CHECK(j["rows"][0]["mean"] == r.rows[0].mean);
  CHECK(j["rows"][3]["norm"].is_null());  // NaN serializes as null
}

TEST_CASE("bound audit requires the power(1) loss") {
  json j = json::parse(kTinyConfig);
  j["losses"] = json::array({{{"kind", "zero-one"}}});
  ExperimentConfig c = parse_config(j.dump());
  CHECK_THROWS_AS(run_bound_audit(c), config_error);
}

TEST_CASE("bound audit on a single orthogonal cell") {
  ExperimentConfig c = parse_config(kTinyConfig);
  BoundAuditResult r = run_bound_audit(c);
  REQUIRE(r.rows.size() == 1);
  const BoundAuditRow& row = r.rows[0];

  CHECK(row.norm == 3.0);
  CHECK(row.angle_deg == 90.0);
  CHECK(row.norm_condition == 1);  // orthogonal triggers always pass
  CHECK(row.r_poisoned >= 0.0);
  CHECK(row.h_max > 0.0);
  CHECK(row.h_max < 1.0);
  CHECK(row.g1 > 0.0);
  CHECK(row.c1 > 0.0);
  CHECK(row.ub_clean == doctest::Approx(row.r_poisoned / 0.8 + row.h_max / 0.8));
  CHECK(row.ub_backdoor == doctest::Approx(row.r_poisoned / 0.2 + row.h_max / 0.2));
  // ||eta|| = 3 > 2, so the lower bounds are live
  CHECK(std::isfinite(row.lb_clean));
  CHECK(std::isfinite(row.lb_backdoor));

  for (int flag : {row.upper_clean_flag, row.upper_backdoor_flag, row.lower_clean_flag,
                   row.lower_backdoor_flag, row.containment_class0_flag, row.containment_class1_flag})
    CHECK((flag == -1 || flag == 0 || flag == 1));
  // the orthogonal geometry satisfies containment for both classes
  CHECK(row.containment_class0_flag == 1);
  CHECK(row.containment_class1_flag == 1);
  CHECK(row.config_hash == r.config_hash);

  BoundAuditResult again = run_bound_audit(c);
  CHECK(bound_audit_json(again) == bound_audit_json(r));
}

TEST_CASE("bound audit on a degenerate covariance has a vanishing tail term") {
  json j = json::parse(kTinyConfig);
  j["distribution"]["covariance"] = json::array({json::array({3.0, 0.0}),
                                                 json::array({0.0, 0.0})});
  j["trigger_grid"] = {{"vectors", json::array({json::array({0.0, 2.5})})}};
  ExperimentConfig c = parse_config(j.dump());
  BoundAuditResult r = run_bound_audit(c);
  REQUIRE(r.rows.size() == 1);
  const BoundAuditRow& row = r.rows[0];

  // the trigger is orthogonal to the support, so no clean mass ever projects
  // past the slab: h_max = 0 and the upper bound collapses to the transfer term
  CHECK(row.h_max == 0.0);
  CHECK(row.ub_clean == doctest::Approx(row.r_poisoned / 0.8));
  CHECK(row.ub_backdoor == doctest::Approx(row.r_poisoned / 0.2));
  // off-support ball: the min density, and with it the lower bound, degenerates
  CHECK(row.g1 == 0.0);
  CHECK(std::isfinite(row.r_poisoned));
}

TEST_CASE("bound audit CSV layout") {
  ExperimentConfig c = parse_config(kTinyConfig);
  BoundAuditResult r = run_bound_audit(c);
  std::ostringstream os;
  write_bound_audit_csv(os, r);
  std::istringstream is(os.str());
  std::string header;
  REQUIRE(csv_getline(is, header));
  CHECK(header ==
        "norm,angle_deg,norm_condition,r_clean,se_clean,r_backdoor,se_backdoor,"
        "r_poisoned,se_poisoned,h_max,g1,c1,ub_clean,ub_backdoor,lb_clean,lb_backdoor,"
        "upper_clean_flag,upper_backdoor_flag,lower_clean_flag,lower_backdoor_flag,"
        "containment_class0_flag,containment_class1_flag,config_hash,seed");
  std::string line;
  REQUIRE(csv_getline(is, line));
  auto fields = csv_split(line);
  REQUIRE(fields.size() == 24);
  CHECK(parse_double(fields[0]) == 3.0);
  CHECK(fields[22] == r.config_hash);

  json j = json::parse(bound_audit_json(r));
  CHECK(j["config_hash"] == r.config_hash);
  REQUIRE(j["rows"].size() == 1);
  CHECK(j["rows"][0]["norm_condition"] == 1);
}
