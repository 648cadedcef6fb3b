#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "poisonlab/distributions.hpp"
#include "poisonlab/learners.hpp"
#include "poisonlab/poisoning.hpp"
#include "poisonlab/risk.hpp"

namespace poisonlab {

// Trigger grid of a sweep: norms x angles for 2-dimensional models, or
// explicit vectors for anything else.
struct TriggerGrid {
  std::vector<double> norms;
  std::vector<double> angles_deg;
  std::vector<Eigen::VectorXd> vectors;
  bool explicit_vectors() const { return !vectors.empty(); }
};

struct ExperimentConfig {
  Eigen::VectorXd mean0, mean1;
  Eigen::MatrixXd covariance;
  double prior1 = 0.5;
  int n = 100;
  double rho = 0.2;
  TriggerGrid trigger_grid;
  LearnerConfig learner;
  std::vector<LossSpec> losses;
  int n_test = 1000;
  int reps = 20;
  std::uint64_t master_seed = 17;
  double kappa = 1.5;
};

// Parses and fully validates a config document. Any problem is reported as a
// config_error naming the offending JSON path; unknown keys are rejected.
ExperimentConfig parse_config(const std::string& json_text);

// The built-in benchmark configuration behind the figure4 subcommand: means
// (-3,0) and (3,0) with covariance diag(3, 0.5) and equal priors, n=100,
// rho=0.2, norms {1,3,5} x angles {0,45,90,135,180}, kernel smoother with
// five-fold CV, zero-one loss, 20 replications of 1000 test points.
ExperimentConfig figure4_config(std::uint64_t master_seed);

// The parsed config re-serialized with sorted keys and shortest round-trip
// floats. Equal configs produce equal text; any field change changes it.
std::string canonical_config_json(const ExperimentConfig& config);

// 64-bit FNV-1a of canonical_config_json as 16 hex digits, embedded in every
// output file.
std::string config_hash(const ExperimentConfig& config);

ClassConditionalGaussianPair make_model(const ExperimentConfig& config);

// One cell of the trigger grid, with the display coordinates it came from.
// Explicit vectors get their measured norm, and their measured angle when the
// model is 2-dimensional with distinct means (NaN otherwise).
struct TriggerCell {
  double norm = 0;
  double angle_deg = 0;
  Trigger trigger;
};

std::vector<TriggerCell> expand_trigger_grid(const ExperimentConfig& config,
                                             const ClassConditionalGaussianPair& model);

struct SweepRow {
  double norm = 0;
  double angle_deg = 0;
  std::string reference;  // clean | backdoor | poisoned | baseline
  std::string loss;
  double mean = 0;
  double ci_half_width = 0;
  int reps = 0;
  double baseline_clean_error = 0;
  int success_flag = -1;  // 1/0 on attack cells, -1 where undefined
  std::string config_hash;
  std::uint64_t seed = 0;
};

struct SweepResult {
  std::vector<SweepRow> rows;
  std::string config_hash;
  std::uint64_t master_seed = 0;
};

// Full grid sweep. Per cell and loss: reps replications of
// train-on-poisoned-data, scored against the clean, backdoor and (for
// full-rank models, when requested) poisoned references. One clean-baseline
// arm per loss is shared across cells and appended as reference="baseline"
// rows. Cell seed streams are salted by cell index, so values never depend
// on grid order, and rows appear in deterministic grid order.
SweepResult run_sweep(const ExperimentConfig& config, bool include_poisoned_reference = true);

// The benchmark sweep: 15 cells x {clean, backdoor} plus the baseline row.
SweepResult run_figure4(std::uint64_t master_seed);

struct BoundAuditRow {
  double norm = 0;
  double angle_deg = 0;
  int norm_condition = 0;  // literal signed check, 1/0
  double r_clean = 0, se_clean = 0;
  double r_backdoor = 0, se_backdoor = 0;
  double r_poisoned = 0, se_poisoned = 0;
  double h_max = 0;  // worse per-class tail at radius ||eta||/4
  double g1 = 0;     // class-1 min density over the radius-1 ball around eta
  double c1 = 0;     // separation constant from the ball-mass quadrature
  double ub_clean = 0, ub_backdoor = 0;
  double lb_clean = 0, lb_backdoor = 0;
  // 1 holds, 0 fails, -1 not applicable (norm condition for the upper and
  // containment flags, ||eta|| > 2 for the lower flags).
  int upper_clean_flag = -1, upper_backdoor_flag = -1;
  int lower_clean_flag = -1, lower_backdoor_flag = -1;
  int containment_class0_flag = -1, containment_class1_flag = -1;
  std::string config_hash;
  std::uint64_t seed = 0;
};

struct BoundAuditResult {
  std::vector<BoundAuditRow> rows;
  std::string config_hash;
  std::uint64_t master_seed = 0;
};

// Joins per-cell empirical risks under the power(1) loss with the transfer
// upper bounds, the separation lower bounds, the slab-containment audits and
// the norm condition. Estimation noise is absorbed by 3-sigma slack on every
// comparison; cells that fail a bound's precondition are marked -1 rather
// than failed. Requires the power(1) loss in the config.
BoundAuditResult run_bound_audit(const ExperimentConfig& config);

// CSV writers prepend "# tool=... config_hash=..." before the header row.
void write_sweep_csv(std::ostream& os, const SweepResult& result);
void write_bound_audit_csv(std::ostream& os, const BoundAuditResult& result);

// The same tables as JSON documents (rows as an array of objects; NaN
// serializes as null).
std::string sweep_json(const SweepResult& result);
std::string bound_audit_json(const BoundAuditResult& result);

}  // namespace poisonlab
