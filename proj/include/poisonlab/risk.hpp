#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "poisonlab/distributions.hpp"
#include "poisonlab/learners.hpp"
#include "poisonlab/poisoning.hpp"

namespace poisonlab {

// Either |a-b|^gamma on probabilities or the zero-one loss on classified
// labels. Power losses carry their smoothness exponents: alpha = min(gamma,1)
// (the Holder exponent, with constant 1) and beta = max(gamma,1).
struct LossSpec {
  enum class Kind { kPower, kZeroOne };
  Kind kind = Kind::kPower;
  double gamma = 1.0;  // power losses only

  static LossSpec power(double gamma);
  static LossSpec zero_one();

  double holder_alpha() const;
  double holder_beta() const;
  double holder_constant() const;  // C = 1 for every power loss
  std::string name() const;        // "power(γ)" or "zero-one", stable for CSV
};

// ell(a, b). Power losses require a, b in [0,1]; zero-one requires labels.
double loss_value(const LossSpec& loss, double a, double b);

// Which distribution supplies the test inputs, and which reference the model
// is scored against:
//   kClean:    X ~ clean marginal; power target f_cl*(x), zero-one label Y ~ clean pair
//   kBackdoor: X ~ clean marginal + eta; power target 0, zero-one label = target label
//   kPoisoned: (X,Y) ~ poisoned mixture; power target f_poi*(x)
enum class Reference { kClean, kBackdoor, kPoisoned };

std::string reference_name(Reference ref);

struct RiskReport {
  Reference reference = Reference::kClean;
  std::string loss;
  double estimate = 0;
  double std_error = 0;  // sample sd / sqrt(n_test)
  int n_test = 0;
  std::uint64_t seed = 0;
};

// Monte Carlo risk of a fitted model against the stated reference. The
// poisoned reference needs the poisoned posterior density and is therefore
// rejected for degenerate models.
RiskReport estimate_risk(const ProbabilityModel& fit, const ClassConditionalGaussianPair& model,
                         double rho, const Trigger& trigger, Reference reference,
                         const LossSpec& loss, int n_test, std::uint64_t seed);

// One training-and-evaluation cell.
struct RiskExperiment {
  ClassConditionalGaussianPair model;
  int n = 0;        // clean training sample size
  double rho = 0;   // poisoning rate
  Trigger trigger;
  LearnerConfig learner;
  LossSpec loss;
  int n_test = 1000;
};

// Everything one replication produces. Risks for unavailable references
// (poisoned reference with a degenerate model) and for skipped arms are NaN.
struct ReplicationValues {
  double r_clean = 0;
  double r_backdoor = 0;
  double r_poisoned = 0;
  double baseline_clean = 0;          // clean-trained model on clean inputs
  double hyper_poisoned = 0;          // CV-chosen bandwidth/k on poisoned data
  double hyper_baseline = 0;
};

// Runs replication rep_index of the experiment. All randomness is derived
// from (master_seed, purpose tag, cell_salt, rep_index), so replications can
// be executed in any order, or in parallel, with identical results.
ReplicationValues run_replication(const RiskExperiment& experiment, std::uint64_t master_seed,
                                  int rep_index, bool with_baseline, std::uint64_t cell_salt = 0);

struct BaselineValues {
  double risk = 0;            // clean-trained model scored on clean inputs
  double hyperparameter = 0;  // its CV choice
};

// Just the baseline arm of run_replication, with identical seed derivation,
// for sweeps that share one baseline across all trigger cells.
BaselineValues run_baseline_replication(const RiskExperiment& experiment,
                                        std::uint64_t master_seed, int rep_index,
                                        std::uint64_t cell_salt = 0);

struct Aggregate {
  double mean = 0;
  double sd = 0;             // n-1 divisor
  double std_error = 0;      // sd / sqrt(reps)
  double ci_half_width = 0;  // 1.96 * std_error
  int reps = 0;
};

Aggregate aggregate_values(const std::vector<double>& values);

struct ReplicateSummary {
  Aggregate clean, backdoor;
  std::optional<Aggregate> poisoned;  // absent for degenerate models
  std::optional<Aggregate> baseline;  // absent when with_baseline is false
  std::vector<ReplicationValues> raw;
};

// reps independent replications plus the aggregation.
ReplicateSummary replicate(const RiskExperiment& experiment, int reps, std::uint64_t master_seed,
                           bool with_baseline = true, std::uint64_t cell_salt = 0);

// Attack bookkeeping: the attack counts as successful when both poisoned-model
// risks stay within kappa times the clean baseline.
bool judge_success(double r_clean, double r_backdoor, double clean_baseline, double kappa);

namespace internal {
// Poisoned-reference power risk for degenerate models, where the public
// estimate_risk refuses. The poisoned posterior is still well defined
// pointwise (the two mixture pieces share a null space), which is exactly
// what the bound audit needs.
RiskReport poisoned_power_risk_any_rank(const ProbabilityModel& fit,
                                        const ClassConditionalGaussianPair& model, double rho,
                                        const Trigger& trigger, const LossSpec& loss, int n_test,
                                        std::uint64_t seed);
}  // namespace internal

}  // namespace poisonlab
