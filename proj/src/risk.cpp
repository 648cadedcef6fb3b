#include "poisonlab/risk.hpp"

#include <cmath>
#include <limits>

#include "poisonlab/common.hpp"
#include "poisonlab/csv.hpp"
#include "poisonlab/rng.hpp"

namespace poisonlab {

LossSpec LossSpec::power(double gamma) {
  if (!(gamma > 0) || !std::isfinite(gamma))
    throw precondition_error("power loss exponent must be positive and finite");
  LossSpec s;
  s.kind = Kind::kPower;
  s.gamma = gamma;
  return s;
}

LossSpec LossSpec::zero_one() {
  LossSpec s;
  s.kind = Kind::kZeroOne;
  s.gamma = 0;
  return s;
}

double LossSpec::holder_alpha() const {
  if (kind != Kind::kPower)
    throw precondition_error("smoothness exponents are defined for power losses only");
  return std::min(gamma, 1.0);
}

double LossSpec::holder_beta() const {
  if (kind != Kind::kPower)
    throw precondition_error("smoothness exponents are defined for power losses only");
  return std::max(gamma, 1.0);
}

double LossSpec::holder_constant() const {
  if (kind != Kind::kPower)
    throw precondition_error("smoothness exponents are defined for power losses only");
  return 1.0;
}

std::string LossSpec::name() const {
  if (kind == Kind::kZeroOne) return "zero-one";
  return "power(" + format_double(gamma) + ")";
}

double loss_value(const LossSpec& loss, double a, double b) {
  if (loss.kind == LossSpec::Kind::kPower) {
    if (!(a >= 0 && a <= 1) || !(b >= 0 && b <= 1))
      throw precondition_error("power loss arguments must lie in [0,1]");
    return std::pow(std::abs(a - b), loss.gamma);
  }
  const bool a01 = a == 0.0 || a == 1.0;
  const bool b01 = b == 0.0 || b == 1.0;
  if (!a01 || !b01) throw precondition_error("zero-one loss applies to classified labels");
  return a == b ? 0.0 : 1.0;
}

std::string reference_name(Reference ref) {
  switch (ref) {
    case Reference::kClean: return "clean";
    case Reference::kBackdoor: return "backdoor";
    case Reference::kPoisoned: return "poisoned";
  }
  throw precondition_error("unknown reference");
}

namespace {

struct TestDraw {
  Eigen::VectorXd x;
  int label;          // sampled label of the reference pair
  bool from_backdoor; // poisoned-mixture component indicator
};

// One (X, Y) pair from the reference distribution. Draw order is fixed:
// mixture coin (poisoned only), then class coin, then the Gaussian input.
TestDraw draw_reference_pair(const ClassConditionalGaussianPair& model, double rho,
                             const Trigger& trigger, Reference ref, std::mt19937_64& rng) {
  std::bernoulli_distribution prior(model.prior1());
  TestDraw d;
  d.from_backdoor = false;
  if (ref == Reference::kPoisoned) {
    std::bernoulli_distribution mix(rho);
    d.from_backdoor = mix(rng);
  }
  const int cls = prior(rng) ? 1 : 0;
  d.x = sample_class_input(model, cls, rng);
  if (ref == Reference::kBackdoor || d.from_backdoor) {
    d.x += trigger.eta();
    d.label = Trigger::kTargetLabel;
  } else {
    d.label = cls;
  }
  return d;
}

RiskReport estimate_risk_impl(const ProbabilityModel& fit,
                              const ClassConditionalGaussianPair& model, double rho,
                              const Trigger& trigger, Reference reference, const LossSpec& loss,
                              int n_test, std::uint64_t seed, bool allow_degenerate_poisoned) {
  if (n_test < 1) throw precondition_error("n_test must be positive");
  if (!(rho > 0.0 && rho < 1.0)) throw precondition_error("rho must lie strictly inside (0,1)");
  if (trigger.dim() != model.dim()) throw precondition_error("trigger dimension mismatch");
  if (reference == Reference::kPoisoned && model.degenerate() && !allow_degenerate_poisoned)
    throw precondition_error(
        "poisoned reference needs the poisoned input density; unavailable for a "
        "degenerate covariance");

  auto rng = make_rng(seed);
  double sum = 0, sumsq = 0;
  for (int t = 0; t < n_test; ++t) {
    const TestDraw d = draw_reference_pair(model, rho, trigger, reference, rng);
    double v;
    if (loss.kind == LossSpec::Kind::kZeroOne) {
      v = loss_value(loss, static_cast<double>(classify(fit, d.x)),
                     static_cast<double>(d.label));
    } else {
      double target;
      switch (reference) {
        case Reference::kClean: target = clean_regression_fn(model, d.x); break;
        case Reference::kBackdoor: target = 0.0; break;
        case Reference::kPoisoned: target = poisoned_regression_fn(model, rho, trigger, d.x); break;
        default: throw precondition_error("unknown reference");
      }
      v = loss_value(loss, fit.predict_prob(d.x), target);
    }
    sum += v;
    sumsq += v * v;
  }
  RiskReport rep;
  rep.reference = reference;
  rep.loss = loss.name();
  rep.n_test = n_test;
  rep.seed = seed;
  rep.estimate = sum / n_test;
  const double var = n_test > 1 ? std::max(0.0, (sumsq - sum * sum / n_test) / (n_test - 1)) : 0.0;
  rep.std_error = std::sqrt(var / n_test);
  return rep;
}

}  // namespace

RiskReport estimate_risk(const ProbabilityModel& fit, const ClassConditionalGaussianPair& model,
                         double rho, const Trigger& trigger, Reference reference,
                         const LossSpec& loss, int n_test, std::uint64_t seed) {
  return estimate_risk_impl(fit, model, rho, trigger, reference, loss, n_test, seed, false);
}

namespace internal {
RiskReport poisoned_power_risk_any_rank(const ProbabilityModel& fit,
                                        const ClassConditionalGaussianPair& model, double rho,
                                        const Trigger& trigger, const LossSpec& loss, int n_test,
                                        std::uint64_t seed) {
  if (loss.kind != LossSpec::Kind::kPower)
    throw precondition_error("this path is for power losses");
  return estimate_risk_impl(fit, model, rho, trigger, Reference::kPoisoned, loss, n_test, seed,
                            true);
}
}  // namespace internal

ReplicationValues run_replication(const RiskExperiment& experiment, std::uint64_t master_seed,
                                  int rep_index, bool with_baseline, std::uint64_t cell_salt) {
  if (experiment.n < 1) throw precondition_error("training size must be positive");
  const auto rep = static_cast<std::uint64_t>(rep_index);
  const auto& m = experiment.model;
  const double nan = std::numeric_limits<double>::quiet_NaN();

  const Dataset clean =
      sample_clean(m, experiment.n, derive_seed(master_seed, "train", cell_salt, rep));
  const PoisonedDataset poisoned = poison_dataset(
      clean, experiment.rho, experiment.trigger, derive_seed(master_seed, "poison", cell_salt, rep));

  const FittedModel fit = fit_with_cv(poisoned.as_dataset(), experiment.learner,
                                      derive_seed(master_seed, "cv", cell_salt, rep));

  ReplicationValues out;
  out.hyper_poisoned = fit.hyperparameter;
  out.r_clean = estimate_risk(*fit.model, m, experiment.rho, experiment.trigger,
                              Reference::kClean, experiment.loss, experiment.n_test,
                              derive_seed(master_seed, "test/clean", cell_salt, rep))
                    .estimate;
  out.r_backdoor = estimate_risk(*fit.model, m, experiment.rho, experiment.trigger,
                                 Reference::kBackdoor, experiment.loss, experiment.n_test,
                                 derive_seed(master_seed, "test/backdoor", cell_salt, rep))
                       .estimate;
  if (m.degenerate()) {
    out.r_poisoned = nan;
  } else {
    out.r_poisoned = estimate_risk(*fit.model, m, experiment.rho, experiment.trigger,
                                   Reference::kPoisoned, experiment.loss, experiment.n_test,
                                   derive_seed(master_seed, "test/poisoned", cell_salt, rep))
                         .estimate;
  }

  if (with_baseline) {
    const BaselineValues base = run_baseline_replication(experiment, master_seed, rep_index,
                                                         cell_salt);
    out.baseline_clean = base.risk;
    out.hyper_baseline = base.hyperparameter;
  } else {
    out.baseline_clean = nan;
    out.hyper_baseline = nan;
  }
  return out;
}

BaselineValues run_baseline_replication(const RiskExperiment& experiment,
                                        std::uint64_t master_seed, int rep_index,
                                        std::uint64_t cell_salt) {
  if (experiment.n < 1) throw precondition_error("training size must be positive");
  const auto rep = static_cast<std::uint64_t>(rep_index);
  const auto& m = experiment.model;
  // The baseline arm trains on its own clean sample, independent of the
  // poisoned arm, and is scored on clean inputs.
  const Dataset data =
      sample_clean(m, experiment.n, derive_seed(master_seed, "baseline-train", cell_salt, rep));
  const FittedModel fit = fit_with_cv(data, experiment.learner,
                                      derive_seed(master_seed, "baseline-cv", cell_salt, rep));
  BaselineValues out;
  out.hyperparameter = fit.hyperparameter;
  out.risk = estimate_risk(*fit.model, m, experiment.rho, experiment.trigger, Reference::kClean,
                           experiment.loss, experiment.n_test,
                           derive_seed(master_seed, "baseline-test", cell_salt, rep))
                 .estimate;
  return out;
}

Aggregate aggregate_values(const std::vector<double>& values) {
  if (values.empty()) throw precondition_error("nothing to aggregate");
  Aggregate a;
  a.reps = static_cast<int>(values.size());
  double sum = 0;
  for (double v : values) sum += v;
  a.mean = sum / a.reps;
  double ss = 0;
  for (double v : values) ss += (v - a.mean) * (v - a.mean);
  a.sd = a.reps > 1 ? std::sqrt(ss / (a.reps - 1)) : 0.0;
  a.std_error = a.sd / std::sqrt(static_cast<double>(a.reps));
  a.ci_half_width = 1.96 * a.std_error;
  return a;
}

ReplicateSummary replicate(const RiskExperiment& experiment, int reps, std::uint64_t master_seed,
                           bool with_baseline, std::uint64_t cell_salt) {
  if (reps < 1) throw precondition_error("need at least one replication");
  ReplicateSummary summary;
  summary.raw.reserve(reps);
  std::vector<double> v_cl, v_bd, v_poi, v_base;
  for (int r = 0; r < reps; ++r) {
    ReplicationValues vals = run_replication(experiment, master_seed, r, with_baseline, cell_salt);
    v_cl.push_back(vals.r_clean);
    v_bd.push_back(vals.r_backdoor);
    if (!std::isnan(vals.r_poisoned)) v_poi.push_back(vals.r_poisoned);
    if (with_baseline) v_base.push_back(vals.baseline_clean);
    summary.raw.push_back(std::move(vals));
  }
  summary.clean = aggregate_values(v_cl);
  summary.backdoor = aggregate_values(v_bd);
  if (!v_poi.empty()) summary.poisoned = aggregate_values(v_poi);
  if (!v_base.empty()) summary.baseline = aggregate_values(v_base);
  return summary;
}

bool judge_success(double r_clean, double r_backdoor, double clean_baseline, double kappa) {
  if (!(clean_baseline > 0))
    throw precondition_error("success judgement needs a positive clean baseline");
  if (!(kappa > 0)) throw precondition_error("kappa must be positive");
  return std::max(r_clean, r_backdoor) <= kappa * clean_baseline;
}

}  // namespace poisonlab
