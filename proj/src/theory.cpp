#include "poisonlab/theory.hpp"

#include <cmath>
#include <limits>
#include <string>
#include <tuple>

#include "poisonlab/common.hpp"
#include "poisonlab/rng.hpp"

namespace poisonlab {

namespace {

constexpr double kPi = 3.14159265358979323846264338327950288;

void require_nonneg(double v, const char* what) {
  if (!std::isfinite(v) || v < 0.0)
    throw precondition_error(std::string(what) + " must be finite and nonnegative");
}

void require_rho(double rho) {
  if (!(rho > 0.0 && rho < 1.0)) throw precondition_error("rho must lie in (0, 1)");
}

}  // namespace

bool check_norm_condition(const Trigger& trigger, const ClassConditionalGaussianPair& model) {
  if (trigger.dim() != model.dim())
    throw precondition_error("trigger dimension does not match the model");
  // ||eta|| >= 4 cos(eta, d) ||d|| with d = mean1 - mean0, multiplied through
  // by ||eta|| so the zero trigger needs no special case.
  const Eigen::VectorXd delta = model.mean(1) - model.mean(0);
  return trigger.eta().squaredNorm() >= 4.0 * trigger.eta().dot(delta);
}

std::pair<double, double> risk_transfer_upper_bound(const BoundInputs& in) {
  require_rho(in.rho);
  require_nonneg(in.r_poi, "the poisoned risk");
  require_nonneg(in.h_max, "h_max");
  require_nonneg(in.c, "the Holder constant");
  if (!(in.alpha > 0.0) || !std::isfinite(in.alpha))
    throw precondition_error("alpha must be positive and finite");
  const double excess = in.c * std::pow(in.h_max, in.alpha);
  return {in.r_poi / (1.0 - in.rho) + excess * std::pow(1.0 - in.rho, -in.alpha),
          in.r_poi / in.rho + excess * std::pow(in.rho, -in.alpha)};
}

std::pair<double, double> risk_separation_lower_bound(const BoundInputs& in, double eta_norm) {
  require_rho(in.rho);
  if (!(eta_norm > 2.0 * in.c_radius))
    throw precondition_error("separation bounds need ||eta|| > 2 * c_radius");
  require_nonneg(in.r_poi, "the poisoned risk");
  require_nonneg(in.g1, "g1");
  require_nonneg(in.c1, "c1");
  require_nonneg(in.c2, "c2");
  if (!(in.alpha > 0.0) || !(in.beta > 0.0))
    throw precondition_error("alpha and beta must be positive");
  const double witness = in.c1 * std::pow(in.g1, in.beta);
  const double transfer = in.c2 * std::pow(in.r_poi, in.alpha / in.beta);
  return {std::pow(in.rho, in.beta) * witness - transfer,
          std::pow(1.0 - in.rho, in.beta) * witness - transfer};
}

BoundReport bound_report(const BoundInputs& in, double eta_norm, bool norm_condition_met) {
  BoundReport report;
  report.inputs = in;
  report.norm_condition_met = norm_condition_met;
  std::tie(report.ub_clean, report.ub_backdoor) = risk_transfer_upper_bound(in);
  report.separation_condition_met = eta_norm > 2.0 * in.c_radius;
  if (report.separation_condition_met) {
    std::tie(report.lb_clean, report.lb_backdoor) = risk_separation_lower_bound(in, eta_norm);
  } else {
    report.lb_clean = std::numeric_limits<double>::quiet_NaN();
    report.lb_backdoor = report.lb_clean;
  }
  return report;
}

TailContainmentAudit tail_containment_audit(const ClassConditionalGaussianPair& model, int cls,
                                            const Trigger& trigger, int n_mc, std::uint64_t seed) {
  if (cls != 0 && cls != 1) throw precondition_error("class label must be 0 or 1");
  if (trigger.dim() != model.dim())
    throw precondition_error("trigger dimension does not match the model");
  if (n_mc < 1) throw precondition_error("n_mc must be positive");

  TailContainmentAudit audit;
  audit.applicable = check_norm_condition(trigger, model);

  const Eigen::VectorXd& eta = trigger.eta();
  const double eta_norm = trigger.norm();
  const double threshold = 0.5 * eta_norm * eta_norm;

  auto rng = make_rng(derive_seed(seed, "tail-containment", static_cast<std::uint64_t>(cls)));
  const Eigen::VectorXd& center = model.mean(1);
  long long hits = 0;
  for (int i = 0; i < n_mc; ++i) {
    const Eigen::VectorXd x = sample_class_input(model, cls, rng);
    if (std::abs((x - center).dot(eta)) >= threshold) ++hits;
  }
  const double p = static_cast<double>(hits) / static_cast<double>(n_mc);
  audit.lhs = p;
  audit.rhs = tail_h(model, cls, eta, eta_norm / 4.0);
  audit.mc_std_error = std::sqrt(p * (1.0 - p) / static_cast<double>(n_mc));
  audit.holds = audit.lhs <= audit.rhs + 3.0 * audit.mc_std_error;
  return audit;
}

OptimalTrigger optimal_trigger(const Eigen::MatrixXd& covariance, double s) {
  if (!(s > 0.0) || !std::isfinite(s))
    throw precondition_error("trigger length must be positive and finite");
  if (covariance.rows() < 1) throw precondition_error("covariance must be nonempty");
  const EigenDirections dirs = eigen_directions(covariance);
  if (dirs.values.minCoeff() < 0.0)
    throw precondition_error("covariance has a negative eigenvalue");
  const Eigen::Index n = dirs.values.size();
  const double tol = 1e-12 * std::max(1.0, std::abs(dirs.values(0)));
  const bool tie = n >= 2 && dirs.values(n - 2) - dirs.values(n - 1) <= tol;
  return {Trigger(s * dirs.vectors.col(n - 1)), tie};
}

double magnitude_threshold(double sigma_p, double gamma, double n, ThresholdRegime regime) {
  require_nonneg(sigma_p, "sigma_p");
  if (!(gamma > 0.0) || !std::isfinite(gamma))
    throw precondition_error("gamma must be positive and finite");
  if (!(n >= 2.0) || !std::isfinite(n))
    throw precondition_error("the sample size must be at least 2");
  const double factor = regime == ThresholdRegime::kSuccess ? 32.0 : 2.0;
  return std::sqrt(factor * sigma_p * gamma * std::log(n));
}

double mills_bound(double z) {
  if (!(z > 0.0)) throw precondition_error("the Mills bound needs z > 0");
  return std::sqrt(2.0 / kPi) / z * std::exp(-0.5 * z * z);
}

double gaussian_g_lower_bound(const ClassConditionalGaussianPair& model, int cls,
                              const Trigger& trigger) {
  return min_density_g(model, cls, trigger.eta(), trigger.norm() / 2.0,
                       MinDensityMethod::kGaussianAnalyticLb);
}

double class_ball_mass(const ClassConditionalGaussianPair& model, int cls, double radius,
                       int resolution) {
  if (cls != 0 && cls != 1) throw precondition_error("class label must be 0 or 1");
  if (!(radius >= 0.0) || !std::isfinite(radius))
    throw precondition_error("radius must be finite and nonnegative");
  if (resolution < 2) throw precondition_error("quadrature resolution must be at least 2");

  // In the eigenbasis X - mean = V t with t_j ~ N(0, lambda_j) independent
  // and ||X - mean|| = ||t||, so the ball probability is a rank-dimensional
  // integral no matter the ambient dimension.
  const int k = model.rank();
  if (k == 0) return 1.0;
  if (k > 3) throw precondition_error("ball quadrature supports rank up to 3");
  if (radius == 0.0) return 0.0;

  const Eigen::VectorXd lambda = model.eigenvalues().head(k);
  const double side = 2.0 * radius / resolution;
  const double cell_volume = std::pow(side, k);
  const double r2 = radius * radius;

  double log_norm = 0;
  for (int j = 0; j < k; ++j) log_norm -= 0.5 * std::log(2.0 * kPi * lambda(j));

  long long total_cells = 1;
  for (int j = 0; j < k; ++j) total_cells *= resolution;

  double mass = 0;
  Eigen::VectorXd t(k);
  for (long long idx = 0; idx < total_cells; ++idx) {
    long long rest = idx;
    double norm2 = 0;
    for (int j = 0; j < k; ++j) {
      const auto step = static_cast<int>(rest % resolution);
      rest /= resolution;
      t(j) = -radius + (step + 0.5) * side;
      norm2 += t(j) * t(j);
    }
    if (norm2 > r2) continue;
    double log_density = log_norm;
    for (int j = 0; j < k; ++j) log_density -= 0.5 * t(j) * t(j) / lambda(j);
    mass += std::exp(log_density) * cell_volume;
  }
  return std::min(mass, 1.0);
}

}  // namespace poisonlab
