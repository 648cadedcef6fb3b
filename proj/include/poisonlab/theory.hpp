#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <utility>

#include "poisonlab/distributions.hpp"
#include "poisonlab/poisoning.hpp"

namespace poisonlab {

// Ingredients of the finite-sample risk bounds. r_poi is the (estimated)
// poisoned risk of the fitted model, h_max the worse of the two per-class
// tail masses at radius ||eta||/4, g1 the class-1 minimum density over the
// ball of radius c_radius around eta.
struct BoundInputs {
  double r_poi = 0;
  double rho = 0;
  double alpha = 1;   // Holder exponent of the loss
  double beta = 1;    // lower exponent of the loss
  double c = 1;       // Holder constant
  double h_max = 0;
  double g1 = 0;
  double c1 = 1;      // separation constant of the lower bound
  double c2 = 1;      // transfer constant of the lower bound
  double c_radius = 1;
};

// ||eta|| >= 4 * cos(eta, mean1 - mean0) * ||mean1 - mean0||, evaluated
// exactly as written: the right side is signed, so any trigger at a right or
// obtuse angle to the class direction passes at every norm.
bool check_norm_condition(const Trigger& trigger, const ClassConditionalGaussianPair& model);

// Upper bounds on the clean and backdoor risks in terms of the poisoned risk:
//   ub_cl = r_poi/(1-rho) + c*(1-rho)^{-alpha} * h_max^alpha
//   ub_bd = r_poi/rho     + c*rho^{-alpha}     * h_max^alpha
// Checking the norm condition is the caller's responsibility.
std::pair<double, double> risk_transfer_upper_bound(const BoundInputs& in);

// Lower bounds witnessing that a too-visible trigger forces risk somewhere:
//   lb_cl = rho^beta     * c1 * g1^beta - c2 * r_poi^{alpha/beta}
//   lb_bd = (1-rho)^beta * c1 * g1^beta - c2 * r_poi^{alpha/beta}
// Requires ||eta|| > 2 * c_radius; eta_norm is passed so the precondition can
// be enforced here.
std::pair<double, double> risk_separation_lower_bound(const BoundInputs& in, double eta_norm);

struct BoundReport {
  double ub_clean = 0;
  double ub_backdoor = 0;
  double lb_clean = 0;    // NaN when the separation condition fails
  double lb_backdoor = 0; // likewise
  bool norm_condition_met = false;        // gates the upper bounds
  bool separation_condition_met = false;  // eta_norm > 2 * c_radius, gates the lower bounds
  BoundInputs inputs;
};

// Evaluates both directions at once. Upper bounds are always computed (the
// norm condition is recorded, not enforced); lower bounds are NaN when
// eta_norm fails the separation condition.
BoundReport bound_report(const BoundInputs& in, double eta_norm, bool norm_condition_met);

struct TailContainmentAudit {
  bool applicable = false;  // norm condition held
  double lhs = 0;           // MC mass of the far slab centered at mean1
  double rhs = 0;           // closed-form tail at radius ||eta||/4
  double mc_std_error = 0;
  bool holds = false;       // lhs <= rhs + 3 * mc_std_error
};

// Checks the containment that powers the upper bound: the class-cls mass of
// { x : |(x - mean1)^T eta| >= (||eta||/2) ||eta|| } is at most the tail
// h_cls(||eta||/4). The slab is centered at mean1 for BOTH classes; that is
// what makes the claim nontrivial for class 0. lhs, rhs and holds are
// computed whether or not the norm condition is met.
TailContainmentAudit tail_containment_audit(const ClassConditionalGaussianPair& model, int cls,
                                            const Trigger& trigger, int n_mc, std::uint64_t seed);

struct OptimalTrigger {
  Trigger trigger;
  bool eigenvalue_tie = false;  // smallest eigenvalue is not unique
};

// The least-visible trigger of length s: s times the eigenvector of the
// smallest eigenvalue (sign-fixed). With a repeated smallest eigenvalue any
// vector in the eigenspace works; the tie is flagged and the last eigenvector
// returned.
OptimalTrigger optimal_trigger(const Eigen::MatrixXd& covariance, double s);

enum class ThresholdRegime { kSuccess, kFailure };

// Trigger-magnitude thresholds along the optimal direction at sample size n
// (n may be fractional; n >= 2):
//   success: sqrt(32 * sigma_p * gamma * ln n)   -- the attack succeeds above
//   failure: sqrt( 2 * sigma_p * gamma * ln n)   -- the attack fails below
double magnitude_threshold(double sigma_p, double gamma, double n, ThresholdRegime regime);

// Mills bound on the standard normal tail: P(Z >= z) <= sqrt(2/pi) z^{-1} e^{-z^2/2}.
double mills_bound(double z);

// Closed-form lower bound on the minimum density over the ball of radius
// ||eta||/2 around eta (full-rank models only):
//   (2pi)^{-p/2} |Sigma|^{-1/2} exp{ -eta^T Sigma^{-1} eta - ||eta||^2/(4 sigma_p) }.
double gaussian_g_lower_bound(const ClassConditionalGaussianPair& model, int cls,
                              const Trigger& trigger);

// P(||X - mean_cls|| <= radius) for X ~ nu_cls, by midpoint quadrature over
// the support eigenspace. Deterministic; needs rank <= 3. This is the
// integral inside the default separation constant
// c1 = (prior1 * (1 - prior1) * class_ball_mass(model, 1, c_radius))^beta.
double class_ball_mass(const ClassConditionalGaussianPair& model, int cls, double radius,
                       int resolution = 201);

}  // namespace poisonlab
