#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <iosfwd>
#include <vector>

#include "poisonlab/distributions.hpp"

namespace poisonlab {

// Additive backdoor trigger. The attack always relabels poisoned points to
// the fixed target label 0.
class Trigger {
 public:
  explicit Trigger(Eigen::VectorXd eta);

  static constexpr int kTargetLabel = 0;

  const Eigen::VectorXd& eta() const { return eta_; }
  int dim() const { return static_cast<int>(eta_.size()); }
  double norm() const { return eta_.norm(); }

  // cos of the angle between eta and v; 0 when either is the zero vector.
  double cosine_with(const Eigen::VectorXd& v) const;

 private:
  Eigen::VectorXd eta_;
};

// Trigger of the given length at angle_deg from the unit vector along
// mean1 - mean0, rotated counterclockwise in the standard plane. Only defined
// for 2-dimensional models; higher dimensions need an explicit vector or a
// rotation plane (make_trigger_in_plane).
Trigger make_trigger(double norm, double angle_deg, const ClassConditionalGaussianPair& model);

// Same rotation inside the plane spanned by the class-separation direction
// and second_axis (orthonormalized against it first).
Trigger make_trigger_in_plane(double norm, double angle_deg,
                              const ClassConditionalGaussianPair& model,
                              const Eigen::VectorXd& second_axis);

// Clean dataset after the poisoning transform: each point is independently
// flagged with probability rho; flagged points become (x + eta, 0), unflagged
// points pass through bit-identically.
class PoisonedDataset {
 public:
  PoisonedDataset(std::vector<LabeledPoint> points, std::vector<bool> flags, double rho,
                  Trigger trigger);

  const std::vector<LabeledPoint>& points() const { return points_; }
  const std::vector<bool>& flags() const { return flags_; }
  double rho() const { return rho_; }
  const Trigger& trigger() const { return trigger_; }
  int dim() const { return trigger_.dim(); }
  std::size_t size() const { return points_.size(); }

  // The (X~, Y~) view a learner trains on; flags are hidden from it.
  Dataset as_dataset() const;

 private:
  std::vector<LabeledPoint> points_;
  std::vector<bool> flags_;
  double rho_;
  Trigger trigger_;
};

// Applies the transform above. Flags are drawn in index order before any
// point is touched, so whether point i is poisoned never depends on the other
// points' values.
PoisonedDataset poison_dataset(const Dataset& clean, double rho, const Trigger& trigger,
                               std::uint64_t seed);

// n draws from the backdoor input distribution: X + eta with X from the clean
// input marginal (class picked by the prior).
std::vector<Eigen::VectorXd> sample_backdoor_inputs(const ClassConditionalGaussianPair& model,
                                                    const Trigger& trigger, int n,
                                                    std::uint64_t seed);

// Posterior P(Y=1 | X=x) under the poisoned distribution
// (1-rho) * mu_cl + rho * mu_bd:
//   (1-rho) * prior1 * nu1(x) / [ (1-rho) * mu_cl(x) + rho * mu_cl(x - eta) ].
// Evaluated in log space; rho in [0,1) (rho = 0 reduces exactly to the clean
// posterior). Throws when x carries no poisoned-input mass.
double poisoned_regression_fn(const ClassConditionalGaussianPair& model, double rho,
                              const Trigger& trigger, const Eigen::VectorXd& x);

// Input marginal of the poisoned distribution,
// (1-rho) * mu_cl(x) + rho * mu_cl(x - eta). Requires a full-rank model: with
// a degenerate covariance the two mixture pieces live on different affine
// subspaces and their subspace densities cannot be added.
double poisoned_input_density(const ClassConditionalGaussianPair& model, double rho,
                              const Trigger& trigger, const Eigen::VectorXd& x);

// CSV with header x_1..x_p,y,z (z = poison flag), LF line endings.
void write_poisoned_csv(std::ostream& os, const PoisonedDataset& data);

// Rebuilds a PoisonedDataset from the CSV columns; rho and trigger are
// metadata the CSV does not carry, so the caller supplies them.
PoisonedDataset read_poisoned_csv(std::istream& is, double rho, const Trigger& trigger);

}  // namespace poisonlab
