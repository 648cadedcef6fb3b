#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <vector>

#include "poisonlab/distributions.hpp"
#include "poisonlab/poisoning.hpp"

namespace poisonlab {

// One input dimension of the defender's-eye view: how large the attack's
// shift is in units of the clean spread there.
struct DimensionDiagnostic {
  int index = 0;        // zero-based dimension
  double variance = 0;  // clean sample variance, n-1 divisor
  double std_dev = 0;
  double abs_change = 0;       // |eta_i|, or |mean difference| for paired samples
  double relative_change = 0;  // abs_change / std_dev
  bool infinite = false;       // std_dev = 0 with a nonzero change
};

// Relative change per dimension for an additive trigger: the shift in
// dimension i is |eta_i| exactly, the spread comes from the clean sample.
// A zero-spread dimension gives relative change 0 when untouched and +inf
// when the trigger moves it. Needs n >= 2.
std::vector<DimensionDiagnostic> relative_change(const Dataset& clean, const Trigger& trigger);

// Same statistic with the shift estimated as the difference of per-dimension
// means between the two samples (clean vs backdoored inputs, say).
std::vector<DimensionDiagnostic> relative_change(const Dataset& clean, const Dataset& backdoored);

struct DegenerateDirection {
  Eigen::VectorXd direction;
  double variance = 0;
};

// Eigenvectors of the covariance with eigenvalue <= tol, least variance
// first. Empty when the matrix is full rank at that tolerance.
std::vector<DegenerateDirection> degenerate_directions(const Eigen::MatrixXd& covariance,
                                                       double tol);

// Same detection on the sample covariance of the dataset inputs (n >= 2).
std::vector<DegenerateDirection> degenerate_directions(const Dataset& data, double tol);

// CSV with header dim,variance,relative_change,degenerate_flag; dim is
// 1-based to match the x_1..x_p naming, degenerate_flag marks zero-spread
// dimensions.
void write_diagnostics_csv(std::ostream& os, const std::vector<DimensionDiagnostic>& diags);

}  // namespace poisonlab
