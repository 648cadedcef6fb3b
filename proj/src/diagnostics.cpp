#include "poisonlab/diagnostics.hpp"

#include <cmath>
#include <cstddef>
#include <limits>
#include <ostream>

#include "poisonlab/common.hpp"
#include "poisonlab/csv.hpp"

namespace poisonlab {

namespace {

Eigen::VectorXd column_means(const Dataset& data) {
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(data.dim());
  for (const auto& p : data.points()) mean += p.x;
  return mean / static_cast<double>(data.size());
}

Eigen::VectorXd column_variances(const Dataset& data, const Eigen::VectorXd& mean) {
  Eigen::VectorXd ss = Eigen::VectorXd::Zero(data.dim());
  for (const auto& p : data.points()) ss += (p.x - mean).cwiseAbs2();
  return ss / static_cast<double>(data.size() - 1);
}

void require_spread_estimable(const Dataset& data) {
  if (data.size() < 2) throw precondition_error("need at least 2 points for a sample std");
}

std::vector<DimensionDiagnostic> build(const Eigen::VectorXd& variances,
                                       const Eigen::VectorXd& changes) {
  std::vector<DimensionDiagnostic> out(static_cast<std::size_t>(variances.size()));
  for (Eigen::Index i = 0; i < variances.size(); ++i) {
    DimensionDiagnostic& d = out[static_cast<std::size_t>(i)];
    d.index = static_cast<int>(i);
    d.variance = variances(i);
    d.std_dev = std::sqrt(variances(i));
    d.abs_change = std::abs(changes(i));
    if (d.std_dev > 0.0) {
      d.relative_change = d.abs_change / d.std_dev;
    } else if (d.abs_change == 0.0) {
      d.relative_change = 0.0;  // degenerate but untouched: benign
    } else {
      d.relative_change = std::numeric_limits<double>::infinity();
      d.infinite = true;
    }
  }
  return out;
}

}  // namespace

std::vector<DimensionDiagnostic> relative_change(const Dataset& clean, const Trigger& trigger) {
  if (clean.dim() != trigger.dim())
    throw precondition_error("trigger dimension does not match the data");
  require_spread_estimable(clean);
  return build(column_variances(clean, column_means(clean)), trigger.eta());
}

std::vector<DimensionDiagnostic> relative_change(const Dataset& clean, const Dataset& backdoored) {
  if (clean.dim() != backdoored.dim())
    throw precondition_error("datasets have different dimensions");
  require_spread_estimable(clean);
  if (backdoored.empty()) throw precondition_error("the backdoored sample is empty");
  const Eigen::VectorXd clean_mean = column_means(clean);
  return build(column_variances(clean, clean_mean), column_means(backdoored) - clean_mean);
}

std::vector<DegenerateDirection> degenerate_directions(const Eigen::MatrixXd& covariance,
                                                       double tol) {
  if (!(tol >= 0.0)) throw precondition_error("tolerance must be nonnegative");
  const EigenDirections dirs = eigen_directions(covariance);
  std::vector<DegenerateDirection> out;
  // Eigenvalues are stored descending; walking from the tail yields the
  // requested ascending order.
  for (Eigen::Index i = dirs.values.size() - 1; i >= 0; --i) {
    if (dirs.values(i) > tol) break;
    out.push_back({dirs.vectors.col(i), dirs.values(i)});
  }
  return out;
}

std::vector<DegenerateDirection> degenerate_directions(const Dataset& data, double tol) {
  require_spread_estimable(data);
  const Eigen::VectorXd mean = column_means(data);
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(data.dim(), data.dim());
  for (const auto& p : data.points()) {
    const Eigen::VectorXd c = p.x - mean;
    cov += c * c.transpose();
  }
  cov /= static_cast<double>(data.size() - 1);
  return degenerate_directions(cov, tol);
}

void write_diagnostics_csv(std::ostream& os, const std::vector<DimensionDiagnostic>& diags) {
  os << "dim,variance,relative_change,degenerate_flag\n";
  for (const auto& d : diags) {
    os << d.index + 1 << ',' << format_double(d.variance) << ','
       << format_double(d.relative_change) << ',' << (d.std_dev == 0.0 ? 1 : 0) << '\n';
  }
}

}  // namespace poisonlab
