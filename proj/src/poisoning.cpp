#include "poisonlab/poisoning.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <string>

#include "poisonlab/common.hpp"
#include "poisonlab/csv.hpp"
#include "poisonlab/rng.hpp"

namespace poisonlab {

namespace {
constexpr double kDegToRad = 3.141592653589793238462643383279502884 / 180.0;
}

Trigger::Trigger(Eigen::VectorXd eta) : eta_(std::move(eta)) {
  if (eta_.size() < 1) throw precondition_error("trigger must be non-empty");
  if (!eta_.allFinite()) throw precondition_error("trigger has non-finite entries");
}

double Trigger::cosine_with(const Eigen::VectorXd& v) const {
  if (v.size() != eta_.size()) throw precondition_error("dimension mismatch in cosine");
  const double denom = eta_.norm() * v.norm();
  if (denom == 0.0) return 0.0;
  return eta_.dot(v) / denom;
}

namespace {

Trigger rotate_in_plane(double norm, double angle_deg, const Eigen::VectorXd& e1,
                        const Eigen::VectorXd& e2) {
  const double theta = angle_deg * kDegToRad;
  Eigen::VectorXd eta = norm * (std::cos(theta) * e1 + std::sin(theta) * e2);
  return Trigger(std::move(eta));
}

}  // namespace

Trigger make_trigger(double norm, double angle_deg, const ClassConditionalGaussianPair& model) {
  if (model.dim() != 2)
    throw precondition_error(
        "angle-based triggers are defined for 2-dimensional models only; "
        "pass an explicit vector or a rotation plane");
  if (!(norm > 0)) throw precondition_error("trigger norm must be positive");
  Eigen::VectorXd d = model.mean(1) - model.mean(0);
  const double dn = d.norm();
  if (dn == 0.0) throw precondition_error("class means coincide; direction undefined");
  d /= dn;
  // Counterclockwise rotation of d in the standard plane: the second axis is
  // d rotated by +90 degrees, (-d_y, d_x).
  Eigen::VectorXd perp(2);
  perp << -d(1), d(0);
  return rotate_in_plane(norm, angle_deg, d, perp);
}

Trigger make_trigger_in_plane(double norm, double angle_deg,
                              const ClassConditionalGaussianPair& model,
                              const Eigen::VectorXd& second_axis) {
  if (!(norm > 0)) throw precondition_error("trigger norm must be positive");
  if (second_axis.size() != model.dim())
    throw precondition_error("rotation-plane axis dimension mismatch");
  Eigen::VectorXd e1 = model.mean(1) - model.mean(0);
  const double dn = e1.norm();
  if (dn == 0.0) throw precondition_error("class means coincide; direction undefined");
  e1 /= dn;
  Eigen::VectorXd e2 = second_axis - second_axis.dot(e1) * e1;
  const double en = e2.norm();
  if (en < 1e-12)
    throw precondition_error("rotation-plane axis is collinear with the class direction");
  e2 /= en;
  return rotate_in_plane(norm, angle_deg, e1, e2);
}

PoisonedDataset::PoisonedDataset(std::vector<LabeledPoint> points, std::vector<bool> flags,
                                 double rho, Trigger trigger)
    : points_(std::move(points)), flags_(std::move(flags)), rho_(rho), trigger_(std::move(trigger)) {
  if (points_.size() != flags_.size())
    throw precondition_error("points and flags must have equal length");
  if (!(rho_ > 0.0 && rho_ < 1.0)) throw precondition_error("rho must lie strictly inside (0,1)");
  for (std::size_t i = 0; i < points_.size(); ++i) {
    if (points_[i].x.size() != trigger_.dim())
      throw precondition_error("point dimension does not match trigger");
    if (points_[i].y != 0 && points_[i].y != 1)
      throw precondition_error("labels must be 0 or 1");
    if (flags_[i] && points_[i].y != Trigger::kTargetLabel)
      throw precondition_error("poisoned points must carry the target label");
  }
}

Dataset PoisonedDataset::as_dataset() const {
  return Dataset(points_, dim());
}

PoisonedDataset poison_dataset(const Dataset& clean, double rho, const Trigger& trigger,
                               std::uint64_t seed) {
  if (!(rho > 0.0 && rho < 1.0)) throw precondition_error("rho must lie strictly inside (0,1)");
  if (trigger.dim() != clean.dim()) throw precondition_error("trigger dimension mismatch");

  // Draw all flags first, in index order, so the randomness consumed for
  // point i is a function of (seed, i) alone.
  auto rng = make_rng(seed);
  std::bernoulli_distribution flip(rho);
  std::vector<bool> flags(clean.size());
  for (std::size_t i = 0; i < clean.size(); ++i) flags[i] = flip(rng);

  std::vector<LabeledPoint> points;
  points.reserve(clean.size());
  for (std::size_t i = 0; i < clean.size(); ++i) {
    if (flags[i]) {
      points.push_back({clean[i].x + trigger.eta(), Trigger::kTargetLabel});
    } else {
      points.push_back(clean[i]);
    }
  }
  return PoisonedDataset(std::move(points), std::move(flags), rho, trigger);
}

std::vector<Eigen::VectorXd> sample_backdoor_inputs(const ClassConditionalGaussianPair& model,
                                                    const Trigger& trigger, int n,
                                                    std::uint64_t seed) {
  if (trigger.dim() != model.dim()) throw precondition_error("trigger dimension mismatch");
  if (n < 0) throw precondition_error("sample size must be non-negative");
  auto rng = make_rng(seed);
  std::bernoulli_distribution label(model.prior1());
  std::vector<Eigen::VectorXd> out;
  out.reserve(n);
  for (int i = 0; i < n; ++i) {
    int y = label(rng) ? 1 : 0;
    out.push_back(sample_class_input(model, y, rng) + trigger.eta());
  }
  return out;
}

double poisoned_regression_fn(const ClassConditionalGaussianPair& model, double rho,
                              const Trigger& trigger, const Eigen::VectorXd& x) {
  if (trigger.dim() != model.dim()) throw precondition_error("trigger dimension mismatch");
  if (!(rho >= 0.0 && rho < 1.0)) throw precondition_error("rho must lie in [0,1)");
  const double lam = model.prior1();
  const Eigen::VectorXd shifted = x - trigger.eta();

  // Log-weights of the four mixture pieces; the numerator is the first.
  const double neg_inf = -std::numeric_limits<double>::infinity();
  double terms[4];
  terms[0] = std::log1p(-rho) + std::log(lam) + log_class_density(model, 1, x);
  terms[1] = std::log1p(-rho) + std::log1p(-lam) + log_class_density(model, 0, x);
  terms[2] = rho > 0 ? std::log(rho) + std::log(lam) + log_class_density(model, 1, shifted)
                     : neg_inf;
  terms[3] = rho > 0 ? std::log(rho) + std::log1p(-lam) + log_class_density(model, 0, shifted)
                     : neg_inf;

  double m = neg_inf;
  for (double t : terms) m = std::max(m, t);
  if (std::isinf(m))
    throw precondition_error("query carries no poisoned-input mass; posterior undefined");
  double denom = 0;
  for (double t : terms) denom += std::exp(t - m);
  return std::exp(terms[0] - m) / denom;
}

double poisoned_input_density(const ClassConditionalGaussianPair& model, double rho,
                              const Trigger& trigger, const Eigen::VectorXd& x) {
  if (trigger.dim() != model.dim()) throw precondition_error("trigger dimension mismatch");
  if (!(rho >= 0.0 && rho <= 1.0)) throw precondition_error("rho must lie in [0,1]");
  if (model.degenerate())
    throw precondition_error("poisoned input density requires a full-rank covariance");
  const double lam = model.prior1();
  auto marginal = [&](const Eigen::VectorXd& q) {
    return lam * class_density(model, 1, q) + (1 - lam) * class_density(model, 0, q);
  };
  return (1 - rho) * marginal(x) + rho * marginal(x - trigger.eta());
}

void write_poisoned_csv(std::ostream& os, const PoisonedDataset& data) {
  std::vector<std::string> header;
  for (int j = 1; j <= data.dim(); ++j) header.push_back("x_" + std::to_string(j));
  header.push_back("y");
  header.push_back("z");
  os << csv_join(header) << '\n';
  for (std::size_t i = 0; i < data.size(); ++i) {
    std::vector<std::string> row;
    for (int j = 0; j < data.dim(); ++j) row.push_back(format_double(data.points()[i].x(j)));
    row.push_back(std::to_string(data.points()[i].y));
    row.push_back(data.flags()[i] ? "1" : "0");
    os << csv_join(row) << '\n';
  }
}

PoisonedDataset read_poisoned_csv(std::istream& is, double rho, const Trigger& trigger) {
  std::string line;
  if (!csv_getline(is, line)) throw config_error("poisoned CSV is empty (missing header)");
  auto header = csv_split(line);
  if (header.size() < 3 || header[header.size() - 2] != "y" || header.back() != "z")
    throw config_error("poisoned CSV header must be x_1..x_p,y,z");
  const int p = static_cast<int>(header.size()) - 2;
  std::vector<LabeledPoint> points;
  std::vector<bool> flags;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    auto fields = csv_split(line);
    if (fields.size() != header.size()) throw config_error("poisoned CSV row width mismatch");
    LabeledPoint pt;
    pt.x.resize(p);
    for (int j = 0; j < p; ++j) pt.x(j) = parse_double(fields[j]);
    pt.y = static_cast<int>(parse_double(fields[p]));
    flags.push_back(fields[p + 1] == "1");
    points.push_back(std::move(pt));
  }
  return PoisonedDataset(std::move(points), std::move(flags), rho, trigger);
}

}  // namespace poisonlab
