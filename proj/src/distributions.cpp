#include "poisonlab/distributions.hpp"

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

constexpr double kPi = 3.141592653589793238462643383279502884;

void fix_eigenvector_signs(Eigen::MatrixXd& vectors) {
  for (Eigen::Index c = 0; c < vectors.cols(); ++c) {
    Eigen::Index best = 0;
    double best_abs = std::abs(vectors(0, c));
    for (Eigen::Index r = 1; r < vectors.rows(); ++r) {
      double a = std::abs(vectors(r, c));
      if (a > best_abs) {  // strict: ties keep the first component
        best_abs = a;
        best = r;
      }
    }
    if (vectors(best, c) < 0) vectors.col(c) = -vectors.col(c);
  }
}

}  // namespace

Dataset::Dataset(int dim) : dim_(dim) {
  if (dim < 1) throw precondition_error("dataset dimension must be positive");
}

Dataset::Dataset(std::vector<LabeledPoint> points, int dim) : dim_(dim) {
  if (dim < 1) throw precondition_error("dataset dimension must be positive");
  for (auto& p : points) push_back(std::move(p));
}

void Dataset::push_back(LabeledPoint p) {
  if (dim_ == 0) throw precondition_error("dataset has no dimension set");
  if (p.x.size() != dim_) throw precondition_error("point dimension mismatch");
  if (p.y != 0 && p.y != 1) throw precondition_error("labels must be 0 or 1");
  if (!p.x.allFinite()) throw precondition_error("non-finite coordinate in point");
  points_.push_back(std::move(p));
}

ClassConditionalGaussianPair::ClassConditionalGaussianPair(Eigen::VectorXd mean0,
                                                           Eigen::VectorXd mean1,
                                                           Eigen::MatrixXd covariance,
                                                           double prior1)
    : mean0_(std::move(mean0)),
      mean1_(std::move(mean1)),
      covariance_(std::move(covariance)),
      prior1_(prior1) {
  const auto p = mean0_.size();
  if (p < 1) throw precondition_error("mean vectors must be non-empty");
  if (mean1_.size() != p) throw precondition_error("mean dimensions differ");
  if (covariance_.rows() != p || covariance_.cols() != p)
    throw precondition_error("covariance shape does not match mean dimension");
  if (!(prior1 > 0.0 && prior1 < 1.0))
    throw precondition_error("prior1 must lie strictly inside (0,1)");
  if (!mean0_.allFinite() || !mean1_.allFinite() || !covariance_.allFinite())
    throw precondition_error("non-finite entries in distribution specification");

  const double scale = std::max(1.0, covariance_.cwiseAbs().maxCoeff());
  const double tol = 1e-12 * scale;
  if ((covariance_ - covariance_.transpose()).cwiseAbs().maxCoeff() > tol)
    throw precondition_error("covariance is not symmetric");

  Eigen::MatrixXd sym = 0.5 * (covariance_ + covariance_.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(sym);
  if (solver.info() != Eigen::Success)
    throw precondition_error("covariance eigendecomposition failed");

  // Solver returns ascending order; flip to descending.
  eigenvalues_ = solver.eigenvalues().reverse();
  eigenvectors_ = solver.eigenvectors().rowwise().reverse();
  fix_eigenvector_signs(eigenvectors_);

  rank_ = 0;
  double log_det = 0;
  for (Eigen::Index j = 0; j < p; ++j) {
    double& ev = eigenvalues_(j);
    if (ev < -tol) throw precondition_error("covariance has a negative eigenvalue");
    if (ev <= tol) {
      ev = 0.0;  // clamp: treated as an exactly flat direction
    } else {
      ++rank_;
      log_det += std::log(ev);
    }
  }
  if (rank_ == 0 && p > 0) {
    // All-zero covariance: point masses at the means. Density on a
    // zero-dimensional support is the constant 1, log_peak_ = 0.
  }
  log_peak_ = -0.5 * (rank_ * std::log(2.0 * kPi) + log_det);
  sqrt_eigenvalues_ = eigenvalues_.cwiseSqrt();
}

const Eigen::VectorXd& ClassConditionalGaussianPair::mean(int cls) const {
  if (cls == 0) return mean0_;
  if (cls == 1) return mean1_;
  throw precondition_error("class must be 0 or 1");
}

double ClassConditionalGaussianPair::support_quadform(int cls, const Eigen::VectorXd& x,
                                                      bool* off_support) const {
  if (x.size() != dim()) throw precondition_error("query dimension mismatch");
  const Eigen::VectorXd c = eigenvectors_.transpose() * (x - mean(cls));
  double q = 0;
  bool off = false;
  for (Eigen::Index j = 0; j < c.size(); ++j) {
    if (eigenvalues_(j) > 0) {
      q += c(j) * c(j) / eigenvalues_(j);
    } else if (std::abs(c(j)) > kOffSupportTol) {
      off = true;
    }
  }
  if (off_support) *off_support = off;
  return q;
}

Eigen::VectorXd sample_class_input(const ClassConditionalGaussianPair& model, int cls,
                                   std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd x = model.mean(cls);
  for (Eigen::Index j = 0; j < model.eigenvalues_.size(); ++j) {
    if (model.eigenvalues_(j) > 0)
      x += model.sqrt_eigenvalues_(j) * normal(rng) * model.eigenvectors_.col(j);
  }
  return x;
}

Dataset sample_clean(const ClassConditionalGaussianPair& model, int n, std::uint64_t seed) {
  if (n < 0) throw precondition_error("sample size must be non-negative");
  auto rng = make_rng(seed);
  std::bernoulli_distribution label(model.prior1());
  Dataset data(model.dim());
  for (int i = 0; i < n; ++i) {
    int y = label(rng) ? 1 : 0;
    data.push_back({sample_class_input(model, y, rng), y});
  }
  return data;
}

double log_class_density(const ClassConditionalGaussianPair& model, int cls,
                         const Eigen::VectorXd& x) {
  bool off = false;
  double q = model.support_quadform(cls, x, &off);
  if (off) return -std::numeric_limits<double>::infinity();
  return model.log_peak_density() - 0.5 * q;
}

double class_density(const ClassConditionalGaussianPair& model, int cls,
                     const Eigen::VectorXd& x) {
  double l = log_class_density(model, cls, x);
  return std::isinf(l) ? 0.0 : std::exp(l);
}

double clean_regression_fn(const ClassConditionalGaussianPair& model, const Eigen::VectorXd& x) {
  const double l1 = log_class_density(model, 1, x) + std::log(model.prior1());
  const double l0 = log_class_density(model, 0, x) + std::log1p(-model.prior1());
  if (std::isinf(l1) && std::isinf(l0))
    throw precondition_error("query is off the support of both classes; posterior undefined");
  const double m = std::max(l1, l0);
  const double e1 = std::exp(l1 - m);
  const double e0 = std::exp(l0 - m);
  return e1 / (e1 + e0);
}

namespace {

// Projected standard deviation sqrt(u^T Sigma u) for the unit direction of eta.
double projected_sd(const ClassConditionalGaussianPair& model, const Eigen::VectorXd& eta) {
  const Eigen::VectorXd u = eta / eta.norm();
  const double var = u.dot(model.covariance() * u);
  return var > 0 ? std::sqrt(var) : 0.0;
}

void check_eta(const ClassConditionalGaussianPair& model, const Eigen::VectorXd& eta) {
  if (eta.size() != model.dim()) throw precondition_error("trigger dimension mismatch");
  if (!eta.allFinite()) throw precondition_error("trigger has non-finite entries");
  if (eta.norm() == 0.0) throw precondition_error("trigger must be non-zero");
}

}  // namespace

double tail_h(const ClassConditionalGaussianPair& model, int cls, const Eigen::VectorXd& eta,
              double r) {
  model.mean(cls);  // validates cls
  check_eta(model, eta);
  if (r < 0) throw precondition_error("tail radius must be non-negative");
  if (r == 0) return 1.0;
  const double sd = projected_sd(model, eta);
  if (sd == 0.0) return 0.0;  // flat direction: the projection is a point mass at 0
  return std::erfc(r / (sd * std::sqrt(2.0)));  // = 2 * P(Z >= r/sd)
}

double tail_h_mc(const ClassConditionalGaussianPair& model, int cls, const Eigen::VectorXd& eta,
                 double r, int n_mc, std::uint64_t seed) {
  check_eta(model, eta);
  if (r < 0) throw precondition_error("tail radius must be non-negative");
  if (n_mc < 1) throw precondition_error("n_mc must be positive");
  auto rng = make_rng(seed);
  const double threshold = r * eta.norm();
  const Eigen::VectorXd& m = model.mean(cls);
  long hits = 0;
  for (int i = 0; i < n_mc; ++i) {
    Eigen::VectorXd x = sample_class_input(model, cls, rng);
    if (std::abs((x - m).dot(eta)) >= threshold) ++hits;
  }
  return static_cast<double>(hits) / n_mc;
}

namespace {

// Maximum of x^T A x over the lattice covering the ball ||x - eta|| <= r,
// dimensions 1..3. A is Sigma^{-1} restricted to full-rank models.
double grid_max_quadform(const Eigen::MatrixXd& A, const Eigen::VectorXd& eta, double r,
                         int resolution) {
  const int p = static_cast<int>(eta.size());
  if (resolution < 2) throw precondition_error("grid resolution must be at least 2");
  std::vector<double> axis(resolution);
  for (int i = 0; i < resolution; ++i)
    axis[i] = -r + 2.0 * r * static_cast<double>(i) / (resolution - 1);

  double best = -1;
  Eigen::VectorXd x(p);
  const double r2 = r * r;
  auto consider = [&](const Eigen::VectorXd& offset) {
    if (offset.squaredNorm() > r2 * (1 + 1e-12)) return;
    x = eta + offset;
    const double q = x.dot(A * x);
    if (q > best) best = q;
  };

  Eigen::VectorXd off(p);
  if (p == 1) {
    for (double a : axis) {
      off(0) = a;
      consider(off);
    }
  } else if (p == 2) {
    for (double a : axis)
      for (double b : axis) {
        off(0) = a;
        off(1) = b;
        consider(off);
      }
  } else if (p == 3) {
    for (double a : axis)
      for (double b : axis)
        for (double c : axis) {
          off(0) = a;
          off(1) = b;
          off(2) = c;
          consider(off);
        }
  } else {
    throw precondition_error("grid search supports dimensions 1..3; use projected ascent");
  }
  return best;
}

// Frank-Wolfe ascent for max x^T A x over the ball. The objective is convex,
// so moving to the vertex maximizing the linearization never decreases it and
// the iteration x <- eta + r * Ax/||Ax|| converges to a boundary fixed point.
// Restarts guard against the antipodal fixed point.
double ascent_max_quadform(const Eigen::MatrixXd& A, const Eigen::VectorXd& eta, double r,
                           int iterations, int restarts, std::uint64_t seed) {
  const int p = static_cast<int>(eta.size());
  auto rng = make_rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  double best = eta.dot(A * eta);  // center is always feasible
  for (int s = 0; s < restarts; ++s) {
    Eigen::VectorXd x(p);
    if (s == 0) {
      x = eta;
    } else {
      Eigen::VectorXd dir(p);
      for (int j = 0; j < p; ++j) dir(j) = normal(rng);
      double n = dir.norm();
      if (n == 0) dir(0) = 1, n = 1;
      x = eta + (r / n) * dir;
    }
    for (int it = 0; it < iterations; ++it) {
      Eigen::VectorXd g = A * x;
      double gn = g.norm();
      if (gn == 0) break;
      Eigen::VectorXd next = eta + (r / gn) * g;
      if ((next - x).norm() <= 1e-14 * (1 + x.norm())) {
        x = next;
        break;
      }
      x = next;
    }
    best = std::max(best, x.dot(A * x));
  }
  return best;
}

}  // namespace

double min_density_g(const ClassConditionalGaussianPair& model, int cls,
                     const Eigen::VectorXd& eta, double r, MinDensityMethod method,
                     const MinDensityOptions& options) {
  model.mean(cls);
  if (eta.size() != model.dim()) throw precondition_error("trigger dimension mismatch");
  if (r < 0) throw precondition_error("ball radius must be non-negative");

  if (method == MinDensityMethod::kGaussianAnalyticLb) {
    if (model.degenerate())
      throw precondition_error("analytic lower bound requires a full-rank covariance");
    if (eta.norm() < 2.0 * r)
      throw precondition_error("analytic lower bound is valid only when ||eta|| >= 2r");
    Eigen::VectorXd c = model.eigenvectors().transpose() * eta;
    double quad = 0;  // eta^T Sigma^{-1} eta
    for (Eigen::Index j = 0; j < c.size(); ++j) quad += c(j) * c(j) / model.eigenvalues()(j);
    const double expo = -quad - eta.squaredNorm() / (4.0 * model.sigma_min());
    return std::exp(model.log_peak_density() + expo);
  }

  if (model.degenerate()) {
    // Any ball of positive radius contains off-support points, where the
    // density vanishes; a point ball just evaluates at eta.
    if (r > kOffSupportTol) return 0.0;
    return class_density(model, cls, model.mean(cls) - eta);
  }

  // Full-rank: Sigma^{-1} via the spectral data.
  Eigen::MatrixXd A = model.eigenvectors() *
                      model.eigenvalues().cwiseInverse().asDiagonal() *
                      model.eigenvectors().transpose();
  double qmax;
  if (r == 0.0) {
    qmax = eta.dot(A * eta);
  } else if (method == MinDensityMethod::kGrid) {
    qmax = grid_max_quadform(A, eta, r, options.grid_resolution);
  } else {
    qmax = ascent_max_quadform(A, eta, r, options.ascent_iterations, options.ascent_restarts,
                               options.seed);
  }
  return std::exp(model.log_peak_density() - 0.5 * qmax);
}

EigenDirections eigen_directions(const Eigen::MatrixXd& covariance) {
  if (covariance.rows() != covariance.cols() || covariance.rows() < 1)
    throw precondition_error("matrix must be square and non-empty");
  if (!covariance.allFinite()) throw precondition_error("matrix has non-finite entries");
  const double scale = std::max(1.0, covariance.cwiseAbs().maxCoeff());
  const double tol = 1e-12 * scale;
  if ((covariance - covariance.transpose()).cwiseAbs().maxCoeff() > tol)
    throw precondition_error("matrix is not symmetric");

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(
      Eigen::MatrixXd(0.5 * (covariance + covariance.transpose())));
  if (solver.info() != Eigen::Success) throw precondition_error("eigendecomposition failed");

  EigenDirections out;
  out.values = solver.eigenvalues().reverse();
  out.vectors = solver.eigenvectors().rowwise().reverse();
  fix_eigenvector_signs(out.vectors);
  for (Eigen::Index j = 0; j < out.values.size(); ++j) {
    if (std::abs(out.values(j)) <= tol) {
      out.values(j) = 0.0;
      out.degenerate = true;
    }
  }
  return out;
}

void write_dataset_csv(std::ostream& os, const Dataset& data) {
  std::vector<std::string> header;
  for (int j = 1; j <= data.dim(); ++j) header.push_back("x_" + std::to_string(j));
  header.push_back("y");
  os << csv_join(header) << '\n';
  for (const auto& pt : data.points()) {
    std::vector<std::string> row;
    for (int j = 0; j < data.dim(); ++j) row.push_back(format_double(pt.x(j)));
    row.push_back(std::to_string(pt.y));
    os << csv_join(row) << '\n';
  }
}

Dataset read_dataset_csv(std::istream& is) {
  std::string line;
  if (!csv_getline(is, line)) throw config_error("dataset CSV is empty (missing header)");
  auto header = csv_split(line);
  if (header.size() < 2 || header.back() != "y")
    throw config_error("dataset CSV header must be x_1..x_p,y");
  const int p = static_cast<int>(header.size()) - 1;
  Dataset data(p);
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    auto fields = csv_split(line);
    if (fields.size() != header.size()) throw config_error("dataset CSV row width mismatch");
    LabeledPoint pt;
    pt.x.resize(p);
    for (int j = 0; j < p; ++j) pt.x(j) = parse_double(fields[j]);
    pt.y = static_cast<int>(parse_double(fields[p]));
    data.push_back(std::move(pt));
  }
  return data;
}

}  // namespace poisonlab
