#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <iosfwd>
#include <random>
#include <vector>

namespace poisonlab {

struct LabeledPoint {
  Eigen::VectorXd x;
  int y = 0;  // binary label, 0 or 1
};

// Ordered list of labeled points with a fixed ambient dimension. The order is
// meaningful: samplers fill it deterministically and the poisoning transform
// is index-aligned with it.
class Dataset {
 public:
  Dataset() = default;
  explicit Dataset(int dim);
  Dataset(std::vector<LabeledPoint> points, int dim);

  int dim() const { return dim_; }
  std::size_t size() const { return points_.size(); }
  bool empty() const { return points_.empty(); }
  const LabeledPoint& operator[](std::size_t i) const { return points_[i]; }
  const std::vector<LabeledPoint>& points() const { return points_; }

  void push_back(LabeledPoint p);

 private:
  std::vector<LabeledPoint> points_;
  int dim_ = 0;
};

// Two-class Gaussian mixture: X | Y=i ~ N(mean_i, Sigma) with shared
// covariance, P(Y=1) = prior1. Degenerate (rank-deficient) covariances are
// first-class citizens: the mass then lives on an affine subspace and
// densities are taken with respect to Lebesgue measure on that subspace.
class ClassConditionalGaussianPair {
 public:
  ClassConditionalGaussianPair(Eigen::VectorXd mean0, Eigen::VectorXd mean1,
                               Eigen::MatrixXd covariance, double prior1);

  int dim() const { return static_cast<int>(mean0_.size()); }
  const Eigen::VectorXd& mean(int cls) const;
  double prior1() const { return prior1_; }
  const Eigen::MatrixXd& covariance() const { return covariance_; }

  // Spectral data, eigenvalues sorted descending. Eigenvector signs follow
  // the convention used across the library: the largest-magnitude component
  // of each vector is positive (first such component on ties).
  const Eigen::VectorXd& eigenvalues() const { return eigenvalues_; }
  const Eigen::MatrixXd& eigenvectors() const { return eigenvectors_; }

  bool degenerate() const { return rank_ < dim(); }
  int rank() const { return rank_; }
  double sigma_min() const { return eigenvalues_(eigenvalues_.size() - 1); }
  double sigma_max() const { return eigenvalues_(0); }

  // log of (2*pi)^{-k/2} * (prod of positive eigenvalues)^{-1/2}, the density
  // value at the mean; k is the rank.
  double log_peak_density() const { return log_peak_; }

  // (x-m)^T Sigma^+ (x-m) over the support subspace. Sets *off_support when
  // any component of x-m along a null eigenvector exceeds the off-support
  // tolerance (1e-9 in absolute value).
  double support_quadform(int cls, const Eigen::VectorXd& x, bool* off_support) const;

 private:
  Eigen::VectorXd mean0_, mean1_;
  Eigen::MatrixXd covariance_;
  double prior1_;
  Eigen::VectorXd eigenvalues_;   // descending, clamped at zero
  Eigen::MatrixXd eigenvectors_;  // columns, sign-fixed
  Eigen::VectorXd sqrt_eigenvalues_;
  int rank_ = 0;
  double log_peak_ = 0;

  friend Dataset sample_clean(const ClassConditionalGaussianPair&, int, std::uint64_t);
  friend Eigen::VectorXd sample_class_input(const ClassConditionalGaussianPair&, int,
                                            std::mt19937_64&);
};

inline constexpr double kOffSupportTol = 1e-9;

// n IID draws from the mixture: Y ~ Bernoulli(prior1), X ~ N(mean_Y, Sigma).
// Equal seeds give bit-identical datasets.
Dataset sample_clean(const ClassConditionalGaussianPair& model, int n, std::uint64_t seed);

// One draw of X | Y = cls, consuming rank(Sigma) normals from rng.
Eigen::VectorXd sample_class_input(const ClassConditionalGaussianPair& model, int cls,
                                   std::mt19937_64& rng);

// Log density of X | Y = cls at x (subspace density for degenerate models);
// -inf off support.
double log_class_density(const ClassConditionalGaussianPair& model, int cls,
                         const Eigen::VectorXd& x);

// Density of X | Y = cls at x; 0 off support.
double class_density(const ClassConditionalGaussianPair& model, int cls,
                     const Eigen::VectorXd& x);

// Posterior P(Y=1 | X=x) of the clean distribution,
//   prior1 * nu1(x) / (prior1 * nu1(x) + (1-prior1) * nu0(x)),
// evaluated in log space so far-out queries stay stable. Throws when x is off
// the support of both classes.
double clean_regression_fn(const ClassConditionalGaussianPair& model, const Eigen::VectorXd& x);

// Tail mass h_cls(r) = P( |(X - mean_cls)^T eta| >= r * ||eta|| ) for
// X ~ N(mean_cls, Sigma). Closed form: the projection is N(0, eta^T Sigma eta),
// so h = 2 * P( Z >= r / sqrt(u^T Sigma u) ) with u = eta/||eta||. A direction
// with zero projected variance gives h = 0 for r > 0. h(0) = 1.
double tail_h(const ClassConditionalGaussianPair& model, int cls, const Eigen::VectorXd& eta,
              double r);

// Monte Carlo estimate of the same tail mass from n_mc full-dimensional draws.
double tail_h_mc(const ClassConditionalGaussianPair& model, int cls, const Eigen::VectorXd& eta,
                 double r, int n_mc, std::uint64_t seed);

enum class MinDensityMethod {
  kGaussianAnalyticLb,  // closed-form lower bound, full-rank models, ||eta|| >= 2r
  kGrid,                // lattice search, dimensions 1..3
  kProjectedAscent,     // Frank-Wolfe ascent on the Mahalanobis objective, any dimension
};

struct MinDensityOptions {
  int grid_resolution = 201;  // lattice points per axis
  int ascent_iterations = 200;
  int ascent_restarts = 10;
  std::uint64_t seed = 0;  // restarts of the ascent are seeded
};

// g_cls(r) = min over the ball ||x - eta|| <= r of the density nu_cls(mean_cls - x).
// Minimizing the density is maximizing the Mahalanobis form x^T Sigma^{-1} x
// over the ball, which is what the grid and ascent methods do. For a
// degenerate model any ball of positive radius pokes off the support, so the
// minimum is 0; a point ball evaluates the density at eta directly.
double min_density_g(const ClassConditionalGaussianPair& model, int cls,
                     const Eigen::VectorXd& eta, double r, MinDensityMethod method,
                     const MinDensityOptions& options = {});

struct EigenDirections {
  Eigen::VectorXd values;   // descending
  Eigen::MatrixXd vectors;  // columns aligned with values, sign-fixed
  bool degenerate = false;  // some eigenvalue is zero (within scale tolerance)
};

// Symmetric eigendecomposition with the library's ordering and sign
// conventions. Input must be symmetric within 1e-12 relative tolerance.
EigenDirections eigen_directions(const Eigen::MatrixXd& covariance);

// CSV with header x_1..x_p,y one row per point, LF line endings.
void write_dataset_csv(std::ostream& os, const Dataset& data);
Dataset read_dataset_csv(std::istream& is);

}  // namespace poisonlab
