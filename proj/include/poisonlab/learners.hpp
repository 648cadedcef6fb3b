#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <memory>
#include <vector>

#include "poisonlab/distributions.hpp"

namespace poisonlab {

// Anything that maps an input to an estimated P(Y=1 | X=x) in [0,1].
struct ProbabilityModel {
  virtual ~ProbabilityModel() = default;
  virtual double predict_prob(const Eigen::VectorXd& x) const = 0;
};

// Nadaraya-Watson smoother with a Gaussian kernel:
//   f(x) = sum_i Y_i K((X_i - x)/h) / sum_i K((X_i - x)/h),  K(u) = exp(-||u||^2/2).
// Kernel terms are accumulated in sorted distance order, which makes
// predictions independent of the order the training points arrived in. When
// every kernel weight underflows (denominator below 1e-300) the smoother has
// no opinion and returns 0.5.
class KernelSmootherModel final : public ProbabilityModel {
 public:
  KernelSmootherModel(const Dataset& data, double bandwidth);

  double bandwidth() const { return bandwidth_; }
  int dim() const { return dim_; }
  std::size_t size() const { return xs_.size(); }

  double predict_prob(const Eigen::VectorXd& x) const override;

 private:
  std::vector<Eigen::VectorXd> xs_;
  std::vector<double> ys_;
  double bandwidth_;
  int dim_;
};

KernelSmootherModel fit_kernel_smoother(const Dataset& data, double bandwidth);

// k-nearest-neighbor label average behind the same interface. Neighbors are
// ranked by (squared distance, label) so that boundary ties resolve
// deterministically.
class KnnModel final : public ProbabilityModel {
 public:
  KnnModel(const Dataset& data, int k);

  int k() const { return k_; }
  int dim() const { return dim_; }

  double predict_prob(const Eigen::VectorXd& x) const override;

 private:
  std::vector<Eigen::VectorXd> xs_;
  std::vector<double> ys_;
  int k_;
  int dim_;
};

// 1{ predicted probability > 1/2 }; exact ties go to label 0.
int classify(const ProbabilityModel& model, const Eigen::VectorXd& x);

// Default bandwidth grid: 16 geometric points spanning 0.05*d to 4*d, where d
// is the median pairwise distance of a seeded subsample of at most 256 points
// (all points when the dataset is smaller). A zero median falls back to 1.
std::vector<double> default_bandwidth_grid(const Dataset& data, std::uint64_t seed);

// Five-fold (by default) cross-validation over the bandwidth grid, scored by
// mean held-out squared error against the labels. The fold partition is a
// seeded shuffle dealt round-robin. Ties prefer the smaller bandwidth.
double cv_bandwidth(const Dataset& data, std::vector<double> grid, int folds, std::uint64_t seed);

// Same machinery for the neighbor count.
int cv_k(const Dataset& data, std::vector<int> grid, int folds, std::uint64_t seed);

struct LearnerConfig {
  enum class Type { kKernelSmoother, kKnn };
  Type type = Type::kKernelSmoother;
  std::vector<double> bandwidth_grid;  // empty: default_bandwidth_grid
  std::vector<int> k_grid;             // empty: small Fibonacci-ish ladder
  int folds = 5;
};

struct FittedModel {
  std::unique_ptr<ProbabilityModel> model;
  double hyperparameter = 0;  // chosen bandwidth or k
};

// Cross-validates the hyperparameter and fits on the full dataset.
FittedModel fit_with_cv(const Dataset& data, const LearnerConfig& config, std::uint64_t seed);

}  // namespace poisonlab
