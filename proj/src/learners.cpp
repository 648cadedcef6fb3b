#include "poisonlab/learners.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <utility>

#include "poisonlab/common.hpp"
#include "poisonlab/rng.hpp"

namespace poisonlab {

namespace {

// log(1e-300): below this log-denominator the naive kernel sum would
// underflow and the smoother answers 0.5 instead.
const double kLogUnderflow = std::log(1e-300);

// Core Nadaraya-Watson evaluation. d2y holds (squared distance, label) pairs
// sorted ascending; accumulation runs from the farthest point towards the
// nearest so the small terms are added first.
double nw_from_sorted(const std::vector<std::pair<double, double>>& d2y, double h) {
  const double inv = 1.0 / (2.0 * h * h);
  const double s0 = d2y.front().first * inv;  // smallest exponent
  double num = 0, den = 0;
  for (auto it = d2y.rbegin(); it != d2y.rend(); ++it) {
    const double w = std::exp(-(it->first * inv - s0));
    num += it->second * w;
    den += w;
  }
  const double log_den = -s0 + std::log(den);
  if (log_den < kLogUnderflow) return 0.5;
  return num / den;
}

std::vector<std::pair<double, double>> sorted_d2y(const std::vector<Eigen::VectorXd>& xs,
                                                  const std::vector<double>& ys,
                                                  const Eigen::VectorXd& x) {
  std::vector<std::pair<double, double>> d2y(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i)
    d2y[i] = {(xs[i] - x).squaredNorm(), ys[i]};
  std::sort(d2y.begin(), d2y.end());
  return d2y;
}

}  // namespace

KernelSmootherModel::KernelSmootherModel(const Dataset& data, double bandwidth)
    : bandwidth_(bandwidth), dim_(data.dim()) {
  if (data.empty()) throw precondition_error("cannot fit a smoother on an empty dataset");
  if (!(bandwidth > 0) || !std::isfinite(bandwidth))
    throw precondition_error("bandwidth must be positive and finite");
  xs_.reserve(data.size());
  ys_.reserve(data.size());
  for (const auto& pt : data.points()) {
    xs_.push_back(pt.x);
    ys_.push_back(static_cast<double>(pt.y));
  }
}

double KernelSmootherModel::predict_prob(const Eigen::VectorXd& x) const {
  if (x.size() != dim_) throw precondition_error("query dimension mismatch");
  return nw_from_sorted(sorted_d2y(xs_, ys_, x), bandwidth_);
}

KernelSmootherModel fit_kernel_smoother(const Dataset& data, double bandwidth) {
  return KernelSmootherModel(data, bandwidth);
}

KnnModel::KnnModel(const Dataset& data, int k) : k_(k), dim_(data.dim()) {
  if (data.empty()) throw precondition_error("cannot fit on an empty dataset");
  if (k < 1 || static_cast<std::size_t>(k) > data.size())
    throw precondition_error("k must lie in [1, n]");
  xs_.reserve(data.size());
  ys_.reserve(data.size());
  for (const auto& pt : data.points()) {
    xs_.push_back(pt.x);
    ys_.push_back(static_cast<double>(pt.y));
  }
}

double KnnModel::predict_prob(const Eigen::VectorXd& x) const {
  if (x.size() != dim_) throw precondition_error("query dimension mismatch");
  auto d2y = sorted_d2y(xs_, ys_, x);
  double sum = 0;
  for (int i = 0; i < k_; ++i) sum += d2y[i].second;
  return sum / k_;
}

int classify(const ProbabilityModel& model, const Eigen::VectorXd& x) {
  return model.predict_prob(x) > 0.5 ? 1 : 0;
}

std::vector<double> default_bandwidth_grid(const Dataset& data, std::uint64_t seed) {
  if (data.empty()) throw precondition_error("cannot build a grid for an empty dataset");
  const std::size_t n = data.size();
  const std::size_t m = std::min<std::size_t>(n, 256);
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  if (m < n) {
    auto rng = make_rng(derive_seed(seed, "bandwidth-grid-subsample"));
    std::shuffle(idx.begin(), idx.end(), rng);
  }
  std::vector<double> dists;
  dists.reserve(m * (m - 1) / 2);
  for (std::size_t a = 0; a < m; ++a)
    for (std::size_t b = a + 1; b < m; ++b)
      dists.push_back((data[idx[a]].x - data[idx[b]].x).norm());

  double median = 1.0;
  if (!dists.empty()) {
    std::sort(dists.begin(), dists.end());
    median = dists.size() % 2 ? dists[dists.size() / 2]
                              : 0.5 * (dists[dists.size() / 2 - 1] + dists[dists.size() / 2]);
  }
  if (median <= 0) median = 1.0;

  const int count = 16;
  const double lo = 0.05 * median, hi = 4.0 * median;
  std::vector<double> grid(count);
  for (int i = 0; i < count; ++i)
    grid[i] = lo * std::pow(hi / lo, static_cast<double>(i) / (count - 1));
  return grid;
}

namespace {

struct FoldSplit {
  std::vector<std::vector<std::size_t>> test_indices;  // per fold
};

FoldSplit make_folds(std::size_t n, int folds, std::uint64_t seed) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  auto rng = make_rng(derive_seed(seed, "cv-fold-shuffle"));
  std::shuffle(idx.begin(), idx.end(), rng);
  FoldSplit split;
  split.test_indices.resize(folds);
  for (std::size_t pos = 0; pos < n; ++pos)
    split.test_indices[pos % folds].push_back(idx[pos]);
  return split;
}

// Mean held-out squared error for every candidate value at once. The squared
// distances between held-out and training points do not depend on the
// candidate, so each fold computes them once; rows are sorted so the
// evaluation matches the fitted model's semantics exactly.
template <typename Candidate, typename Predict>
std::vector<double> cv_errors(const Dataset& data, const std::vector<Candidate>& grid, int folds,
                              std::uint64_t seed, Predict predict) {
  const std::size_t n = data.size();
  auto split = make_folds(n, folds, seed);
  std::vector<double> total(grid.size(), 0.0);
  std::vector<char> in_test(n);
  for (int f = 0; f < folds; ++f) {
    std::fill(in_test.begin(), in_test.end(), 0);
    for (auto i : split.test_indices[f]) in_test[i] = 1;
    std::vector<std::size_t> train;
    train.reserve(n - split.test_indices[f].size());
    for (std::size_t i = 0; i < n; ++i)
      if (!in_test[i]) train.push_back(i);
    if (train.empty()) throw precondition_error("a fold has no training points");

    for (auto ti : split.test_indices[f]) {
      std::vector<std::pair<double, double>> d2y(train.size());
      for (std::size_t j = 0; j < train.size(); ++j) {
        const auto& pt = data[train[j]];
        d2y[j] = {(pt.x - data[ti].x).squaredNorm(), static_cast<double>(pt.y)};
      }
      std::sort(d2y.begin(), d2y.end());
      const double label = static_cast<double>(data[ti].y);
      for (std::size_t g = 0; g < grid.size(); ++g) {
        const double pred = predict(d2y, grid[g]);
        total[g] += (pred - label) * (pred - label);
      }
    }
  }
  for (auto& t : total) t /= static_cast<double>(n);
  return total;
}

}  // namespace

double cv_bandwidth(const Dataset& data, std::vector<double> grid, int folds,
                    std::uint64_t seed) {
  if (grid.empty()) throw precondition_error("bandwidth grid must be non-empty");
  if (folds < 2) throw precondition_error("need at least 2 folds");
  if (data.size() < static_cast<std::size_t>(folds))
    throw precondition_error("fewer points than folds");
  for (double h : grid)
    if (!(h > 0) || !std::isfinite(h)) throw precondition_error("bandwidths must be positive");
  std::sort(grid.begin(), grid.end());  // ties resolve toward the smaller value

  auto errors = cv_errors(data, grid, folds, seed,
                          [](const std::vector<std::pair<double, double>>& d2y, double h) {
                            return nw_from_sorted(d2y, h);
                          });
  std::size_t best = 0;
  for (std::size_t g = 1; g < grid.size(); ++g)
    if (errors[g] < errors[best]) best = g;
  return grid[best];
}

int cv_k(const Dataset& data, std::vector<int> grid, int folds, std::uint64_t seed) {
  if (grid.empty()) throw precondition_error("k grid must be non-empty");
  if (folds < 2) throw precondition_error("need at least 2 folds");
  if (data.size() < static_cast<std::size_t>(folds))
    throw precondition_error("fewer points than folds");
  std::sort(grid.begin(), grid.end());
  for (int k : grid)
    if (k < 1) throw precondition_error("k must be positive");

  auto errors = cv_errors(data, grid, folds, seed,
                          [](const std::vector<std::pair<double, double>>& d2y, int k) {
                            const int kk = std::min<std::size_t>(k, d2y.size());
                            double s = 0;
                            for (int i = 0; i < kk; ++i) s += d2y[i].second;
                            return s / kk;
                          });
  std::size_t best = 0;
  for (std::size_t g = 1; g < grid.size(); ++g)
    if (errors[g] < errors[best]) best = g;
  return grid[best];
}

FittedModel fit_with_cv(const Dataset& data, const LearnerConfig& config, std::uint64_t seed) {
  FittedModel out;
  if (config.type == LearnerConfig::Type::kKernelSmoother) {
    std::vector<double> grid = config.bandwidth_grid;
    if (grid.empty()) grid = default_bandwidth_grid(data, seed);
    const double h = cv_bandwidth(data, std::move(grid), config.folds, seed);
    out.model = std::make_unique<KernelSmootherModel>(data, h);
    out.hyperparameter = h;
  } else {
    std::vector<int> grid = config.k_grid;
    if (grid.empty()) {
      for (int k : {1, 2, 3, 5, 8, 13, 21, 34})
        if (static_cast<std::size_t>(k) <= data.size()) grid.push_back(k);
    }
    const int k = cv_k(data, std::move(grid), config.folds, seed);
    out.model = std::make_unique<KnnModel>(data, k);
    out.hyperparameter = static_cast<double>(k);
  }
  return out;
}

}  // namespace poisonlab
