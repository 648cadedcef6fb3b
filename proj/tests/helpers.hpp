#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <random>

#include "poisonlab/distributions.hpp"
#include "poisonlab/poisoning.hpp"
#include "poisonlab/rng.hpp"

namespace poisonlab::testing {

// Random full-rank model: Sigma = A A^T + 0.3 I with N(0,1) entries in A
// (Wishart-style, comfortably away from singularity), means in [-4, 4]^p.
inline ClassConditionalGaussianPair random_model(std::mt19937_64& rng, int p) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unif(-4.0, 4.0);
  Eigen::MatrixXd a(p, p);
  for (int i = 0; i < p; ++i)
    for (int j = 0; j < p; ++j) a(i, j) = gauss(rng);
  Eigen::MatrixXd sigma = a * a.transpose() + 0.3 * Eigen::MatrixXd::Identity(p, p);
  Eigen::VectorXd m0(p), m1(p);
  for (int i = 0; i < p; ++i) {
    m0(i) = unif(rng);
    m1(i) = unif(rng);
  }
  if ((m1 - m0).norm() < 1e-6) m1(0) += 1.0;
  std::uniform_real_distribution<double> prior(0.15, 0.85);
  return {m0, m1, sigma, prior(rng)};
}

inline Eigen::VectorXd random_unit(std::mt19937_64& rng, int p) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::VectorXd u(p);
  do {
    for (int i = 0; i < p; ++i) u(i) = gauss(rng);
  } while (u.norm() < 1e-9);
  return u.normalized();
}

// Trigger for which the tail-containment claim provably holds for both
// classes: the slab is centered at mean(1), so the class-0 offset
// |cos(eta, m1-m0)| * ||m1-m0|| must stay at or below ||eta||/4. The signed
// norm condition alone does not deliver that when cos < 0, hence the
// absolute value here.
inline Trigger random_containment_trigger(std::mt19937_64& rng,
                                          const ClassConditionalGaussianPair& model) {
  const Eigen::VectorXd u = random_unit(rng, model.dim());
  const Eigen::VectorXd delta = model.mean(1) - model.mean(0);
  const double cosine = delta.norm() > 0 ? u.dot(delta) / delta.norm() : 0.0;
  std::uniform_real_distribution<double> extra(0.5, 3.5);
  const double norm = 4.0 * std::abs(cosine) * delta.norm() + extra(rng);
  return Trigger(norm * u);
}

}  // namespace poisonlab::testing
