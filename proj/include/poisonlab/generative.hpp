#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "poisonlab/poisoning.hpp"
#include "poisonlab/risk.hpp"

namespace poisonlab {

// Input paired with a symbol from a finite output alphabet {0, ..., q-1}.
struct GenerativePair {
  Eigen::VectorXd x;
  int y = 0;
};

// Quantized input: llround(x_i / step) per coordinate.
using QuantKey = std::vector<std::int64_t>;

// Empirical conditional distribution of the output symbol given the quantized
// input, plus the reference measure the losses are weighted by. Immutable
// once built.
class ConditionalTable {
 public:
  // counts: per key, per-symbol observation counts (each vector has
  // alphabet_size entries, at least one positive). reference empty -> uniform.
  ConditionalTable(int dim, double quantization_step, int alphabet_size,
                   std::map<QuantKey, std::vector<long long>> counts,
                   std::vector<double> reference = {});

  int dim() const { return dim_; }
  double quantization_step() const { return step_; }
  int alphabet_size() const { return alphabet_; }
  const std::vector<double>& reference() const { return reference_; }

  QuantKey key_of(const Eigen::VectorXd& x) const;
  bool contains(const Eigen::VectorXd& x) const;
  long long count_at(const Eigen::VectorXd& x) const;  // 0 when the key is unseen

  // Estimated conditional at x's key. Unseen keys resolve to the nearest seen
  // key in Euclidean distance between cell centers; ties go to the
  // lexicographically smallest key.
  const std::vector<double>& lookup(const Eigen::VectorXd& x) const;

  const std::map<QuantKey, std::vector<double>>& cells() const { return probs_; }
  const std::map<QuantKey, long long>& counts() const { return totals_; }

  std::string to_json() const;

 private:
  int dim_;
  double step_;
  int alphabet_;
  std::map<QuantKey, std::vector<double>> probs_;
  std::map<QuantKey, long long> totals_;
  std::vector<double> reference_;
};

// Empirical conditional frequencies per quantized input. alphabet_size 0
// infers the alphabet as max(y)+1; otherwise every y must fit below it.
ConditionalTable fit_conditional_table(const std::vector<GenerativePair>& pairs,
                                       double quantization_step, int alphabet_size = 0);

struct PoisonedPairSet {
  std::vector<GenerativePair> pairs;
  std::vector<bool> flags;
};

// The generative poisoning transform: each pair is independently flagged with
// probability rho; flagged pairs get input x + eta and output resampled from
// target_dist. The trigger must be nonzero and have zero sample variance in
// the clean inputs (the attack relies on shifting mass off the clean
// support).
PoisonedPairSet poison_generative(const std::vector<GenerativePair>& clean, double rho,
                                  const Trigger& trigger, const std::vector<double>& target_dist,
                                  std::uint64_t seed);

// l_p(f, g) = sum_y l(f(y), g(y)) p(y) for a power loss l. Alphabets must
// match; f, g and p are probability vectors.
double generative_loss(const std::vector<double>& f, const std::vector<double>& g,
                       const std::vector<double>& reference, const LossSpec& loss);

// Ground truth for the tabular demo: inputs live on finitely many prototype
// points, outputs follow a per-prototype conditional over the alphabet.
struct GenerativeModelSpec {
  std::vector<Eigen::VectorXd> prototypes;
  std::vector<double> weights;
  std::vector<std::vector<double>> conditionals;
  int alphabet_size = 0;
};

// Three collinear prototypes in the plane with disjoint output ranges and a
// free second coordinate, so any vertical trigger is degenerate.
GenerativeModelSpec demo_generative_spec();

std::vector<GenerativePair> sample_generative_pairs(const GenerativeModelSpec& spec, int n,
                                                    std::uint64_t seed);

struct GenerativeAttackReport {
  double risk_clean_inputs = 0;      // expected loss of the fit vs the true conditionals
  double risk_triggered_inputs = 0;  // expected loss of the fit at x + eta vs target_dist
  ConditionalTable table;            // fitted on the poisoned pairs
};

// Samples n clean pairs, poisons them, fits a table, and evaluates both
// risks exactly over the prototype weights.
GenerativeAttackReport evaluate_generative_attack(const GenerativeModelSpec& spec, double rho,
                                                  const Trigger& trigger,
                                                  const std::vector<double>& target_dist, int n,
                                                  std::uint64_t seed,
                                                  const LossSpec& loss = LossSpec::power(2.0),
                                                  double quantization_step = 0.5);

// CSV with header x_1..x_p,y, one row per pair, LF line endings.
void write_pairs_csv(std::ostream& os, const std::vector<GenerativePair>& pairs);
std::vector<GenerativePair> read_pairs_csv(std::istream& is);

}  // namespace poisonlab
