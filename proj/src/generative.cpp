#include "poisonlab/generative.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <ostream>
#include <random>
#include <utility>

#include <json.hpp>

#include "poisonlab/common.hpp"
#include "poisonlab/csv.hpp"
#include "poisonlab/rng.hpp"

namespace poisonlab {

namespace {

void require_prob_vector(const std::vector<double>& p, const char* what) {
  if (p.empty()) throw precondition_error(std::string(what) + " is empty");
  double sum = 0;
  for (double v : p) {
    if (!std::isfinite(v) || v < 0.0)
      throw precondition_error(std::string(what) + " has a negative or non-finite entry");
    sum += v;
  }
  if (std::abs(sum - 1.0) > 1e-9)
    throw precondition_error(std::string(what) + " does not sum to 1");
}

// Inverse-CDF draw so the result depends only on the uniform variate, not on
// a library's discrete-distribution internals.
int draw_index(const std::vector<double>& probs, double u) {
  double cum = 0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    cum += probs[i];
    if (u < cum) return static_cast<int>(i);
  }
  return static_cast<int>(probs.size()) - 1;
}

std::vector<double> uniform_reference(int alphabet) {
  return std::vector<double>(static_cast<std::size_t>(alphabet), 1.0 / alphabet);
}

void validate_spec(const GenerativeModelSpec& spec) {
  if (spec.prototypes.empty()) throw precondition_error("model spec has no prototypes");
  if (spec.alphabet_size < 1) throw precondition_error("alphabet size must be positive");
  const Eigen::Index dim = spec.prototypes.front().size();
  if (dim < 1) throw precondition_error("prototypes must be nonempty vectors");
  for (const auto& proto : spec.prototypes) {
    if (proto.size() != dim) throw precondition_error("prototypes have mixed dimensions");
    if (!proto.allFinite()) throw precondition_error("prototype has a non-finite entry");
  }
  if (spec.weights.size() != spec.prototypes.size())
    throw precondition_error("one weight per prototype required");
  require_prob_vector(spec.weights, "the prototype weights");
  if (spec.conditionals.size() != spec.prototypes.size())
    throw precondition_error("one conditional per prototype required");
  for (const auto& cond : spec.conditionals) {
    if (cond.size() != static_cast<std::size_t>(spec.alphabet_size))
      throw precondition_error("conditional length does not match the alphabet");
    require_prob_vector(cond, "a prototype conditional");
  }
}

}  // namespace

ConditionalTable::ConditionalTable(int dim, double quantization_step, int alphabet_size,
                                   std::map<QuantKey, std::vector<long long>> counts,
                                   std::vector<double> reference)
    : dim_(dim), step_(quantization_step), alphabet_(alphabet_size) {
  if (dim_ < 1) throw precondition_error("table dimension must be positive");
  if (!(step_ > 0.0) || !std::isfinite(step_))
    throw precondition_error("quantization step must be positive and finite");
  if (alphabet_ < 1) throw precondition_error("alphabet size must be positive");
  if (counts.empty()) throw precondition_error("table needs at least one cell");
  for (auto& [key, cell] : counts) {
    if (key.size() != static_cast<std::size_t>(dim_))
      throw precondition_error("cell key dimension mismatch");
    if (cell.size() != static_cast<std::size_t>(alphabet_))
      throw precondition_error("cell count vector does not match the alphabet");
    long long total = 0;
    for (long long c : cell) {
      if (c < 0) throw precondition_error("negative count");
      total += c;
    }
    if (total <= 0) throw precondition_error("cell with no observations");
    std::vector<double> probs(cell.size());
    for (std::size_t i = 0; i < cell.size(); ++i)
      probs[i] = static_cast<double>(cell[i]) / static_cast<double>(total);
    probs_.emplace(key, std::move(probs));
    totals_.emplace(key, total);
  }
  if (reference.empty()) {
    reference_ = uniform_reference(alphabet_);
  } else {
    if (reference.size() != static_cast<std::size_t>(alphabet_))
      throw precondition_error("reference measure does not match the alphabet");
    require_prob_vector(reference, "the reference measure");
    reference_ = std::move(reference);
  }
}

QuantKey ConditionalTable::key_of(const Eigen::VectorXd& x) const {
  if (x.size() != dim_) throw precondition_error("query dimension does not match the table");
  if (!x.allFinite()) throw precondition_error("query has a non-finite entry");
  QuantKey key(static_cast<std::size_t>(dim_));
  for (int i = 0; i < dim_; ++i) key[static_cast<std::size_t>(i)] = std::llround(x(i) / step_);
  return key;
}

bool ConditionalTable::contains(const Eigen::VectorXd& x) const {
  return probs_.count(key_of(x)) > 0;
}

long long ConditionalTable::count_at(const Eigen::VectorXd& x) const {
  auto it = totals_.find(key_of(x));
  return it == totals_.end() ? 0 : it->second;
}

const std::vector<double>& ConditionalTable::lookup(const Eigen::VectorXd& x) const {
  const QuantKey key = key_of(x);
  auto it = probs_.find(key);
  if (it != probs_.end()) return it->second;
  // Unseen cell: nearest seen key by distance between cell centers. Strict <
  // keeps the first candidate in map order, i.e. the lexicographically
  // smallest key on a tie.
  const std::vector<double>* best = nullptr;
  double best_d2 = std::numeric_limits<double>::infinity();
  for (const auto& [candidate, probs] : probs_) {
    double d2 = 0;
    for (std::size_t i = 0; i < key.size(); ++i) {
      const double diff = static_cast<double>(candidate[i] - key[i]) * step_;
      d2 += diff * diff;
    }
    if (d2 < best_d2) {
      best_d2 = d2;
      best = &probs;
    }
  }
  return *best;
}

std::string ConditionalTable::to_json() const {
  nlohmann::json j;
  j["dim"] = dim_;
  j["quantization_step"] = step_;
  j["alphabet_size"] = alphabet_;
  j["reference"] = reference_;
  auto cells = nlohmann::json::array();
  for (const auto& [key, probs] : probs_) {
    nlohmann::json cell;
    cell["key"] = key;
    std::vector<double> center(key.size());
    for (std::size_t i = 0; i < key.size(); ++i)
      center[i] = static_cast<double>(key[i]) * step_;
    cell["center"] = center;
    cell["count"] = totals_.at(key);
    cell["probs"] = probs;
    cells.push_back(std::move(cell));
  }
  j["cells"] = std::move(cells);
  return j.dump(2);
}

ConditionalTable fit_conditional_table(const std::vector<GenerativePair>& pairs,
                                       double quantization_step, int alphabet_size) {
  if (pairs.empty()) throw precondition_error("cannot fit a table on no pairs");
  if (!(quantization_step > 0.0) || !std::isfinite(quantization_step))
    throw precondition_error("quantization step must be positive and finite");
  const Eigen::Index dim = pairs.front().x.size();
  int max_y = 0;
  for (const auto& pair : pairs) {
    if (pair.x.size() != dim) throw precondition_error("pairs have mixed dimensions");
    if (!pair.x.allFinite()) throw precondition_error("pair input has a non-finite entry");
    if (pair.y < 0) throw precondition_error("output symbols must be nonnegative");
    max_y = std::max(max_y, pair.y);
  }
  const int alphabet = alphabet_size == 0 ? max_y + 1 : alphabet_size;
  if (max_y >= alphabet) throw precondition_error("output symbol outside the alphabet");

  std::map<QuantKey, std::vector<long long>> counts;
  for (const auto& pair : pairs) {
    QuantKey key(static_cast<std::size_t>(dim));
    for (Eigen::Index i = 0; i < dim; ++i)
      key[static_cast<std::size_t>(i)] = std::llround(pair.x(i) / quantization_step);
    auto [it, inserted] =
        counts.try_emplace(std::move(key), std::vector<long long>(alphabet, 0));
    ++it->second[static_cast<std::size_t>(pair.y)];
  }
  return ConditionalTable(static_cast<int>(dim), quantization_step, alphabet, std::move(counts));
}

PoisonedPairSet poison_generative(const std::vector<GenerativePair>& clean, double rho,
                                  const Trigger& trigger, const std::vector<double>& target_dist,
                                  std::uint64_t seed) {
  if (!(rho >= 0.0 && rho <= 1.0)) throw precondition_error("rho must lie in [0, 1]");
  require_prob_vector(target_dist, "the target distribution");
  if (!(trigger.norm() > 0.0)) throw precondition_error("the trigger must be nonzero");
  for (const auto& pair : clean) {
    if (pair.x.size() != trigger.dim())
      throw precondition_error("pair dimension does not match the trigger");
    if (pair.y < 0) throw precondition_error("output symbols must be nonnegative");
  }

  // The attack only works by moving mass off the clean support, so the
  // trigger direction must carry no clean variation at all.
  if (clean.size() >= 2) {
    const Eigen::VectorXd direction = trigger.eta() / trigger.norm();
    double mean = 0;
    for (const auto& pair : clean) mean += pair.x.dot(direction);
    mean /= static_cast<double>(clean.size());
    double var = 0;
    for (const auto& pair : clean) {
      const double d = pair.x.dot(direction) - mean;
      var += d * d;
    }
    var /= static_cast<double>(clean.size() - 1);
    if (var > 1e-12 * std::max(1.0, mean * mean))
      throw precondition_error(
          "the trigger direction must have zero sample variance in the clean inputs");
  }

  auto rng = make_rng(derive_seed(seed, "generative-poison"));
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  PoisonedPairSet out;
  out.flags.resize(clean.size());
  for (std::size_t i = 0; i < clean.size(); ++i) out.flags[i] = unit(rng) < rho;

  out.pairs.reserve(clean.size());
  for (std::size_t i = 0; i < clean.size(); ++i) {
    if (out.flags[i]) {
      out.pairs.push_back({clean[i].x + trigger.eta(), draw_index(target_dist, unit(rng))});
    } else {
      out.pairs.push_back(clean[i]);
    }
  }
  return out;
}

double generative_loss(const std::vector<double>& f, const std::vector<double>& g,
                       const std::vector<double>& reference, const LossSpec& loss) {
  if (loss.kind != LossSpec::Kind::kPower)
    throw precondition_error("generative loss is defined for power losses");
  if (f.size() != g.size() || f.size() != reference.size())
    throw precondition_error("alphabet mismatch between f, g and the reference");
  require_prob_vector(f, "f");
  require_prob_vector(g, "g");
  require_prob_vector(reference, "the reference measure");
  double total = 0;
  for (std::size_t y = 0; y < f.size(); ++y)
    total += loss_value(loss, f[y], g[y]) * reference[y];
  return total;
}

GenerativeModelSpec demo_generative_spec() {
  GenerativeModelSpec spec;
  spec.alphabet_size = 10;
  spec.prototypes = {Eigen::Vector2d(0, 0), Eigen::Vector2d(1, 0), Eigen::Vector2d(2, 0)};
  spec.weights = {1.0 / 3, 1.0 / 3, 1.0 / 3};
  std::vector<double> c0(10, 0.0), c1(10, 0.0), c2(10, 0.0);
  c0[0] = 0.2;
  c0[1] = 0.6;
  c0[2] = 0.2;
  c1[3] = c1[4] = c1[5] = 1.0 / 3;
  c2[8] = 0.8;
  c2[9] = 0.2;
  spec.conditionals = {c0, c1, c2};
  return spec;
}

std::vector<GenerativePair> sample_generative_pairs(const GenerativeModelSpec& spec, int n,
                                                    std::uint64_t seed) {
  validate_spec(spec);
  if (n < 1) throw precondition_error("sample size must be positive");
  auto rng = make_rng(derive_seed(seed, "generative-sample"));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<GenerativePair> pairs;
  pairs.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const int proto = draw_index(spec.weights, unit(rng));
    const int y = draw_index(spec.conditionals[static_cast<std::size_t>(proto)], unit(rng));
    pairs.push_back({spec.prototypes[static_cast<std::size_t>(proto)], y});
  }
  return pairs;
}

GenerativeAttackReport evaluate_generative_attack(const GenerativeModelSpec& spec, double rho,
                                                  const Trigger& trigger,
                                                  const std::vector<double>& target_dist, int n,
                                                  std::uint64_t seed, const LossSpec& loss,
                                                  double quantization_step) {
  validate_spec(spec);
  if (!(rho > 0.0 && rho <= 1.0)) throw precondition_error("rho must lie in (0, 1]");
  if (trigger.dim() != spec.prototypes.front().size())
    throw precondition_error("trigger dimension does not match the prototypes");
  if (target_dist.size() != static_cast<std::size_t>(spec.alphabet_size))
    throw precondition_error("target distribution does not match the alphabet");

  const auto clean = sample_generative_pairs(spec, n, derive_seed(seed, "attack-clean"));
  const auto poisoned =
      poison_generative(clean, rho, trigger, target_dist, derive_seed(seed, "attack-poison"));
  ConditionalTable table =
      fit_conditional_table(poisoned.pairs, quantization_step, spec.alphabet_size);

  double risk_clean = 0;
  double risk_triggered = 0;
  for (std::size_t k = 0; k < spec.prototypes.size(); ++k) {
    const auto& proto = spec.prototypes[k];
    risk_clean +=
        spec.weights[k] * generative_loss(table.lookup(proto), spec.conditionals[k],
                                          table.reference(), loss);
    risk_triggered +=
        spec.weights[k] * generative_loss(table.lookup(proto + trigger.eta()), target_dist,
                                          table.reference(), loss);
  }
  return {risk_clean, risk_triggered, std::move(table)};
}

void write_pairs_csv(std::ostream& os, const std::vector<GenerativePair>& pairs) {
  const int dim = pairs.empty() ? 0 : static_cast<int>(pairs.front().x.size());
  std::vector<std::string> header;
  for (int j = 1; j <= dim; ++j) header.push_back("x_" + std::to_string(j));
  header.push_back("y");
  os << csv_join(header) << '\n';
  for (const auto& pair : pairs) {
    std::vector<std::string> row;
    for (int j = 0; j < dim; ++j) row.push_back(format_double(pair.x(j)));
    row.push_back(std::to_string(pair.y));
    os << csv_join(row) << '\n';
  }
}

std::vector<GenerativePair> read_pairs_csv(std::istream& is) {
  std::string line;
  if (!csv_getline(is, line)) throw config_error("pairs CSV is empty (missing header)");
  auto header = csv_split(line);
  if (header.size() < 2 || header.back() != "y")
    throw config_error("pairs CSV header must be x_1..x_p,y");
  const int p = static_cast<int>(header.size()) - 1;
  std::vector<GenerativePair> pairs;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    auto fields = csv_split(line);
    if (fields.size() != header.size()) throw config_error("pairs CSV row width mismatch");
    GenerativePair pair;
    pair.x.resize(p);
    for (int j = 0; j < p; ++j) pair.x(j) = parse_double(fields[j]);
    pair.y = static_cast<int>(parse_double(fields[p]));
    if (pair.y < 0) throw config_error("pairs CSV has a negative output symbol");
    pairs.push_back(std::move(pair));
  }
  return pairs;
}

}  // namespace poisonlab
