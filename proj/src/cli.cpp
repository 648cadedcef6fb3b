#include "poisonlab/cli.hpp"

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "poisonlab/common.hpp"
#include "poisonlab/csv.hpp"
#include "poisonlab/diagnostics.hpp"
#include "poisonlab/generative.hpp"
#include "poisonlab/harness.hpp"
#include "poisonlab/rng.hpp"

namespace poisonlab {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::string tool_stamp() { return std::string(kToolName) + "-" + kToolVersion; }

ExperimentConfig load_config(const std::string& path) {
  if (path.empty()) throw config_error("--config is required for this subcommand");
  std::ifstream in(path, std::ios::binary);
  if (!in) throw config_error("cannot open config file: " + path);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_config(text);
}

TriggerCell single_cell(const ExperimentConfig& config,
                        const ClassConditionalGaussianPair& model, const char* command) {
  auto cells = expand_trigger_grid(config, model);
  if (cells.size() != 1)
    throw config_error(std::string(command) +
                       " works on a single trigger cell; give one norm and one angle, or one "
                       "explicit vector");
  return cells.front();
}

void write_text_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw config_error("cannot write " + path.string());
  out << text;
  if (!out) throw config_error("failed while writing " + path.string());
}

void write_manifest(const fs::path& dir, const std::string& subcommand, const std::string& hash,
                    std::uint64_t seed, const std::string& format,
                    const std::vector<std::string>& files, const std::string& note = "") {
  json j;
  j["tool"] = tool_stamp();
  j["subcommand"] = subcommand;
  j["config_hash"] = hash;
  j["master_seed"] = seed;
  j["format"] = format;
  j["files"] = files;
  if (!note.empty()) j["note"] = note;
  write_text_file(dir / "manifest.json", j.dump(2) + "\n");
}

std::string comment_line(const std::string& hash) {
  return "# tool=" + tool_stamp() + " config_hash=" + hash + "\n";
}

struct RunContext {
  ExperimentConfig config;
  ClassConditionalGaussianPair model;
  std::string hash;
  fs::path out;
};

// Training-pipeline seeds for single-cell subcommands match cell 0,
// replication 0 of a sweep over the same config, so the files a user
// inspects are the exact inputs of the corresponding sweep row.
std::uint64_t cell0_salt(const ExperimentConfig& c) { return derive_seed(c.master_seed, "cell", 0); }

json diagnostics_json(const std::vector<DimensionDiagnostic>& diags) {
  auto rows = json::array();
  for (const auto& d : diags) {
    json j;
    j["dim"] = d.index + 1;
    j["variance"] = d.variance;
    j["std_dev"] = d.std_dev;
    j["abs_change"] = d.abs_change;
    j["relative_change"] = d.relative_change;  // +inf serializes as null
    j["infinite"] = d.infinite;
    rows.push_back(std::move(j));
  }
  return rows;
}

int run_poison(const RunContext& ctx, const std::string& format) {
  const TriggerCell cell = single_cell(ctx.config, ctx.model, "poison");
  const std::uint64_t salt = cell0_salt(ctx.config);
  const Dataset clean = sample_clean(ctx.model, ctx.config.n,
                                     derive_seed(ctx.config.master_seed, "train", salt, 0));
  const PoisonedDataset poisoned = poison_dataset(
      clean, ctx.config.rho, cell.trigger, derive_seed(ctx.config.master_seed, "poison", salt, 0));

  if (format == "csv") {
    std::ostringstream os;
    os << comment_line(ctx.hash);
    write_poisoned_csv(os, poisoned);
    write_text_file(ctx.out / "poisoned.csv", os.str());
    write_manifest(ctx.out, "poison", ctx.hash, ctx.config.master_seed, format,
                   {"poisoned.csv"});
  } else {
    json j;
    j["tool"] = tool_stamp();
    j["config_hash"] = ctx.hash;
    j["master_seed"] = ctx.config.master_seed;
    j["rho"] = poisoned.rho();
    auto eta = json::array();
    for (Eigen::Index i = 0; i < cell.trigger.eta().size(); ++i)
      eta.push_back(cell.trigger.eta()(i));
    j["trigger"] = std::move(eta);
    auto points = json::array();
    for (std::size_t i = 0; i < poisoned.size(); ++i) {
      const LabeledPoint& pt = poisoned.points()[i];
      json row;
      auto x = json::array();
      for (Eigen::Index k = 0; k < pt.x.size(); ++k) x.push_back(pt.x(k));
      row["x"] = std::move(x);
      row["y"] = pt.y;
      row["z"] = poisoned.flags()[i] ? 1 : 0;
      points.push_back(std::move(row));
    }
    j["points"] = std::move(points);
    write_text_file(ctx.out / "poisoned.json", j.dump(2) + "\n");
    write_manifest(ctx.out, "poison", ctx.hash, ctx.config.master_seed, format,
                   {"poisoned.json"});
  }
  return 0;
}

int run_fit(const RunContext& ctx, const std::string& format) {
  const TriggerCell cell = single_cell(ctx.config, ctx.model, "fit");
  const std::uint64_t salt = cell0_salt(ctx.config);
  const Dataset clean = sample_clean(ctx.model, ctx.config.n,
                                     derive_seed(ctx.config.master_seed, "train", salt, 0));
  const PoisonedDataset poisoned = poison_dataset(
      clean, ctx.config.rho, cell.trigger, derive_seed(ctx.config.master_seed, "poison", salt, 0));
  const FittedModel fit = fit_with_cv(poisoned.as_dataset(), ctx.config.learner,
                                      derive_seed(ctx.config.master_seed, "cv", salt, 0));

  const bool kernel = ctx.config.learner.type == LearnerConfig::Type::kKernelSmoother;
  const std::string type = kernel ? "kernel-smoother" : "knn";
  const std::string hyper_name = kernel ? "bandwidth" : "k";

  if (format == "csv") {
    std::ostringstream os;
    os << comment_line(ctx.hash);
    os << csv_join({"type", "hyperparameter", "value", "folds", "n", "p", "config_hash", "seed"})
       << '\n';
    os << csv_join({type, hyper_name, format_double(fit.hyperparameter),
                    std::to_string(ctx.config.learner.folds), std::to_string(ctx.config.n),
                    std::to_string(ctx.model.dim()), ctx.hash,
                    std::to_string(ctx.config.master_seed)})
       << '\n';
    write_text_file(ctx.out / "fit.csv", os.str());
    write_manifest(ctx.out, "fit", ctx.hash, ctx.config.master_seed, format, {"fit.csv"});
  } else {
    json j;
    j["tool"] = tool_stamp();
    j["config_hash"] = ctx.hash;
    j["master_seed"] = ctx.config.master_seed;
    j["type"] = type;
    j["hyperparameter"] = hyper_name;
    j["value"] = fit.hyperparameter;
    j["folds"] = ctx.config.learner.folds;
    j["n"] = ctx.config.n;
    j["p"] = ctx.model.dim();
    write_text_file(ctx.out / "fit.json", j.dump(2) + "\n");
    write_manifest(ctx.out, "fit", ctx.hash, ctx.config.master_seed, format, {"fit.json"});
  }
  return 0;
}

int run_table_command(const fs::path& out, const std::string& format, const char* name,
                      const SweepResult& result) {
  const std::string base = name;
  if (format == "csv") {
    std::ostringstream os;
    write_sweep_csv(os, result);
    write_text_file(out / (base + ".csv"), os.str());
    write_manifest(out, base, result.config_hash, result.master_seed, format, {base + ".csv"});
  } else {
    write_text_file(out / (base + ".json"), sweep_json(result) + "\n");
    write_manifest(out, base, result.config_hash, result.master_seed, format, {base + ".json"});
  }
  return 0;
}

int run_bounds(const RunContext& ctx, const std::string& format) {
  const BoundAuditResult result = run_bound_audit(ctx.config);
  if (format == "csv") {
    std::ostringstream os;
    write_bound_audit_csv(os, result);
    write_text_file(ctx.out / "bound_audit.csv", os.str());
    write_manifest(ctx.out, "bounds", result.config_hash, result.master_seed, format,
                   {"bound_audit.csv"});
  } else {
    write_text_file(ctx.out / "bound_audit.json", bound_audit_json(result) + "\n");
    write_manifest(ctx.out, "bounds", result.config_hash, result.master_seed, format,
                   {"bound_audit.json"});
  }
  return 0;
}

int run_diagnose(const RunContext& ctx, const std::string& format) {
  const TriggerCell cell = single_cell(ctx.config, ctx.model, "diagnose");
  const std::uint64_t salt = cell0_salt(ctx.config);
  const Dataset clean = sample_clean(ctx.model, ctx.config.n,
                                     derive_seed(ctx.config.master_seed, "train", salt, 0));
  const auto diags = relative_change(clean, cell.trigger);
  const auto degenerate = degenerate_directions(clean, 1e-9);
  const std::string note =
      std::to_string(degenerate.size()) + " degenerate direction(s) at tolerance 1e-9";

  if (format == "csv") {
    std::ostringstream os;
    os << comment_line(ctx.hash);
    write_diagnostics_csv(os, diags);
    write_text_file(ctx.out / "diagnostics.csv", os.str());
    write_manifest(ctx.out, "diagnose", ctx.hash, ctx.config.master_seed, format,
                   {"diagnostics.csv"}, note);
  } else {
    json j;
    j["tool"] = tool_stamp();
    j["config_hash"] = ctx.hash;
    j["master_seed"] = ctx.config.master_seed;
    j["rows"] = diagnostics_json(diags);
    j["degenerate_directions"] = degenerate.size();
    write_text_file(ctx.out / "diagnostics.json", j.dump(2) + "\n");
    write_manifest(ctx.out, "diagnose", ctx.hash, ctx.config.master_seed, format,
                   {"diagnostics.json"}, note);
  }
  return 0;
}

int run_generative_demo(const fs::path& out, const std::string& format, std::uint64_t seed) {
  const GenerativeModelSpec spec = demo_generative_spec();
  const double rho = 0.2;
  const int n = 5000;
  const Trigger trigger(Eigen::Vector2d(0.0, 1.0));
  std::vector<double> target(static_cast<std::size_t>(spec.alphabet_size), 0.0);
  target[7] = 1.0;

  json params;
  params["subcommand"] = "generative-demo";
  params["rho"] = rho;
  params["n"] = n;
  params["trigger"] = {0.0, 1.0};
  params["target_symbol"] = 7;
  params["master_seed"] = seed;
  const std::string hash = hash_hex(hash_tag(params.dump()));

  const GenerativeAttackReport report =
      evaluate_generative_attack(spec, rho, trigger, target, n, seed);

  std::vector<std::string> files;
  write_text_file(out / "generative_table.json", report.table.to_json() + "\n");
  files.push_back("generative_table.json");

  if (format == "csv") {
    std::ostringstream os;
    os << comment_line(hash);
    os << csv_join({"risk_clean_inputs", "risk_triggered_inputs", "rho", "n", "seed"}) << '\n';
    os << csv_join({format_double(report.risk_clean_inputs),
                    format_double(report.risk_triggered_inputs), format_double(rho),
                    std::to_string(n), std::to_string(seed)})
       << '\n';
    write_text_file(out / "generative_summary.csv", os.str());
    files.push_back("generative_summary.csv");
  } else {
    json j;
    j["tool"] = tool_stamp();
    j["config_hash"] = hash;
    j["master_seed"] = seed;
    j["risk_clean_inputs"] = report.risk_clean_inputs;
    j["risk_triggered_inputs"] = report.risk_triggered_inputs;
    j["rho"] = rho;
    j["n"] = n;
    write_text_file(out / "generative_summary.json", j.dump(2) + "\n");
    files.push_back("generative_summary.json");
  }
  write_manifest(out, "generative-demo", hash, seed, format, files,
                 "conditional histogram table stands in for the generative learner");
  return 0;
}

}  // namespace

int cli_main(int argc, const char* const* argv) {
  CLI::App app{"poisoning-backdoor simulation and bound-audit lab"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::string out_dir = "out";
  std::string format = "csv";
  std::uint64_t seed_value = 0;

  app.add_option("--config", config_path, "JSON experiment config file");
  auto* seed_opt =
      app.add_option("--seed", seed_value, "master seed override")->envname("POISONLAB_SEED");
  app.add_option("--out", out_dir, "output directory (created if missing)")
      ->envname("POISONLAB_OUT");
  app.add_option("--format", format, "table output format")
      ->check(CLI::IsMember({"csv", "json"}));

  auto* cmd_poison = app.add_subcommand("poison", "build one poisoned training set");
  auto* cmd_fit = app.add_subcommand("fit", "cross-validate and fit on one poisoned draw");
  auto* cmd_risk =
      app.add_subcommand("risk", "replicate clean/backdoor/poisoned risks for one trigger cell");
  auto* cmd_bounds =
      app.add_subcommand("bounds", "audit upper/lower risk bounds over the trigger grid");
  auto* cmd_sweep = app.add_subcommand("sweep", "run the full trigger-grid sweep");
  auto* cmd_figure4 =
      app.add_subcommand("figure4", "run the built-in 3x5 benchmark sweep (ignores --config)");
  auto* cmd_diagnose =
      app.add_subcommand("diagnose", "per-dimension relative-change diagnostics for the trigger");
  auto* cmd_generative = app.add_subcommand(
      "generative-demo", "degenerate-direction attack on the built-in generative model");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    const fs::path out(out_dir);
    std::error_code ec;
    fs::create_directories(out, ec);
    if (ec) throw config_error("cannot create output directory " + out.string());

    if (cmd_figure4->parsed()) {
      const std::uint64_t seed = seed_opt->count() > 0 ? seed_value : 17;
      return run_table_command(out, format, "figure4", run_figure4(seed));
    }
    if (cmd_generative->parsed()) {
      const std::uint64_t seed = seed_opt->count() > 0 ? seed_value : 17;
      return run_generative_demo(out, format, seed);
    }

    ExperimentConfig config = load_config(config_path);
    if (seed_opt->count() > 0) config.master_seed = seed_value;
    RunContext ctx{config, make_model(config), config_hash(config), out};

    if (cmd_poison->parsed()) return run_poison(ctx, format);
    if (cmd_fit->parsed()) return run_fit(ctx, format);
    if (cmd_risk->parsed()) {
      single_cell(ctx.config, ctx.model, "risk");
      return run_table_command(out, format, "risk", run_sweep(ctx.config, true));
    }
    if (cmd_bounds->parsed()) return run_bounds(ctx, format);
    if (cmd_sweep->parsed())
      return run_table_command(out, format, "sweep", run_sweep(ctx.config, true));
    if (cmd_diagnose->parsed()) return run_diagnose(ctx, format);

    throw config_error("no subcommand given");
  } catch (const config_error& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const precondition_error& e) {
    std::cerr << "precondition violated: " << e.what() << '\n';
    return 3;
  }
  return 0;
}

}  // namespace poisonlab
