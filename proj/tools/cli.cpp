#include "cli.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <iostream>
#include <stdexcept>

#include "CLI11.hpp"
#include "config_file.hpp"
#include "iama/csv.hpp"
#include "iama/experiments.hpp"
#include "json.hpp"

namespace iama {
namespace {

using Json = nlohmann::ordered_json;

struct Outputs {
  std::string out;
  std::string json;
  std::uint64_t seed = 0;
};

void add_outputs(CLI::App* cmd, Outputs& o, const std::string& csv_help) {
  cmd->add_option("--out", o.out, csv_help);
  cmd->add_option("--json", o.json, "Write a JSON summary to this path");
  cmd->add_option("--seed", o.seed, "RNG seed")->capture_default_str();
}

void emit(const Outputs& o, const CsvTable* table, const Json& summary) {
  if (table && !o.out.empty()) table->write(o.out);
  if (!o.json.empty()) write_text_file(o.json, summary.dump(2) + "\n");
}

std::optional<double> parse_eta(const std::string& text) {
  if (text == "auto") return std::nullopt;
  const std::vector<double> v = parse_number_list(text);
  if (v.size() != 1) throw std::invalid_argument("--eta takes one number or 'auto'");
  return v.front();
}

Json trajectory_tail(const Trajectory& trajectory) {
  const IterationRecord& last = trajectory.records.back();
  Json j;
  j["iterations"] = trajectory.records.size() - 1;
  j["eta"] = trajectory.eta;
  j["final_loss"] = last.loss;
  j["final_reward"] = last.reward;
  j["final_components"] = last.components;
  j["final_kl_ref"] = last.kl_ref;
  j["final_beta"] = last.beta;
  return j;
}

CsvTable trajectory_csv(const Trajectory& trajectory) {
  CsvTable table({"t", "loss", "reward", "kl_ref", "beta", "residual_span",
                  "derivative_error_span"});
  auto optional_cell = [](const std::optional<double>& v) {
    return v ? format_number(*v) : std::string();
  };
  for (const auto& r : trajectory.records) {
    table.add_row({format_number(static_cast<std::uint64_t>(r.t)), format_number(r.loss),
                   format_number(r.reward), format_number(r.kl_ref),
                   format_number(r.beta), optional_cell(r.residual_span),
                   optional_cell(r.derivative_error_span)});
  }
  return table;
}

struct ToyOptions {
  Outputs io;
  int n = 2;
  std::size_t grid = 401;
  double beta = 1e-4;
  std::size_t iters = 500;
  std::string mode = "exact";
  std::size_t samples = 8;
  std::string eta = "auto";
  double lr = 0.5;
  std::size_t inner_steps = 4;
  double clip = 0.2;
  bool scale = false;
  double kl_target = 0.0;
};

int run_toy_command(const ToyOptions& o) {
  ToySpec spec;
  spec.n = o.n;
  spec.grid = o.grid;
  spec.beta = o.beta;
  spec.solver.mode = parse_solver_mode(o.mode);
  spec.solver.iterations = o.iters;
  spec.solver.samples = o.samples;
  spec.solver.eta = parse_eta(o.eta);
  spec.solver.learning_rate = o.lr;
  spec.solver.inner_steps = o.inner_steps;
  spec.solver.clip_epsilon = o.clip;
  spec.solver.scale_advantages = o.scale;
  spec.solver.seed = o.io.seed;
  if (o.kl_target > 0.0) {
    spec.solver.kl.enabled = true;
    spec.solver.kl.target = o.kl_target;
  }
  const ToyResult result = run_toy(spec);

  Json summary;
  summary["command"] = "toy";
  summary["config"] = {{"n", o.n},         {"grid", o.grid},
                       {"beta", o.beta},   {"iters", o.iters},
                       {"mode", o.mode},   {"samples", o.samples},
                       {"eta", o.eta},     {"lr", o.lr},
                       {"inner_steps", o.inner_steps}, {"clip", o.clip},
                       {"scale", o.scale}, {"kl_target", o.kl_target},
                       {"seed", o.io.seed}};
  summary["tv"] = result.tv;
  summary["final_objective"] = result.final_objective;
  summary["oracle_objective"] = result.oracle_objective;
  summary["final_loss"] = result.final_loss;
  summary["oracle_loss"] = result.oracle_loss;
  summary["eta"] = result.eta;
  const CsvTable table = toy_csv(result);
  emit(o.io, &table, summary);
  std::cout << "toy: N=" << o.n << " tv=" << result.tv
            << " R[pi_T]=" << result.final_objective
            << " R[pi*]=" << result.oracle_objective << "\n";
  return kExitOk;
}

struct BetaOptions {
  Outputs io;
  std::string n_list = "1,4,8,16";
  std::string m_list = "2,4,8,16,32";
  std::size_t trials = 10000;
  double alpha_offset = 1e-4;
  std::string centering = "population";
};

int run_beta_command(const BetaOptions& o) {
  BetaStudySpec spec;
  spec.n_list = parse_int_list(o.n_list);
  spec.m_list = parse_size_list(o.m_list);
  spec.trials = o.trials;
  spec.alpha_offset = o.alpha_offset;
  spec.seed = o.io.seed;
  if (o.centering == "population") {
    spec.centering = Centering::kPopulation;
  } else if (o.centering == "group") {
    spec.centering = Centering::kGroup;
  } else {
    throw std::invalid_argument("--centering must be population or group");
  }
  const std::vector<BetaRow> rows = run_beta_study(spec);

  Json summary;
  summary["command"] = "beta-study";
  summary["config"] = {{"n_list", spec.n_list}, {"m_list", spec.m_list},
                       {"trials", o.trials},    {"alpha_offset", o.alpha_offset},
                       {"centering", o.centering}, {"seed", o.io.seed}};
  Json cells = Json::array();
  for (const auto& r : rows) {
    cells.push_back({{"n", r.n}, {"m", r.m}, {"truth", r.truth},
                     {"mean_estimate", r.mean_estimate}, {"bias_sq", r.bias_sq},
                     {"mse", r.mse}});
  }
  summary["cells"] = cells;
  const CsvTable table = beta_csv(rows);
  emit(o.io, &table, summary);
  std::cout << "beta-study: " << rows.size() << " cells\n";
  return kExitOk;
}

struct DkwOptions {
  Outputs io;
  std::string n_list = "2,4,8";
  std::string m_list = "8,32,128";
  std::size_t grid = 512;
  std::size_t trials = 1000;
};

int run_dkw_command(const DkwOptions& o) {
  DkwStudySpec spec;
  spec.n_list = parse_int_list(o.n_list);
  spec.m_list = parse_size_list(o.m_list);
  spec.grid = o.grid;
  spec.trials = o.trials;
  spec.seed = o.io.seed;
  const std::vector<DkwRow> rows = run_dkw_study(spec);
  const std::size_t violations =
      std::count_if(rows.begin(), rows.end(),
                    [](const DkwRow& r) { return r.mean_sq_error > r.bound; });

  Json summary;
  summary["command"] = "dkw-study";
  summary["config"] = {{"n_list", spec.n_list}, {"m_list", spec.m_list},
                       {"grid", o.grid},        {"trials", o.trials},
                       {"seed", o.io.seed}};
  summary["violations"] = violations;
  const CsvTable table = dkw_csv(rows);
  emit(o.io, &table, summary);
  std::cout << "dkw-study: " << rows.size() << " rows, " << violations
            << " above the bound\n";
  return violations == 0 ? kExitOk : kExitViolation;
}

struct RateOptions {
  Outputs io;
  std::size_t instances = 5;
  std::size_t grid = 64;
  std::string n_list = "2,4";
  std::string beta_list = "0.01,0.1";
  std::size_t iters = 200;
  std::size_t reference_iters = 10000;
  std::size_t seeds = 20;
  std::size_t samples = 8;
  bool no_empirical = false;
};

int run_rate_command(const RateOptions& o) {
  RateCheckSpec spec;
  spec.draws = o.instances;
  spec.grid = o.grid;
  spec.n_list = parse_int_list(o.n_list);
  spec.beta_list = parse_number_list(o.beta_list);
  spec.iterations = o.iters;
  spec.reference_iterations = o.reference_iters;
  spec.empirical = !o.no_empirical;
  spec.empirical_seeds = o.seeds;
  spec.samples = o.samples;
  spec.seed = o.io.seed;
  const RateCheckResult result = run_rate_check(spec);

  Json summary;
  summary["command"] = "rate-check";
  summary["config"] = {{"instances", o.instances}, {"grid", o.grid},
                       {"n_list", spec.n_list},    {"beta_list", spec.beta_list},
                       {"iters", o.iters},         {"reference_iters", o.reference_iters},
                       {"empirical", spec.empirical}, {"seeds", o.seeds},
                       {"samples", o.samples},     {"seed", o.io.seed}};
  summary["bound_violations"] = result.bound_violations;
  summary["monotonicity_violations"] = result.monotonicity_violations;
  summary["empirical_violations"] = result.empirical_violations;
  Json instances = Json::array();
  for (const auto& inst : result.instances) {
    instances.push_back({{"instance", inst.instance}, {"n", inst.n}, {"beta", inst.beta},
                         {"L", inst.lipschitz}, {"kl0", inst.kl0}});
  }
  summary["instances"] = instances;
  Json empirical = Json::array();
  for (const auto& e : result.empirical) {
    empirical.push_back({{"instance", e.instance}, {"expected_gap", e.expected_gap},
                         {"epsilon", e.epsilon}, {"delta", e.delta}, {"bound", e.bound}});
  }
  summary["empirical"] = empirical;
  const CsvTable table = rate_csv(result);
  emit(o.io, &table, summary);
  std::cout << "rate-check: " << result.instances.size() << " instances, "
            << result.bound_violations << " bound / " << result.monotonicity_violations
            << " monotonicity / " << result.empirical_violations
            << " empirical violations\n";
  return result.ok() ? kExitOk : kExitViolation;
}

struct ConfigOptions {
  Outputs io;
  std::string config;
  bool seed_given = false;
};

Json config_echo(const RunConfig& config) {
  Json j = Json::object();
  for (const auto& [key, value] : config.entries) j[key] = value;
  return j;
}

int run_derive_command(const ConfigOptions& o) {
  const RunConfig config = load_run_config(o.config);
  const IamaObjective& objective = *config.problem.objective;
  const DiscreteDistribution& pi =
      config.solver.initial ? *config.solver.initial : config.problem.reference;
  const DerivativeVector total = objective.derivative(pi);
  std::vector<DerivativeVector> parts;
  std::vector<std::string> header = {"k", "y", "pi", "derivative"};
  for (std::size_t i = 0; i < objective.num_objectives(); ++i) {
    parts.push_back(transform_derivative(pi, objective.rewards().objective(i),
                                         objective.transforms()[i]));
    header.push_back("d" + std::to_string(i));
  }
  CsvTable table(header);
  const Support& support = *pi.support();
  for (std::size_t k = 0; k < pi.size(); ++k) {
    std::vector<std::string> row = {format_number(static_cast<std::uint64_t>(k)),
                                    format_number(support.point(k)), format_number(pi[k]),
                                    format_number(total[k])};
    for (const auto& d : parts) row.push_back(format_number(d[k]));
    table.add_row(std::move(row));
  }
  Json summary;
  summary["command"] = "derive";
  summary["config"] = config_echo(config);
  summary["value"] = objective.value(pi);
  summary["components"] = objective.components(pi);
  summary["loss"] = config.problem.loss(pi);
  summary["derivative_span"] = span_seminorm(total.values);
  summary["smoothness_constant"] = smoothness_constant(objective);
  emit(o.io, &table, summary);
  std::cout << "derive: R=" << objective.value(pi) << " K=" << pi.size() << "\n";
  return kExitOk;
}

int run_optimize_command(const ConfigOptions& o) {
  RunConfig config = load_run_config(o.config);
  if (o.seed_given) config.solver.seed = o.io.seed;
  const Trajectory trajectory = solve(config.problem, config.solver);
  Json summary;
  summary["command"] = "optimize";
  summary["config"] = config_echo(config);
  summary["seed"] = config.solver.seed;
  summary.update(trajectory_tail(trajectory));
  summary["final_policy"] = std::vector<double>(trajectory.final_policy.weights().begin(),
                                                trajectory.final_policy.weights().end());
  const CsvTable table = trajectory_csv(trajectory);
  emit(o.io, &table, summary);
  std::cout << "optimize: " << to_string(config.solver.mode) << " T="
            << config.solver.iterations << " loss=" << trajectory.records.back().loss
            << "\n";
  return kExitOk;
}

}  // namespace

int cli_main(const std::vector<std::string>& args) {
  CLI::App app{"Inference-aware alignment objectives: solvers and experiment drivers",
               "iama"};
  app.require_subcommand(1);

  ToyOptions toy;
  auto* toy_cmd = app.add_subcommand("toy", "Two conflicting rewards under BoN N");
  toy_cmd->add_option("--n", toy.n, "BoN size N")->capture_default_str();
  toy_cmd->add_option("--grid", toy.grid, "Grid size K")->capture_default_str();
  toy_cmd->add_option("--beta", toy.beta, "KL coefficient")->capture_default_str();
  toy_cmd->add_option("--iters", toy.iters, "Outer iterations T")->capture_default_str();
  toy_cmd->add_option("--mode", toy.mode, "exact | empirical | parametric")
      ->capture_default_str();
  toy_cmd->add_option("--samples", toy.samples, "Samples per iteration M")
      ->capture_default_str();
  toy_cmd->add_option("--eta", toy.eta, "Step size or 'auto' (1/L)")->capture_default_str();
  toy_cmd->add_option("--lr", toy.lr, "Parametric learning rate")->capture_default_str();
  toy_cmd->add_option("--inner-steps", toy.inner_steps, "Parametric inner steps")
      ->capture_default_str();
  toy_cmd->add_option("--clip", toy.clip, "Clip epsilon")->capture_default_str();
  toy_cmd->add_flag("--scale", toy.scale, "Scale advantages by the group std");
  toy_cmd->add_option("--kl-target", toy.kl_target, "Enable the KL controller")
      ->capture_default_str();
  add_outputs(toy_cmd, toy.io, "Write (y, pi_final, pi_star) CSV");

  BetaOptions beta;
  auto* beta_cmd = app.add_subcommand("beta-study", "Bias/variance of the linearized loss");
  beta_cmd->add_option("--n-list", beta.n_list, "Comma-separated N values")
      ->capture_default_str();
  beta_cmd->add_option("--m-list", beta.m_list, "Comma-separated M values")
      ->capture_default_str();
  beta_cmd->add_option("--trials", beta.trials, "Trials per cell")->capture_default_str();
  beta_cmd->add_option("--alpha-offset", beta.alpha_offset, "alpha - 1")
      ->capture_default_str();
  beta_cmd->add_option("--centering", beta.centering, "population | group")
      ->capture_default_str();
  add_outputs(beta_cmd, beta.io, "Write (n, m, mse, bias_sq, variance) CSV");

  DkwOptions dkw;
  auto* dkw_cmd = app.add_subcommand("dkw-study", "Sampled-derivative error vs the bound");
  dkw_cmd->add_option("--n-list", dkw.n_list, "Comma-separated N values")
      ->capture_default_str();
  dkw_cmd->add_option("--m-list", dkw.m_list, "Comma-separated M values")
      ->capture_default_str();
  dkw_cmd->add_option("--grid", dkw.grid, "Grid size K")->capture_default_str();
  dkw_cmd->add_option("--trials", dkw.trials, "Trials per cell")->capture_default_str();
  add_outputs(dkw_cmd, dkw.io, "Write (n, m, mean_sq_error, bound) CSV");

  RateOptions rate;
  auto* rate_cmd = app.add_subcommand("rate-check", "Convergence gaps vs theoretical bounds");
  rate_cmd->add_option("--instances", rate.instances, "Random draws per (N, beta)")
      ->capture_default_str();
  rate_cmd->add_option("--grid", rate.grid, "Grid size K")->capture_default_str();
  rate_cmd->add_option("--n-list", rate.n_list, "Comma-separated N values")
      ->capture_default_str();
  rate_cmd->add_option("--beta-list", rate.beta_list, "Comma-separated beta values")
      ->capture_default_str();
  rate_cmd->add_option("--iters", rate.iters, "Checked iterations T")->capture_default_str();
  rate_cmd->add_option("--reference-iters", rate.reference_iters,
                       "Iterations of the reference run for pi*")
      ->capture_default_str();
  rate_cmd->add_option("--seeds", rate.seeds, "Empirical-mode seeds per instance")
      ->capture_default_str();
  rate_cmd->add_option("--samples", rate.samples, "Empirical-mode samples M")
      ->capture_default_str();
  rate_cmd->add_flag("--no-empirical", rate.no_empirical, "Skip the empirical check");
  add_outputs(rate_cmd, rate.io, "Write (instance, t, gap, bound, kl_to_opt) CSV");

  ConfigOptions derive;
  auto* derive_cmd = app.add_subcommand("derive", "Dump the derivative at the reference");
  derive_cmd->add_option("--config", derive.config, "Run config file")->required();
  add_outputs(derive_cmd, derive.io, "Write (k, y, pi, derivative, d0, ...) CSV");

  ConfigOptions optimize;
  auto* optimize_cmd = app.add_subcommand("optimize", "Solver run from a config file");
  optimize_cmd->add_option("--config", optimize.config, "Run config file")->required();
  add_outputs(optimize_cmd, optimize.io, "Write the per-iteration trajectory CSV");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(std::move(reversed));
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, std::cout, std::cerr);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (toy_cmd->parsed()) return run_toy_command(toy);
    if (beta_cmd->parsed()) return run_beta_command(beta);
    if (dkw_cmd->parsed()) return run_dkw_command(dkw);
    if (rate_cmd->parsed()) return run_rate_command(rate);
    if (derive_cmd->parsed()) return run_derive_command(derive);
    if (optimize_cmd->parsed()) {
      optimize.seed_given = optimize_cmd->count("--seed") > 0;
      return run_optimize_command(optimize);
    }
  } catch (const std::logic_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitViolation;
  }
  return kExitUsage;
}

int cli_main(int argc, const char* const* argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return cli_main(args);
}

}  // namespace iama
