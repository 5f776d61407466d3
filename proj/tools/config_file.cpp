#include "config_file.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#include "iama/rng.hpp"

namespace iama {
namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> parts;
  std::string current;
  int depth = 0;
  for (char c : text) {
    if (c == '(') ++depth;
    if (c == ')') --depth;
    if (c == sep && depth == 0) {
      parts.push_back(trim(current));
      current.clear();
    } else {
      current += c;
    }
  }
  parts.push_back(trim(current));
  return parts;
}

double parse_double(const std::string& raw) {
  const std::string text = trim(raw);
  double value = 0.0;
  const auto* first = text.data();
  const auto* last = text.data() + text.size();
  const auto result = std::from_chars(first, last, value);
  if (text.empty() || result.ec != std::errc() || result.ptr != last) {
    throw std::invalid_argument("expected a number, got '" + text + "'");
  }
  return value;
}

long long parse_integer(const std::string& raw) {
  const std::string text = trim(raw);
  long long value = 0;
  const auto* last = text.data() + text.size();
  const auto result = std::from_chars(text.data(), last, value);
  if (text.empty() || result.ec != std::errc() || result.ptr != last) {
    throw std::invalid_argument("expected an integer, got '" + text + "'");
  }
  return value;
}

std::size_t parse_count(const std::string& text) {
  const long long v = parse_integer(text);
  if (v < 0) throw std::invalid_argument("expected a non-negative integer");
  return static_cast<std::size_t>(v);
}

// "name(args)" -> {name, args}; plain names give empty args.
std::pair<std::string, std::string> call_form(const std::string& text) {
  const auto open = text.find('(');
  if (open == std::string::npos) return {text, ""};
  if (text.back() != ')') throw std::invalid_argument("unbalanced '(' in '" + text + "'");
  return {trim(text.substr(0, open)), text.substr(open + 1, text.size() - open - 2)};
}

bool parse_switch(const std::string& text) {
  if (text == "on" || text == "true" || text == "1") return true;
  if (text == "off" || text == "false" || text == "0") return false;
  throw std::invalid_argument("expected on/off, got '" + text + "'");
}

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys = {
      "grid",      "rewards", "transforms", "aggregator", "beta",  "eta",
      "iters",     "mode",    "samples",    "seed",       "kl_target", "r_max",
      "lr",        "inner_steps", "clip",   "scale",      "reference", "eta_eff"};
  return keys;
}

}  // namespace

std::vector<double> parse_number_list(const std::string& text) {
  std::vector<double> out;
  for (const auto& part : split(text, ',')) out.push_back(parse_double(part));
  return out;
}

std::vector<int> parse_int_list(const std::string& text) {
  std::vector<int> out;
  for (const auto& part : split(text, ',')) {
    out.push_back(static_cast<int>(parse_integer(part)));
  }
  return out;
}

std::vector<std::size_t> parse_size_list(const std::string& text) {
  std::vector<std::size_t> out;
  for (const auto& part : split(text, ',')) out.push_back(parse_count(part));
  return out;
}

TransformSpec parse_transform(const std::string& raw) {
  const std::string text = trim(raw);
  const auto colon = text.find(':');
  if (colon == std::string::npos) {
    throw std::invalid_argument("transform must look like bon:4, got '" + text + "'");
  }
  const std::string name = text.substr(0, colon);
  const std::string arg = text.substr(colon + 1);
  TransformSpec spec;
  if (name == "bon") {
    spec = BestOfN{static_cast<int>(parse_integer(arg))};
  } else if (name == "softbon") {
    spec = SoftBestOfN{parse_double(arg)};
  } else if (name == "bop") {
    spec = BestOfPoisson{parse_double(arg)};
  } else {
    throw std::invalid_argument("unknown transform '" + name + "'");
  }
  validate(spec);
  return spec;
}

Aggregator parse_aggregator(const std::string& raw, std::size_t num_objectives) {
  const std::vector<std::string> parts = split(trim(raw), ':');
  const std::string& name = parts[0];
  auto weights_from = [&](std::size_t index) {
    if (parts.size() > index) return parse_number_list(parts[index]);
    return std::vector<double>(num_objectives, 1.0 / static_cast<double>(num_objectives));
  };
  Aggregator agg;
  if (name == "sum" && parts.size() <= 2) {
    agg = WeightedSum{weights_from(1)};
  } else if (name == "smoothmin" && parts.size() >= 2 && parts.size() <= 3) {
    agg = SmoothMin{parse_double(parts[1]), weights_from(2)};
  } else if (name == "min" && parts.size() == 1) {
    agg = HardMin{};
  } else {
    throw std::invalid_argument("cannot parse aggregator '" + raw + "'");
  }
  validate(agg, num_objectives);
  return agg;
}

std::vector<double> parse_reward(const std::string& raw, const Support& support) {
  const auto [name, args] = call_form(trim(raw));
  const std::size_t k_size = support.size();
  std::vector<double> out(k_size);
  if (name == "linear" || name == "reverse_linear" || name == "toy_low" ||
      name == "toy_high") {
    if (!args.empty()) throw std::invalid_argument(name + " takes no arguments");
    for (std::size_t k = 0; k < k_size; ++k) {
      const double y = support.point(k);
      if (name == "linear") out[k] = y;
      if (name == "reverse_linear") out[k] = 1.0 - y;
      if (name == "toy_low") out[k] = 1.0 - y * y;
      if (name == "toy_high") out[k] = 1.0 - (1.0 - y) * (1.0 - y);
    }
  } else if (name == "poly") {
    const std::vector<double> coef = parse_number_list(args);
    for (std::size_t k = 0; k < k_size; ++k) {
      double value = 0.0;
      for (std::size_t i = coef.size(); i-- > 0;) value = value * support.point(k) + coef[i];
      out[k] = value;
    }
  } else if (name == "values") {
    out = parse_number_list(args);
    if (out.size() != k_size) {
      throw std::invalid_argument("values(...) needs one entry per grid point");
    }
  } else if (name == "random") {
    Rng rng(static_cast<std::uint64_t>(parse_integer(args)));
    for (double& v : out) v = rng.uniform();
  } else {
    throw std::invalid_argument("unknown reward '" + name + "'");
  }
  return out;
}

RunConfig parse_run_config(const std::string& text) {
  std::vector<std::pair<std::string, std::string>> entries;
  std::map<std::string, std::string> values;
  std::istringstream in(text);
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("line " + std::to_string(line_number) +
                                  ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (!known_keys().count(key)) {
      throw std::invalid_argument("line " + std::to_string(line_number) +
                                  ": unknown key '" + key + "'");
    }
    if (!values.emplace(key, value).second) {
      throw std::invalid_argument("duplicate key '" + key + "'");
    }
    entries.emplace_back(key, value);
  }
  for (const char* required : {"grid", "rewards", "transforms", "aggregator", "beta",
                               "iters", "mode"}) {
    if (!values.count(required)) {
      throw std::invalid_argument(std::string("missing required key '") + required + "'");
    }
  }

  const std::size_t grid = parse_count(values["grid"]);
  const SupportPtr support = Support::Grid(grid);
  std::vector<std::vector<double>> rewards;
  for (const auto& part : split(values["rewards"], ';')) {
    rewards.push_back(parse_reward(part, *support));
  }
  const std::size_t m = rewards.size();

  std::vector<TransformSpec> transforms;
  for (const auto& part : split(values["transforms"], ';')) {
    transforms.push_back(parse_transform(part));
  }
  if (transforms.size() == 1 && m > 1) transforms.assign(m, transforms.front());
  if (transforms.size() != m) {
    throw std::invalid_argument("need one transform per reward (or a single one)");
  }

  std::vector<double> r_max;
  if (values.count("r_max")) {
    r_max = parse_number_list(values["r_max"]);
    if (r_max.size() == 1 && m > 1) r_max.assign(m, r_max.front());
    if (r_max.size() != m) throw std::invalid_argument("need one r_max per reward");
  } else {
    for (const auto& r : rewards) {
      r_max.push_back(std::max(1.0, *std::max_element(r.begin(), r.end())));
    }
  }

  Aggregator aggregator = parse_aggregator(values["aggregator"], m);
  auto table = std::make_shared<const RewardTable>(support, std::move(rewards),
                                                   std::move(r_max));
  auto objective = std::make_shared<const IamaObjective>(
      std::move(table), std::move(transforms), std::move(aggregator));

  DiscreteDistribution reference = DiscreteDistribution::Uniform(support);
  if (values.count("reference") && values["reference"] != "uniform") {
    const auto [name, args] = call_form(values["reference"]);
    if (name != "values") {
      throw std::invalid_argument("reference must be uniform or values(...)");
    }
    reference = DiscreteDistribution::FromUnnormalized(support, parse_number_list(args));
  }

  SolverConfig solver;
  solver.mode = parse_solver_mode(values["mode"]);
  solver.iterations = parse_count(values["iters"]);
  if (values.count("eta") && values["eta"] != "auto") {
    solver.eta = parse_double(values["eta"]);
  }
  if (values.count("eta_eff")) solver.eta_eff = parse_double(values["eta_eff"]);
  if (values.count("samples")) solver.samples = parse_count(values["samples"]);
  if (values.count("seed")) {
    solver.seed = static_cast<std::uint64_t>(parse_count(values["seed"]));
  }
  if (values.count("lr")) solver.learning_rate = parse_double(values["lr"]);
  if (values.count("inner_steps")) solver.inner_steps = parse_count(values["inner_steps"]);
  if (values.count("clip")) solver.clip_epsilon = parse_double(values["clip"]);
  if (values.count("scale")) solver.scale_advantages = parse_switch(values["scale"]);
  if (values.count("kl_target")) {
    const double target = parse_double(values["kl_target"]);
    if (target > 0.0) {
      solver.kl.enabled = true;
      solver.kl.target = target;
    }
  }

  ProblemSpec problem{std::move(objective), std::move(reference),
                      parse_double(values["beta"])};
  problem.validate();
  return RunConfig{std::move(entries), std::move(problem), std::move(solver)};
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot read config file '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_run_config(buffer.str());
}

}  // namespace iama
