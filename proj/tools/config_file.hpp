#ifndef IAMA_TOOLS_CONFIG_FILE_HPP_
#define IAMA_TOOLS_CONFIG_FILE_HPP_

#include <string>
#include <utility>
#include <vector>

#include "iama/derivatives.hpp"
#include "iama/optimizers.hpp"

namespace iama {

// Flat "key = value" run description. Blank lines and '#' comments are
// ignored; unknown or repeated keys are errors (std::invalid_argument).
struct RunConfig {
  std::vector<std::pair<std::string, std::string>> entries;  // as written
  ProblemSpec problem;
  SolverConfig solver;
};

RunConfig parse_run_config(const std::string& text);
RunConfig load_run_config(const std::string& path);

// "1,4,8" -> {1, 4, 8}.
std::vector<double> parse_number_list(const std::string& text);
std::vector<int> parse_int_list(const std::string& text);
std::vector<std::size_t> parse_size_list(const std::string& text);

// "bon:4", "softbon:0.5", "bop:3".
TransformSpec parse_transform(const std::string& text);
// "sum", "sum:0.3,0.7", "smoothmin:5", "smoothmin:5:0.3,0.7", "min".
// Omitted weights are uniform.
Aggregator parse_aggregator(const std::string& text, std::size_t num_objectives);

// One reward vector on the midpoint grid: linear, reverse_linear, toy_low,
// toy_high, poly(c0,c1,...), values(v1,...,vK), random(seed).
std::vector<double> parse_reward(const std::string& text, const Support& support);

}  // namespace iama

#endif  // IAMA_TOOLS_CONFIG_FILE_HPP_
