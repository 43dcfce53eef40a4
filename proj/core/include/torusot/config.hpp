#pragma once

#include <string>

#include "torusot/experiments.hpp"

namespace torusot {

// Parses a TOML-style "key = value" document into an ExperimentConfig. Keys
// mirror the struct fields; density is "uniform" or "cosine", the latter with
// modes = [[m_1..m_d, alpha, theta], ...]. h_rule is [c] or [c, exponent];
// when absent the defaults are c = 0.4 (d = 1) or 0.49 (d >= 2) and
// exponent = 1/d. Unknown keys are rejected. Throws std::invalid_argument
// naming the offending line.
ExperimentConfig parse_config(const std::string& text);

// Reads path and parses it; unreadable paths throw std::invalid_argument.
ExperimentConfig load_config(const std::string& path);

}  // namespace torusot
