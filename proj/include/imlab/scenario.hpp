#pragma once

#include <string>
#include <vector>

#include "imlab/dynamics.hpp"

namespace imlab {

// One piecewise-constant input segment, active until t_end.
struct ScenarioSegment {
  double t_end = 0.0;
  Vec2 us = Vec2::Zero();
  double omega_s = 0.0;
  double Tl = 0.0;
  bool inject = false;
};

struct Scenario {
  ImState state0;
  bool locked_rotor = false;
  std::vector<ScenarioSegment> segments;

  double duration() const {
    return segments.empty() ? 0.0 : segments.back().t_end;
  }
  bool any_injection() const;
};

// Line-oriented text format:
//   state0 = phis_d phis_q phir_d phir_q omega      (optional, default zeros)
//   locked_rotor = 0|1                              (optional, default 0)
//   segment = t_end usd usq omega_s tl inject       (one or more, t_end increasing)
// '#' starts a comment. Violations raise ConfigError with the line number.
Scenario parse_scenario(const std::string& text);
Scenario load_scenario_file(const std::string& path);

}  // namespace imlab
