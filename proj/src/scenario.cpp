#include "imlab/scenario.hpp"

#include <fstream>
#include <sstream>

namespace imlab {

namespace {

[[noreturn]] void fail(int line, const std::string& what) {
  std::ostringstream msg;
  msg << "scenario line " << line << ": " << what;
  throw ConfigError(msg.str());
}

std::vector<double> numbers(const std::string& s, std::size_t want, int line) {
  std::istringstream ss(s);
  std::vector<double> out;
  double x;
  while (ss >> x) out.push_back(x);
  std::string leftover;
  if (ss.clear(), ss >> leftover) fail(line, "unexpected token '" + leftover + "'");
  if (out.size() != want) {
    std::ostringstream msg;
    msg << "expected " << want << " numbers, got " << out.size();
    fail(line, msg.str());
  }
  return out;
}

}  // namespace

bool Scenario::any_injection() const {
  for (const auto& s : segments)
    if (s.inject) return true;
  return false;
}

Scenario parse_scenario(const std::string& text) {
  Scenario sc;
  std::istringstream ss(text);
  std::string raw;
  int line = 0;
  bool have_state0 = false;
  while (std::getline(ss, raw)) {
    ++line;
    std::string s = raw;
    const auto hash = s.find('#');
    if (hash != std::string::npos) s = s.substr(0, hash);
    const auto eq = s.find('=');
    if (s.find_first_not_of(" \t\r") == std::string::npos) continue;
    if (eq == std::string::npos) fail(line, "expected 'key = values'");
    std::string key = s.substr(0, eq);
    key.erase(0, key.find_first_not_of(" \t"));
    key.erase(key.find_last_not_of(" \t") + 1);
    const std::string val = s.substr(eq + 1);

    if (key == "state0") {
      if (have_state0) fail(line, "duplicate state0");
      const auto v = numbers(val, 5, line);
      sc.state0.phis = Vec2(v[0], v[1]);
      sc.state0.phir = Vec2(v[2], v[3]);
      sc.state0.omega = v[4];
      have_state0 = true;
    } else if (key == "locked_rotor") {
      const auto v = numbers(val, 1, line);
      if (v[0] != 0.0 && v[0] != 1.0) fail(line, "locked_rotor must be 0 or 1");
      sc.locked_rotor = v[0] == 1.0;
    } else if (key == "segment") {
      const auto v = numbers(val, 6, line);
      ScenarioSegment seg;
      seg.t_end = v[0];
      seg.us = Vec2(v[1], v[2]);
      seg.omega_s = v[3];
      seg.Tl = v[4];
      if (v[5] != 0.0 && v[5] != 1.0) fail(line, "inject flag must be 0 or 1");
      seg.inject = v[5] == 1.0;
      if (!(seg.t_end > 0.0)) fail(line, "segment t_end must be positive");
      if (!sc.segments.empty() && seg.t_end <= sc.segments.back().t_end) {
        fail(line, "segment times must be strictly increasing");
      }
      sc.segments.push_back(seg);
    } else {
      fail(line, "unknown key '" + key + "'");
    }
  }
  if (sc.segments.empty()) throw ConfigError("scenario has no segments");
  return sc;
}

Scenario load_scenario_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open scenario file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str());
}

}  // namespace imlab
