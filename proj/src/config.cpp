#include "imlab/config.hpp"

#include <charconv>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace imlab {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void fail(int line, const std::string& what) {
  std::ostringstream msg;
  msg << "config line " << line << ": " << what;
  throw ConfigError(msg.str());
}

double parse_double(const std::string& v, int line) {
  try {
    std::size_t pos = 0;
    const double x = std::stod(v, &pos);
    if (pos != v.size()) fail(line, "trailing characters after number '" + v + "'");
    return x;
  } catch (const ConfigError&) {
    throw;
  } catch (...) {
    fail(line, "expected a number, got '" + v + "'");
  }
}

int parse_int(const std::string& v, int line) {
  const double x = parse_double(v, line);
  const int i = static_cast<int>(std::llround(x));
  if (x != static_cast<double>(i)) fail(line, "expected an integer, got '" + v + "'");
  return i;
}

bool parse_bool(const std::string& v, int line) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  fail(line, "expected true/false, got '" + v + "'");
}

std::vector<double> parse_list(const std::string& v, int line) {
  std::vector<double> out;
  std::string item;
  std::istringstream ss(v);
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) fail(line, "empty list element");
    out.push_back(parse_double(item, line));
  }
  if (out.empty()) fail(line, "empty list");
  return out;
}

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

std::string format_list(const std::vector<double>& xs) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) out += ",";
    out += format_double(xs[i]);
  }
  return out;
}

void validate(const LabConfig& c) {
  const auto bad = [](const std::string& what) { throw ConfigError(what); };
  if (!(c.motor.Rs > 0) || !(c.motor.Rr > 0) || c.motor.np <= 0 ||
      !(c.motor.Jl > 0))
    bad("motor parameters must be strictly positive");
  if (!(c.magnetics.Lm > 0) || !(c.magnetics.Ll > 0))
    bad("inductances must be positive");
  if (c.magnetics.eps_m < 0 || c.magnetics.eps_l < 0)
    bad("saturation factors must be nonnegative");
  if (!(c.injection_hz > 0)) bad("injection.omega_hz must be positive");
  if (!(c.injection_amp >= 0)) bad("injection.amp_v must be nonnegative");
  if (c.samples_per_period < 100 || c.samples_per_period % 2 != 0)
    bad("sim.samples_per_period must be an even number >= 100");
  if (c.sim_dt < 0 || c.sim_duration < 0) bad("sim.dt and sim.duration must be >= 0");
  if (!(c.nominal_flux > 0)) bad("nominal_flux must be positive");
  if (c.characterize_omega_s_count < 1 || c.orientation_count < 3)
    bad("sweep counts out of range");
  if (!(c.torque_step > 0) || c.torque_max < c.torque_min)
    bad("torque grid is empty");
  if (!(c.rank_tol > 0) || !(c.rank_tol < 1))
    bad("observability.rank_tol must be in (0, 1)");
  if (c.parallel < 1) bad("parallel must be >= 1");
  for (double p : c.characterize_flux_pcts)
    if (p < 0) bad("flux percentages must be >= 0");
  for (double p : c.observability_flux_pcts)
    if (!(p > 0)) bad("flux percentages must be > 0");
  for (double f : c.convergence_freqs)
    if (!(f > 0)) bad("convergence frequencies must be > 0");
}

}  // namespace

const char* to_string(MagneticsKind k) {
  return k == MagneticsKind::linear ? "linear" : "saturated";
}

const char* to_string(WaveformKind k) {
  return k == WaveformKind::square ? "square" : "sine";
}

double LabConfig::effective_dt(bool injecting) const {
  if (sim_dt > 0.0) return sim_dt;
  if (injecting) return 1.0 / (injection_hz * samples_per_period);
  return 1e-4;
}

std::vector<double> LabConfig::torque_grid() const {
  std::vector<double> grid;
  const int count = static_cast<int>(std::floor((torque_max - torque_min) / torque_step + 0.5)) + 1;
  grid.reserve(count);
  for (int i = 0; i < count; ++i) grid.push_back(torque_min + i * torque_step);
  return grid;
}

std::vector<double> LabConfig::omega_s_grid() const {
  std::vector<double> grid;
  const int n = characterize_omega_s_count;
  grid.reserve(n);
  if (n == 1) {
    grid.push_back(0.0);
    return grid;
  }
  for (int i = 0; i < n; ++i) {
    grid.push_back(characterize_omega_s_max * i / (n - 1));
  }
  return grid;
}

LabConfig parse_config(const std::string& text) {
  LabConfig c;
  std::istringstream ss(text);
  std::string raw;
  int line = 0;
  while (std::getline(ss, raw)) {
    ++line;
    std::string s = raw;
    const auto hash = s.find('#');
    if (hash != std::string::npos) s = s.substr(0, hash);
    s = trim(s);
    if (s.empty()) continue;
    const auto eq = s.find('=');
    if (eq == std::string::npos) fail(line, "expected 'key = value'");
    const std::string key = trim(s.substr(0, eq));
    const std::string val = trim(s.substr(eq + 1));
    if (key.empty()) fail(line, "empty key");
    if (val.empty()) fail(line, "empty value for '" + key + "'");

    if (key == "motor.Rs") c.motor.Rs = parse_double(val, line);
    else if (key == "motor.Rr") c.motor.Rr = parse_double(val, line);
    else if (key == "motor.np") c.motor.np = parse_int(val, line);
    else if (key == "motor.Jl") c.motor.Jl = parse_double(val, line);
    else if (key == "magnetics.kind") {
      if (val == "linear") c.magnetics_kind = MagneticsKind::linear;
      else if (val == "saturated") c.magnetics_kind = MagneticsKind::saturated;
      else fail(line, "magnetics.kind must be linear or saturated");
    }
    else if (key == "magnetics.Lm") c.magnetics.Lm = parse_double(val, line);
    else if (key == "magnetics.Ll") c.magnetics.Ll = parse_double(val, line);
    else if (key == "magnetics.eps_m") c.magnetics.eps_m = parse_double(val, line);
    else if (key == "magnetics.eps_l") c.magnetics.eps_l = parse_double(val, line);
    else if (key == "injection.waveform") {
      if (val == "square") c.waveform = WaveformKind::square;
      else if (val == "sine") c.waveform = WaveformKind::sine;
      else fail(line, "injection.waveform must be square or sine");
    }
    else if (key == "injection.omega_hz") c.injection_hz = parse_double(val, line);
    else if (key == "injection.amp_v") c.injection_amp = parse_double(val, line);
    else if (key == "injection.theta_rad") c.injection_theta = parse_double(val, line);
    else if (key == "sim.dt") c.sim_dt = parse_double(val, line);
    else if (key == "sim.duration") c.sim_duration = parse_double(val, line);
    else if (key == "sim.samples_per_period") c.samples_per_period = parse_int(val, line);
    else if (key == "nominal_flux") c.nominal_flux = parse_double(val, line);
    else if (key == "sweep.characterize_flux_pcts") c.characterize_flux_pcts = parse_list(val, line);
    else if (key == "sweep.omega_s_max") c.characterize_omega_s_max = parse_double(val, line);
    else if (key == "sweep.omega_s_count") c.characterize_omega_s_count = parse_int(val, line);
    else if (key == "sweep.orientations") c.orientation_count = parse_int(val, line);
    else if (key == "sweep.observability_flux_pcts") c.observability_flux_pcts = parse_list(val, line);
    else if (key == "sweep.torque_min") c.torque_min = parse_double(val, line);
    else if (key == "sweep.torque_max") c.torque_max = parse_double(val, line);
    else if (key == "sweep.torque_step") c.torque_step = parse_double(val, line);
    else if (key == "sweep.convergence_freqs") c.convergence_freqs = parse_list(val, line);
    else if (key == "observability.rank_tol") c.rank_tol = parse_double(val, line);
    else if (key == "per_unit") c.per_unit = parse_bool(val, line);
    else if (key == "parallel") c.parallel = parse_int(val, line);
    else fail(line, "unknown key '" + key + "'");
  }
  validate(c);
  return c;
}

LabConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::string serialize_config(const LabConfig& c) {
  std::ostringstream out;
  out << "motor.Rs = " << format_double(c.motor.Rs) << "\n";
  out << "motor.Rr = " << format_double(c.motor.Rr) << "\n";
  out << "motor.np = " << c.motor.np << "\n";
  out << "motor.Jl = " << format_double(c.motor.Jl) << "\n";
  out << "magnetics.kind = " << to_string(c.magnetics_kind) << "\n";
  out << "magnetics.Lm = " << format_double(c.magnetics.Lm) << "\n";
  out << "magnetics.Ll = " << format_double(c.magnetics.Ll) << "\n";
  out << "magnetics.eps_m = " << format_double(c.magnetics.eps_m) << "\n";
  out << "magnetics.eps_l = " << format_double(c.magnetics.eps_l) << "\n";
  out << "injection.waveform = " << to_string(c.waveform) << "\n";
  out << "injection.omega_hz = " << format_double(c.injection_hz) << "\n";
  out << "injection.amp_v = " << format_double(c.injection_amp) << "\n";
  out << "injection.theta_rad = " << format_double(c.injection_theta) << "\n";
  out << "sim.dt = " << format_double(c.sim_dt) << "\n";
  out << "sim.duration = " << format_double(c.sim_duration) << "\n";
  out << "sim.samples_per_period = " << c.samples_per_period << "\n";
  out << "nominal_flux = " << format_double(c.nominal_flux) << "\n";
  out << "sweep.characterize_flux_pcts = " << format_list(c.characterize_flux_pcts) << "\n";
  out << "sweep.omega_s_max = " << format_double(c.characterize_omega_s_max) << "\n";
  out << "sweep.omega_s_count = " << c.characterize_omega_s_count << "\n";
  out << "sweep.orientations = " << c.orientation_count << "\n";
  out << "sweep.observability_flux_pcts = " << format_list(c.observability_flux_pcts) << "\n";
  out << "sweep.torque_min = " << format_double(c.torque_min) << "\n";
  out << "sweep.torque_max = " << format_double(c.torque_max) << "\n";
  out << "sweep.torque_step = " << format_double(c.torque_step) << "\n";
  out << "sweep.convergence_freqs = " << format_list(c.convergence_freqs) << "\n";
  out << "observability.rank_tol = " << format_double(c.rank_tol) << "\n";
  out << "per_unit = " << (c.per_unit ? "true" : "false") << "\n";
  out << "parallel = " << c.parallel << "\n";
  return out.str();
}

std::string config_hash(const LabConfig& c) {
  const std::string s = serialize_config(c);
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ull;
  }
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016" PRIx64, h);
  return buf;
}

std::unique_ptr<EnergyModel> make_model(const LabConfig& c) {
  if (c.magnetics_kind == MagneticsKind::linear) {
    return std::make_unique<LinearEnergyModel>(
        LinearMagParams{c.magnetics.Lm, c.magnetics.Ll});
  }
  return std::make_unique<SaturatedEnergyModel>(c.magnetics);
}

}  // namespace imlab
