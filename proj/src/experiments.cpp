#include "imlab/experiments.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>

namespace imlab {

namespace {

namespace fs = std::filesystem;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Injection runs at a fixed operating point: total length and discarded head,
// in injection periods. Four discarded periods cover the filter warm-up (two
// windows) plus the residue of starting slightly off the periodic solution.
constexpr int kCharacterizePeriods = 8;
constexpr int kCharacterizeDiscard = 4;
constexpr int kConvergencePeriods = 12;
constexpr int kConvergenceDiscard = 6;

void parallel_for(std::size_t n, int threads,
                  const std::function<void(std::size_t)>& body) {
  const int workers =
      std::max(1, std::min<int>(threads, static_cast<int>(n)));
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= n) return;
        try {
          body(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

struct InjectionRunStats {
  Vec2 hf_mean = Vec2::Zero();
  double mean_state_err = 0.0;
  double ripple_peak = 0.0;
};

InjectionRunStats run_injection_at(const Equilibrium& eq, const Vec2& u_tilde,
                                   const LabConfig& config,
                                   const EnergyModel& model, double omega_hz,
                                   int total_periods, int discard_periods,
                                   bool want_state_stats) {
  const Waveform wave{config.waveform};
  const int n = config.samples_per_period;
  const double dt = 1.0 / (omega_hz * n);
  const double duration = static_cast<double>(total_periods) / omega_hz;

  // Start on the periodic solution to first order: the stator flux carries
  // the ripple (u/omega) S(omega t) around its mean.
  ImState state0 = eq.state;
  state0.phis += (wave.S(0.0) / omega_hz) * u_tilde;

  const ImInputs base = eq.inputs;
  const auto input = [&](double t) {
    ImInputs u = base;
    u.us += wave.s(omega_hz * t) * u_tilde;
    return u;
  };
  const Trajectory traj = simulate(state0, input, duration, dt, model,
                                   config.motor, /*locked_rotor=*/true);

  InjectionSpec spec;
  spec.waveform = config.waveform;
  spec.omega_hz = omega_hz;
  spec.u_tilde = u_tilde;
  const Demodulation demod = demodulate(traj, spec);

  const std::size_t j0 =
      std::max<std::size_t>(demod.hf_valid_from,
                            static_cast<std::size_t>(discard_periods) * n);
  InjectionRunStats stats;
  Vec2 acc = Vec2::Zero();
  std::size_t count = 0;
  for (std::size_t j = j0; j < traj.size(); ++j) {
    acc += demod.is_hf[j];
    ++count;
  }
  if (count == 0) throw NumericError("injection run too short for statistics");
  stats.hf_mean = acc / static_cast<double>(count);

  const std::size_t half = static_cast<std::size_t>(n) / 2;
  for (std::size_t j = j0; j < traj.size(); ++j) {
    stats.ripple_peak = std::max(
        stats.ripple_peak, (traj.is[j - half] - demod.is_lf[j]).norm());
  }

  if (want_state_stats) {
    std::array<std::vector<double>, 5> comp;
    for (auto& v : comp) v.reserve(traj.size());
    for (std::size_t j = 0; j < traj.size(); ++j) {
      comp[0].push_back(traj.states[j].phis.x());
      comp[1].push_back(traj.states[j].phis.y());
      comp[2].push_back(traj.states[j].phir.x());
      comp[3].push_back(traj.states[j].phir.y());
      comp[4].push_back(traj.states[j].omega);
    }
    std::array<std::vector<double>, 5> mean;
    for (int k = 0; k < 5; ++k) mean[k] = sliding_period_mean(comp[k], n);
    const double ref[5] = {eq.state.phis.x(), eq.state.phis.y(),
                           eq.state.phir.x(), eq.state.phir.y(),
                           eq.state.omega};
    for (std::size_t j = j0; j < traj.size(); ++j) {
      double dev2 = 0.0;
      for (int k = 0; k < 5; ++k) {
        const double d = mean[k][j] - ref[k];
        dev2 += d * d;
      }
      stats.mean_state_err = std::max(stats.mean_state_err, std::sqrt(dev2));
    }
  }
  return stats;
}

std::string format_value(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

std::string utc_timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

double wrap_angle(double x) {
  double y = std::remainder(x, 2.0 * M_PI);
  if (y <= -M_PI) y = M_PI;
  return y;
}

Vec2 extract_ripple_slope(const Equilibrium& eq, const Vec2& u_tilde,
                          const LabConfig& config, const EnergyModel& model,
                          double omega_hz, int total_periods,
                          int discard_periods) {
  return run_injection_at(eq, u_tilde, config, model, omega_hz, total_periods,
                          discard_periods, false)
      .hf_mean;
}

ExperimentTable run_characterize(const LabConfig& config) {
  const auto model = make_model(config);
  const std::vector<double> omegas = config.omega_s_grid();
  const std::vector<double>& pcts = config.characterize_flux_pcts;
  const double amp = config.injection_amp;
  if (!(amp > 0.0)) throw ConfigError("characterize needs injection.amp_v > 0");

  ExperimentTable table;
  table.name = "characterize";
  table.columns = {"flux_wb",  "omega_s",  "i_sq",     "a_direct",
                   "b_direct", "sigma_direct", "a_sim", "b_sim",
                   "sigma_sim", "err_a",   "err_b",    "err_sigma"};
  const std::size_t npoints = pcts.size() * omegas.size();
  table.rows.assign(npoints, std::vector<double>(table.columns.size(), kNaN));

  parallel_for(npoints, config.parallel, [&](std::size_t idx) {
    const double flux =
        pcts[idx / omegas.size()] / 100.0 * config.nominal_flux;
    const double omega_s = omegas[idx % omegas.size()];
    auto& row = table.rows[idx];
    row[0] = flux;
    row[1] = omega_s;
    Equilibrium eq;
    try {
      eq = equilibrium_locked_rotor(Vec2(flux, 0.0), omega_s, *model,
                                    config.motor);
    } catch (const NumericError&) {
      return;  // row stays NaN past the grid coordinates
    }
    row[2] = eq.is.y();
    const SaliencyParams direct = saliency_params(eq.hess.ss);

    std::vector<std::pair<double, Vec2>> samples;
    samples.reserve(config.orientation_count);
    for (int k = 0; k < config.orientation_count; ++k) {
      const double theta = 2.0 * M_PI * k / config.orientation_count;
      const Vec2 u = amp * Vec2(std::cos(theta), std::sin(theta));
      const Vec2 hf = extract_ripple_slope(eq, u, config, *model,
                                           config.injection_hz,
                                           kCharacterizePeriods,
                                           kCharacterizeDiscard);
      samples.emplace_back(theta, hf);
    }
    const SaliencyParams fit = fit_saliency(samples, amp);

    row[3] = direct.a;
    row[4] = direct.b;
    row[5] = direct.sigma;
    row[6] = fit.a;
    row[7] = fit.b;
    row[8] = fit.sigma;
    row[9] = std::abs(fit.a - direct.a);
    row[10] = std::abs(fit.b - direct.b);
    row[11] = std::abs(wrap_angle(fit.sigma - direct.sigma));
  });
  return table;
}

ExperimentTable run_observability(const LabConfig& config) {
  const auto model = make_model(config);
  const std::vector<double> grid = config.torque_grid();
  ObservabilityOptions opts;
  opts.rank_tol = config.rank_tol;
  opts.per_unit = config.per_unit;
  const Vec2 u_tilde = config.injection_spec().u_tilde;

  ExperimentTable table;
  table.name = "observability";
  table.columns = {"flux_pct", "torque_nm",     "cond_os",
                   "cond_os_prime", "rank_o",   "feasible"};
  for (const double pct : config.observability_flux_pcts) {
    const double flux = pct / 100.0 * config.nominal_flux;
    const auto points =
        condition_sweep({flux}, grid, u_tilde, *model, config.motor, opts);
    for (const SweepPoint& pt : points) {
      table.rows.push_back({pct, pt.torque, pt.cond_os, pt.cond_os_prime,
                            static_cast<double>(pt.rank_o),
                            pt.feasible ? 1.0 : 0.0});
    }
  }
  return table;
}

ConvergenceResult run_convergence(const LabConfig& config) {
  const auto model = make_model(config);
  const Vec2 u_tilde = config.injection_spec().u_tilde;
  const Equilibrium eq = equilibrium_locked_rotor(
      Vec2(config.nominal_flux, 0.0), 0.0, *model, config.motor);
  const Vec2 predicted = eq.hess.ss * u_tilde;
  const double pred_norm = predicted.norm();
  if (!(pred_norm > 0.0)) throw NumericError("zero predicted ripple slope");

  ConvergenceResult out;
  out.table.name = "convergence";
  out.table.columns = {"omega_hz", "hf_rel_err", "mean_state_err",
                       "ripple_peak_a"};
  for (const double freq : config.convergence_freqs) {
    const InjectionRunStats stats =
        run_injection_at(eq, u_tilde, config, *model, freq,
                         kConvergencePeriods, kConvergenceDiscard, true);
    const double rel_err = (stats.hf_mean - predicted).norm() / pred_norm;
    out.table.rows.push_back(
        {freq, rel_err, stats.mean_state_err, stats.ripple_peak});
  }
  for (std::size_t i = 0; i + 1 < out.table.rows.size(); ++i) {
    out.hf_err_ratios.push_back(out.table.rows[i][1] /
                                out.table.rows[i + 1][1]);
    out.state_err_ratios.push_back(out.table.rows[i][2] /
                                   out.table.rows[i + 1][2]);
  }
  return out;
}

ExperimentTable run_simulate(const LabConfig& config,
                             const Scenario& scenario) {
  const auto model = make_model(config);
  const bool injecting = scenario.any_injection();
  const double dt = config.effective_dt(injecting);
  const double duration = scenario.duration();
  const Waveform wave{config.waveform};
  const Vec2 u_tilde = config.injection_spec().u_tilde;
  const double omega_hz = config.injection_hz;

  // Segment boundaries must fall on the sample grid, and injected runs need
  // the sample step to split the injection period evenly.
  for (std::size_t i = 0; i < scenario.segments.size(); ++i) {
    const double t_end = scenario.segments[i].t_end;
    const double steps = t_end / dt;
    if (std::abs(steps - std::round(steps)) > 1e-9 * std::max(1.0, steps)) {
      std::ostringstream msg;
      msg << "scenario segment " << i + 1 << ": t_end = " << t_end
          << " is not a multiple of dt = " << dt;
      throw ConfigError(msg.str());
    }
  }
  if (injecting) {
    const double period = 1.0 / omega_hz;
    const double n_real = period / dt;
    const auto n = std::llround(n_real);
    if (n < 100 || n % 2 != 0 ||
        std::abs(n_real - static_cast<double>(n)) > 1e-9 * n_real) {
      std::ostringstream msg;
      msg << "sim.dt = " << dt << " does not divide the injection period "
          << period << " into an even number >= 100 of samples";
      throw ConfigError(msg.str());
    }
  }

  const auto& segs = scenario.segments;
  const auto input = [&](double t) {
    std::size_t i = 0;
    while (i + 1 < segs.size() && t >= segs[i].t_end) ++i;
    ImInputs u;
    u.us = segs[i].us;
    u.omega_s = segs[i].omega_s;
    u.Tl = segs[i].Tl;
    if (segs[i].inject) u.us += wave.s(omega_hz * t) * u_tilde;
    return u;
  };

  const Trajectory traj = simulate(scenario.state0, input, duration, dt,
                                   *model, config.motor, scenario.locked_rotor);

  // Current decomposition: always attempted when the step is compatible with
  // the injection period; otherwise those columns are NaN.
  std::vector<Vec2> is_lf(traj.size(), Vec2::Constant(kNaN));
  std::vector<Vec2> is_hf(traj.size(), Vec2::Constant(kNaN));
  InjectionSpec spec = config.injection_spec();
  try {
    const Demodulation demod = demodulate(traj, spec);
    is_lf = demod.is_lf;
    is_hf = demod.is_hf;
  } catch (const NumericError&) {
    if (injecting) throw;  // injected runs promised a valid decomposition
  }

  ExperimentTable table;
  table.name = "trajectory";
  table.columns = {"t_s",    "phis_d", "phis_q", "phir_d", "phir_q", "omega",
                   "is_d",   "is_q",   "islf_d", "islf_q", "ishf_d", "ishf_q"};
  table.rows.reserve(traj.size());
  for (std::size_t j = 0; j < traj.size(); ++j) {
    const ImState& s = traj.states[j];
    table.rows.push_back({traj.t[j], s.phis.x(), s.phis.y(), s.phir.x(),
                          s.phir.y(), s.omega, traj.is[j].x(), traj.is[j].y(),
                          is_lf[j].x(), is_lf[j].y(), is_hf[j].x(),
                          is_hf[j].y()});
  }
  return table;
}

std::string write_table_csv(const ExperimentTable& table,
                            const std::string& out_dir,
                            const LabConfig& config) {
  fs::create_directories(out_dir);
  const std::string path = (fs::path(out_dir) / (table.name + ".csv")).string();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write '" + path + "'");
  out << "# tool_version=" << kToolVersion << "\n";
  out << "# config_hash=" << config_hash(config) << "\n";
  out << "# timestamp=" << utc_timestamp() << "\n";
  for (std::size_t c = 0; c < table.columns.size(); ++c) {
    out << (c ? "," : "") << table.columns[c];
  }
  out << "\n";
  for (const auto& row : table.rows) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      out << (c ? "," : "") << format_value(row[c]);
    }
    out << "\n";
  }
  return path;
}

std::vector<std::string> write_plot_scripts(const ExperimentTable& table,
                                            const std::string& out_dir,
                                            const LabConfig& config) {
  fs::create_directories(out_dir);
  std::vector<std::string> written;
  const std::string csv = table.name + ".csv";

  const auto emit = [&](const std::string& stem, const std::string& body) {
    const std::string path = (fs::path(out_dir) / (stem + ".gp")).string();
    std::ofstream out(path, std::ios::binary);
    out << "# gnuplot script; expects " << csv << " next to it\n";
    out << "set datafile separator ','\n";
    out << body;
    written.push_back(path);
  };

  if (table.name == "characterize") {
    const struct {
      const char* stem;
      int col;
      const char* title;
    } figs[] = {{"characterize_a", 4, "mean inverse inductance a [1/H]"},
                {"characterize_b", 5, "saliency amplitude b [1/H]"},
                {"characterize_sigma", 6, "saliency orientation sigma [rad]"}};
    for (const auto& fig : figs) {
      std::ostringstream body;
      body << "set xlabel 'stator speed [rad/s]'\n";
      body << "set ylabel '" << fig.title << "'\n";
      body << "plot \\\n";
      for (std::size_t i = 0; i < config.characterize_flux_pcts.size(); ++i) {
        const double pct = config.characterize_flux_pcts[i];
        const double flux = pct / 100.0 * config.nominal_flux;
        body << "  '" << csv << "' using 2:(abs($1-" << format_value(flux)
             << ")<1e-12 ? $" << fig.col << " : 1/0) with lines title '" << pct
             << "% flux'";
        body << (i + 1 < config.characterize_flux_pcts.size() ? ", \\\n" : "\n");
      }
      emit(fig.stem, body.str());
    }
  } else if (table.name == "observability") {
    std::ostringstream body;
    body << "set xlabel 'load torque [N m]'\n";
    body << "set ylabel 'condition number'\n";
    body << "set logscale y\n";
    body << "plot \\\n";
    const auto& pcts = config.observability_flux_pcts;
    for (std::size_t i = 0; i < pcts.size(); ++i) {
      body << "  '" << csv << "' using 2:(abs($1-" << format_value(pcts[i])
           << ")<1e-12 ? $3 : 1/0) with lines title 'full stack, " << pcts[i]
           << "%', \\\n";
      body << "  '" << csv << "' using 2:(abs($1-" << format_value(pcts[i])
           << ")<1e-12 ? $4 : 1/0) with lines dt 2 title 'inversion, "
           << pcts[i] << "%'";
      body << (i + 1 < pcts.size() ? ", \\\n" : "\n");
    }
    emit("observability", body.str());
  } else if (table.name == "convergence") {
    std::ostringstream body;
    body << "set xlabel 'injection frequency [Hz]'\n";
    body << "set ylabel 'relative error'\n";
    body << "set logscale xy\n";
    body << "plot '" << csv << "' using 1:2 with linespoints title "
         << "'ripple-slope error', \\\n     '" << csv
         << "' using 1:3 with linespoints title 'mean-state deviation'\n";
    emit("convergence", body.str());
  } else if (table.name == "trajectory") {
    std::ostringstream body;
    body << "set xlabel 'time [s]'\n";
    body << "set ylabel 'stator current [A]'\n";
    body << "plot '" << csv << "' using 1:7 with lines title 'is_d', \\\n"
         << "     '" << csv << "' using 1:8 with lines title 'is_q', \\\n"
         << "     '" << csv << "' using 1:9 with lines title 'islf_d', \\\n"
         << "     '" << csv << "' using 1:11 with lines title 'ishf_d'\n";
    emit("trajectory", body.str());
  }
  return written;
}

}  // namespace imlab
