#include "imlab/injection.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace imlab {

namespace {

double wrap01(double sigma) { return sigma - std::floor(sigma); }

constexpr double kTwoPi = 2.0 * M_PI;

}  // namespace

double Waveform::s(double sigma) const {
  const double x = wrap01(sigma);
  switch (kind) {
    case WaveformKind::square:
      return x < 0.5 ? 1.0 : -1.0;
    case WaveformKind::sine:
      return std::sin(kTwoPi * x);
  }
  return 0.0;
}

double Waveform::S(double sigma) const {
  const double x = wrap01(sigma);
  switch (kind) {
    case WaveformKind::square:
      return x < 0.5 ? x - 0.25 : 0.75 - x;
    case WaveformKind::sine:
      return -std::cos(kTwoPi * x) / kTwoPi;
  }
  return 0.0;
}

double Waveform::mean_S2() const {
  switch (kind) {
    case WaveformKind::square:
      return 1.0 / 48.0;
    case WaveformKind::sine:
      return 1.0 / (8.0 * M_PI * M_PI);
  }
  return 0.0;
}

double Waveform::S_peak() const {
  switch (kind) {
    case WaveformKind::square:
      return 0.25;
    case WaveformKind::sine:
      return 1.0 / kTwoPi;
  }
  return 0.0;
}

Vec2 predicted_virtual_current(const EnergyModel& model, const Vec2& phis_lf,
                               const Vec2& phir_lf, const Vec2& u_tilde) {
  return model.hessian_blocks(phis_lf, phir_lf).ss * u_tilde;
}

Demodulation demodulate(const Trajectory& traj, const InjectionSpec& spec) {
  if (!(spec.omega_hz > 0.0)) {
    throw ConfigError("demodulate: injection frequency must be positive");
  }
  if (traj.size() < 2 || !(traj.dt > 0.0)) {
    throw ConfigError("demodulate: empty trajectory");
  }
  const double period = 1.0 / spec.omega_hz;
  const double n_real = period / traj.dt;
  const auto n = static_cast<std::size_t>(std::llround(n_real));
  if (n == 0 || std::abs(n_real - static_cast<double>(n)) > 1e-9 * n_real) {
    std::ostringstream msg;
    msg << "demodulate: dt = " << traj.dt
        << " does not divide the injection period " << period;
    throw NumericError(msg.str());
  }
  if (n < 100 || n % 2 != 0) {
    std::ostringstream msg;
    msg << "demodulate: need an even number >= 100 of samples per period, got "
        << n;
    throw NumericError(msg.str());
  }
  const std::size_t count = traj.size();
  if (count < 3 * n + 1) {
    std::ostringstream msg;
    msg << "demodulate: trajectory covers " << (count - 1) / double(n)
        << " periods, need at least 3";
    throw NumericError(msg.str());
  }

  const Waveform wave{spec.waveform};
  // Carrier primitive on the phase grid, and the same shifted by half a
  // period so the correlation kernel is aligned with the shifted ripple.
  std::vector<double> S_grid(n), S_kern(n);
  for (std::size_t j = 0; j < n; ++j) {
    const double sigma = static_cast<double>(j) / static_cast<double>(n);
    S_grid[j] = wave.S(sigma);
    S_kern[j] = wave.S(sigma - 0.5);
  }
  // Trapezoidal S^2 over one period; identical for every window position.
  double den = 0.0;
  for (std::size_t j = 0; j < n; ++j) den += S_grid[j] * S_grid[j];

  const double inv_n = 1.0 / static_cast<double>(n);
  const double nan = std::numeric_limits<double>::quiet_NaN();
  Demodulation out;
  out.samples_per_period = n;
  out.lf_valid_from = n;
  out.hf_valid_from = 2 * n;
  out.is_lf.assign(count, Vec2::Constant(nan));
  out.is_hf.assign(count, Vec2::Constant(nan));

  // One-period trapezoidal mean of the measured current.
  for (std::size_t i = n; i < count; ++i) {
    Vec2 acc = 0.5 * (traj.is[i - n] + traj.is[i]);
    for (std::size_t j = i - n + 1; j < i; ++j) acc += traj.is[j];
    out.is_lf[i] = inv_n * acc;
  }

  // Ripple at sample j, compensating the half-period group delay of the mean
  // filter by an index shift.
  const std::size_t half = n / 2;
  std::vector<Vec2> ripple(count, Vec2::Zero());
  for (std::size_t j = n; j < count; ++j) {
    ripple[j] = traj.is[j - half] - out.is_lf[j];
  }

  // Correlation against the shifted carrier primitive over one period.
  for (std::size_t i = 2 * n; i < count; ++i) {
    Vec2 num = 0.5 * (ripple[i - n] * S_kern[(i - n) % n] +
                      ripple[i] * S_kern[i % n]);
    for (std::size_t j = i - n + 1; j < i; ++j) {
      num += ripple[j] * S_kern[j % n];
    }
    out.is_hf[i] = spec.omega_hz * num / den;
  }
  return out;
}

std::vector<double> sliding_period_mean(const std::vector<double>& x,
                                        std::size_t samples_per_period) {
  const std::size_t n = samples_per_period;
  std::vector<double> out(x.size(), std::numeric_limits<double>::quiet_NaN());
  if (n == 0 || x.size() <= n) return out;
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t i = n; i < x.size(); ++i) {
    double acc = 0.5 * (x[i - n] + x[i]);
    for (std::size_t j = i - n + 1; j < i; ++j) acc += x[j];
    out[i] = acc * inv_n;
  }
  return out;
}

SaliencyParams fit_saliency(
    const std::vector<std::pair<double, Vec2>>& samples, double u_mag) {
  if (!(u_mag > 0.0)) {
    throw std::invalid_argument("fit_saliency: injection amplitude must be > 0");
  }
  if (samples.size() < 3) {
    throw NumericError("fit_saliency: ill-posed, need at least 3 samples");
  }

  // Count distinct orientations modulo pi.
  std::vector<double> folded;
  folded.reserve(samples.size());
  for (const auto& [theta, val] : samples) {
    (void)val;
    double f = std::fmod(theta, M_PI);
    if (f < 0.0) f += M_PI;
    folded.push_back(f);
  }
  std::sort(folded.begin(), folded.end());
  constexpr double kAngleTol = 1e-9;
  std::size_t distinct = 1;
  for (std::size_t i = 1; i < folded.size(); ++i) {
    if (folded[i] - folded[i - 1] > kAngleTol) ++distinct;
  }
  if (distinct > 1 && (folded.front() + M_PI) - folded.back() <= kAngleTol) {
    --distinct;  // first and last fold onto the same orientation
  }
  if (distinct < 3) {
    std::ostringstream msg;
    msg << "fit_saliency: ill-posed, only " << distinct
        << " distinct orientations (mod pi)";
    throw NumericError(msg.str());
  }

  // Unknowns (a, p, q) with p = b cos(sigma), q = b sin(sigma).
  Eigen::MatrixXd mat(2 * samples.size(), 3);
  Eigen::VectorXd rhs(2 * samples.size());
  for (std::size_t k = 0; k < samples.size(); ++k) {
    const double c = std::cos(samples[k].first);
    const double s = std::sin(samples[k].first);
    mat.row(2 * k) << c, c, s;
    mat.row(2 * k + 1) << s, -s, c;
    rhs(2 * k) = samples[k].second.x() / u_mag;
    rhs(2 * k + 1) = samples[k].second.y() / u_mag;
  }

  const Eigen::Matrix3d normal = mat.transpose() * mat;
  const Eigen::JacobiSVD<Eigen::Matrix3d> svd(normal);
  const double smin = svd.singularValues().minCoeff();
  const double smax = svd.singularValues().maxCoeff();
  if (!(smin > 0.0) || smax / smin > 1e12) {
    throw NumericError("fit_saliency: ill-posed, degenerate orientation set");
  }

  const Eigen::Vector3d x = mat.colPivHouseholderQr().solve(rhs);
  SaliencyParams sp;
  sp.a = x(0);
  sp.b = std::hypot(x(1), x(2));
  sp.sigma = sp.b == 0.0 ? 0.0 : std::atan2(x(2), x(1));
  if (sp.sigma <= -M_PI) sp.sigma = M_PI;
  return sp;
}

std::optional<std::string> injection_bandwidth_warning(
    const InjectionSpec& spec, const EnergyModel& model,
    const MotorParams& params) {
  const HessianBlocks h = model.hessian_blocks(Vec2::Zero(), Vec2::Zero());
  Eigen::Matrix4d a;
  a.block<2, 2>(0, 0) = -params.Rs * h.ss;
  a.block<2, 2>(0, 2) = -params.Rs * h.sr;
  a.block<2, 2>(2, 0) = -params.Rr * h.rs();
  a.block<2, 2>(2, 2) = -params.Rr * h.rr;
  const Eigen::EigenSolver<Eigen::Matrix4d> eig(a, false);
  const double fastest = eig.eigenvalues().cwiseAbs().maxCoeff();
  if (kTwoPi * spec.omega_hz < 10.0 * fastest) {
    std::ostringstream msg;
    msg << "injection at " << spec.omega_hz
        << " Hz is below 10x the fastest electrical eigenvalue ("
        << fastest / kTwoPi << " Hz); averaging approximations degrade";
    return msg.str();
  }
  return std::nullopt;
}

}  // namespace imlab
