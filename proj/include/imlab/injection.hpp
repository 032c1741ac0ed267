#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "imlab/dynamics.hpp"
#include "imlab/magnetics.hpp"

namespace imlab {

enum class WaveformKind { square, sine };

// A zero-mean 1-periodic carrier s and its null-mean primitive S. The square
// wave is sampled right-continuous at its discontinuities.
struct Waveform {
  WaveformKind kind = WaveformKind::square;

  // Carrier value at phase sigma (any real; reduced mod 1).
  double s(double sigma) const;
  // Null-mean primitive of s at phase sigma.
  double S(double sigma) const;
  // Mean of S^2 over one period (1/48 square, 1/(8 pi^2) sine).
  double mean_S2() const;
  // max |S| over one period.
  double S_peak() const;
};

struct InjectionSpec {
  WaveformKind waveform = WaveformKind::square;
  double omega_hz = 500.0;        // injection frequency [periods/s]
  Vec2 u_tilde = Vec2(20.0, 0.0); // direction and amplitude [V]
};

// Ripple slope predicted by the averaged model: Hss(phis, phir) * u_tilde,
// in A/s. The current ripple itself is this value times S(omega t)/omega.
Vec2 predicted_virtual_current(const EnergyModel& model, const Vec2& phis_lf,
                               const Vec2& phir_lf, const Vec2& u_tilde);

// Sliding-window decomposition of a sampled stator current into its
// one-period mean and the ripple slope recovered by correlation with the
// carrier primitive. Entries before a filter has one full window of history
// are NaN.
struct Demodulation {
  std::size_t samples_per_period = 0;
  std::size_t lf_valid_from = 0;  // first index with a defined low-pass value
  std::size_t hf_valid_from = 0;  // first index with a defined ripple value
  std::vector<Vec2> is_lf;
  std::vector<Vec2> is_hf;
};

// Requires the sample step to divide the injection period into an even
// number N >= 100 of samples and the trajectory to cover at least 3 periods.
// All windowed integrals use the trapezoidal rule on the sample grid; the
// half-period alignment shift is an exact index offset.
Demodulation demodulate(const Trajectory& traj, const InjectionSpec& spec);

// Same filters applied to an arbitrary scalar sequence; used for period-mean
// state deviations. Returns the sliding one-period mean (NaN-prefixed).
std::vector<double> sliding_period_mean(const std::vector<double>& x,
                                        std::size_t samples_per_period);

// Least-squares recovery of (a, b, sigma) from ripple-slope measurements
// taken at several injection orientations theta_i with common amplitude
// u_mag. Needs at least 3 samples spanning at least 3 distinct orientations
// modulo pi. Throws NumericError if the fit is ill-posed.
SaliencyParams fit_saliency(
    const std::vector<std::pair<double, Vec2>>& samples, double u_mag);

// Warning when the injection is too slow relative to the electrical dynamics
// linearized at the origin (threshold: 2*pi*omega_hz below 10x the fastest
// eigenvalue).
std::optional<std::string> injection_bandwidth_warning(
    const InjectionSpec& spec, const EnergyModel& model,
    const MotorParams& params);

}  // namespace imlab
