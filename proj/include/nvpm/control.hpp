#pragma once

// Drive waveforms in the rotating frame of the NV |0⟩ ↔ |1⟩ transition.
//
// The drive term is c(t)|1⟩⟨0| + h.c. with complex amplitude
//   phase modulation:     c = (Ω₀ + Ω₁ e^{iφ(t)}) / 2, φ ∈ {0, π} plus ramps
//   amplitude modulation: c = (Ω₀ − Ω₁ sin νt) / 2
//   constant (HH):        c = Ω̄₀ / 2
//
// Phase-modulated periods are aligned so that t = 0 is the centre of the φ = 0
// plateau, i.e. the ideal modulation function is F(t) = sign(cos νt).

#include <cmath>
#include <functional>
#include <string>
#include <variant>
#include <vector>

#include "nvpm/errors.hpp"
#include "nvpm/spincore.hpp"

namespace nvpm {

struct ConstantHH {
  double rabi = 0.0;  // Ω̄₀, rad/s
};

struct PhaseModulated {
  double omega0 = 0.0;  // rad/s
  double omega1 = 0.0;  // rad/s
  double nu = 0.0;      // modulation frequency, rad/s
  double t_flip = 0.0;  // duration of one 0 → π phase ramp, s
  int flip_steps = 1;
};

struct AmplitudeModulated {
  double omega0 = 0.0;
  double omega1 = 0.0;
  double nu = 0.0;
  int samples_per_period = 256;
};

using DriveScheme = std::variant<ConstantHH, PhaseModulated, AmplitudeModulated>;

struct WaveformSegment {
  double duration = 0.0;  // s
  Complex amplitude;      // rad/s, coefficient of |1⟩⟨0|
};

inline std::string scheme_name(const DriveScheme& d) {
  return std::visit(
      [](const auto& s) -> std::string {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, ConstantHH>) return "constant";
        else if constexpr (std::is_same_v<T, PhaseModulated>) return "phase";
        else return "amplitude";
      },
      d);
}

inline void validate(const DriveScheme& d) {
  std::visit(
      [](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, ConstantHH>) {
          if (!(s.rabi >= 0.0)) throw ContractError("ConstantHH: Rabi frequency must be >= 0");
        } else {
          if (!(s.omega0 >= 0.0) || !(s.omega1 >= 0.0))
            throw ContractError("drive: Rabi frequencies must be >= 0");
          if (!(s.nu > 0.0)) throw ContractError("drive: modulation frequency must be > 0");
          if constexpr (std::is_same_v<T, PhaseModulated>) {
            if (s.flip_steps < 1) throw ContractError("PhaseModulated: flip_steps must be >= 1");
            if (!(s.t_flip >= 0.0)) throw ContractError("PhaseModulated: t_flip must be >= 0");
            if (2.0 * s.t_flip >= kTwoPi / s.nu)
              throw ContractError("PhaseModulated: phase ramps overlap (2 t_flip >= T)");
            if (s.t_flip * s.nu / kTwoPi >= 0.1)
              throw ContractError("PhaseModulated: ramp must be short against the period");
          } else {
            if (s.samples_per_period < 1)
              throw ContractError("AmplitudeModulated: samples_per_period must be >= 1");
          }
        }
      },
      d);
}

/// Modulation period 2π/ν; zero for the unmodulated drive.
inline double modulation_period(const DriveScheme& d) {
  return std::visit(
      [](const auto& s) -> double {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, ConstantHH>) return 0.0;
        else return kTwoPi / s.nu;
      },
      d);
}

/// Even square wave F(t) = sign(cos νt) ∈ {−1, +1} (+1 on the zero crossing).
inline double modulation_F(double t, double nu) { return std::cos(nu * t) >= 0.0 ? 1.0 : -1.0; }

struct FourierSeries {
  std::vector<double> a;  // a[0] is a₀; F ≈ a₀/2 + Σ a_n cos + b_n sin
  std::vector<double> b;  // b[0] unused (0)
};

/// a_n = (2/T)∫₀ᵀ F cos(2πnt/T) dt and b_n likewise with sin, by the composite
/// midpoint rule. With `samples` divisible by 4 the jumps of sign(cos) fall on
/// cell boundaries, so the rule converges at second order.
inline FourierSeries fourier_coeffs(const std::function<double(double)>& f, double period, int n_max,
                                    int samples = 1 << 16) {
  if (n_max < 1) throw ContractError("fourier_coeffs: n_max must be >= 1");
  if (!(period > 0.0)) throw ContractError("fourier_coeffs: period must be positive");
  FourierSeries out;
  out.a.assign(static_cast<std::size_t>(n_max) + 1, 0.0);
  out.b.assign(static_cast<std::size_t>(n_max) + 1, 0.0);
  const double h = period / samples;
  for (int k = 0; k < samples; ++k) {
    const double t = (k + 0.5) * h;
    const double v = f(t);
    const double theta = kTwoPi * t / period;
    for (int n = 0; n <= n_max; ++n) {
      out.a[static_cast<std::size_t>(n)] += v * std::cos(n * theta);
      out.b[static_cast<std::size_t>(n)] += v * std::sin(n * theta);
    }
  }
  for (int n = 0; n <= n_max; ++n) {
    out.a[static_cast<std::size_t>(n)] *= 2.0 * h / period;
    out.b[static_cast<std::size_t>(n)] *= 2.0 * h / period;
  }
  out.b[0] = 0.0;
  return out;
}

/// Closed-form coefficients of sign(cos νt): a_n = (4/πn) sin(nπ/2), b_n = 0.
inline double square_wave_cosine_coeff(int n) {
  if (n <= 0) return 0.0;
  return 4.0 / (kPi * n) * std::sin(n * kPi / 2.0);
}

/// a₁ of the ideal phase-flip modulation.
inline constexpr double kSquareWaveA1 = 4.0 / kPi;

namespace detail {

inline void append(std::vector<WaveformSegment>& out, double duration, Complex amplitude) {
  if (duration > 0.0) out.push_back({duration, amplitude});
}

inline std::vector<WaveformSegment> one_period(const PhaseModulated& s) {
  const double period = kTwoPi / s.nu;
  const double step = s.t_flip / s.flip_steps;
  const double edge = period / 4.0 - s.t_flip / 2.0;
  const double middle = period / 2.0 - s.t_flip;
  auto amplitude = [&](double phi) { return (s.omega0 + s.omega1 * std::polar(1.0, phi)) / 2.0; };
  std::vector<WaveformSegment> out;
  out.reserve(static_cast<std::size_t>(2 * s.flip_steps + 3));
  append(out, edge, Complex(s.omega0 + s.omega1, 0.0) / 2.0);
  for (int k = 0; k < s.flip_steps; ++k) append(out, step, amplitude(kPi * (k + 0.5) / s.flip_steps));
  append(out, middle, Complex(s.omega0 - s.omega1, 0.0) / 2.0);
  for (int k = 0; k < s.flip_steps; ++k)
    append(out, step, amplitude(kPi + kPi * (k + 0.5) / s.flip_steps));
  // The last φ = 0 piece is the first half of the next period's plateau.
  append(out, period - (edge + middle + 2.0 * s.flip_steps * step), Complex(s.omega0 + s.omega1, 0.0) / 2.0);
  return out;
}

inline std::vector<WaveformSegment> one_period(const AmplitudeModulated& s, int samples) {
  const double period = kTwoPi / s.nu;
  const double dt = period / samples;
  std::vector<WaveformSegment> out;
  out.reserve(static_cast<std::size_t>(samples));
  for (int k = 0; k < samples; ++k) {
    const double t = (k + 0.5) * dt;
    out.push_back({dt, Complex((s.omega0 - s.omega1 * std::sin(s.nu * t)) / 2.0, 0.0)});
  }
  return out;
}

}  // namespace detail

/// One modulation period of piecewise-constant segments. For the unmodulated
/// drive the "period" is a single segment of length `hh_chunk`.
inline std::vector<WaveformSegment> discretize_period(const DriveScheme& d, int samples_per_period = 0,
                                                      double hh_chunk = 0.0) {
  validate(d);
  return std::visit(
      [&](const auto& s) -> std::vector<WaveformSegment> {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, ConstantHH>) {
          if (!(hh_chunk > 0.0)) throw ContractError("discretize: constant drive needs a chunk length");
          return {{hh_chunk, Complex(s.rabi / 2.0, 0.0)}};
        } else if constexpr (std::is_same_v<T, PhaseModulated>) {
          return detail::one_period(s);
        } else {
          return detail::one_period(s, samples_per_period > 0 ? samples_per_period : s.samples_per_period);
        }
      },
      d);
}

/// `periods` consecutive modulation periods; every period is identical.
inline std::vector<WaveformSegment> discretize(const DriveScheme& d, int periods, int samples_per_period = 0) {
  if (periods < 0) throw ContractError("discretize: negative period count");
  if (std::holds_alternative<ConstantHH>(d))
    throw ContractError("discretize: constant drive has no modulation period; use discretize_horizon");
  const auto period = discretize_period(d, samples_per_period);
  std::vector<WaveformSegment> out;
  out.reserve(period.size() * static_cast<std::size_t>(periods));
  for (int k = 0; k < periods; ++k) out.insert(out.end(), period.begin(), period.end());
  return out;
}

}  // namespace nvpm
