#pragma once

// Microwave energy accounting from the plane-wave Poynting flux
//
//   |P| = K [Ω² c̃² + Ω Ω̇ s̃ c̃ / ω],   c̃ = cos(ωt + φ), s̃ = sin(ωt + φ),
//
// with K = 2c/(μ₀γe²). Everything here is in units of K (rad²/s² for flux,
// rad²/s for energy) unless converted with si_flux_prefactor.

#include <algorithm>
#include <cmath>
#include <variant>

#include "nvpm/bessel.hpp"
#include "nvpm/control.hpp"
#include "nvpm/errors.hpp"

namespace nvpm {

inline constexpr double kSpeedOfLight = 299792458.0;

/// K = 2c/(μ₀γe²) in SI, turning normalised flux into W/m².
inline double si_flux_prefactor(double gamma_e) {
  return 2.0 * kSpeedOfLight / (1.25663706212e-6 * gamma_e * gamma_e);
}

inline double poynting_flux(double omega, double domega_dt, double omega_carrier, double t, double phase) {
  if (!(omega_carrier > 0.0)) throw ContractError("poynting_flux: carrier frequency must be > 0");
  const double theta = omega_carrier * t + phase;
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  return omega * omega * c * c + omega * domega_dt * s * c / omega_carrier;
}

struct EnergyReport {
  double peak_flux = 0.0;
  double avg_flux = 0.0;
  double total_energy = 0.0;
  double per_cycle_energy = 0.0;
  /// Cross-term (Ω Ω̇ / ω) contribution to total_energy.
  double cross_term = 0.0;
  double duration = 0.0;
};

namespace detail {

/// ∫ cos²(ωt + φ) dt over [t0, t1]
inline double carrier_cos2_integral(double w, double phase, double t0, double t1) {
  return 0.5 * (t1 - t0) + (std::sin(2.0 * (w * t1 + phase)) - std::sin(2.0 * (w * t0 + phase))) / (4.0 * w);
}

/// ∫ sin(ωt + φ) cos(ωt + φ) dt over [t0, t1]
inline double carrier_sc_integral(double w, double phase, double t0, double t1) {
  return (std::cos(2.0 * (w * t0 + phase)) - std::cos(2.0 * (w * t1 + phase))) / (4.0 * w);
}

}  // namespace detail

/// Integrates the flux of `drive` over [0, t_f] with the carrier resolved
/// exactly within each piecewise-constant segment. Phase jumps are steps of
/// Ω(t) = |Ω₀ + Ω₁e^{iφ}|; each step ΔΩ contributes Δ(Ω²)/2 · s̃c̃/ω to the
/// cross term. Amplitude modulation uses the analytic Ω̇ at segment midpoints.
/// `cycle_nu` sets the cycle for per_cycle_energy of the constant drive.
inline EnergyReport sequence_energy(const DriveScheme& drive, double t_f, double omega_carrier, double phase = 0.0,
                                    double cycle_nu = 0.0) {
  if (!(t_f >= 0.0)) throw ContractError("sequence_energy: t_f must be >= 0");
  if (!(omega_carrier > 0.0)) throw ContractError("sequence_energy: carrier frequency must be > 0");
  validate(drive);
  EnergyReport rep;
  rep.duration = t_f;
  if (t_f == 0.0) return rep;

  double energy = 0.0;
  double cross = 0.0;
  if (const auto* hh = std::get_if<ConstantHH>(&drive)) {
    energy = hh->rabi * hh->rabi * detail::carrier_cos2_integral(omega_carrier, phase, 0.0, t_f);
    rep.peak_flux = hh->rabi * hh->rabi;
  } else {
    const auto period = discretize_period(drive);
    const double nu = kTwoPi / modulation_period(drive);
    const auto* am = std::get_if<AmplitudeModulated>(&drive);
    double t = 0.0;
    double prev_omega = -1.0;
    std::size_t k = 0;
    while (t < t_f) {
      const auto& seg = period[k % period.size()];
      const double t1 = std::min(t + seg.duration, t_f);
      const double omega = 2.0 * std::abs(seg.amplitude);
      rep.peak_flux = std::max(rep.peak_flux, omega * omega);
      energy += omega * omega * detail::carrier_cos2_integral(omega_carrier, phase, t, t1);
      if (am != nullptr) {
        const double tm = 0.5 * (t + t1);
        const double dot = -am->omega1 * nu * std::cos(nu * tm);
        cross += omega * dot * detail::carrier_sc_integral(omega_carrier, phase, t, t1) / omega_carrier;
      } else if (prev_omega >= 0.0 && omega != prev_omega) {
        const double th = omega_carrier * t + phase;
        cross += 0.5 * (omega * omega - prev_omega * prev_omega) * std::sin(th) * std::cos(th) / omega_carrier;
      }
      prev_omega = omega;
      t = t1;
      ++k;
    }
    rep.per_cycle_energy = (energy + cross) * kTwoPi / (nu * t_f);
  }
  rep.cross_term = cross;
  rep.total_energy = energy + cross;
  rep.avg_flux = rep.total_energy / t_f;
  if (std::holds_alternative<ConstantHH>(drive) && cycle_nu > 0.0)
    rep.per_cycle_energy = rep.total_energy * kTwoPi / (cycle_nu * t_f);
  return rep;
}

struct EnergyRatio {
  double ratio = 0.0;           // (Ω₀+ν)² J₁(a₁Ω₁/ν) / (Ω₀² + Ω₁²)
  double small_argument = 0.0;  // (Ω₀+ν)² a₁Ω₁ / [2ν(Ω₀² + Ω₁²)]
  bool no_coupling = false;
};

/// E^HH / E^ph at equal signal.
inline EnergyRatio energy_ratio(double omega0, double omega1, double nu, double a1) {
  if (!(nu > 0.0)) throw ContractError("energy_ratio: nu must be > 0");
  if (!(omega0 >= 0.0 && omega1 >= 0.0)) throw ContractError("energy_ratio: Rabi frequencies must be >= 0");
  EnergyRatio r;
  if (omega1 == 0.0) {
    r.no_coupling = true;
    return r;
  }
  const double hh = (omega0 + nu) * (omega0 + nu);
  const double ph = omega0 * omega0 + omega1 * omega1;
  r.ratio = hh * special::bessel_j1(a1 * omega1 / nu) / ph;
  r.small_argument = hh * omega1 * a1 / (2.0 * nu * ph);
  return r;
}

struct EnergyComparison {
  EnergyReport hh;
  EnergyReport modulated;
  double t_hh = 0.0;
  double t_modulated = 0.0;
  double ratio_integrated = 0.0;
  EnergyRatio ratio_formula;
};

/// Integrated E^HH / E^ph: the constant drive at Ω̄₀ = Ω₀ + ν for J₁ t_f
/// against the modulated drive for t_f.
inline EnergyComparison compare_energy(const DriveScheme& modulated, double t_f, double omega_carrier) {
  EnergyComparison out;
  std::visit(
      [&](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, ConstantHH>) {
          throw ContractError("compare_energy: needs a modulated drive");
        } else {
          const double a1 = std::is_same_v<T, PhaseModulated> ? kSquareWaveA1 : 1.0;
          out.ratio_formula = energy_ratio(s.omega0, s.omega1, s.nu, a1);
          const double j1 = special::bessel_j1(a1 * s.omega1 / s.nu);
          out.t_modulated = t_f;
          out.t_hh = j1 * t_f;
          out.modulated = sequence_energy(modulated, t_f, omega_carrier);
          out.hh = sequence_energy(ConstantHH{s.omega0 + s.nu}, out.t_hh, omega_carrier, 0.0, s.nu);
          if (out.modulated.total_energy > 0.0) out.ratio_integrated = out.hh.total_energy / out.modulated.total_energy;
        }
      },
      modulated);
  return out;
}

}  // namespace nvpm
