#pragma once

// Closed-form predictions of the effective flip-flop model.
//
// Phase modulation couples the NV to nucleus k on the branches Ω₀ + m·n·ν = ω_n,k.
// On the m = n = 1 branch the effective Hamiltonian is a flip-flop exchange of
// strength A⊥ J₁(a₁Ω₁/ν) (with I = σ/2 this gives the cos²(A⊥J₁t/4) signal).
// Detuning is δ = Ω₀ + ν − ω_n for the modulated drives and Ω̄₀ − ω_n for the
// constant drive.

#include <algorithm>
#include <cmath>
#include <optional>
#include <variant>
#include <vector>

#include "nvpm/bessel.hpp"
#include "nvpm/control.hpp"
#include "nvpm/errors.hpp"
#include "nvpm/sysmodel.hpp"

namespace nvpm {

struct ResonanceBranch {
  int m = 1;
  int n = 1;
  double nu_res = 0.0;      // rad/s
  double coupling = 0.0;    // (A⊥/2)|J_m(a_n Ω₁/ν)|, rad/s; 0 when A⊥ is not given
  double bessel_arg = 0.0;  // a_n Ω₁ / ν_res
};

/// |a_n| of the square wave sign(cos νt).
inline double square_wave_abs_coeff(int n) { return std::abs(square_wave_cosine_coeff(n)); }

/// All branches Ω₀ + m n ν = ω_n with 1 ≤ m, n ≤ max_mn (ν > 0 forces m n > 0).
/// The primary branch m = n = 1 comes first. Couplings use A⊥ and Ω₁ when given.
inline std::vector<ResonanceBranch> resonance_branches(double omega_n, double omega0, int max_mn,
                                                       double a_perp_x = 0.0, double omega1 = 0.0) {
  if (max_mn < 1) throw ContractError("resonance_branches: max_mn must be >= 1");
  std::vector<ResonanceBranch> out;
  const double gap = omega_n - omega0;
  if (!(gap > 0.0)) return out;
  for (int m = 1; m <= max_mn; ++m) {
    for (int n = 1; n <= max_mn; ++n) {
      ResonanceBranch b;
      b.m = m;
      b.n = n;
      b.nu_res = gap / (m * n);
      b.bessel_arg = square_wave_abs_coeff(n) * omega1 / b.nu_res;
      b.coupling = 0.5 * a_perp_x * std::abs(special::bessel_j(m, b.bessel_arg));
      out.push_back(b);
    }
  }
  return out;
}

/// (A⊥/2) J₁(a₁Ω₁/ν)
inline double effective_coupling_phase(double a_perp_x, double a1, double omega1, double nu) {
  if (!(nu > 0.0)) throw ContractError("effective_coupling_phase: nu must be > 0");
  return 0.5 * a_perp_x * special::bessel_j1(a1 * omega1 / nu);
}

/// cos²(x) with x = A⊥ J t / 4.
inline double flip_flop_signal(double a_perp_x, double j, double t_f) {
  const double c = std::cos(a_perp_x * j * t_f / 4.0);
  return c * c;
}

/// ⟨σx⟩ = cos²[A⊥ J₁(a₁Ω₁/ν) t_f / 4]
inline double signal_phase(double a_perp_x, double a1, double omega1, double nu, double t_f) {
  if (!(nu > 0.0)) throw ContractError("signal_phase: nu must be > 0");
  return flip_flop_signal(a_perp_x, special::bessel_j1(a1 * omega1 / nu), t_f);
}

/// ⟨σx⟩ = cos²[A⊥ J₁(Ω₁/ν) t_f / 4]
inline double signal_amp(double a_perp_x, double omega1, double nu, double t_f) {
  if (!(nu > 0.0)) throw ContractError("signal_amp: nu must be > 0");
  return flip_flop_signal(a_perp_x, special::bessel_j1(omega1 / nu), t_f);
}

/// Real part of the closed-form detuned signal
///   {e^{−iδt}[−X + e^{iδt}(16δ² + 3X) + X(1 + e^{iδt}) cos(t√(4δ²+X)/2)]} / (4(4δ²+X)),
/// X = (A⊥J₁)². The imaginary part, X sin δt (1 − cos(st/2)) / (4(4δ²+X)), is
/// dropped; it vanishes only at δ = 0.
inline double signal_detuned(double a_perp_x, double j1, double delta, double t_f) {
  const double x = a_perp_x * a_perp_x * j1 * j1;
  const double d2 = delta * delta;
  const double den = 4.0 * (4.0 * d2 + x);
  if (den == 0.0) return 1.0;
  const double s = std::sqrt(4.0 * d2 + x);
  const double cd = std::cos(delta * t_f);
  return (16.0 * d2 + 3.0 * x - x * cd + x * (1.0 + cd) * std::cos(0.5 * s * t_f)) / den;
}

/// Imaginary residue of the closed-form detuned signal (see signal_detuned).
inline double signal_detuned_imag(double a_perp_x, double j1, double delta, double t_f) {
  const double x = a_perp_x * a_perp_x * j1 * j1;
  const double den = 4.0 * (4.0 * delta * delta + x);
  if (den == 0.0) return 0.0;
  const double s = std::sqrt(4.0 * delta * delta + x);
  return x * std::sin(delta * t_f) * (1.0 - std::cos(0.5 * s * t_f)) / den;
}

/// Exact solution of the detuned flip-flop model for |+⟩ and an unpolarised
/// nucleus: only the |+↓⟩ ↔ |−↑⟩ pair evolves, a two-level Rabi problem,
///   ⟨σx⟩ = 1 − X/(X + 4δ²) · sin²(t√(X + 4δ²)/4).
inline double signal_two_level(double a_perp_x, double j1, double delta, double t_f) {
  const double x = a_perp_x * a_perp_x * j1 * j1;
  const double w = x + 4.0 * delta * delta;
  if (w == 0.0) return 1.0;
  const double s = std::sin(0.25 * std::sqrt(w) * t_f);
  return 1.0 - x / w * s * s;
}

namespace detail {

/// (t/2)⁴ a² Σ_{k≥2} c_k h^{2k−4} with h = a t / 2, the small-h form of a
/// closed-form curvature whose terms cancel to O(h⁴).
template <class Coeff>
double curvature_series(double a, double t_f, Coeff&& c) {
  const double h = 0.5 * a * t_f;
  const double q = 0.5 * t_f;
  double sum = 0.0;
  double hp = 1.0;
  double fact = 24.0;  // (2k)! at k = 2
  for (int k = 2; k < 60; ++k) {
    const double term = c(k) / fact * hp;
    sum += term;
    if (std::abs(term) <= 1e-17 * std::abs(sum)) break;
    hp *= -h * h;
    fact *= (2.0 * k + 1.0) * (2.0 * k + 2.0);
  }
  return q * q * q * q * a * a * sum;
}

}  // namespace detail

/// Curvature ℬ of signal_detuned ≈ 𝒜 + ℬδ² at δ = 0, with a = A⊥J₁.
inline double harmonic_curvature_detuned(double a_perp_x, double j1, double t_f) {
  const double a = std::abs(a_perp_x * j1);
  const double at = a * t_f;
  if (at < 4.0) return detail::curvature_series(a, t_f, [](int k) { return (16.0 * k * k + 8.0 * k - 16.0) / 8.0; });
  const double h = 0.5 * at;
  return (at * at * (1.0 - std::cos(h)) - 4.0 * at * std::sin(h) - 16.0 * std::cos(h) + 16.0) / (8.0 * a * a);
}

/// Curvature ℬ of signal_two_level at δ = 0.
inline double harmonic_curvature_two_level(double a_perp_x, double j1, double t_f) {
  const double a = std::abs(a_perp_x * j1);
  const double at = a * t_f;
  if (at < 4.0) return detail::curvature_series(a, t_f, [](int k) { return 2.0 * k - 2.0; });
  const double h = 0.5 * at;
  return (-0.5 * at * std::sin(h) - 2.0 * std::cos(h) + 2.0) / (a * a);
}

/// cos²(A⊥ t_f / 4)
inline double hh_signal(double a_perp_x, double t_f) {
  if (!(t_f >= 0.0)) throw ContractError("hh_signal: t_f must be >= 0");
  return flip_flop_signal(a_perp_x, 1.0, t_f);
}

/// t^HH = J₁ · t^ph
inline double hh_time_for_equal_signal(double t_f_ph, double j1) {
  if (!(t_f_ph >= 0.0)) throw ContractError("hh_time_for_equal_signal: t_f must be >= 0");
  return j1 * t_f_ph;
}

/// 16π²ν / (A⊥ a₁ Ω₁ t_f²), proportionality constant 1.
inline double fwhm_phase(double a_perp_x, double a1, double omega1, double nu, double t_f) {
  if (!(a_perp_x > 0.0 && a1 > 0.0 && omega1 > 0.0 && nu > 0.0 && t_f > 0.0))
    throw ContractError("fwhm_phase: arguments must be positive");
  return 16.0 * kPi * kPi * nu / (a_perp_x * a1 * omega1 * t_f * t_f);
}

/// 8π² / (A⊥ t_f²), proportionality constant 1.
inline double fwhm_hh(double a_perp_x, double t_f) {
  if (!(a_perp_x > 0.0 && t_f > 0.0)) throw ContractError("fwhm_hh: arguments must be positive");
  return 8.0 * kPi * kPi / (a_perp_x * t_f * t_f);
}

/// FWHM^HH / FWHM^ph at equal-depth times: 2ν / (a₁Ω₁).
inline double fwhm_ratio(double a1, double omega1, double nu) {
  if (!(a1 > 0.0 && omega1 > 0.0 && nu > 0.0)) throw ContractError("fwhm_ratio: arguments must be positive");
  return 2.0 * nu / (a1 * omega1);
}

/// Full width at half depth of a dip f(δ), symmetric in δ, with f(0) its
/// minimum. `hint` brackets the first half-depth crossing from above.
template <class F>
double dip_fwhm(F&& f, double hint) {
  const double f0 = f(0.0);
  const double target = 1.0 - 0.5 * (1.0 - f0);
  if (!(f0 < 1.0)) return 0.0;
  double hi = hint;
  for (int k = 0; k < 200 && f(hi) < target; ++k) hi *= 1.5;
  // walk in to the first crossing so side lobes are not picked up
  const int probes = 400;
  double lo = 0.0;
  for (int k = 1; k <= probes; ++k) {
    const double d = hi * k / probes;
    if (f(d) >= target) {
      hi = d;
      lo = hi * (k - 1) / k;
      break;
    }
  }
  for (int k = 0; k < 100; ++k) {
    const double mid = 0.5 * (lo + hi);
    (f(mid) < target ? lo : hi) = mid;
  }
  return lo + hi;
}

/// FWHM (rad/s in δ) of the two-level detuned signal.
inline double fwhm_two_level(double a_perp_x, double j1, double t_f) {
  if (!(t_f > 0.0)) throw ContractError("fwhm_two_level: t_f must be > 0");
  return dip_fwhm([&](double d) { return signal_two_level(a_perp_x, j1, d, t_f); }, 4.0 * kPi / t_f);
}

/// FWHM (rad/s in δ) of the closed-form detuned signal (signal_detuned).
inline double fwhm_detuned(double a_perp_x, double j1, double t_f) {
  if (!(t_f > 0.0)) throw ContractError("fwhm_detuned: t_f must be > 0");
  return dip_fwhm([&](double d) { return signal_detuned(a_perp_x, j1, d, t_f); }, 2.0 * kPi / t_f);
}

struct NucleusPrediction {
  std::size_t index = 0;
  double omega_n = 0.0;
  double a_perp_x = 0.0;
  bool no_coupling = false;
  std::vector<ResonanceBranch> branches;  // empty for the constant drive
  double resonance = 0.0;                 // ν (modulated) or Ω̄₀ (constant) on the primary branch
  double bessel_arg = 0.0;
  double j1 = 1.0;
  double coupling = 0.0;                  // (A⊥/2) J₁
  double signal_on_resonance = 1.0;
  double fwhm_formula = 0.0;              // printed proportional form, constant 1
  double fwhm_two_level = 0.0;
};

struct EffectivePrediction {
  std::string scheme;
  double t_f = 0.0;
  std::vector<NucleusPrediction> nuclei;
};

namespace detail {

/// Effective-model inputs at scan coordinate x (ν, or Ω̄₀ for the constant drive).
struct EffectiveAt {
  double j1 = 1.0;
  double delta = 0.0;
};

inline EffectiveAt effective_at(const DriveScheme& drive, double omega_n) {
  return std::visit(
      [&](const auto& s) -> EffectiveAt {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, ConstantHH>) {
          return {1.0, s.rabi - omega_n};
        } else if constexpr (std::is_same_v<T, PhaseModulated>) {
          return {special::bessel_j1(kSquareWaveA1 * s.omega1 / s.nu), s.omega0 + s.nu - omega_n};
        } else {
          return {special::bessel_j1(s.omega1 / s.nu), s.omega0 + s.nu - omega_n};
        }
      },
      drive);
}

}  // namespace detail

/// Primary-branch predictions for every nucleus. The drive's own ν (or Ω̄₀) is
/// ignored except for Ω₀, Ω₁; quantities are evaluated at each resonance.
inline EffectivePrediction predict(const SystemModel& system, const DriveScheme& drive, double t_f) {
  system.validate();
  EffectivePrediction out;
  out.scheme = scheme_name(drive);
  out.t_f = t_f;
  for (std::size_t k = 0; k < system.size(); ++k) {
    const NuclearFrame frame = nuclear_frame(system.nuclei[k], system.nv);
    NucleusPrediction p;
    p.index = k;
    p.omega_n = frame.omega_n;
    p.a_perp_x = frame.a_perp_x;
    p.no_coupling = frame.no_coupling;
    std::visit(
        [&](const auto& s) {
          using T = std::decay_t<decltype(s)>;
          if constexpr (std::is_same_v<T, ConstantHH>) {
            p.resonance = frame.omega_n;
            p.j1 = 1.0;
            if (p.a_perp_x > 0.0 && t_f > 0.0) p.fwhm_formula = fwhm_hh(p.a_perp_x, t_f);
          } else {
            constexpr bool phase = std::is_same_v<T, PhaseModulated>;
            const double a1 = phase ? kSquareWaveA1 : 1.0;
            p.resonance = frame.omega_n - s.omega0;
            p.branches = resonance_branches(frame.omega_n, s.omega0, 3, frame.a_perp_x, s.omega1);
            if (p.resonance > 0.0) {
              p.bessel_arg = a1 * s.omega1 / p.resonance;
              p.j1 = special::bessel_j1(p.bessel_arg);
              if (p.a_perp_x > 0.0 && s.omega1 > 0.0 && t_f > 0.0)
                p.fwhm_formula = fwhm_phase(p.a_perp_x, a1, s.omega1, p.resonance, t_f);
            } else {
              p.j1 = 0.0;
            }
          }
        },
        drive);
    p.coupling = 0.5 * p.a_perp_x * p.j1;
    p.signal_on_resonance = flip_flop_signal(p.a_perp_x, p.j1, t_f);
    if (t_f > 0.0 && p.coupling > 0.0) p.fwhm_two_level = fwhm_two_level(p.a_perp_x, p.j1, t_f);
    out.nuclei.push_back(std::move(p));
  }
  return out;
}

struct OverlayPoint {
  double two_level = 1.0;  // cluster signal from the two-level detuned form
  double detuned = 1.0;    // cluster signal from signal_detuned
};

/// Analytic cluster signal at one drive setting: each nucleus contributes its
/// dip independently, s = 1 − Σ_k (1 − s_k).
inline OverlayPoint analytic_overlay(const SystemModel& system, const DriveScheme& drive, double t_f) {
  OverlayPoint out;
  for (const auto& n : system.nuclei) {
    const NuclearFrame frame = nuclear_frame(n, system.nv);
    const auto e = detail::effective_at(drive, frame.omega_n);
    out.two_level -= 1.0 - signal_two_level(frame.a_perp_x, e.j1, e.delta, t_f);
    out.detuned -= 1.0 - signal_detuned(frame.a_perp_x, e.j1, e.delta, t_f);
  }
  return out;
}

/// 𝒜 + ℬδ² for nucleus `k` with the two-level curvature.
inline double harmonic_overlay(const SystemModel& system, std::size_t k, const DriveScheme& drive, double t_f) {
  const NuclearFrame frame = nuclear_frame(system.nuclei.at(k), system.nv);
  const auto e = detail::effective_at(drive, frame.omega_n);
  return flip_flop_signal(frame.a_perp_x, e.j1, t_f) +
         harmonic_curvature_two_level(frame.a_perp_x, e.j1, t_f) * e.delta * e.delta;
}

}  // namespace nvpm
