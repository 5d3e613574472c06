#pragma once

// Static description of the NV + nuclear-spin register and every quantity that
// follows from it without reference to the drive: hyperfine vectors, nuclear
// resonance frequencies and their local frames, internuclear couplings.
//
// Units: angular frequencies in rad/s, gyromagnetic ratios in rad/s/T,
// fields in tesla, positions in metres.

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "nvpm/errors.hpp"
#include "nvpm/spincore.hpp"

namespace nvpm {

namespace constants {
inline constexpr double mu0 = 1.25663706212e-6;        // T·m/A
inline constexpr double hbar = 1.054571817e-34;        // J·s
inline constexpr double zero_field_splitting = kTwoPi * 2.87e9;
inline constexpr double gamma_e = -kTwoPi * 28.024e9;  // rad/s/T
inline constexpr double gamma_13c = kTwoPi * 10.705e6;  // rad/s/T
}  // namespace constants

/// Nuclear spin operators are I = σ/2 (Half) or I = σ (Pauli, for A/B checks).
enum class SpinConvention { Half, Pauli };

/// Operator carrying the internuclear couplings g_{j,l}.
///   Secular: g (2 I_z I_z − I_x I_x − I_y I_y)
///   ZZ:      g I_z I_z
enum class InternuclearForm { Secular, ZZ };

/// Prefactor convention for the point-dipole formulas.
///   Standard:  μ₀ħ/(4π) in SI, yields rad/s.
///   AsPrinted: μ₀/2 (hyperfine) and μ₀/4 (internuclear) with ħ = 1.
enum class DipoleConvention { Standard, AsPrinted };

inline double spin_scale(SpinConvention c) { return c == SpinConvention::Half ? 0.5 : 1.0; }

struct NVParams {
  double zero_field_splitting = constants::zero_field_splitting;
  double gamma_e = constants::gamma_e;
  double b_z = 1.0;

  void validate() const {
    if (!(zero_field_splitting > 0.0)) throw ContractError("NVParams: D must be positive");
    if (!(b_z >= 0.0)) throw ContractError("NVParams: B_z must be non-negative");
  }

  /// Microwave carrier resonant with the |0⟩ ↔ |1⟩ transition.
  double carrier() const { return zero_field_splitting + std::abs(gamma_e) * b_z; }
};

struct Nucleus {
  double gamma = constants::gamma_13c;
  Vec3 hyperfine = Vec3::Zero();
  std::optional<Vec3> position;
};

struct NuclearFrame {
  double omega_n = 0.0;
  Vec3 omega_vec = Vec3::Zero();
  Vec3 omega_hat = Vec3::UnitZ();
  double a_perp_x = 0.0;
  double a_perp_y = 0.0;
  double a_par_z = 0.0;
  Vec3 x_axis = Vec3::UnitX();
  Vec3 y_axis = Vec3::UnitY();
  Vec3 z_axis = Vec3::UnitZ();
  /// A ∥ ω̂: the transverse hyperfine component vanishes.
  bool no_coupling = false;
};

struct SystemModel {
  NVParams nv;
  std::vector<Nucleus> nuclei;
  /// Symmetric, zero diagonal, rad/s. Empty is treated as all-zero.
  Eigen::MatrixXd couplings;
  SpinConvention spin = SpinConvention::Half;
  InternuclearForm internuclear = InternuclearForm::Secular;

  std::size_t size() const noexcept { return nuclei.size(); }
  Eigen::Index dim() const noexcept { return Eigen::Index{2} << nuclei.size(); }

  double coupling(std::size_t j, std::size_t l) const {
    if (couplings.size() == 0) return 0.0;
    return couplings(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(l));
  }

  void validate() const {
    nv.validate();
    if (nuclei.size() > 8) throw ContractError("SystemModel: at most 8 nuclei are supported");
    if (couplings.size() != 0) {
      const auto n = static_cast<Eigen::Index>(nuclei.size());
      if (couplings.rows() != n || couplings.cols() != n)
        throw ContractError("SystemModel: coupling matrix size does not match nuclei");
      for (Eigen::Index j = 0; j < n; ++j) {
        if (couplings(j, j) != 0.0) throw ContractError("SystemModel: coupling diagonal must be zero");
        for (Eigen::Index l = j + 1; l < n; ++l)
          if (couplings(j, l) != couplings(l, j))
            throw ContractError("SystemModel: coupling matrix must be symmetric");
      }
    }
  }
};

/// Point-dipole hyperfine vector A = K [ẑ − 3(ẑ·r̂) r̂] for an NV–nucleus
/// displacement r. K = μ₀ħγeγn/(4π|r|³) (Standard) or μ₀γeγn/(2|r|³) (AsPrinted).
inline Vec3 hyperfine_from_position(const Vec3& r, double gamma_e, double gamma_n,
                                    DipoleConvention convention = DipoleConvention::Standard) {
  const double dist = r.norm();
  if (!(dist > 0.0)) throw ContractError("hyperfine_from_position: zero displacement");
  const double r3 = dist * dist * dist;
  const double k = convention == DipoleConvention::Standard
                       ? constants::mu0 * constants::hbar * gamma_e * gamma_n / (4.0 * kPi * r3)
                       : constants::mu0 * gamma_e * gamma_n / (2.0 * r3);
  const Vec3 rhat = r / dist;
  return k * (Vec3::UnitZ() - 3.0 * rhat.z() * rhat);
}

/// Internuclear coefficient g_{j,l} for the operator g(2IzIz − IxIx − IyIy).
/// Standard: g = μ₀ħγ²/(4π r³) · [1 − 3 n_z²] / 2, i.e. the secular part of the
/// point-dipole interaction. AsPrinted: (μ₀/4)(γ²/r³)[1 − 3 n_z²] with ħ = 1.
inline double internuclear_g(const Vec3& r_j, const Vec3& r_l, double gamma,
                             DipoleConvention convention = DipoleConvention::Standard) {
  const Vec3 d = r_l - r_j;
  const double dist = d.norm();
  if (!(dist > 0.0)) throw ContractError("internuclear_g: coincident positions");
  const double nz = d.z() / dist;
  const double r3 = dist * dist * dist;
  const double angular = 1.0 - 3.0 * nz * nz;
  if (convention == DipoleConvention::Standard)
    return constants::mu0 * constants::hbar * gamma * gamma / (4.0 * kPi * r3) * angular / 2.0;
  return constants::mu0 / 4.0 * gamma * gamma / r3 * angular;
}

/// Exact resonance frequency and local frame of a nucleus:
///   ω⃗_n = (−A_x/2, −A_y/2, ω_L − A_z/2),  ω_L = γ B_z.
inline NuclearFrame nuclear_frame(const Nucleus& n, const NVParams& nv) {
  NuclearFrame f;
  const Vec3& a = n.hyperfine;
  f.omega_vec = Vec3(-0.5 * a.x(), -0.5 * a.y(), n.gamma * nv.b_z - 0.5 * a.z());
  f.omega_n = f.omega_vec.norm();
  if (!(f.omega_n > 0.0)) throw ContractError("nuclear_frame: vanishing resonance frequency");
  f.omega_hat = f.omega_vec / f.omega_n;

  const double a_dot_w = a.dot(f.omega_hat);
  const Vec3 a_perp = a - a_dot_w * f.omega_hat;
  const Vec3 w_cross_a = f.omega_hat.cross(a);
  f.a_perp_x = a_perp.norm();
  f.a_perp_y = w_cross_a.norm();
  f.a_par_z = std::abs(a_dot_w);

  // Transverse components below this (rad/s) are treated as exactly parallel.
  constexpr double kDegenerate = 1e-9;
  if (f.a_perp_x <= kDegenerate * std::max(1.0, a.norm())) {
    f.no_coupling = true;
    f.a_perp_x = 0.0;
    f.a_perp_y = 0.0;
    f.z_axis = f.omega_hat;
    // any orthonormal completion
    const Vec3 seed = std::abs(f.omega_hat.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
    f.x_axis = (seed - seed.dot(f.omega_hat) * f.omega_hat).normalized();
    f.y_axis = f.omega_hat.cross(f.x_axis);
    return f;
  }
  f.x_axis = a_perp / f.a_perp_x;
  f.y_axis = w_cross_a / f.a_perp_y;
  f.z_axis = a_dot_w >= 0.0 ? f.omega_hat : Vec3(-f.omega_hat);
  return f;
}

/// First-order high-field approximation ω_n ≈ γ B_z − A_z/2.
inline double resonance_frequency_approx(const Nucleus& n, const NVParams& nv) {
  return n.gamma * nv.b_z - 0.5 * n.hyperfine.z();
}

/// Larmor frequency γ B_z.
inline double larmor(const Nucleus& n, const NVParams& nv) { return n.gamma * nv.b_z; }

}  // namespace nvpm
