#pragma once

// Ornstein–Uhlenbeck fluctuations of the Rabi amplitude, Ω₀,₁ → Ω₀,₁[1 + ξ(t)],
// and seeded ensemble averages over independent realizations.
//
// p is the stationary standard deviation of ξ; every path starts from the
// stationary distribution ξ(0) ~ N(0, p²).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "nvpm/dynamics.hpp"
#include "nvpm/errors.hpp"
#include "nvpm/parallel.hpp"

namespace nvpm {

struct NoiseSpec {
  double tau = 0.5e-3;  // correlation time, s
  double p = 0.005;     // stationary relative std
  int runs = 50;
  std::uint64_t master_seed = 0;

  void validate() const {
    if (!(tau > 0.0)) throw ContractError("NoiseSpec: tau must be > 0");
    if (!(p >= 0.0 && p < 0.2)) throw ContractError("NoiseSpec: p must lie in [0, 0.2)");
    if (runs < 1) throw ContractError("NoiseSpec: runs must be >= 1");
  }
};

/// Name of the Gaussian source, recorded in output metadata.
inline constexpr const char* kRngIdentity =
    "std::mt19937_64 seeded with splitmix64(master_seed, realization, point); "
    "std::normal_distribution<double> (libstdc++ polar Marsaglia)";

/// ξ(t+dt) = ξ e^{−dt/τ} + p √(1 − e^{−2dt/τ}) g  with g ~ N(0,1).
inline double ou_step(double xi, double dt, double tau, double p, double gaussian) {
  if (!(dt > 0.0)) throw ContractError("ou_step: dt must be > 0");
  const double decay = std::exp(-dt / tau);
  return xi * decay + p * std::sqrt(-std::expm1(-2.0 * dt / tau)) * gaussian;
}

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

/// Seed of realization `run` at scan point `point`.
inline std::uint64_t realization_seed(std::uint64_t master, std::uint64_t run, std::uint64_t point) {
  return splitmix64(splitmix64(splitmix64(master) ^ run) ^ (point * 0xD1B54A32D192ED03ull));
}

struct NoisePath {
  std::vector<double> times;  // segment start times, s
  std::vector<double> xi;
};

/// One realization sampled at the start of every segment of `schedule`.
inline NoisePath sample_noise_path(const Schedule& schedule, const NoiseSpec& spec, std::uint64_t seed) {
  spec.validate();
  const std::size_t n = schedule.segment_count();
  NoisePath path;
  path.times.resize(n);
  path.xi.resize(n);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  double t = 0.0;
  double xi = spec.p * normal(rng);
  for (std::size_t k = 0; k < n; ++k) {
    if (k > 0) {
      const double dt = schedule.duration(k - 1);
      xi = ou_step(xi, dt, spec.tau, spec.p, normal(rng));
      t += dt;
    }
    path.times[k] = t;
    path.xi[k] = xi;
  }
  return path;
}

struct EnsembleResult {
  double mean = 1.0;
  double standard_error = 0.0;
  int runs = 0;
  double actual_t_f = 0.0;
  double max_unitarity_residual = 0.0;
};

/// ⟨σx⟩ for realization `run` at scan point `point`.
inline PropagationResult realization_signal(const SimulationTask& task, const Schedule& schedule, const NoiseSpec& spec,
                                            std::uint64_t point, std::uint64_t run) {
  const NoisePath path = sample_noise_path(schedule, spec, realization_seed(spec.master_seed, run, point));
  std::vector<double> scale(path.xi.size());
  for (std::size_t k = 0; k < scale.size(); ++k) scale[k] = 1.0 + path.xi[k];
  return propagate_periodic_cached(task, scale);
}

/// Mean and standard error of realization values, summed pairwise in run order.
inline EnsembleResult reduce_ensemble(std::span<const double> values) {
  EnsembleResult out;
  out.runs = static_cast<int>(values.size());
  if (values.empty()) return out;
  const double n = static_cast<double>(values.size());
  out.mean = pairwise_sum(values) / n;
  if (values.size() > 1) {
    std::vector<double> sq(values.size());
    for (std::size_t k = 0; k < values.size(); ++k) sq[k] = (values[k] - out.mean) * (values[k] - out.mean);
    out.standard_error = std::sqrt(pairwise_sum(sq) / (n - 1.0) / n);
  }
  return out;
}

/// Mean and standard error of ⟨σx⟩ over spec.runs realizations on up to
/// `workers` threads. The result does not depend on the worker count.
inline EnsembleResult ensemble_signal(const SimulationTask& task, const NoiseSpec& spec, std::uint64_t point_index = 0,
                                      unsigned workers = 1) {
  spec.validate();
  if (spec.p == 0.0) {
    const PropagationResult r = propagate_periodic_cached(task);
    EnsembleResult out;
    out.runs = spec.runs;
    out.mean = r.signal;
    out.actual_t_f = r.actual_t_f;
    out.max_unitarity_residual = r.unitarity_residual;
    return out;
  }
  const Schedule schedule = make_schedule(task);
  std::vector<double> values(static_cast<std::size_t>(spec.runs));
  std::vector<double> residuals(values.size());
  parallel_for(values.size(), workers, [&](std::size_t r) {
    const PropagationResult res = realization_signal(task, schedule, spec, point_index, r);
    values[r] = res.signal;
    residuals[r] = res.unitarity_residual;
  });
  EnsembleResult out = reduce_ensemble(values);
  out.actual_t_f = schedule.actual_t_f;
  for (double r : residuals) out.max_unitarity_residual = std::max(out.max_unitarity_residual, r);
  return out;
}

}  // namespace nvpm
