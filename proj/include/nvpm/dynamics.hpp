#pragma once

// Exact propagation of the rotating-frame Hamiltonian
//
//   H = −Σ_j ω⃗_{n,j}·I⃗_j + (σ_z/2) Σ_j A⃗_j·I⃗_j + H_nn + (c(t)|1⟩⟨0| + h.c.)
//
// over piecewise-constant drive segments. Each segment contributes the exact
// exponential e^{−iH·dt}; periodic drives reuse one period propagator.

#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <sstream>
#include <tuple>
#include <vector>

#include "nvpm/control.hpp"
#include "nvpm/errors.hpp"
#include "nvpm/log.hpp"
#include "nvpm/spincore.hpp"
#include "nvpm/sysmodel.hpp"

namespace nvpm {

/// Assembles H for arbitrary drive amplitudes from a precomputed static part.
class HamiltonianBuilder {
 public:
  explicit HamiltonianBuilder(const SystemModel& system) {
    system.validate();
    const std::size_t sites = system.size() + 1;
    const Eigen::Index dim = system.dim();
    const double scale = spin_scale(system.spin);
    const std::array<ComplexMatrix, 3> sigma{pauli::x(), pauli::y(), pauli::z()};

    std::vector<std::array<ComplexMatrix, 3>> spin(system.size());
    for (std::size_t j = 0; j < system.size(); ++j)
      for (int a = 0; a < 3; ++a) spin[j][static_cast<std::size_t>(a)] = embed(sigma[static_cast<std::size_t>(a)] * scale, j + 1, sites);

    static_part_ = ComplexMatrix::Zero(dim, dim);
    const ComplexMatrix nv_sz_half = embed(pauli::z() * 0.5, 0, sites);
    for (std::size_t j = 0; j < system.size(); ++j) {
      const NuclearFrame frame = nuclear_frame(system.nuclei[j], system.nv);
      const Vec3& w = frame.omega_vec;
      const Vec3& a = system.nuclei[j].hyperfine;
      for (int k = 0; k < 3; ++k) {
        const auto ku = static_cast<std::size_t>(k);
        static_part_ -= w(k) * spin[j][ku];
        static_part_ += a(k) * (nv_sz_half * spin[j][ku]);
      }
    }
    for (std::size_t j = 0; j < system.size(); ++j) {
      for (std::size_t l = j + 1; l < system.size(); ++l) {
        const double g = system.coupling(j, l);
        if (g == 0.0) continue;
        const ComplexMatrix zz = spin[j][2] * spin[l][2];
        if (system.internuclear == InternuclearForm::Secular) {
          static_part_ += g * (2.0 * zz - spin[j][0] * spin[l][0] - spin[j][1] * spin[l][1]);
        } else {
          static_part_ += g * zz;
        }
      }
    }
    raise_ = embed(pauli::raise(), 0, sites);
    sigma_x_ = embed(pauli::x(), 0, sites);
    nuclear_dim_ = dim / 2;
  }

  const ComplexMatrix& static_part() const noexcept { return static_part_; }
  const ComplexMatrix& nv_sigma_x() const noexcept { return sigma_x_; }
  Eigen::Index dim() const noexcept { return static_part_.rows(); }

  ComplexMatrix operator()(Complex amplitude) const {
    ComplexMatrix h = static_part_;
    h += amplitude * raise_;
    h += std::conj(amplitude) * raise_.adjoint();
    return h;
  }

  /// ρ₀ = |+⟩⟨+| ⊗ (𝟙/2)^{⊗N}
  ComplexMatrix plus_state() const {
    const ComplexVector plus = ket_plus();
    const ComplexMatrix nv = plus * plus.adjoint();
    return kron(nv, ComplexMatrix::Identity(nuclear_dim_, nuclear_dim_) / static_cast<double>(nuclear_dim_));
  }

 private:
  ComplexMatrix static_part_;
  ComplexMatrix raise_;
  ComplexMatrix sigma_x_;
  Eigen::Index nuclear_dim_ = 1;
};

inline ComplexMatrix build_hamiltonian(const SystemModel& system, const WaveformSegment& segment) {
  return HamiltonianBuilder(system)(segment.amplitude);
}

enum class TimeSnapping {
  NearestPeriod,  // round t_f to an integer number of modulation periods
  Exact,          // propagate the final partial period segment by segment
};

struct SimulationTask {
  SystemModel system;
  DriveScheme drive;
  double t_f = 0.0;
  TimeSnapping snapping = TimeSnapping::NearestPeriod;
  /// Amplitude-modulated sampling override (0: use the drive's own value).
  int samples_per_period = 0;
  /// Chunk length for the unmodulated drive; sets the noise sampling grid.
  double hh_chunk = 100e-9;
  std::optional<DensityMatrix> initial_state;
  std::optional<ComplexMatrix> observable;
};

/// The full segment sequence of a task: `periods` repetitions of `period`
/// followed by `tail` (non-empty only for TimeSnapping::Exact).
struct Schedule {
  std::vector<WaveformSegment> period;
  std::int64_t periods = 0;
  std::vector<WaveformSegment> tail;
  double actual_t_f = 0.0;

  std::size_t segment_count() const {
    return period.size() * static_cast<std::size_t>(periods) + tail.size();
  }

  /// Duration of segment `k` in time order.
  double duration(std::size_t k) const {
    const std::size_t per = period.size();
    const std::size_t body = per * static_cast<std::size_t>(periods);
    return k < body ? period[k % per].duration : tail[k - body].duration;
  }
};

inline Schedule make_schedule(const SimulationTask& task) {
  if (!(task.t_f >= 0.0)) throw ContractError("SimulationTask: t_f must be >= 0");
  Schedule s;
  if (const auto* hh = std::get_if<ConstantHH>(&task.drive)) {
    validate(task.drive);
    if (task.t_f == 0.0) return s;
    if (!(task.hh_chunk > 0.0)) throw ContractError("SimulationTask: hh_chunk must be > 0");
    s.periods = static_cast<std::int64_t>(std::ceil(task.t_f / task.hh_chunk - 1e-9));
    s.periods = std::max<std::int64_t>(s.periods, 1);
    s.period = {{task.t_f / static_cast<double>(s.periods), Complex(hh->rabi / 2.0, 0.0)}};
    s.actual_t_f = task.t_f;
    return s;
  }
  s.period = discretize_period(task.drive, task.samples_per_period);
  const double period = modulation_period(task.drive);
  if (task.snapping == TimeSnapping::NearestPeriod) {
    s.periods = std::llround(task.t_f / period);
    s.actual_t_f = static_cast<double>(s.periods) * period;
    return s;
  }
  s.periods = static_cast<std::int64_t>(std::floor(task.t_f / period));
  double remaining = task.t_f - static_cast<double>(s.periods) * period;
  for (const auto& seg : s.period) {
    if (remaining <= 0.0) break;
    const double d = std::min(seg.duration, remaining);
    s.tail.push_back({d, seg.amplitude});
    remaining -= d;
  }
  s.actual_t_f = task.t_f;
  return s;
}

/// Segment propagators keyed by (amplitude, duration) quantised to 12
/// significant digits. Stops inserting once `capacity_bytes` is reached.
class PropagatorCache {
 public:
  explicit PropagatorCache(std::size_t capacity_bytes = std::size_t{256} << 20) : capacity_(capacity_bytes) {}

  const ComplexMatrix& get(const HamiltonianBuilder& builder, const WaveformSegment& seg) {
    const Key key{quantize(seg.amplitude.real()), quantize(seg.amplitude.imag()), quantize(seg.duration)};
    if (auto it = entries_.find(key); it != entries_.end()) {
      ++hits_;
      return it->second;
    }
    ++misses_;
    scratch_ = herm_exp(builder(seg.amplitude), seg.duration);
    const std::size_t bytes = static_cast<std::size_t>(scratch_.size()) * sizeof(Complex);
    if (used_ + bytes > capacity_) {
      if (!degraded_) {
        degraded_ = true;
        log::warn("propagator cache full; continuing uncached");
      }
      return scratch_;
    }
    used_ += bytes;
    return entries_.emplace(key, scratch_).first->second;
  }

  std::size_t hits() const noexcept { return hits_; }
  std::size_t misses() const noexcept { return misses_; }
  std::size_t size() const noexcept { return entries_.size(); }
  bool degraded() const noexcept { return degraded_; }

 private:
  using Q = std::pair<int, long long>;
  using Key = std::tuple<Q, Q, Q>;

  static Q quantize(double x) {
    if (x == 0.0) return {0, 0};
    int exponent = 0;
    const double mantissa = std::frexp(x, &exponent);
    return {exponent, std::llround(mantissa * 1e12)};
  }

  std::map<Key, ComplexMatrix> entries_;
  ComplexMatrix scratch_;
  std::size_t capacity_;
  std::size_t used_ = 0;
  std::size_t hits_ = 0;
  std::size_t misses_ = 0;
  bool degraded_ = false;
};

struct PropagationResult {
  double signal = 1.0;
  double actual_t_f = 0.0;
  std::int64_t periods = 0;
  std::size_t segments = 0;
  double unitarity_residual = 0.0;
  double trace_error = 0.0;
  int renormalizations = 0;
  double max_correction = 0.0;
  std::size_t cache_hits = 0;
  std::size_t cache_misses = 0;
  bool cache_degraded = false;
};

/// Products of unitaries are projected back onto the unitary group after this
/// many multiplications.
inline constexpr std::int64_t kRenormalizeEvery = 100000;

namespace detail {

class Accumulator {
 public:
  explicit Accumulator(Eigen::Index dim) : u_(ComplexMatrix::Identity(dim, dim)) {}

  void apply(const ComplexMatrix& step) {
    u_ = step * u_;
    if (++count_ % kRenormalizeEvery == 0) renormalize();
  }

  void renormalize() {
    const double c = project_unitary(u_);
    ++renormalizations_;
    max_correction_ = std::max(max_correction_, c);
    std::ostringstream msg;
    msg << "renormalised propagator after " << count_ << " products, correction " << c;
    log::debug(msg.str());
  }

  const ComplexMatrix& matrix() const noexcept { return u_; }
  int renormalizations() const noexcept { return renormalizations_; }
  double max_correction() const noexcept { return max_correction_; }

 private:
  ComplexMatrix u_;
  std::int64_t count_ = 0;
  int renormalizations_ = 0;
  double max_correction_ = 0.0;
};

inline PropagationResult finish(const HamiltonianBuilder& builder, const SimulationTask& task, const Schedule& schedule,
                                const Accumulator& acc) {
  const ComplexMatrix rho0 = task.initial_state ? task.initial_state->matrix() : builder.plus_state();
  const ComplexMatrix& obs = task.observable ? *task.observable : builder.nv_sigma_x();
  if (rho0.rows() != builder.dim() || obs.rows() != builder.dim())
    throw ContractError("propagate: initial state or observable has the wrong dimension");
  const ComplexMatrix& u = acc.matrix();
  const ComplexMatrix rho = u * rho0 * u.adjoint();

  PropagationResult r;
  r.signal = expect(rho, obs);
  r.actual_t_f = schedule.actual_t_f;
  r.periods = schedule.periods;
  r.segments = schedule.segment_count();
  r.unitarity_residual = unitarity_residual(u);
  r.trace_error = std::abs(rho.trace() - Complex(1.0));
  r.renormalizations = acc.renormalizations();
  r.max_correction = acc.max_correction();

  if (r.unitarity_residual > 1e-9) {
    std::ostringstream msg;
    msg << "propagator lost unitarity: residual " << r.unitarity_residual;
    throw InvariantViolation(msg.str());
  }
  if (r.trace_error > 1e-9) throw InvariantViolation("evolved state lost unit trace");
  if (!task.observable && std::abs(r.signal) > 1.0 + 1e-9) throw InvariantViolation("signal outside [-1, 1]");
  return r;
}

inline void check_scale(const Schedule& schedule, std::span<const double> scale) {
  if (!scale.empty() && scale.size() != schedule.segment_count())
    throw ContractError("propagate: amplitude scale path does not match the segment count");
}

inline WaveformSegment scaled(const WaveformSegment& seg, std::span<const double> scale, std::size_t k) {
  if (scale.empty()) return seg;
  return {seg.duration, seg.amplitude * scale[k]};
}

}  // namespace detail

/// Reference path: one fresh exponential per segment, applied in time order.
/// `amplitude_scale`, when given, multiplies segment k's drive amplitude.
inline PropagationResult propagate(const SimulationTask& task, std::span<const double> amplitude_scale = {}) {
  const HamiltonianBuilder builder(task.system);
  const Schedule schedule = make_schedule(task);
  detail::check_scale(schedule, amplitude_scale);
  detail::Accumulator acc(builder.dim());
  std::size_t k = 0;
  for (std::int64_t p = 0; p < schedule.periods; ++p)
    for (const auto& seg : schedule.period) {
      const WaveformSegment s = detail::scaled(seg, amplitude_scale, k++);
      acc.apply(herm_exp(builder(s.amplitude), s.duration));
    }
  for (const auto& seg : schedule.tail) {
    const WaveformSegment s = detail::scaled(seg, amplitude_scale, k++);
    acc.apply(herm_exp(builder(s.amplitude), s.duration));
  }
  return detail::finish(builder, task, schedule, acc);
}

/// Performance path. Without a scale path the period propagator is formed once
/// and applied `periods` times; with one, every rescaled segment is exponentiated
/// afresh and unscaled segments still come from the cache.
inline PropagationResult propagate_periodic_cached(const SimulationTask& task,
                                                   std::span<const double> amplitude_scale = {},
                                                   PropagatorCache* shared_cache = nullptr) {
  const HamiltonianBuilder builder(task.system);
  const Schedule schedule = make_schedule(task);
  detail::check_scale(schedule, amplitude_scale);
  PropagatorCache local;
  PropagatorCache& cache = shared_cache ? *shared_cache : local;
  detail::Accumulator acc(builder.dim());

  if (amplitude_scale.empty()) {
    ComplexMatrix period = ComplexMatrix::Identity(builder.dim(), builder.dim());
    for (const auto& seg : schedule.period) period = cache.get(builder, seg) * period;
    // rounding in a long period product would otherwise compound over every repetition
    project_unitary(period);
    for (std::int64_t p = 0; p < schedule.periods; ++p) acc.apply(period);
    for (const auto& seg : schedule.tail) acc.apply(cache.get(builder, seg));
  } else {
    // A scaled segment never repeats, so only unscaled ones go through the cache.
    std::size_t k = 0;
    auto step = [&](const WaveformSegment& seg) {
      const double f = amplitude_scale[k++];
      if (f == 1.0) {
        acc.apply(cache.get(builder, seg));
      } else {
        acc.apply(herm_exp(builder(seg.amplitude * f), seg.duration));
      }
    };
    for (std::int64_t p = 0; p < schedule.periods; ++p)
      for (const auto& seg : schedule.period) step(seg);
    for (const auto& seg : schedule.tail) step(seg);
  }
  PropagationResult r = detail::finish(builder, task, schedule, acc);
  r.cache_hits = cache.hits();
  r.cache_misses = cache.misses();
  r.cache_degraded = cache.degraded();
  return r;
}

}  // namespace nvpm
