#include <gtest/gtest.h>

#include <numeric>

#include "nvpm/control.hpp"
#include "test_util.hpp"

using namespace nvpm;

namespace {

PhaseModulated phase_drive(double nu) {
  PhaseModulated p;
  p.omega0 = 1.0 * test::kMHz;
  p.omega1 = 1.0 * test::kMHz;
  p.nu = nu;
  p.t_flip = 5e-9;
  p.flip_steps = 20;
  return p;
}

double total_duration(const std::vector<WaveformSegment>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0, [](double a, const WaveformSegment& s) { return a + s.duration; });
}

}  // namespace

TEST(PhaseModulated, PeriodLayout) {
  const PhaseModulated p = phase_drive(9.7 * test::kMHz);
  const auto seg = discretize_period(p);
  const double period = kTwoPi / p.nu;
  ASSERT_EQ(seg.size(), 43u);
  EXPECT_NEAR(total_duration(seg), period, 1e-12 * period);
  // plateaus: φ = 0 is split around t = 0, φ = π sits in the middle
  EXPECT_NEAR(seg.front().amplitude.real(), (p.omega0 + p.omega1) / 2, 1e-6);
  EXPECT_NEAR(seg[21].amplitude.real(), (p.omega0 - p.omega1) / 2, 1e-6);
  EXPECT_NEAR(seg.front().duration + seg.back().duration, period / 2 - p.t_flip, 1e-15);
  EXPECT_NEAR(seg[21].duration, period / 2 - p.t_flip, 1e-15);
  // ramp midpoints carry |c| = Ω cos(φ/2) for Ω₀ = Ω₁
  for (int k = 0; k < 20; ++k) {
    const double phi = kPi * (k + 0.5) / 20;
    EXPECT_NEAR(std::abs(seg[1 + k].amplitude), p.omega0 * std::cos(phi / 2), 1e-6);
  }
}

TEST(PhaseModulated, ClusterSettingsSumToPeriod) {
  const PhaseModulated p = phase_drive(9.71 * test::kMHz);
  const auto seg = discretize_period(p);
  const double period = kTwoPi / p.nu;
  EXPECT_EQ(seg.size(), 43u);
  EXPECT_LE(std::abs(total_duration(seg) - period), 1e-15 * period);
}

TEST(PhaseModulated, InstantFlipIsSquareWave) {
  PhaseModulated p = phase_drive(5.0 * test::kMHz);
  p.t_flip = 0.0;
  const auto seg = discretize_period(p);
  ASSERT_EQ(seg.size(), 3u);
  EXPECT_NEAR(seg[0].duration, kTwoPi / p.nu / 4, 1e-18);
}

TEST(Drive, Validation) {
  PhaseModulated p = phase_drive(5.0 * test::kMHz);
  p.nu = 0.0;
  EXPECT_THROW(validate(DriveScheme{p}), ContractError);
  p = phase_drive(5.0 * test::kMHz);
  p.t_flip = 0.5 * kTwoPi / p.nu;
  EXPECT_THROW(validate(DriveScheme{p}), ContractError);
  p = phase_drive(5.0 * test::kMHz);
  p.flip_steps = 0;
  EXPECT_THROW(validate(DriveScheme{p}), ContractError);
  EXPECT_THROW(validate(DriveScheme{ConstantHH{-1.0}}), ContractError);
  AmplitudeModulated a{1.0, 1.0, 1.0, 0};
  EXPECT_THROW(validate(DriveScheme{a}), ContractError);
}

TEST(Fourier, SquareWaveCoefficients) {
  const double nu = 3.0;
  const double period = kTwoPi / nu;
  const auto fs = fourier_coeffs([&](double t) { return modulation_F(t, nu); }, period, 7);
  for (int n = 1; n <= 7; ++n) {
    EXPECT_NEAR(fs.a[static_cast<std::size_t>(n)], square_wave_cosine_coeff(n), 1e-6) << n;
    EXPECT_NEAR(fs.b[static_cast<std::size_t>(n)], 0.0, 1e-6) << n;
  }
  EXPECT_NEAR(fs.a[0], 0.0, 1e-9);
  EXPECT_DOUBLE_EQ(square_wave_cosine_coeff(1), kSquareWaveA1);
  EXPECT_NEAR(square_wave_cosine_coeff(2), 0.0, 1e-15);
  EXPECT_NEAR(square_wave_cosine_coeff(3), -4.0 / (3.0 * kPi), 1e-15);
}

TEST(Fourier, DiscretizedPhaseDriveHasSquareWaveFundamental) {
  // Re c(t) = (Ω₀ + Ω₁ cos φ)/2 follows Ω₁F(t)/2 up to the finite ramps.
  PhaseModulated p = phase_drive(10.0 * test::kMHz);
  p.omega0 = 0.0;
  const auto seg = discretize_period(p);
  auto value = [&](double t) {
    double acc = 0.0;
    for (const auto& s : seg) {
      if (t < acc + s.duration) return 2.0 * s.amplitude.real() / p.omega1;
      acc += s.duration;
    }
    return 2.0 * seg.back().amplitude.real() / p.omega1;
  };
  const auto fs = fourier_coeffs(value, kTwoPi / p.nu, 1);
  EXPECT_NEAR(fs.a[1], kSquareWaveA1, 0.02);
}

TEST(AmplitudeModulated, SamplesAverageToCarrierAmplitude) {
  const AmplitudeModulated a{2.0 * test::kMHz, 1.0 * test::kMHz, 7.0 * test::kMHz, 256};
  const auto seg = discretize_period(a);
  ASSERT_EQ(seg.size(), 256u);
  double mean = 0.0;
  for (const auto& s : seg) mean += s.amplitude.real() * s.duration;
  mean /= total_duration(seg);
  EXPECT_NEAR(mean, a.omega0 / 2, 1e-9 * a.omega0);
  EXPECT_EQ(discretize_period(a, 64).size(), 64u);
}

TEST(Discretize, RepeatsPeriodsAndRejectsConstantDrive) {
  const PhaseModulated p = phase_drive(9.0 * test::kMHz);
  EXPECT_EQ(discretize(p, 4).size(), 4 * discretize_period(p).size());
  EXPECT_THROW(discretize(ConstantHH{1.0}, 2), ContractError);
  EXPECT_THROW(discretize_period(ConstantHH{1.0}), ContractError);
  const auto hh = discretize_period(ConstantHH{3.0}, 0, 1e-7);
  ASSERT_EQ(hh.size(), 1u);
  EXPECT_DOUBLE_EQ(hh[0].amplitude.real(), 1.5);
  EXPECT_EQ(scheme_name(p), "phase");
  EXPECT_EQ(modulation_period(ConstantHH{1.0}), 0.0);
}
