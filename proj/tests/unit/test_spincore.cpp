#include <gtest/gtest.h>

#include <random>

#include <unsupported/Eigen/MatrixFunctions>

#include "nvpm/spincore.hpp"
#include "test_util.hpp"

using namespace nvpm;

TEST(Pauli, AlgebraAndBasisConvention) {
  const ComplexMatrix x = pauli::x(), y = pauli::y(), z = pauli::z();
  EXPECT_LT((x * y - kI * z).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_LT((y * z - kI * x).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_LT((x * x - pauli::identity()).cwiseAbs().maxCoeff(), 1e-15);
  // |1⟩⟨0| + h.c. = σx and |1⟩ has σz = +1
  const ComplexMatrix r = pauli::raise();
  EXPECT_LT((r + r.adjoint() - x).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_DOUBLE_EQ(z(0, 0).real(), 1.0);
  EXPECT_NEAR(expect(DensityMatrix::pure(ket_plus()), x), 1.0, 1e-15);
  EXPECT_NEAR(expect(DensityMatrix::pure(ket_minus()), x), -1.0, 1e-15);
}

TEST(Kron, EmbedPlacesOperatorOnSite) {
  const ComplexMatrix op = embed(pauli::z(), 1, 3);
  ASSERT_EQ(op.rows(), 8);
  const ComplexMatrix expected = kron(kron(pauli::identity(), pauli::z()), pauli::identity());
  EXPECT_LT((op - expected).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_THROW(embed(pauli::z(), 3, 3), ContractError);
  EXPECT_THROW(embed(ComplexMatrix::Identity(3, 3), 0, 2), ContractError);
}

TEST(HermExp, MatchesGeneralMatrixExponential) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::Index n = 2 + trial % 7;
    const ComplexMatrix h = test::random_hermitian(n, rng);
    const double t = 0.1 + 0.2 * trial;
    const ComplexMatrix arg = (-kI * t) * h;
    const ComplexMatrix oracle = arg.exp();
    const ComplexMatrix u = herm_exp(h, t);
    EXPECT_LT((u - oracle).cwiseAbs().maxCoeff(), 1e-11) << "trial " << trial;
    EXPECT_LT(unitarity_residual(u), 1e-12);
  }
}

TEST(HermExp, RejectsNonHermitianAndHandlesZeroTime) {
  ComplexMatrix m = ComplexMatrix::Zero(2, 2);
  m(0, 1) = 1.0;
  EXPECT_THROW(herm_exp(m, 1.0), ContractError);
  EXPECT_THROW(herm_exp(ComplexMatrix::Zero(2, 3), 1.0), ContractError);
  EXPECT_LT((herm_exp(pauli::x(), 0.0) - pauli::identity()).cwiseAbs().maxCoeff(), 0.0 + 1e-300);
}

TEST(ProjectUnitary, RestoresUnitarity) {
  std::mt19937_64 rng(3);
  ComplexMatrix u = herm_exp(test::random_hermitian(8, rng), 1.3);
  const ComplexMatrix clean = u;
  u += 1e-7 * test::random_hermitian(8, rng);
  EXPECT_GT(unitarity_residual(u), 1e-8);
  const double c = project_unitary(u);
  EXPECT_LT(unitarity_residual(u), 1e-13);
  EXPECT_GT(c, 0.0);
  EXPECT_LT(c, 1e-6);
  EXPECT_LT((u - clean).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(DensityMatrix, Validation) {
  EXPECT_NO_THROW(DensityMatrix::maximally_mixed(4));
  EXPECT_THROW(DensityMatrix(ComplexMatrix::Identity(2, 2)), ContractError);  // trace 2
  ComplexMatrix neg(2, 2);
  neg << 1.5, 0.0, 0.0, -0.5;
  EXPECT_THROW(DensityMatrix{neg}, ContractError);
  ComplexMatrix nonherm(2, 2);
  nonherm << 0.5, 0.2, 0.0, 0.5;
  EXPECT_THROW(DensityMatrix{nonherm}, ContractError);
  EXPECT_THROW(expect(ComplexMatrix::Identity(2, 2), ComplexMatrix::Identity(4, 4)), ContractError);
}

TEST(Rotation, SpinRotationIdentityHoldsForRandomInputs) {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> g(0.0, 1.0);
  std::uniform_real_distribution<double> phi(-10.0, 10.0);
  for (int k = 0; k < 200; ++k) {
    const Vec3 axis = Vec3(g(rng), g(rng), g(rng)).normalized();
    const Vec3 b(g(rng), g(rng), g(rng));
    EXPECT_LT(rotate_spin_identity_check(axis, phi(rng), b), 1e-12);
  }
  EXPECT_THROW(rotate_spin_identity_check(Vec3(1.0, 1.0, 0.0), 0.3, Vec3::UnitZ()), ContractError);
}

TEST(Hermiticity, ResidualIsRelative) {
  ComplexMatrix m = 1e6 * pauli::x();
  m(0, 1) += 1e-9;
  EXPECT_TRUE(is_hermitian(m));
  EXPECT_FALSE(is_hermitian(ComplexMatrix::Identity(2, 3)));
}

TEST(HermExp, GroupPropertyAndDiagonalCase) {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 20; ++trial) {
    const ComplexMatrix h = test::random_hermitian(2 + trial % 15, rng, 3.0);
    const ComplexMatrix id = ComplexMatrix::Identity(h.rows(), h.cols());
    EXPECT_LT((herm_exp(h, 0.7) * herm_exp(h, -0.7) - id).cwiseAbs().maxCoeff(), 1e-10);
  }
  const double w = 2.5, t = 0.9;
  const ComplexMatrix u = herm_exp(pauli::z() * (w / 2), t);
  EXPECT_LT(std::abs(u(0, 0) - std::exp(Complex(0.0, -w * t / 2))), 1e-15);
  EXPECT_LT(std::abs(u(1, 1) - std::exp(Complex(0.0, w * t / 2))), 1e-15);
  EXPECT_EQ(u(0, 1), Complex(0.0));
}

TEST(Kron, AssociativeOnRandomTriples) {
  std::mt19937_64 rng(17);
  std::normal_distribution<double> g(0.0, 1.0);
  auto random2 = [&] {
    ComplexMatrix m(2, 2);
    for (Eigen::Index i = 0; i < 4; ++i) m(i / 2, i % 2) = Complex(g(rng), g(rng));
    return m;
  };
  for (int k = 0; k < 100; ++k) {
    const ComplexMatrix a = random2(), b = random2(), c = random2();
    EXPECT_LT((kron(kron(a, b), c) - kron(a, kron(b, c))).cwiseAbs().maxCoeff(), 1e-14);
  }
}

TEST(Rotation, QuarterTurnAboutZ) {
  EXPECT_EQ(rotate_spin_identity_check(Vec3::UnitZ(), 0.0, Vec3::UnitX()), 0.0);
  EXPECT_LT(rotate_spin_identity_check(Vec3::UnitZ(), kPi / 2, Vec3::UnitX()), 1e-10);
  // closed form for b = x̂ leaves only −ŷ
  const Vec3 l = Vec3::UnitZ(), b = Vec3::UnitX();
  const Vec3 r = (b - b.dot(l) * l) * std::cos(kPi / 2) - l.cross(b) * std::sin(kPi / 2) + b.dot(l) * l;
  EXPECT_LT((r + Vec3::UnitY()).norm(), 1e-15);
}

TEST(Expect, StandardStates) {
  const ComplexMatrix sx = kron(pauli::x(), pauli::identity());
  const DensityMatrix plus(kron(ket_plus() * ket_plus().adjoint(), pauli::identity() / 2.0));
  EXPECT_NEAR(expect(plus, sx), 1.0, 1e-15);
  EXPECT_NEAR(expect(DensityMatrix::maximally_mixed(4), sx), 0.0, 1e-15);
  ComplexVector zero = ComplexVector::Zero(2);
  zero(1) = 1.0;
  const DensityMatrix down(kron(zero * zero.adjoint(), pauli::identity() / 2.0));
  EXPECT_NEAR(expect(down, kron(pauli::z(), pauli::identity())), -1.0, 1e-15);
}
