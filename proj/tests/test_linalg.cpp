#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "toponym/linalg.hpp"

using namespace toponym;

TEST(Affine, IdentityReturnsInput) {
  const Vector x{1, 2, 3};
  EXPECT_EQ(affine(Matrix::identity(3), x, Vector(3)), x);
}

TEST(Affine, ZeroWeightsReturnBias) {
  const Matrix w(2, 3);
  EXPECT_EQ(affine(w, Vector{7, -1, 9}, Vector{4, 5}), (Vector{4, 5}));
}

TEST(Affine, HandMultiplication) {
  const Matrix w{{1, 2}, {3, 4}};
  EXPECT_EQ(affine(w, Vector{1, 1}, Vector{1, 1}), (Vector{4, 8}));
}

TEST(Affine, DimensionMismatchRejected) {
  EXPECT_THROW(affine(Matrix(2, 3), Vector(2), Vector(2)), InvalidInput);
  EXPECT_THROW(affine(Matrix(2, 3), Vector(3), Vector(3)), InvalidInput);
}

TEST(Affine, Linearity) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-2, 2);
  for (int trial = 0; trial < 100; ++trial) {
    Matrix w(4, 6);
    for (auto& v : w.span()) v = u(rng);
    Vector x(6), y(6);
    for (auto& v : x) v = u(rng);
    for (auto& v : y) v = u(rng);
    const double a = u(rng), b = u(rng);
    Vector mix(6);
    for (std::size_t i = 0; i < 6; ++i) mix[i] = a * x[i] + b * y[i];
    const Vector lhs = affine(w, mix, Vector(4));
    const Vector fx = affine(w, x, Vector(4));
    const Vector fy = affine(w, y, Vector(4));
    for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(lhs[i], a * fx[i] + b * fy[i], 1e-9);
  }
}

TEST(Relu, SignCases) {
  EXPECT_EQ(relu(Vector{-1, 0, 2}), (Vector{0, 0, 2}));
  EXPECT_EQ(relu(Vector(4)), Vector(4));
  EXPECT_EQ(relu(Vector{5, 7}), (Vector{5, 7}));
}

TEST(Relu, Idempotent) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n;
  for (int trial = 0; trial < 100; ++trial) {
    Vector v(10);
    for (auto& e : v) e = n(rng);
    EXPECT_EQ(relu(relu(v)), relu(v));
  }
}

TEST(Softmax, Symmetric) {
  const Vector p = softmax(Vector{0, 0});
  EXPECT_DOUBLE_EQ(p[0], 0.5);
  EXPECT_DOUBLE_EQ(p[1], 0.5);
}

TEST(Softmax, HandEvaluation) {
  const Vector p = softmax(Vector{std::log(1.0), std::log(3.0)});
  EXPECT_NEAR(p[0], 0.25, 1e-15);
  EXPECT_NEAR(p[1], 0.75, 1e-15);
}

TEST(Softmax, ShiftInvariance) {
  const Vector base = softmax(Vector{0.0, 1.7});
  for (double t : {-100.0, -3.5, 0.25, 42.0, 100.0}) {
    const Vector p = softmax(Vector{t, t + 1.7});
    EXPECT_NEAR(p[0], base[0], 1e-12);
    EXPECT_NEAR(p[1], base[1], 1e-12);
  }
}

TEST(Softmax, LargeInputsDoNotOverflow) {
  const Vector p = softmax(Vector{1000.0, 1000.0});
  EXPECT_DOUBLE_EQ(p[0], 0.5);
  EXPECT_TRUE(p.all_finite());
}

TEST(Softmax, EmptyRejected) { EXPECT_THROW(softmax(Vector()), InvalidInput); }

TEST(Matrix, RaggedLiteralRejected) {
  EXPECT_THROW((Matrix{{1, 2}, {3}}), InvalidInput);
}
