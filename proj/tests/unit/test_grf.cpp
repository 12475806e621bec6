// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"
#include "pgda/error.hpp"
#include "pgda/grf.hpp"
#include "pgda/rng.hpp"

using namespace pgda;

TEST(Kernel, DiagonalAndPointValue) {
  const std::vector<std::array<double, 2>> pts = {{0.0, 0.0}, {0.2, 0.0}};
  const Tensor k = kernel_matrix(pts, 0.2);
  EXPECT_EQ(k.at(0, 0), 1.0);
  EXPECT_EQ(k.at(1, 1), 1.0);
  EXPECT_NEAR(k.at(0, 1), 0.6065306597126334, 1e-15);
}

TEST(Kernel, SymmetricExactly) {
  const GridSpec g{1, 5};
  const auto pts = g.points();
  const Tensor k = kernel_matrix(pts, 0.3);
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t j = 0; j < 5; ++j) EXPECT_EQ(k.at(i, j), k.at(j, i));
}

TEST(Kernel, TwoDimensionalUsesEuclideanDistance) {
  const std::vector<std::array<double, 2>> pts = {{0.0, 0.0}, {0.3, 0.4}};
  EXPECT_NEAR(kernel_matrix(pts, 0.5).at(0, 1), std::exp(-0.25 / 0.5), 1e-15);
}

TEST(Kernel, NonPositiveLengthScaleRejected) {
  const std::vector<std::array<double, 2>> pts = {{0.0, 0.0}};
  EXPECT_THROW(kernel_matrix(pts, 0.0), ParameterError);
  EXPECT_THROW(kernel_matrix(pts, -1.0), ParameterError);
}

TEST(Cholesky, IdentityAndHandFactor) {
  const Tensor eye = Tensor::matrix({{1, 0, 0}, {0, 1, 0}, {0, 0, 1}});
  EXPECT_EQ(cholesky(eye, 0.0).lower, eye);
  const Tensor l = cholesky(Tensor::matrix({{4, 2}, {2, 3}}), 0.0).lower;
  EXPECT_NEAR(l.at(0, 0), 2.0, 1e-15);
  EXPECT_NEAR(l.at(1, 0), 1.0, 1e-15);
  EXPECT_NEAR(l.at(1, 1), std::sqrt(2.0), 1e-15);
  EXPECT_EQ(l.at(0, 1), 0.0);
}

TEST(Cholesky, ReconstructsKernel) {
  const GridSpec g{1, 16};
  const Tensor k = kernel_matrix(g.points(), 0.2);
  const CholeskyResult r = cholesky(k, 1e-10);
  Tensor lt({16, 16});
  for (std::size_t i = 0; i < 16; ++i)
    for (std::size_t j = 0; j < 16; ++j) lt.at(i, j) = r.lower.at(j, i);
  const Tensor llt = oracle::matmul(r.lower, lt);
  double err = 0.0;
  for (std::size_t i = 0; i < 16; ++i)
    for (std::size_t j = 0; j < 16; ++j)
      err = std::max(err, std::abs(llt.at(i, j) - k.at(i, j) - (i == j ? r.jitter : 0.0)));
  EXPECT_LT(err, 1e-8);
}

TEST(Cholesky, EscalatesJitterOnSingularKernel) {
  const Tensor ones = Tensor::matrix({{1, 1, 1}, {1, 1, 1}, {1, 1, 1}});
  const CholeskyResult r = cholesky(ones, 0.0);
  EXPECT_GT(r.jitter, 0.0);
  EXPECT_LE(r.jitter, kMaxJitter);
}

TEST(Cholesky, IndefiniteMatrixNamesFinalJitter) {
  try {
    cholesky(Tensor::matrix({{1, 0}, {0, -1}}), 1e-10);
    FAIL();
  } catch (const NumericalError& e) {
    EXPECT_NE(std::string(e.what()).find("0.0001"), std::string::npos) << e.what();
  }
}

TEST(Grf, SameSeedBitIdentical) {
  const GrfConfig c{0.0, 0.2, {1, 32}, 1e-10};
  EXPECT_EQ(sample(c, 42).values, sample(c, 42).values);
  EXPECT_NE(sample(c, 42).values, sample(c, 43).values);
}

TEST(Grf, LongLengthScaleIsNearlyConstant) {
  const GrfSampler s(GrfConfig{0.0, 100.0, {1, 32}, 1e-10});
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto v = s.sample(seed).values.vec();
    EXPECT_LT(*std::max_element(v.begin(), v.end()) - *std::min_element(v.begin(), v.end()), 0.05);
  }
}

TEST(Grf, MeanOfShiftedField) {
  const GrfSampler s(GrfConfig{10.0, 0.2, {1, 32}, 1e-10});
  double total = 0.0;
  for (std::uint64_t seed = 0; seed < 2000; ++seed) {
    const auto v = s.sample(derive_seed(7, seed_tag::sample, seed)).values.vec();
    for (double x : v) total += x;
  }
  EXPECT_NEAR(total / (2000.0 * 32.0), 10.0, 0.1);
}

TEST(Grf, TwoDimensionalSampleShape) {
  const GridFunction f = sample(GrfConfig{1.0, 0.2, {2, 8}, 1e-10}, 3);
  EXPECT_EQ(f.values.shape(), (Shape{8, 8}));
}

TEST(Grf, ConfigValidation) {
  EXPECT_THROW((GrfConfig{0.0, 0.0, {1, 32}, 1e-10}.validate()), ParameterError);
  EXPECT_THROW((GrfConfig{0.0, 0.2, {1, 32}, -1.0}.validate()), ParameterError);
  EXPECT_THROW((GrfConfig{0.0, 0.2, {1, 1}, 0.0}.validate()), ParameterError);
}

TEST(Rng, UniformAndNormalMoments) {
  Rng r(123);
  double s = 0, s2 = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double z = r.normal();
    s += z;
    s2 += z * z;
  }
  EXPECT_NEAR(s / n, 0.0, 0.01);
  EXPECT_NEAR(s2 / n, 1.0, 0.02);
  for (int i = 0; i < 1000; ++i) {
    const double u = r.uniform();
    EXPECT_GE(u, 0.0);
    EXPECT_LT(u, 1.0);
  }
}

TEST(Rng, DeriveSeedSeparatesTagsAndIndices) {
  EXPECT_NE(derive_seed(1, seed_tag::train_data, 0), derive_seed(1, seed_tag::test_data, 0));
  EXPECT_NE(derive_seed(1, seed_tag::sample, 0), derive_seed(1, seed_tag::sample, 1));
  EXPECT_EQ(derive_seed(9, seed_tag::init, 4), derive_seed(9, seed_tag::init, 4));
  EXPECT_EQ(mix64(0), 0xe220a8397b1dcdafULL);
}
