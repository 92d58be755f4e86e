#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>
#include <cmath>

#include "dense_oracle.hpp"
#include "stgp/markov_kernels.hpp"
#include "test_util.hpp"

namespace stgp {
namespace {

const MaternOrder kAllOrders[] = {MaternOrder::kHalf, MaternOrder::kThreeHalves,
                                  MaternOrder::kFiveHalves};

TEST(TemporalKernel, MaternHalfUnit) {
  const auto k = build_temporal_ss(MaternOrder::kHalf, 1.0, 1.0);
  EXPECT_DOUBLE_EQ(k.feedback(0, 0), -1.0);
  EXPECT_DOUBLE_EQ(k.stationary_cov(0, 0), 1.0);
  EXPECT_DOUBLE_EQ(k.spectral_density, 2.0);
}

TEST(TemporalKernel, MaternThreeHalvesStationaryCov) {
  const auto k = build_temporal_ss(MaternOrder::kThreeHalves, 2.0, 0.5);
  EXPECT_NEAR(k.stationary_cov(0, 0), 2.0, 1e-12);
  EXPECT_NEAR(k.stationary_cov(1, 1), 24.0, 1e-12);
  EXPECT_DOUBLE_EQ(k.stationary_cov(0, 1), 0.0);
  const auto unit = build_temporal_ss(MaternOrder::kThreeHalves, 1.0, 1.0);
  EXPECT_NEAR((unit.measurement * unit.stationary_cov * unit.measurement.transpose())(0, 0), 1.0, 1e-12);
}

TEST(TemporalKernel, LyapunovMarginalVarianceAndStability) {
  for (MaternOrder order : kAllOrders) {
    for (double var : {0.3, 1.0, 2.5}) {
      for (double ell : {0.1, 1.0, 4.0}) {
        const auto k = build_temporal_ss(order, var, ell);
        const Matrix lyap = k.feedback * k.stationary_cov + k.stationary_cov * k.feedback.transpose() +
                            k.spectral_density * k.noise_effect * k.noise_effect.transpose();
        EXPECT_LE(lyap.cwiseAbs().maxCoeff(), 1e-8 * std::max(1.0, k.stationary_cov.cwiseAbs().maxCoeff()));
        EXPECT_NEAR((k.measurement * k.stationary_cov * k.measurement.transpose())(0, 0), var, 1e-10);
        const Eigen::EigenSolver<Matrix> es(k.feedback);
        EXPECT_LT(es.eigenvalues().real().maxCoeff(), 0.0);
      }
    }
  }
}

TEST(TemporalKernel, RejectsNonPositiveHyperparameters) {
  EXPECT_THROW(build_temporal_ss(MaternOrder::kHalf, 0.0, 1.0), DomainError);
  EXPECT_THROW(build_temporal_ss(MaternOrder::kHalf, 1.0, -1.0), DomainError);
}

TEST(TemporalKernel, UnknownFamilyNameIsUnsupported) {
  EXPECT_THROW(parse_matern_order("rbf"), UnsupportedKernelError);
  EXPECT_EQ(parse_matern_order("matern52"), MaternOrder::kFiveHalves);
  EXPECT_EQ(parse_matern_order(to_string(MaternOrder::kHalf)), MaternOrder::kHalf);
}

TEST(Discretize, ZeroStep) {
  for (MaternOrder order : kAllOrders) {
    const auto d = discretize(build_temporal_ss(order, 1.3, 0.7), 0.0);
    EXPECT_TRUE(d.transition.isIdentity(0.0));
    EXPECT_TRUE(d.process_noise.isZero(0.0));
  }
}

TEST(Discretize, MaternHalfLogTwo) {
  const auto d = discretize(build_temporal_ss(MaternOrder::kHalf, 1.0, 1.0), std::log(2.0));
  EXPECT_NEAR(d.transition(0, 0), 0.5, 1e-15);
  EXPECT_NEAR(d.process_noise(0, 0), 0.75, 1e-15);
}

TEST(Discretize, MatchesTaylorExponential) {
  for (MaternOrder order : kAllOrders) {
    for (double dt : {0.01, 0.1, 0.7, 3.0}) {
      const auto k = build_temporal_ss(order, 1.0, 1.0);
      const Matrix ref = oracle::taylor_expm(k.feedback * dt);
      EXPECT_LE((discretize(k, dt).transition - ref).cwiseAbs().maxCoeff(), 1e-10)
          << to_string(order) << " dt=" << dt;
    }
  }
}

TEST(Discretize, ProcessNoiseIsPsdAndSemigroupHolds) {
  for (MaternOrder order : kAllOrders) {
    const auto k = build_temporal_ss(order, 1.7, 0.4);
    for (double d1 : {0.05, 0.3}) {
      for (double d2 : {0.02, 0.9}) {
        const Matrix a12 = discretize(k, d1 + d2).transition;
        const Matrix a2a1 = discretize(k, d2).transition * discretize(k, d1).transition;
        EXPECT_LE((a12 - a2a1).cwiseAbs().maxCoeff(), 1e-10);
      }
      const Eigen::SelfAdjointEigenSolver<Matrix> es(discretize(k, d1).process_noise);
      EXPECT_GE(es.eigenvalues().minCoeff(), -1e-12);
    }
  }
}

TEST(Discretize, NegativeStepRejected) {
  EXPECT_THROW(discretize(build_temporal_ss(MaternOrder::kHalf, 1.0, 1.0), -0.1), DomainError);
}

TEST(TemporalKernel, StateSpaceCovarianceMatchesDirectKernel) {
  for (MaternOrder order : kAllOrders) {
    const double ell = 0.8;
    const auto k = build_temporal_ss(order, 1.4, ell);
    for (double tau = 0.0; tau <= 5.0 * ell; tau += 0.25 * ell) {
      const Matrix a = oracle::taylor_expm(k.feedback * tau);
      const double ss = (k.measurement * a * k.stationary_cov * k.measurement.transpose())(0, 0);
      EXPECT_NEAR(ss, 1.4 * oracle::matern(order, tau / ell), 1e-8) << to_string(order) << " tau=" << tau;
      EXPECT_NEAR(temporal_kernel(k, -tau), ss, 1e-8);
    }
  }
}

TEST(SpatialGram, ClosedFormEntries) {
  SpatialKernel ks{MaternOrder::kHalf, Vector::Ones(1)};
  Matrix a(1, 1), b(1, 1);
  a << 0.0;
  b << 1.0;
  EXPECT_DOUBLE_EQ(spatial_gram(ks, a, a)(0, 0), 1.0);
  EXPECT_NEAR(spatial_gram(ks, a, b)(0, 0), 0.36787944117144233, 1e-15);
  ks.family = MaternOrder::kThreeHalves;
  EXPECT_NEAR(spatial_gram(ks, a, b)(0, 0), (1.0 + std::sqrt(3.0)) * std::exp(-std::sqrt(3.0)), 1e-15);
  EXPECT_NEAR(spatial_gram(ks, a, b)(0, 0), 0.4833577245965077, 1e-15);
}

TEST(SpatialGram, SymmetricUnitDiagonalAndDimensionChecked) {
  testing::Rng rng(2);
  const Matrix s = testing::random_sites(rng, 6, 2);
  SpatialKernel ks{MaternOrder::kFiveHalves, Vector::Constant(2, 0.4)};
  const Matrix g = spatial_gram(ks, s, s);
  EXPECT_TRUE(g.isApprox(g.transpose(), 0.0));
  EXPECT_TRUE(g.diagonal().isOnes(0.0));
  EXPECT_THROW(spatial_gram(ks, s, Matrix::Zero(2, 3)), DimensionError);
}

TEST(Assemble, SingleSiteIsPureTemporal) {
  const auto kt = build_temporal_ss(MaternOrder::kThreeHalves, 1.5, 0.6);
  SpatialKernel ks{MaternOrder::kHalf, Vector::Ones(1)};
  const Vector t = (Vector(3) << 0.0, 0.3, 1.0).finished();
  const auto m = assemble_full(kt, ks, Matrix::Zero(1, 1), t);
  EXPECT_TRUE(m.noises[0].isApprox(kt.stationary_cov));
  EXPECT_TRUE(m.transitions[2].isApprox(discretize(kt, 0.7).transition));
  EXPECT_TRUE(m.noises[1].isApprox(discretize(kt, 0.3).process_noise));
  EXPECT_TRUE(m.measurement.isApprox(kt.measurement));
  EXPECT_TRUE(m.initial_mean.isZero(0.0));
}

TEST(Assemble, TwoSitesHandComputedNoise) {
  const auto kt = build_temporal_ss(MaternOrder::kHalf, 1.0, 1.0);
  SpatialKernel ks{MaternOrder::kHalf, Vector::Ones(1)};
  const Matrix s = (Matrix(2, 1) << 0.0, 1.0).finished();
  const Vector t = (Vector(2) << 0.0, std::log(2.0)).finished();
  const auto m = assemble_full(kt, ks, s, t);
  Matrix expected(2, 2);
  expected << 0.75, 0.75 * std::exp(-1.0), 0.75 * std::exp(-1.0), 0.75;
  EXPECT_LE((m.noises[1] - expected).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_EQ(m.state_dim(), 2);
}

TEST(Assemble, FarApartSitesGiveDiagonalNoise) {
  const auto kt = build_temporal_ss(MaternOrder::kHalf, 1.0, 1.0);
  SpatialKernel ks{MaternOrder::kHalf, Vector::Ones(1)};
  const Matrix s = (Matrix(2, 1) << 0.0, 1e4).finished();
  const auto m = assemble_full(kt, ks, s, (Vector(2) << 0.0, 0.5).finished());
  EXPECT_EQ(m.noises[1](0, 1), 0.0);
}

TEST(Assemble, SparseMatchesKronAndFullWhenZEqualsS) {
  testing::Rng rng(8);
  const auto kt = build_temporal_ss(MaternOrder::kFiveHalves, 0.9, 0.5);
  SpatialKernel ks{MaternOrder::kThreeHalves, Vector::Constant(2, 0.7)};
  const Matrix z = testing::random_sites(rng, 3, 2);
  const Vector t = testing::random_times(rng, 4);
  const auto sp = assemble_sparse(kt, ks, z, t);
  const auto full = assemble_full(kt, ks, z, t);
  EXPECT_EQ(sp.state_dim(), 9);
  const Matrix gram = spatial_gram(ks, z, z);
  for (Index n = 1; n < 4; ++n) {
    const Matrix expected = oracle::kron(gram, discretize(kt, t(n) - t(n - 1)).process_noise);
    EXPECT_LE((sp.noises[n] - expected).cwiseAbs().maxCoeff(), 1e-14);
    EXPECT_EQ(sp.noises[n], full.noises[n]);
    EXPECT_EQ(sp.transitions[n], full.transitions[n]);
  }
}

TEST(Assemble, SingleInducingPointIsTemporal) {
  const auto kt = build_temporal_ss(MaternOrder::kThreeHalves, 1.0, 1.0);
  SpatialKernel ks{MaternOrder::kThreeHalves, Vector::Ones(1)};
  const auto m = assemble_sparse(kt, ks, Matrix::Constant(1, 1, 0.3), (Vector(2) << 0.0, 0.2).finished());
  EXPECT_TRUE(m.noises[1].isApprox(discretize(kt, 0.2).process_noise));
}

TEST(Assemble, RejectsDuplicateTimes) {
  const auto kt = build_temporal_ss(MaternOrder::kHalf, 1.0, 1.0);
  SpatialKernel ks{MaternOrder::kHalf, Vector::Ones(1)};
  EXPECT_THROW(assemble_full(kt, ks, Matrix::Zero(1, 1), (Vector(2) << 1.0, 1.0).finished()), DomainError);
}

}  // namespace
}  // namespace stgp
