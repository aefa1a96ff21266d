#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "hkid/kernel.hpp"
#include "oracles.hpp"

namespace hkid {
namespace {

TEST(Gamma, ExactValues) {
  EXPECT_DOUBLE_EQ(gamma(1.0), 1.0);
  EXPECT_NEAR(gamma(5.0), 24.0, 24.0 * 1e-14);
  EXPECT_NEAR(gamma(0.5), std::sqrt(std::numbers::pi), 1e-15);
  EXPECT_NEAR(gamma(0.5), 1.7724538509055160, 1e-15);
}

TEST(Gamma, RejectsNonPositive) {
  EXPECT_THROW(gamma(0.0), DomainError);
  EXPECT_THROW(gamma(-1.5), DomainError);
  EXPECT_THROW(gamma(NAN), DomainError);
}

TEST(Gamma, RecurrenceProperty) {
  auto g = oracle::rng();
  for (int k = 0; k < 500; ++k) {
    const double x = oracle::uniform(g, 1e-3, 49.0);
    const double lhs = gamma(x + 1.0);
    const double rhs = x * gamma(x);
    EXPECT_NEAR(lhs, rhs, 1e-12 * std::abs(lhs)) << "x=" << x;
  }
}

TEST(Gamma, AgreesWithMultiprecisionOnRange) {
  for (double z = 0.05; z <= 50.0; z += 0.37) {
    const double ref = static_cast<double>(boost::math::tgamma(oracle::big(z)));
    EXPECT_NEAR(gamma(z), ref, 1e-12 * ref) << "z=" << z;
  }
}

TEST(LogGamma, MatchesBothBranches) {
  for (double z : {0.3, 7.0, 99.0, 100.0, 150.0, 400.0}) {
    const double ref = static_cast<double>(log(boost::math::tgamma(oracle::big(z))));
    EXPECT_NEAR(log_gamma(z), ref, 1e-13 * std::max(1.0, std::abs(ref))) << "z=" << z;
  }
}

TEST(CreepKernel, BetaZeroIsSingleTerm) {
  const auto r = creep_kernel({0.5, 0.0, 1.0}, 4.0);
  EXPECT_NEAR(r.value, 0.28209479177387814, 1e-15);
  EXPECT_EQ(r.terms, 1);
}

TEST(CreepKernel, BetaZeroCollapseProperty) {
  auto g = oracle::rng(7);
  for (int k = 0; k < 200; ++k) {
    const double alpha = oracle::uniform(g, 0.01, 0.99);
    const double s = oracle::uniform(g, 1e-3, 100.0);
    const double expected = std::pow(s, -alpha) / std::tgamma(1.0 - alpha);
    EXPECT_NEAR(creep_kernel({alpha, 0.0, 1.0}, s).value, expected, 1e-13 * expected);
  }
}

TEST(CreepKernel, ExponentialLimit) {
  EXPECT_NEAR(creep_kernel({1e-6, 1.0, 1.0}, 2.0).value, std::exp(-2.0), 1e-5);
  for (double beta : {0.5, 1.0, 2.0}) {
    for (double s = 0.1; s <= 10.0 + 1e-12; s += 0.1) {
      EXPECT_NEAR(creep_kernel({1e-6, beta, 1.0}, s).value, std::exp(-beta * s), 1e-3) << beta << " " << s;
    }
  }
}

TEST(CreepKernel, MatchesHighPrecisionSeries) {
  const double ref = oracle::rabotnov_series_hp(0.5, 0.1, 1.0);
  const auto r = creep_kernel({0.5, 0.1, 1.0}, 1.0);
  EXPECT_NEAR(r.value, ref, 1e-12 * std::abs(ref));
  EXPECT_GT(r.terms, 1);
  EXPECT_LE(r.last_term, 1e-12);
  EXPECT_FALSE(r.precision_loss);
}

TEST(CreepKernel, DomainAndConvergenceErrors) {
  EXPECT_THROW(creep_kernel({0.5, 0.1, 1.0}, 0.0), DomainError);
  EXPECT_THROW(creep_kernel({0.5, 0.1, 1.0}, -1.0), DomainError);
  EXPECT_THROW(creep_kernel({0.0, 0.1, 1.0}, 1.0), DomainError);
  EXPECT_THROW(creep_kernel({1.0, 0.1, 1.0}, 1.0), DomainError);
  EXPECT_THROW(creep_kernel({0.5, -0.1, 1.0}, 1.0), DomainError);
  try {
    creep_kernel({0.5, 5.0, 1.0}, 10.0, {3, 1e-12});
    FAIL() << "expected ConvergenceError";
  } catch (const ConvergenceError& e) {
    EXPECT_GT(e.last_term(), 1e-12);
    EXPECT_EQ(e.exit_code(), 3);
  }
}

TEST(CreepKernel, FlagsCancellation) {
  // β s^(1-α) = 6: terms reach ~1e15 while the sum is O(1e-2)
  const auto r = creep_kernel({0.5, 2.0, 1.0}, 9.0);
  EXPECT_GT(r.max_term, 1e12 * std::abs(r.value));
  EXPECT_TRUE(r.precision_loss);
  const auto mild = creep_kernel({0.5, 0.1, 1.0}, 5.0);
  EXPECT_FALSE(mild.precision_loss);
}

TEST(RelaxationKernel, Examples) {
  EXPECT_NEAR(relaxation_kernel({0.5, 0.0, 0.0}, 4.0).value, 0.28209479177387814, 1e-15);
  EXPECT_DOUBLE_EQ(relaxation_kernel({0.5, 0.1, 0.2}, 1.0).value, creep_kernel({0.5, 0.3, 0.0}, 1.0).value);
  EXPECT_NEAR(relaxation_kernel({1e-6, 0.5, 0.5}, 1.0).value, 0.36787944117144233, 1e-5);
}

TEST(RelaxationKernel, SubstitutionIdentityProperty) {
  auto g = oracle::rng(11);
  for (int k = 0; k < 200; ++k) {
    const KernelParams p{oracle::uniform(g, 0.05, 0.6), oracle::uniform(g, 0.0, 0.75), oracle::uniform(g, 0.0, 0.75)};
    const double s = oracle::uniform(g, 0.01, 5.0);
    EXPECT_EQ(relaxation_kernel(p, s).value, creep_kernel({p.alpha, p.beta + p.lambda, 0.0}, s).value);
  }
}

TEST(CreepKernelIntegral, Examples) {
  EXPECT_EQ(creep_kernel_integral({0.5, 0.1, 1.0}, 0.0).value, 0.0);
  EXPECT_NEAR(creep_kernel_integral({0.5, 0.0, 1.0}, 4.0).value, 2.256758334191025, 1e-14);
  EXPECT_THROW(creep_kernel_integral({0.5, 0.1, 1.0}, -1.0), DomainError);
}

TEST(CreepKernelIntegral, MatchesQuadratureOfKernel) {
  const KernelParams p{0.5, 0.1, 1.0};
  // split at 1e-3 near the singular endpoint
  const auto k = [&](double s) { return creep_kernel(p, s).value; };
  const double quad = oracle::integrate(k, 0.0, 1e-3) + oracle::integrate(k, 1e-3, 2.0);
  EXPECT_NEAR(creep_kernel_integral(p, 2.0).value, quad, 1e-10 * quad);
  EXPECT_NEAR(creep_kernel_integral(p, 2.0).value, oracle::rabotnov_integral_hp(0.5, 0.1, 2.0), 1e-13);
}

TEST(CreepKernelIntegral, DerivativeIsKernelSecondOrder) {
  const KernelParams p{0.4, 0.3, 1.0};
  for (double t = 0.5; t <= 10.0; t += 0.5) {
    double prev_err = INFINITY;
    for (double h : {1e-2, 5e-3, 2.5e-3}) {
      const double fd = (creep_kernel_integral(p, t + h).value - creep_kernel_integral(p, t - h).value) / (2 * h);
      const double err = std::abs(fd - creep_kernel(p, t).value);
      if (std::isfinite(prev_err)) {
        // O(h²): halving h cuts the error by ~4
        EXPECT_LT(err, prev_err / 3.0) << "t=" << t << " h=" << h;
      }
      prev_err = err;
    }
    EXPECT_LT(prev_err, 1e-5);
  }
}

TEST(CreepKernel, MonotoneTruncation) {
  auto g = oracle::rng(3);
  for (int k = 0; k < 100; ++k) {
    const KernelParams p{oracle::uniform(g, 0.1, 0.9), oracle::uniform(g, 0.0, 0.5), 1.0};
    const double s = oracle::uniform(g, 0.1, 5.0);
    const SeriesControl ctl{500, 1e-10};
    const double base = creep_kernel(p, s, ctl).value;
    for (int extra : {600, 1000}) {
      EXPECT_NEAR(creep_kernel(p, s, {extra, 1e-10}).value, base, 1e-10);
    }
    EXPECT_NEAR(creep_kernel(p, s, {500, 1e-15}).value, base, 1e-10);
  }
}

}  // namespace
}  // namespace hkid
