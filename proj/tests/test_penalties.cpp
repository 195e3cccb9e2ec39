#include <gtest/gtest.h>

#include "mhq/penalties.hpp"
#include "support/oracles.hpp"

using namespace mhq;

namespace {

std::vector<Penalty> all_penalties() {
  std::vector<Penalty> out;
  for (double eps : {0.1, 0.5, 1.0, 2.0}) {
    out.emplace_back(PenaltyKind::SqrtEps, eps);
    out.emplace_back(PenaltyKind::Huber, eps);
    out.emplace_back(PenaltyKind::ExpNeg, eps);
  }
  return out;
}

std::string label(const Penalty& p) { return std::string(to_string(p.kind())) + " eps=" + std::to_string(p.eps()); }

}  // namespace

TEST(Penalty, TableValues) {
  EXPECT_NEAR(Penalty(PenaltyKind::SqrtEps, 0.1).phi(0.0), 0.1, 1e-15);
  EXPECT_NEAR(Penalty(PenaltyKind::Huber, 0.5).phi(1.0), 0.375, 1e-15);
  EXPECT_EQ(Penalty(PenaltyKind::ExpNeg, 1.0).phi(0.0), 0.0);
}

TEST(Penalty, Weights) {
  EXPECT_NEAR(Penalty(PenaltyKind::SqrtEps, 0.1).weight(0.0), 10.0, 1e-12);
  EXPECT_NEAR(Penalty(PenaltyKind::Huber, 0.5).weight(1.0), 0.5, 1e-15);
  EXPECT_NEAR(Penalty(PenaltyKind::ExpNeg, 1.0).weight(0.0), 1.0, 1e-15);
  EXPECT_THROW(Penalty(PenaltyKind::SqrtEps, 0.1).weight(-1e-3), ValidationError);
}

TEST(Penalty, HuberBranchesMeetAtEps) {
  const Penalty p(PenaltyKind::Huber, 0.5);
  EXPECT_NEAR(p.phi(0.5), 0.125, 1e-15);
  EXPECT_NEAR(p.phi(std::nextafter(0.5, 0.0)), 0.125, 1e-15);
  EXPECT_EQ(p.weight(0.5), 1.0);
}

TEST(Penalty, RejectsBadEps) {
  EXPECT_THROW(Penalty(PenaltyKind::SqrtEps, 0.0), ValidationError);
  EXPECT_THROW(Penalty(PenaltyKind::Huber, -1.0), ValidationError);
  EXPECT_THROW(Penalty(PenaltyKind::ExpNeg, std::numeric_limits<double>::infinity()), ValidationError);
  EXPECT_THROW(parse_penalty_kind("phi4"), ValidationError);
  EXPECT_EQ(parse_penalty_kind("phi2"), PenaltyKind::Huber);
}

TEST(Penalty, EvenAndNonnegative) {
  for (const auto& p : all_penalties()) {
    for (double t = 0.0; t < 20.0; t += 0.37) {
      EXPECT_EQ(p.phi(t), p.phi(-t)) << label(p);
      EXPECT_GE(p.phi(t), 0.0) << label(p);
    }
  }
}

TEST(Penalty, DerivativeMatchesCentralDifference) {
  for (const auto& p : all_penalties()) {
    for (double t = -5.0; t <= 5.0; t += 0.173) {
      if (p.kind() == PenaltyKind::Huber && std::abs(std::abs(t) - p.eps()) < 1e-4) continue;
      const double fd = oracle::central_difference([&](double h) { return p.phi(t + h); }, 1e-6);
      EXPECT_NEAR(p.phi_prime(t), fd, 1e-7) << label(p) << " t=" << t;
    }
  }
}

TEST(Penalty, CurvatureAtZeroIsTheNumericLimit) {
  for (const auto& p : all_penalties()) {
    const double t = 1e-7;
    EXPECT_NEAR(p.curvature_at_zero(), p.phi_prime(t) / t, 1e-6) << label(p);
  }
  EXPECT_EQ(Penalty(PenaltyKind::SqrtEps, 0.25).curvature_at_zero(), 4.0);
  EXPECT_EQ(Penalty(PenaltyKind::Huber, 0.25).curvature_at_zero(), 1.0);
  EXPECT_EQ(Penalty(PenaltyKind::ExpNeg, 0.5).curvature_at_zero(), 0.5);
}

TEST(Penalty, WeightsFollowTheTable) {
  for (const auto& p : all_penalties()) {
    const double e = p.eps();
    for (double t = 0.0; t < 10.0; t += 0.13) {
      double want = 0.0;
      switch (p.kind()) {
        case PenaltyKind::SqrtEps: want = 1.0 / std::sqrt(t * t + e * e); break;
        case PenaltyKind::Huber: want = t < e ? 1.0 : e / t; break;
        case PenaltyKind::ExpNeg: want = e * e * std::exp(-e * e * t * t); break;
      }
      EXPECT_NEAR(p.weight(t), want, 1e-14 * p.max_weight()) << label(p);
    }
  }
}

TEST(Penalty, WeightPositiveNonincreasingBounded) {
  for (const auto& p : all_penalties()) {
    double prev = p.weight(0.0);
    for (double t = 0.0; t < 8.0; t += 0.01) {
      const double w = p.weight(t);
      EXPECT_GT(w, 0.0) << label(p);
      EXPECT_LE(w, prev) << label(p);
      EXPECT_LE(w, p.max_weight()) << label(p);
      prev = w;
    }
  }
}

TEST(Penalty, WeightIsContinuous) {
  for (const auto& p : all_penalties()) {
    for (double t : {0.05, 0.1, 0.5, 1.0, 2.0, 3.0}) {
      EXPECT_NEAR(p.weight(t * (1 - 1e-12)), p.weight(t * (1 + 1e-12)), 1e-8) << label(p) << " t=" << t;
    }
  }
}

TEST(Penalty, PhiOfSqrtIsConcaveForConvexPenalties) {
  for (const auto& p : all_penalties()) {
    if (p.kind() == PenaltyKind::ExpNeg) continue;
    const double h = 1e-3;
    for (double t = h; t < 10.0; t += 0.011) {
      const double d2 = p.phi(std::sqrt(t + h)) - 2.0 * p.phi(std::sqrt(t)) + p.phi(std::sqrt(t - h));
      EXPECT_LE(d2, 1e-10) << label(p) << " t=" << t;
    }
  }
}

TEST(Penalty, GrowsSubquadratically) {
  for (const auto& p : all_penalties()) {
    EXPECT_LT(p.phi(1e6) / 1e12, 1e-4) << label(p);
  }
}

TEST(Penalty, RegularizerConvention) {
  for (const auto& p : all_penalties()) {
    for (double t = 0.01; t < 10.0; t *= 1.7) {
      EXPECT_NEAR(p.regularizer_prime(t) / (2.0 * t), p.weight(t), 1e-12 * p.max_weight()) << label(p);
      EXPECT_NEAR(p.regularizer(t), p.regularizer_scale() * p.phi(t), 1e-15);
    }
  }
}

TEST(Penalty, ConjugateMatchesBruteForceInfimum) {
  for (const auto& p : all_penalties()) {
    for (double frac : {0.01, 0.1, 0.3, 0.7, 0.99, 1.0, 1.5}) {
      const double s = frac * p.max_weight();
      const double brute = oracle::grid_minimum([&](double t) { return t * t * s - p.regularizer(t); }, 0.0,
                                                frac < 1.0 ? 3.0 * (1.0 + p.eps()) / s + 10.0 / p.eps() : 1.0, 400000);
      EXPECT_NEAR(p.conjugate(s), brute, 1e-5 * std::max(1.0, std::abs(brute))) << label(p) << " s=" << s;
    }
    EXPECT_EQ(p.conjugate(0.0), -std::numeric_limits<double>::infinity());
  }
}

TEST(Penalty, YoungInequalityForTheConjugate) {
  for (const auto& p : all_penalties()) {
    for (double t = 0.0; t < 5.0; t += 0.29) {
      for (double frac = 0.02; frac < 1.2; frac += 0.07) {
        const double s = frac * p.max_weight();
        EXPECT_LE(p.regularizer(t) + p.conjugate(s), t * t * s + 1e-9 * std::max(1.0, t * t * s)) << label(p);
      }
      const double s = p.weight(t);
      EXPECT_NEAR(p.regularizer(t) + p.conjugate(s), t * t * s, 1e-9 * std::max(1.0, p.regularizer(t))) << label(p);
    }
  }
}

TEST(CTransform, WorkedExamples) {
  {
    const auto r = c_transform_check(Penalty(PenaltyKind::SqrtEps, 0.1), Coupling::multiplicative(), {1.0});
    EXPECT_LT(r.max_residual(), 1e-6);
    EXPECT_TRUE(r.passed);
  }
  {
    const auto r = c_transform_check(Penalty(PenaltyKind::Huber, 0.5), Coupling::additive(2.0), {0.0});
    EXPECT_EQ(r.entries[0].s, 0.0);
    EXPECT_LT(r.max_residual(), 1e-6);
  }
  {
    const Penalty p(PenaltyKind::ExpNeg, 0.7);
    const auto r = c_transform_check(p, Coupling::multiplicative(), {0.0});
    EXPECT_NEAR(r.entries[0].s, 0.49, 1e-15);
    EXPECT_LT(r.max_residual(), 1e-6);
  }
}

TEST(CTransform, YoungInequalityNumeric) {
  for (const auto& p : {Penalty(PenaltyKind::SqrtEps, 0.5), Penalty(PenaltyKind::Huber, 0.5),
                        Penalty(PenaltyKind::ExpNeg, 0.5)}) {
    const auto c = Coupling::multiplicative();
    for (double t = 0.0; t <= 3.0; t += 0.5) {
      for (double s = 0.05; s < 1.5; s += 0.2) {
        EXPECT_LE(p.phi(t) + c_transform_numeric(p, c, s), c(t, s) + 1e-6) << label(p);
      }
      const double st = dual_minimizer(p, c, t);
      EXPECT_NEAR(p.phi(t) + c_transform_numeric(p, c, st), c(t, st), 1e-6) << label(p);
    }
  }
}

TEST(CTransform, ClosedFormConjugateAgreesWithTheNumericOne) {
  // For the multiplicative coupling psi_phi(s) = psi_rho(k s) / k with rho = k phi.
  for (const auto& p : all_penalties()) {
    const double k = p.regularizer_scale();
    for (double frac : {0.05, 0.3, 0.8}) {
      const double s = frac * p.max_weight() / k;
      EXPECT_NEAR(c_transform_numeric(p, Coupling::multiplicative(), s, 100.0, 20000), p.conjugate(k * s) / k, 1e-6)
          << label(p);
    }
  }
}

TEST(CTransform, AdditiveCouplingNeedsPositiveA) {
  EXPECT_THROW(Coupling::additive(0.0), ValidationError);
  EXPECT_THROW(Coupling::additive(-1.0), ValidationError);
}

TEST(CTransform, RejectsNegativeOrNonFiniteT) {
  const Penalty p(PenaltyKind::SqrtEps, 0.5);
  EXPECT_THROW(c_transform_check(p, Coupling::multiplicative(), {-1.0}), ValidationError);
  EXPECT_THROW(c_transform_check(p, Coupling::multiplicative(), {std::nan("")}), ValidationError);
}
