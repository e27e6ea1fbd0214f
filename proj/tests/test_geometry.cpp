#include "hasd/geometry.hpp"
#include "support/oracles.hpp"

#include <Eigen/Eigenvalues>
#include <gtest/gtest.h>

#include <vector>

using namespace hasd;

namespace {

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Index>(v.size()));
  Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

const std::vector<double> kExponents{2.0, 2.5, 3.0, 4.0, 8.0, kInf};

}  // namespace

TEST(LpNorm, Pythagorean) { EXPECT_DOUBLE_EQ(lp_norm(vec({3, -4}), 2.0), 5.0); }

TEST(LpNorm, MaxAbs) { EXPECT_DOUBLE_EQ(lp_norm(vec({3, -4}), kInf), 4.0); }

TEST(LpNorm, DualExponentFourThirdsMatchesHighPrecisionSum) {
  EXPECT_NEAR(lp_norm(vec({3, -4}), 4.0 / 3.0), 5.9063229656488888, 1e-14);
}

TEST(LpNorm, OneNorm) { EXPECT_DOUBLE_EQ(lp_norm(vec({3, -4, 0.5}), 1.0), 7.5); }

TEST(LpNorm, EmptyVectorIsZero) {
  for (double p : kExponents) EXPECT_EQ(lp_norm(Vector(0), p), 0.0);
}

TEST(LpNorm, NoOverflowOrUnderflowAtExtremeMagnitudes) {
  const Vector big = Vector::Constant(4, 1e300);
  EXPECT_NEAR(lp_norm(big, 8.0) / 1e300, std::pow(4.0, 1.0 / 8.0), 1e-14);
  const Vector tiny = Vector::Constant(4, 1e-300);
  EXPECT_NEAR(lp_norm(tiny, 64.0) / 1e-300, std::pow(4.0, 1.0 / 64.0), 1e-14);
}

TEST(Geometry, ConjugateExponents) {
  EXPECT_EQ(Geometry(2.0).dual(), 2.0);
  EXPECT_EQ(Geometry::infinity().dual(), 1.0);
  for (double p : kExponents) {
    const Geometry g(p);
    const double inv_p = g.is_inf() ? 0.0 : 1.0 / p;
    EXPECT_NEAR(inv_p + 1.0 / g.dual(), 1.0, 1e-15);
  }
}

TEST(Geometry, RejectsExponentsBelowTwo) {
  EXPECT_THROW(Geometry(1.5), std::domain_error);
  EXPECT_THROW(Geometry(std::nan("")), std::domain_error);
}

TEST(Geometry, Parse) {
  EXPECT_TRUE(Geometry::parse("inf").is_inf());
  EXPECT_EQ(Geometry::parse("3").p(), 3.0);
  EXPECT_EQ(Geometry::parse("2.5").label(), "2.5");
  EXPECT_THROW(Geometry::parse("abc"), std::domain_error);
  EXPECT_THROW(Geometry::parse("3x"), std::domain_error);
  EXPECT_THROW(Geometry::parse("1"), std::domain_error);
}

TEST(SteepestStep, ZeroGradientIsFixedPoint) {
  const Vector y = vec({1, -2, 3});
  for (double p : kExponents) EXPECT_EQ(steepest_step(y, Vector::Zero(3), 0.7, Geometry(p)), y);
}

TEST(SteepestStep, InfinityRadiusSeven) {
  const Vector x = steepest_step(Vector::Zero(2), vec({3, -4}), 0.5, Geometry::infinity());
  EXPECT_DOUBLE_EQ(x[0], -7.0);
  EXPECT_DOUBLE_EQ(x[1], 7.0);
}

TEST(SteepestStep, EuclideanIsHalfGradientStep) {
  const Vector g = vec({0.3, -1.2, 2.0});
  const Vector x = steepest_step(Vector::Zero(3), g, 1.0, Geometry(2.0));
  EXPECT_TRUE(x.isApprox(-g / 2.0, 1e-15));
}

TEST(SteepestStep, PFourMatchesIndependentArgmin) {
  const Geometry g(4.0);
  const Vector x = steepest_step(Vector::Zero(2), vec({3, -4}), 1.0, g);
  EXPECT_NEAR(x[0], -2.3562527981722646, 1e-12);
  EXPECT_NEAR(x[1], 2.5933917731897372, 1e-12);
  EXPECT_NEAR(subproblem_value(Vector::Zero(2), vec({3, -4}), 1.0, g, x), -8.7211627436378714, 1e-12);
}

TEST(SteepestStep, ZeroCoordinatesStayPut) {
  const Vector y = vec({1, 2, 3});
  for (double p : kExponents) {
    const Vector x = steepest_step(y, vec({0.5, 0.0, -1.0}), 2.0, Geometry(p));
    EXPECT_EQ(x[1], 2.0) << "p=" << p;
  }
}

TEST(SteepestStep, Errors) {
  EXPECT_THROW(steepest_step(Vector::Zero(2), vec({1, 1}), 0.0, Geometry(3.0)), std::domain_error);
  EXPECT_THROW(steepest_step(Vector::Zero(2), vec({1, 1}), -1.0, Geometry(3.0)), std::domain_error);
  EXPECT_THROW(steepest_step(Vector::Zero(2), vec({1, 1, 1}), 1.0, Geometry(3.0)), DimensionError);
}

TEST(SubproblemValue, ZeroAtY) {
  const Vector y = vec({1, 2});
  EXPECT_EQ(subproblem_value(y, vec({3, -4}), 1.0, Geometry(3.0), y), 0.0);
}

TEST(SubproblemValue, InfinityExample) {
  EXPECT_DOUBLE_EQ(subproblem_value(Vector::Zero(2), vec({3, -4}), 0.5, Geometry::infinity(), vec({-7, 7})), -24.5);
}

TEST(SubproblemValue, StepIsStrictMinimizer) {
  oracle::Lcg rng(11);
  for (double p : kExponents) {
    const Geometry g(p);
    const Vector y = rng.normal_vec(3), grad = rng.normal_vec(3);
    const Vector x = steepest_step(y, grad, 1.3, g);
    const double best = subproblem_value(y, grad, 1.3, g, x);
    for (int k = 0; k < 200; ++k) {
      const Vector xp = x + 1e-2 * rng.normal_vec(3);
      EXPECT_GT(subproblem_value(y, grad, 1.3, g, xp), best) << "p=" << p;
    }
  }
}

// Property: closed-form step against a generic minimizer, d ≤ 5.
TEST(SteepestStepProperty, AgreesWithNumericalArgmin) {
  oracle::Lcg rng(2024);
  for (int k = 0; k < 60; ++k) {
    const double p = kExponents[k % kExponents.size()];
    const Index d = 1 + k % 5;
    const Vector y = rng.normal_vec(d), grad = rng.normal_vec(d);
    const double L = std::exp(rng.uniform(-1.5, 1.5));
    const Geometry g(p);
    const Vector x = steepest_step(y, grad, L, g);
    const Vector ref = oracle::subproblem_argmin(y, grad, L, p);
    const double scale = std::max((ref - y).norm(), 1e-12);
    EXPECT_LE((x - ref).norm() / scale, 1e-6) << "p=" << p << " d=" << d;
    const double v = subproblem_value(y, grad, L, g, x);
    const double vr = oracle::subproblem(grad, L, p, ref - y);
    EXPECT_LE(std::abs(v - vr), 1e-6 * std::abs(vr)) << "p=" << p;
  }
}

TEST(SteepestStepProperty, BeatsRandomPerturbations) {
  oracle::Lcg rng(7);
  for (double p : kExponents) {
    const Geometry g(p);
    const Vector y = rng.normal_vec(4), grad = rng.normal_vec(4);
    const Vector x = steepest_step(y, grad, 0.8, g);
    const double best = subproblem_value(y, grad, 0.8, g, x);
    const double r = g.norm(x - y);
    for (int j = 0; j < 10000; ++j) {
      const Vector xp = x + r * std::pow(10.0, rng.uniform(-4, 0)) * rng.normal_vec(4);
      ASSERT_GE(subproblem_value(y, grad, 0.8, g, xp), best - 1e-12 * std::abs(best)) << "p=" << p;
    }
  }
}

TEST(SteepestStepProperty, FirstOrderConditionCoordinatewise) {
  oracle::Lcg rng(5);
  for (double p : {2.0, 2.5, 3.0, 4.0, 8.0}) {
    for (int k = 0; k < 20; ++k) {
      const Vector y = rng.normal_vec(5), grad = rng.normal_vec(5);
      const double L = std::exp(rng.uniform(-1, 1));
      const Vector disp = steepest_step(y, grad, L, Geometry(p)) - y;
      const double n = lp_norm(disp, p);
      for (Index i = 0; i < 5; ++i) {
        const double term = 2 * L * std::pow(n, 2 - p) * std::pow(std::abs(disp[i]), p - 2) * disp[i];
        EXPECT_LE(std::abs(grad[i] + term), 1e-8 * std::abs(grad[i])) << "p=" << p;
      }
    }
  }
}

TEST(NormProperty, HolderInequality) {
  oracle::Lcg rng(3);
  for (double p : {2.0, 3.0, 4.0, kInf}) {
    const Geometry g(p);
    for (int k = 0; k < 500; ++k) {
      const Vector u = rng.normal_vec(6), v = rng.normal_vec(6);
      EXPECT_LE(std::abs(u.dot(v)), g.dual_norm(u) * g.norm(v) * (1 + 1e-14));
    }
  }
}

TEST(NormProperty, OrderingAndEquivalenceConstant) {
  oracle::Lcg rng(4);
  for (double p : {2.0, 3.0, 4.0, kInf}) {
    const Geometry g(p);
    for (Index d : {1, 3, 10, 50}) {
      const double c = g.max_dual_ratio(d);
      for (int k = 0; k < 100; ++k) {
        const Vector x = rng.normal_vec(d);
        const double q = g.dual_norm(x), two = x.norm(), pn = g.norm(x);
        EXPECT_GE(q * (1 + 1e-14), two);
        EXPECT_GE(two * (1 + 1e-14), pn);
        EXPECT_LE(q, c * two * (1 + 1e-14));
      }
      // equality for a constant vector
      EXPECT_NEAR(g.dual_norm(Vector::Ones(d)) / std::sqrt(double(d)), c, 1e-12 * c);
    }
  }
}

TEST(LpHessian, EuclideanIsTwoIdentity) {
  EXPECT_TRUE(lp_sq_hessian(vec({0.3, -2, 5}), 2.0).isApprox(2.0 * Matrix::Identity(3, 3)));
}

TEST(LpHessian, MatchesFiniteDifferencesAtOnes) {
  const Vector z = vec({1, 1});
  const Matrix h = lp_sq_hessian(z, 4.0);
  const Matrix fd = oracle::fd_hessian_sq_pnorm(z, 4.0);
  EXPECT_LE((h - fd).cwiseAbs().maxCoeff(), 1e-5);
}

TEST(LpHessian, Errors) {
  EXPECT_THROW(lp_sq_hessian(Vector::Zero(3), 3.0), std::domain_error);
  EXPECT_THROW(lp_sq_hessian(vec({1, 2}), kInf), std::domain_error);
  EXPECT_THROW(lp_sq_hessian(vec({1, 2}), 1.5), std::domain_error);
}

TEST(LpHessianProperty, FiniteDifferencesPsdFloorAndWitness) {
  oracle::Lcg rng(99);
  for (double p : {2.0, 3.0, 4.0}) {
    for (Index d : {2, 5, 10}) {
      const double bound = 2.0 / std::pow(double(d), (p - 2.0) / 2.0);
      for (int k = 0; k < 100; ++k) {
        Vector z(d);
        for (Index i = 0; i < d; ++i) z[i] = rng.uniform(0.1, 2.0) * (rng.uniform() < 0.5 ? -1 : 1);
        const Matrix h = lp_sq_hessian(z, p);
        if (k < 10) {
          const Matrix fd = oracle::fd_hessian_sq_pnorm(z, p);
          EXPECT_LE((h - fd).cwiseAbs().maxCoeff(), 1e-5 * std::max(1.0, fd.cwiseAbs().maxCoeff()));
        }
        Eigen::SelfAdjointEigenSolver<Matrix> eig(h - lp_sq_hessian_rank_one_floor(z, p), Eigen::EigenvaluesOnly);
        EXPECT_GE(eig.eigenvalues().minCoeff(), -1e-10);
        std::vector<Vector> cands{signed_power(z, p), z};
        for (int j = 0; j < 8; ++j) cands.push_back(rng.normal_vec(d));
        EXPECT_GE(induced_norm_lower_bound(h, p, cands), bound - 1e-8);
      }
    }
  }
}
