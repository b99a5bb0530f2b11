#include <gtest/gtest.h>

#include "support.hpp"

using namespace ssgeom;
using namespace ssgeom::testing;

namespace {

const Point kOrigin7 = Point::zero(7);
using cplx = std::complex<double>;

Vec closed_form_velocity(const QuaternionExtremalParams& P, double t) {
    const double h = 1e-5;
    return (quaternion_closed_form_extremal(P, t + h).vec() - quaternion_closed_form_extremal(P, t - h).vec()) / (2 * h);
}

}  // namespace

TEST(Models, CometricAtOrigin) {
    Mat g3 = Mat::Zero(3, 3);
    g3(0, 0) = -1;
    g3(1, 1) = 1;
    EXPECT_EQ((heisenberg_lorentz().matrix(Point::zero(3)) - g3).norm(), 0.0);
    Mat g7 = Mat::Zero(7, 7);
    g7.topLeftCorner(4, 4) = quaternion_Q();
    EXPECT_EQ((quaternion_group().matrix(kOrigin7) - g7).norm(), 0.0);
}

TEST(Models, NamesRoundTrip) {
    for (auto id : all_models()) EXPECT_EQ(parse_model_id(model_name(id)), id);
    EXPECT_FALSE(parse_model_id("riemannian").has_value());
}

TEST(Models, SignatureEverywhere) {
    Rng r(71);
    for (int i = 0; i < 50; ++i) {
        EXPECT_EQ(signature(quaternion_group(), random_point(r, 7, 3.0)), (Signature{2, 2, 3}));
        EXPECT_EQ(signature(heisenberg_lorentz(), random_point(r, 3, 3.0)), (Signature{1, 1, 1}));
    }
}

TEST(GroupLaw, HeisenbergExample) {
    const Vec c = group_multiply(ModelId::HeisenbergLorentz, Vec{{1.0, 0.0, 0.0}}, Vec{{0.0, 1.0, 0.0}});
    EXPECT_LE((c - Vec{{1.0, 1.0, -0.5}}).norm(), 1e-15);
}

TEST(GroupLaw, IdentityAndInverse) {
    Rng r(72);
    for (auto id : all_models()) {
        const int n = model_field(id).dim();
        for (int i = 0; i < 20; ++i) {
            const Vec a = r.uniform_vec(n, -2, 2);
            EXPECT_LE((group_multiply(id, a, Vec::Zero(n)) - a).norm(), 1e-15);
            EXPECT_LE((group_multiply(id, Vec::Zero(n), a) - a).norm(), 1e-15);
            EXPECT_LE(group_multiply(id, a, Vec(-a)).norm(), 1e-14);
        }
    }
}

TEST(GroupLaw, Associative) {
    Rng r(73);
    for (auto id : all_models()) {
        const int n = model_field(id).dim();
        for (int i = 0; i < 100; ++i) {
            const Vec a = r.uniform_vec(n, -2, 2), b = r.uniform_vec(n, -2, 2), c = r.uniform_vec(n, -2, 2);
            const Vec lhs = group_multiply(id, group_multiply(id, a, b), c);
            const Vec rhs = group_multiply(id, a, group_multiply(id, b, c));
            EXPECT_LE((lhs - rhs).norm(), 1e-12);
        }
    }
}

TEST(GroupLaw, FramesAreLeftInvariant) {
    // X_a(g x) = d(L_g)_x X_a(x), the differential taken by central differences.
    Rng r(74);
    for (auto id : all_models()) {
        const int n = model_field(id).dim();
        for (int i = 0; i < 20; ++i) {
            const Vec g = r.uniform_vec(n, -1.5, 1.5), x = r.uniform_vec(n, -1.5, 1.5);
            const Mat Fx = frames_at(id, Point(x));
            const Mat Fgx = frames_at(id, Point(group_multiply(id, g, x)));
            for (int a = 0; a < Fx.rows(); ++a) {
                const Vec X = Fx.row(a).transpose();
                const double h = 1e-6;
                const Vec push = (group_multiply(id, g, x + h * X) - group_multiply(id, g, x - h * X)) / (2 * h);
                EXPECT_LE((push - Fgx.row(a).transpose()).norm(), 1e-8);
            }
        }
    }
}

TEST(ClosedForm, StartsAtIdentityWithGivenVelocity) {
    Rng r(75);
    for (int i = 0; i < 20; ++i) {
        const auto P = random_quaternion_params(r);
        EXPECT_LE(quaternion_closed_form_extremal(P, 0.0).vec().norm(), 1e-14);
        const Vec v = closed_form_velocity(P, 0.0);
        for (int k = 0; k < 4; ++k) EXPECT_NEAR(v[k], P.xdot0[static_cast<std::size_t>(k)], 1e-8);
        EXPECT_LE(v.tail(3).norm(), 1e-8);
        // The initial covector projects onto the same velocity.
        const Vec gx = quaternion_group().matrix(kOrigin7) * P.initial_covector().vec();
        for (int k = 0; k < 4; ++k) EXPECT_EQ(gx[k], P.xdot0[static_cast<std::size_t>(k)]);
    }
}

TEST(ClosedForm, MatchesIntegrator) {
    Rng r(76);
    for (int i = 0; i < 20; ++i) {
        const auto P = random_quaternion_params(r);
        const auto tr = integrate_extremal(quaternion_group(), kOrigin7, P.initial_covector(), 1.5);
        for (std::size_t k = 0; k < tr.size(); k += 300)
            EXPECT_LE((tr.states[k].x.vec() - quaternion_closed_form_extremal(P, tr.t[k]).vec()).norm(), 1e-6);
    }
}

TEST(ClosedForm, SatisfiesSecondOrderSystem) {
    // x'' = A(theta) x' on the horizontal coordinates.
    Rng r(77);
    for (int i = 0; i < 20; ++i) {
        const auto P = random_quaternion_params(r);
        const double t = r.uniform(0.2, 1.5), h = 1e-4;
        const Vec xm = quaternion_closed_form_extremal(P, t - h).vec(), x0 = quaternion_closed_form_extremal(P, t).vec(),
                  xp = quaternion_closed_form_extremal(P, t + h).vec();
        const Eigen::Vector4d acc = ((xp - 2 * x0 + xm) / (h * h)).head(4);
        const Eigen::Vector4d vel = ((xp - xm) / (2 * h)).head(4);
        EXPECT_LE((acc - quaternion_A(P.theta) * vel).norm(), 1e-5);
    }
}

TEST(ClosedForm, HorizontalNormFormula) {
    Rng r(78);
    for (int i = 0; i < 20; ++i) {
        const auto P = random_quaternion_params(r);
        for (double t : {0.3, 0.9, 1.7}) {
            const auto q = quaternion_closed_form_extremal(P, t);
            EXPECT_NEAR(quaternion_x_quadratic(q.x), quaternion_xnorm_closed_form(P, t), 1e-10);
        }
    }
}

TEST(ClosedForm, VerticalNormFormula) {
    Rng r(79);
    for (int i = 0; i < 20; ++i) {
        auto P = random_quaternion_params(r);
        if (i % 4 == 0) P = QuaternionExtremalParams(P.xdot0, {0.0, P.theta[1], P.theta[2]});
        for (double t : {0.4, 1.1}) {
            const auto q = quaternion_closed_form_extremal(P, t);
            const double z2 = q.z[0] * q.z[0] + q.z[1] * q.z[1] + q.z[2] * q.z[2];
            EXPECT_NEAR(quaternion_znorm_closed_form(P, t), z2, 1e-8 * std::max(1.0, z2));
        }
    }
}

TEST(ClosedForm, HomogeneousNormExamples) {
    EXPECT_DOUBLE_EQ(homogeneous_norm({1, 0, 0, 0}, {0, 0, 0}), 1.0);
    EXPECT_DOUBLE_EQ(homogeneous_norm({0, 0, 0, 0}, {0, 0, 16}), 4.0);
    EXPECT_EQ(homogeneous_norm({1, 0, 1, 0}, {0, 0, 0}), 0.0);
    EXPECT_DOUBLE_EQ(homogeneous_norm({0, 0, 0, 2}, {0, 0, 0}), 2.0);
}

TEST(ClosedForm, ConstantIdentities) {
    Rng r(80);
    for (int i = 0; i < 50; ++i) {
        const auto P = random_quaternion_params(r);
        const double a2 = std::norm(P.a), k2 = P.kabs * P.kabs;
        const auto& c = P.c;
        const cplx c13 = c[0] * c[2], c24 = c[1] * c[3];
        EXPECT_LE(std::abs(c13 + std::norm(P.w2 + P.w1) / (16 * a2 * k2)), 1e-12 * std::max(1.0, std::abs(c13)));
        EXPECT_LE(std::abs(c24 + std::norm(P.w2 - P.w1) / (16 * a2 * k2)), 1e-12 * std::max(1.0, std::abs(c24)));
        EXPECT_LE(std::abs(c13.imag()) + std::abs(c24.imag()), 1e-12);
        EXPECT_LE(c13.real(), 1e-12);
        EXPECT_LE(c24.real(), 1e-12);
        EXPECT_LE(std::abs(c[0] * c[1] - std::conj(c[2] * c[3])), 1e-12);
        const cplx prod = c13 * c24;
        const double expect = std::norm(P.w2 * P.w2 - P.w1 * P.w1) / (256 * a2 * a2 * k2 * k2);
        EXPECT_LE(std::abs(prod - expect), 1e-12 * std::max(1.0, expect));
    }
}

TEST(ClosedForm, EigenvaluesOfA) {
    Rng r(81);
    for (int i = 0; i < 50; ++i) {
        const std::array<double, 3> th{r.uniform(-2, 2), r.uniform(-2, 2), r.uniform(-2, 2)};
        for (double v : quaternion_eigen_residuals(th)) EXPECT_LE(v, 1e-9);
        const Eigen::Matrix4d A = quaternion_A(th), Q = quaternion_Q();
        EXPECT_LE((Q * A + A.transpose() * Q).norm(), 1e-14);
    }
}

TEST(ClosedForm, ThetaIsConserved) {
    Rng r(82);
    for (int i = 0; i < 10; ++i) {
        const auto P = random_quaternion_params(r);
        const auto tr = integrate_extremal(quaternion_group(), kOrigin7, P.initial_covector(), 2.0);
        for (const auto& s : tr.states)
            for (int k = 0; k < 3; ++k) EXPECT_NEAR(s.xi[4 + k], P.theta[static_cast<std::size_t>(k)], 1e-10);
    }
}

TEST(ClosedForm, SmallKIsRejected) {
    EXPECT_THROW(QuaternionExtremalParams({1, 0, 0, 0}, {0.5, 0.0, 0.0}), ModelError);
    EXPECT_THROW(QuaternionExtremalParams({1, 0, 0, 0}, {0.5, 1e-7, 0.0}), ModelError);
    EXPECT_NO_THROW(QuaternionExtremalParams({1, 0, 0, 0}, {0.5, 1e-3, 0.0}));
}
