#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "christoffel.hpp"
#include "extremal_flow.hpp"

namespace ssgeom {

// exp_p(u) = x_u(1)
inline Point exp_map(const CometricField& f, const Point& p, const Covector& u, const FlowOptions& opts = {}) {
    return integrate_extremal(f, p, u, 1.0, opts).back().x;
}

// Taylor data of t -> x_u(t) at t = 0:
// x^k = p^k + g1^{ka} u_a + 1/2 g2^{kab} u_a u_b + 1/6 g3^{kabc} u_a u_b u_c + ...
class ExpansionCoefficients {
public:
    ExpansionCoefficients(Point p, Mat g1, std::vector<double> g2, std::vector<double> g3)
        : p_(std::move(p)), g1_(std::move(g1)), g2_(std::move(g2)), g3_(std::move(g3)), n_(static_cast<int>(g1_.rows())) {}

    int dim() const noexcept { return n_; }
    const Point& base() const noexcept { return p_; }
    const Mat& gamma1() const noexcept { return g1_; }
    double gamma2(int k, int a, int b) const { return g2_[static_cast<std::size_t>((k * n_ + a) * n_ + b)]; }
    double gamma3(int k, int a, int b, int c) const {
        return g3_[static_cast<std::size_t>(((k * n_ + a) * n_ + b) * n_ + c)];
    }

    // Same data in coordinates y = L x (all indices transform with L).
    ExpansionCoefficients transformed(const Mat& L) const {
        const int n = n_;
        Mat g1 = L * g1_ * L.transpose();
        std::vector<double> g2(static_cast<std::size_t>(n * n * n), 0.0);
        std::vector<double> g3(static_cast<std::size_t>(n * n * n * n), 0.0);
        // Contract one index at a time.
        std::vector<double> tmp2 = g2_;
        for (int slot = 0; slot < 3; ++slot) tmp2 = apply_on_slot(tmp2, L, 3, slot);
        g2 = std::move(tmp2);
        std::vector<double> tmp3 = g3_;
        for (int slot = 0; slot < 4; ++slot) tmp3 = apply_on_slot(tmp3, L, 4, slot);
        g3 = std::move(tmp3);
        return ExpansionCoefficients(Point(Vec(L * p_.vec())), std::move(g1), std::move(g2), std::move(g3));
    }

private:
    std::vector<double> apply_on_slot(const std::vector<double>& t, const Mat& L, int rank, int slot) const {
        const int n = n_;
        std::vector<double> out(t.size(), 0.0);
        int stride = 1;
        for (int s = rank - 1; s > slot; --s) stride *= n;
        for (std::size_t flat = 0; flat < t.size(); ++flat) {
            if (t[flat] == 0.0) continue;
            const int i = static_cast<int>(flat / static_cast<std::size_t>(stride)) % n;
            const std::size_t base = flat - static_cast<std::size_t>(i * stride);
            for (int r = 0; r < n; ++r) out[base + static_cast<std::size_t>(r * stride)] += L(r, i) * t[flat];
        }
        return out;
    }

    Point p_;
    Mat g1_;
    std::vector<double> g2_, g3_;
    int n_;
};

// Recursion gamma_{r+1} = sym(g^{q p_{r+1}} d_q gamma_r - (r/2) gamma_r^{k..q} d_q g^{p_r p_{r+1}})
// evaluated at p for r = 1, 2.
inline ExpansionCoefficients taylor_coefficients(const CometricField& f, const Point& p) {
    const int n = f.dim();
    const Mat g = f.matrix(p);
    const auto dg = f.gradient(p);
    const auto hs = f.hessian(p);
    const auto D = [&](int q) -> const Mat& { return dg[static_cast<std::size_t>(q)]; };
    const auto DD = [&](int c, int q) -> const Mat& { return hs[static_cast<std::size_t>(c * n + q)]; };
    const auto i3 = [n](int k, int a, int b) { return static_cast<std::size_t>((k * n + a) * n + b); };
    const auto i4 = [n](int k, int a, int b, int c) { return static_cast<std::size_t>(((k * n + a) * n + b) * n + c); };

    // r = 1: unsymmetrized term t2(k,a,b) = g^{qb} d_q g^{ka} - 1/2 g^{kq} d_q g^{ab}
    std::vector<double> g2(static_cast<std::size_t>(n * n * n), 0.0);
    // dg2[c] = d_c gamma2 (function of x), needed for r = 2
    std::vector<double> dg2(static_cast<std::size_t>(n * n * n * n), 0.0);
    for (int k = 0; k < n; ++k)
        for (int a = 0; a < n; ++a)
            for (int b = 0; b < n; ++b) {
                double s = 0.0;
                for (int q = 0; q < n; ++q) s += g(q, b) * D(q)(k, a) - 0.5 * g(k, q) * D(q)(a, b);
                g2[i3(k, a, b)] += 0.5 * s;
                g2[i3(k, b, a)] += 0.5 * s;
                for (int c = 0; c < n; ++c) {
                    double d = 0.0;
                    for (int q = 0; q < n; ++q)
                        d += D(c)(q, b) * D(q)(k, a) + g(q, b) * DD(c, q)(k, a) -
                             0.5 * (D(c)(k, q) * D(q)(a, b) + g(k, q) * DD(c, q)(a, b));
                    dg2[i4(c, k, a, b)] += 0.5 * d;
                    dg2[i4(c, k, b, a)] += 0.5 * d;
                }
            }

    // r = 2: t3(k,a,b,c) = g^{qc} d_q gamma2^{kab} - gamma2^{kaq} d_q g^{bc}, symmetrized over (a,b,c)
    std::vector<double> g3(static_cast<std::size_t>(n * n * n * n), 0.0);
    std::vector<double> t3(static_cast<std::size_t>(n * n * n * n), 0.0);
    for (int k = 0; k < n; ++k)
        for (int a = 0; a < n; ++a)
            for (int b = 0; b < n; ++b)
                for (int c = 0; c < n; ++c) {
                    double s = 0.0;
                    for (int q = 0; q < n; ++q) s += g(q, c) * dg2[i4(q, k, a, b)] - g2[i3(k, a, q)] * D(q)(b, c);
                    t3[i4(k, a, b, c)] = s;
                }
    for (int k = 0; k < n; ++k)
        for (int a = 0; a < n; ++a)
            for (int b = 0; b < n; ++b)
                for (int c = 0; c < n; ++c)
                    g3[i4(k, a, b, c)] = (t3[i4(k, a, b, c)] + t3[i4(k, a, c, b)] + t3[i4(k, b, a, c)] +
                                          t3[i4(k, b, c, a)] + t3[i4(k, c, a, b)] + t3[i4(k, c, b, a)]) /
                                         6.0;
    return ExpansionCoefficients(p, g, std::move(g2), std::move(g3));
}

inline Point taylor_exp(const ExpansionCoefficients& c, const Covector& u) {
    const int n = c.dim();
    require_dim(n, u.size(), "taylor_exp");
    Vec x = c.base().vec() + c.gamma1() * u.vec();
    for (int k = 0; k < n; ++k) {
        double s2 = 0.0, s3 = 0.0;
        for (int a = 0; a < n; ++a)
            for (int b = 0; b < n; ++b) {
                const double uab = u[a] * u[b];
                if (uab == 0.0) continue;
                s2 += c.gamma2(k, a, b) * uab;
                for (int d = 0; d < n; ++d) s3 += c.gamma3(k, a, b, d) * uab * u[d];
            }
        x[k] += s2 / 2.0 + s3 / 6.0;
    }
    return Point(x);
}

// Linear coordinates y = L x in which g(p) becomes diag(eps_1..eps_m, 0..0),
// negative directions first.
struct AdaptedFrame {
    Mat L;
    Vec eps;  // length m, entries -1 or +1
    int m = 0;
};

inline AdaptedFrame adapted_frame(const CometricField& f, const Point& p) {
    const int n = f.dim();
    Eigen::SelfAdjointEigenSolver<Mat> es(f.matrix(p));
    const Vec& ev = es.eigenvalues();
    const Mat& E = es.eigenvectors();
    const double cutoff = kRankCutoff * ev.cwiseAbs().maxCoeff();
    std::vector<int> neg, pos, zer;
    for (int i = 0; i < n; ++i) (ev[i] < -cutoff ? neg : ev[i] > cutoff ? pos : zer).push_back(i);
    if (static_cast<int>(neg.size() + pos.size()) != f.rank())
        throw RankMismatch("adapted_frame: cometric rank differs from the declared rank");
    AdaptedFrame fr;
    fr.m = f.rank();
    fr.L.resize(n, n);
    fr.eps.resize(fr.m);
    int row = 0;
    for (int i : neg) { fr.L.row(row) = E.col(i).transpose() / std::sqrt(-ev[i]); fr.eps[row++] = -1.0; }
    for (int i : pos) { fr.L.row(row) = E.col(i).transpose() / std::sqrt(ev[i]); fr.eps[row++] = 1.0; }
    for (int i : zer) fr.L.row(row++) = E.col(i).transpose();
    return fr;
}

namespace detail {

struct VariationalResult {
    Point x1;
    Covector xi1;
    Mat W;  // W(k, j) = d exp_p(u)^k / d u_j
};

// Integrates the flow together with its linearization in the initial covector.
inline VariationalResult variational_flow(const CometricField& f, const Point& p, const Covector& u,
                                          const FlowOptions& opts) {
    const int n = f.dim();
    const int nn = n * n;
    const auto rhs = [&f, n, nn](const ode::State& y) {
        const Point x(Vec(y.head(n)));
        const Vec xi = y.segment(n, n);
        const Eigen::Map<const Mat> X(y.data() + 2 * n, n, n);
        const Eigen::Map<const Mat> Xi(y.data() + 2 * n + nn, n, n);
        const Mat g = f.matrix(x);
        const auto dg = f.gradient(x);
        Mat Jxx(n, n), Jxixi(n, n);
        Vec xid(n);
        for (int l = 0; l < n; ++l) {
            const Vec c = dg[static_cast<std::size_t>(l)] * xi;
            Jxx.col(l) = c;
            Jxixi.row(l) = -c.transpose();
            xid[l] = -0.5 * xi.dot(c);
        }
        const Mat Jxix = -0.5 * f.hessian_quadratic(x, xi);
        ode::State dy(2 * n + 2 * nn);
        dy.head(n) = g * xi;
        dy.segment(n, n) = xid;
        Eigen::Map<Mat>(dy.data() + 2 * n, n, n) = Jxx * X + g * Xi;
        Eigen::Map<Mat>(dy.data() + 2 * n + nn, n, n) = Jxix * X + Jxixi * Xi;
        return dy;
    };
    ode::State y0 = ode::State::Zero(2 * n + 2 * nn);
    y0.head(n) = p.vec();
    y0.segment(n, n) = u.vec();
    Eigen::Map<Mat>(y0.data() + 2 * n + nn, n, n) = Mat::Identity(n, n);
    ode::State last;
    drive(rhs, y0, 1.0, opts.control, opts.blowup, [&](double, const ode::State& y) { last = y; }, 2 * n);
    return {Point(Vec(last.head(n))), Covector(Vec(last.segment(n, n))),
            Mat(Eigen::Map<const Mat>(last.data() + 2 * n, n, n))};
}

}  // namespace detail

enum class JacobianMethod { Variational, FiniteDifference };

struct ExpJacobianBlocks {
    Covector u;
    Mat W;           // original coordinates
    Mat W_adapted;   // L W L^T
    Mat A, B, C, D;  // blocks of W_adapted
    AdaptedFrame frame;
};

inline Mat exp_jacobian_matrix(const CometricField& f, const Point& p, const Covector& u,
                               JacobianMethod method = JacobianMethod::Variational, const FlowOptions& opts = {}) {
    const int n = f.dim();
    require_dim(n, u.size(), "exp_jacobian");
    if (method == JacobianMethod::Variational) return detail::variational_flow(f, p, u, opts).W;
    const double h = 1e-6 * std::max(1.0, u.norm());
    Mat W(n, n);
    for (int j = 0; j < n; ++j) {
        const Covector e = Covector::unit(n, j);
        W.col(j) = (exp_map(f, p, u + h * e, opts).vec() - exp_map(f, p, u - h * e, opts).vec()) / (2 * h);
    }
    return W;
}

inline ExpJacobianBlocks exp_jacobian(const CometricField& f, const Point& p, const Covector& u,
                                      JacobianMethod method = JacobianMethod::Variational,
                                      const FlowOptions& opts = {}) {
    ExpJacobianBlocks b{u, exp_jacobian_matrix(f, p, u, method, opts), {}, {}, {}, {}, {}, adapted_frame(f, p)};
    const int n = f.dim(), m = b.frame.m;
    b.W_adapted = b.frame.L * b.W * b.frame.L.transpose();
    b.A = b.W_adapted.topLeftCorner(m, m);
    b.B = b.W_adapted.topRightCorner(m, n - m);
    b.C = b.W_adapted.bottomLeftCorner(n - m, m);
    b.D = b.W_adapted.bottomRightCorner(n - m, n - m);
    return b;
}

// Leading-order Jacobian data at a base point, reused across many u.
struct DiffeoContext {
    const CometricField* field;
    Point p;
    Mat g;
    AdaptedFrame frame;
    ExpansionCoefficients adapted;  // coefficients in adapted coordinates
};

inline DiffeoContext diffeo_context(const CometricField& f, const Point& p) {
    auto fr = adapted_frame(f, p);
    auto c = taylor_coefficients(f, p).transformed(fr.L);
    return {&f, p, f.matrix(p), std::move(fr), std::move(c)};
}

struct TruncatedJacobian {
    Mat W;  // [[eps, B], [C, D]] in adapted coordinates
    Mat B, C, D;
    double det = 0.0;
    double reduced_det = 0.0;  // det(1/3 B^T eps B)
};

// A = eps I, B and C the parts linear in u, D the part quadratic in u.
inline TruncatedJacobian truncated_jacobian(const DiffeoContext& ctx, const Covector& u) {
    const int n = ctx.field->dim(), m = ctx.frame.m, r = n - m;
    const Vec ut = ctx.frame.L.transpose().fullPivLu().solve(u.vec());
    const auto& c = ctx.adapted;
    TruncatedJacobian t;
    t.W = Mat::Zero(n, n);
    t.W.topLeftCorner(m, m) = ctx.frame.eps.asDiagonal();
    for (int k = 0; k < n; ++k)
        for (int j = 0; j < n; ++j) {
            const bool hk = k < m, hj = j < m;
            if (hk == hj && hk) continue;
            double s = 0.0;
            if (hk != hj) {
                for (int q = 0; q < n; ++q) s += c.gamma2(k, j, q) * ut[q];
            } else {
                for (int q = 0; q < n; ++q)
                    for (int l = 0; l < n; ++l) s += 0.5 * c.gamma3(k, j, q, l) * ut[q] * ut[l];
            }
            t.W(k, j) = s;
        }
    t.B = t.W.topRightCorner(m, r);
    t.C = t.W.bottomLeftCorner(r, m);
    t.D = t.W.bottomRightCorner(r, r);
    t.det = t.W.determinant();
    t.reduced_det = (t.B.transpose() * ctx.frame.eps.asDiagonal() * t.B / 3.0).determinant();
    return t;
}

struct LocalDiffeoResult {
    double det_W_tilde;
    double cometric_scalar;  // <g u, u>
    bool local_diffeo;
};

inline LocalDiffeoResult local_diffeo_test(const DiffeoContext& ctx, const Covector& u, double delta) {
    const int r = ctx.field->dim() - ctx.frame.m;
    const auto cc = classify(ctx.g, u.vec());
    const double det = truncated_jacobian(ctx, u).det;
    if (cc.cls == CausalClass::Null || cc.cls == CausalClass::Annihilator) return {det, cc.scalar, false};
    return {det, cc.scalar, std::abs(det) >= delta * std::pow(std::abs(cc.scalar), r)};
}

struct DeltaCalibration {
    double delta_hat;  // min |det W~| / |<gu,u>|^{n-m}
    double delta;      // delta_hat / 10
    int samples;
};

// Empirical lower bound over random unit covectors with |<gu,u>| > 0.1.
inline DeltaCalibration calibrate_delta(const DiffeoContext& ctx, int samples = 500, std::uint64_t seed = 42) {
    const int n = ctx.field->dim(), r = n - ctx.frame.m;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> N01;
    double best = std::numeric_limits<double>::infinity();
    int got = 0;
    for (long tries = 0; got < samples && tries < 1000L * samples; ++tries) {
        Vec u(n);
        for (int i = 0; i < n; ++i) u[i] = N01(rng);
        u.normalize();
        const double q = u.dot(ctx.g * u);
        if (std::abs(q) <= 0.1) continue;
        best = std::min(best, std::abs(truncated_jacobian(ctx, Covector(u)).det) / std::pow(std::abs(q), r));
        ++got;
    }
    if (got == 0) throw std::runtime_error("calibrate_delta: no admissible samples");
    return {best, best / 10.0, got};
}

inline LocalDiffeoResult local_diffeo_test(const CometricField& f, const Point& p, const Covector& u) {
    const auto ctx = diffeo_context(f, p);
    return local_diffeo_test(ctx, u, calibrate_delta(ctx).delta);
}

struct GaussLemmaResult {
    double residual;            // statement (ii)
    bool image_horizontal;      // d exp_p(u) w in S within 1e-7
    double residual_horizontal; // statement (i), NaN unless image_horizontal
};

// |<g_p u, w> - <d exp_p(u) w, xi(1)>| with the radial vector taken equal to u.
inline GaussLemmaResult gauss_lemma_check(const CometricField& f, const Point& p, const Covector& u,
                                          const Covector& w, const FlowOptions& opts = {}) {
    require_dim(f.dim(), u.size(), "gauss_lemma_check");
    require_dim(f.dim(), w.size(), "gauss_lemma_check");
    if (u.norm() == 0.0) throw std::invalid_argument("gauss_lemma_check: u must be nonzero");
    const auto vr = detail::variational_flow(f, p, u, opts);
    const double lhs = w.vec().dot(f.matrix(p) * u.vec());
    const Vec dw = vr.W * w.vec();
    GaussLemmaResult res{std::abs(lhs - dw.dot(vr.xi1.vec())), false, std::numeric_limits<double>::quiet_NaN()};
    const Mat H = horizontal_matrix(f, vr.x1);
    if ((dw - H * (H.transpose() * dw)).norm() <= 1e-7 * std::max(1.0, dw.norm())) {
        res.image_horizontal = true;
        // d exp_p(u) u is the velocity of the extremal at t = 1.
        const Vec du = vr.W * u.vec();
        const Vec du_h = H * (H.transpose() * du);
        const Vec dw_h = H * (H.transpose() * dw);
        res.residual_horizontal =
            std::abs(lhs - metric_from_cometric(f, vr.x1, TangentVector(dw_h), TangentVector(du_h)));
    }
    return res;
}

}  // namespace ssgeom
