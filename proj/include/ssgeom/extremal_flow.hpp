#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdio>
#include <functional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "christoffel.hpp"
#include "cometric.hpp"
#include "ode.hpp"

namespace ssgeom {

struct PhaseState {
    Point x;
    Covector xi;
};

// H = 1/2 <g_x xi, xi>
inline double hamiltonian(const CometricField& f, const PhaseState& s) {
    require_dim(f.dim(), s.xi.size(), "hamiltonian");
    return 0.5 * s.xi.vec().dot(f.matrix(s.x) * s.xi.vec());
}

// xdot^k = g^{kj} xi_j,  xidot_k = -1/2 d_k g^{pq} xi_p xi_q
inline std::pair<TangentVector, Covector> hamiltonian_rhs(const CometricField& f, const PhaseState& s) {
    require_dim(f.dim(), s.xi.size(), "hamiltonian_rhs");
    const Mat g = f.matrix(s.x);
    const auto dg = f.gradient(s.x);
    Vec xid(f.dim());
    for (int k = 0; k < f.dim(); ++k) xid[k] = -0.5 * s.xi.vec().dot(dg[static_cast<std::size_t>(k)] * s.xi.vec());
    return {TangentVector(Vec(g * s.xi.vec())), Covector(std::move(xid))};
}

struct StepControl {
    double step = 1e-3;         // fixed RK4 step
    double adaptive_tol = 0.0;  // > 0 selects Dormand-Prince with this tolerance
};

struct FlowOptions {
    StepControl control;
    double drift_warning = 1e-9;
    double drift_error = 1e-6;
    double blowup = 1e12;
    bool throw_on_drift = true;
};

struct Trajectory {
    std::vector<double> t;
    std::vector<PhaseState> states;
    double H0 = 0.0;
    CausalCharacter causal{CausalClass::Annihilator, 0.0};
    double max_drift = 0.0;
    bool drift_warning = false;

    std::size_t size() const noexcept { return t.size(); }
    const PhaseState& back() const { return states.back(); }
};

namespace detail {

inline ode::State pack(const Vec& x, const Vec& xi) {
    ode::State y(x.size() + xi.size());
    y << x, xi;
    return y;
}

// Integrates y' = f(y) on [0, t_end], calling `observe(t, y)` at t = 0 and
// after every accepted step. Throws BlowUp when the state leaves the finite
// box, reporting the last time the state was valid.
inline void drive(const ode::Rhs& f, const ode::State& y0, double t_end, const StepControl& ctl, double blowup,
                  const std::function<void(double, const ode::State&)>& observe, int watched = -1) {
    const auto bad = [&](const ode::State& y) {
        const auto head = watched < 0 ? y : ode::State(y.head(watched));
        return !head.allFinite() || head.cwiseAbs().maxCoeff() > blowup;
    };
    if (bad(y0)) throw BlowUp(0.0, "initial state is not finite");
    observe(0.0, y0);
    ode::State y = y0;
    double t = 0.0;
    if (ctl.adaptive_tol > 0.0) {
        double h = std::min(1e-2, t_end);
        ode::State err;
        int rejected = 0;
        while (t < t_end) {
            h = std::min(h, t_end - t);
            ode::State yn = ode::dopri5_step(f, y, h, err);
            if (bad(yn) && h < 1e-12) throw BlowUp(t, "extremal blew up at t = " + std::to_string(t));
            const double r = bad(yn) ? 1e10 : ode::error_ratio(err, y, yn, ctl.adaptive_tol);
            if (r <= 1.0) {
                t = (t_end - (t + h) < 1e-14 * t_end) ? t_end : t + h;
                y = std::move(yn);
                observe(t, y);
                rejected = 0;
            } else if (++rejected > 200) {
                throw BlowUp(t, "step size underflow at t = " + std::to_string(t));
            }
            const double fac = r == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(r, -0.2), 0.2, 5.0);
            h *= fac;
        }
        return;
    }
    if (!(ctl.step > 0.0)) throw std::invalid_argument("step must be positive");
    const long nsteps = std::max(1L, static_cast<long>(std::ceil(t_end / ctl.step - 1e-9)));
    const double h = t_end / static_cast<double>(nsteps);
    for (long i = 1; i <= nsteps; ++i) {
        ode::State yn = ode::rk4_step(f, y, h);
        if (bad(yn)) throw BlowUp(t, "extremal blew up at t = " + std::to_string(t));
        y = std::move(yn);
        t = i == nsteps ? t_end : static_cast<double>(i) * h;
        observe(t, y);
    }
}

inline ode::Rhs hamiltonian_system(const CometricField& f) {
    const int n = f.dim();
    return [&f, n](const ode::State& y) {
        const Point x(Vec(y.head(n)));
        const Vec xi = y.tail(n);
        const Mat g = f.matrix(x);
        const auto dg = f.gradient(x);
        ode::State dy(2 * n);
        dy.head(n) = g * xi;
        for (int k = 0; k < n; ++k) dy[n + k] = -0.5 * xi.dot(dg[static_cast<std::size_t>(k)] * xi);
        return dy;
    };
}

}  // namespace detail

inline Trajectory integrate_extremal(const CometricField& f, const Point& x0, const Covector& xi0, double t_end,
                                     const FlowOptions& opts = {}) {
    const int n = f.dim();
    require_dim(n, x0.size(), "integrate_extremal");
    require_dim(n, xi0.size(), "integrate_extremal");
    if (!(t_end > 0.0)) throw std::invalid_argument("integrate_extremal: t_end must be positive");
    Trajectory tr;
    tr.H0 = hamiltonian(f, {x0, xi0});
    tr.causal = causal_character(f, x0, xi0);
    detail::drive(detail::hamiltonian_system(f), detail::pack(x0.vec(), xi0.vec()), t_end, opts.control, opts.blowup,
                  [&](double t, const ode::State& y) {
                      PhaseState s{Point(Vec(y.head(n))), Covector(Vec(y.tail(n)))};
                      tr.max_drift = std::max(tr.max_drift, std::abs(hamiltonian(f, s) - tr.H0));
                      tr.t.push_back(t);
                      tr.states.push_back(std::move(s));
                  });
    tr.drift_warning = tr.max_drift > opts.drift_warning;
    if (opts.throw_on_drift && tr.max_drift > opts.drift_error)
        throw DriftError(tr.max_drift, "Hamiltonian drift " + std::to_string(tr.max_drift) + " exceeds tolerance");
    return tr;
}

// Composite Simpson rule on an arbitrary increasing grid.
inline double simpson(const std::vector<double>& t, const std::vector<double>& y) {
    const std::size_t N = t.size() - 1;
    if (t.size() < 2) return 0.0;
    if (N == 1) return 0.5 * (t[1] - t[0]) * (y[0] + y[1]);
    double s = 0.0;
    for (std::size_t i = 1; i < N; i += 2) {
        const double h0 = t[i] - t[i - 1], h1 = t[i + 1] - t[i];
        const double hph = h0 + h1, hdh = h1 / h0, hmh = h1 * h0;
        s += hph / 6.0 * ((2.0 - hdh) * y[i - 1] + hph * hph / hmh * y[i] + (2.0 - 1.0 / hdh) * y[i + 1]);
    }
    if (N % 2 == 1) {
        const double h0 = t[N - 1] - t[N - 2], h1 = t[N] - t[N - 1];
        s += y[N] * (2 * h1 * h1 + 3 * h0 * h1) / (6 * (h0 + h1));
        s += y[N - 1] * (h1 * h1 + 3 * h1 * h0) / (6 * h0);
        s -= y[N - 2] * h1 * h1 * h1 / (6 * h0 * (h0 + h1));
    }
    return s;
}

// L = int |Q(c', c')|^{1/2} dt with Q(c', c') = 2H along an extremal.
inline double natural_parameter(const CometricField& f, const Trajectory& tr) {
    std::vector<double> y;
    y.reserve(tr.size());
    for (const auto& s : tr.states) y.push_back(std::sqrt(std::abs(2.0 * hamiltonian(f, s))));
    return simpson(tr.t, y);
}

// E = int |Q(c', c')| dt
inline double energy(const CometricField& f, const Trajectory& tr) {
    std::vector<double> y;
    y.reserve(tr.size());
    for (const auto& s : tr.states) y.push_back(std::abs(2.0 * hamiltonian(f, s)));
    return simpson(tr.t, y);
}

// A horizontal curve sampled at increasing times. Accelerations are optional;
// when absent they are estimated from the velocities.
struct HorizontalCurve {
    std::vector<double> t;
    std::vector<Point> x;
    std::vector<TangentVector> v;
    std::vector<TangentVector> a;
};

// Natural parameter of an arbitrary horizontal curve, Q evaluated pointwise.
inline double curve_length(const CometricField& f, const HorizontalCurve& c) {
    std::vector<double> y;
    y.reserve(c.t.size());
    for (std::size_t i = 0; i < c.t.size(); ++i)
        y.push_back(std::sqrt(std::abs(metric_from_cometric(f, c.x[i], c.v[i], c.v[i]))));
    return simpson(c.t, y);
}

namespace detail {

// Derivative of sampled data on a non-uniform grid, second order.
inline std::vector<Vec> differentiate_samples(const std::vector<double>& t, const std::vector<Vec>& y) {
    const std::size_t N = t.size();
    std::vector<Vec> d(N);
    if (N < 3) throw std::invalid_argument("need at least three samples");
    const auto three = [&](std::size_t i0, std::size_t at) {
        const double t0 = t[i0], t1 = t[i0 + 1], t2 = t[i0 + 2], s = t[at];
        const double w0 = (2 * s - t1 - t2) / ((t0 - t1) * (t0 - t2));
        const double w1 = (2 * s - t0 - t2) / ((t1 - t0) * (t1 - t2));
        const double w2 = (2 * s - t0 - t1) / ((t2 - t0) * (t2 - t1));
        return Vec(w0 * y[i0] + w1 * y[i0 + 1] + w2 * y[i0 + 2]);
    };
    d[0] = three(0, 0);
    for (std::size_t i = 1; i + 1 < N; ++i) d[i] = three(i - 1, i);
    d[N - 1] = three(N - 3, N - 1);
    return d;
}

}  // namespace detail

struct CotangentLift {
    std::vector<Covector> xi;
    double max_horizontal_residual = 0.0;     // max |g xi - xdot|
    double max_orthogonality_residual = 0.0;  // max |<omega, Gamma(xi, v_l)>|
};

// Canonical cotangent lift of a horizontal curve. Writing xi = eta + a^k v_k
// with g eta = xdot and v_k an annihilator basis, the condition
// <xidot + 1/2 dg(xi, xi), Gamma(xi, v_l)> = 0 is linear in a because the
// a-dot terms pair an annihilator with a horizontal vector. Each sample is
// therefore solved independently.
inline CotangentLift canonical_cotangent_lift(const CometricField& f, const HorizontalCurve& c, const Covector& eta0,
                                              double horizontal_tol = 1e-8) {
    const int n = f.dim();
    const std::size_t N = c.t.size();
    if (c.x.size() != N || c.v.size() != N) throw std::invalid_argument("canonical_cotangent_lift: ragged curve");
    std::vector<Vec> acc;
    if (c.a.size() == N) {
        for (const auto& a : c.a) acc.push_back(a.vec());
    } else {
        std::vector<Vec> vel;
        for (const auto& v : c.v) vel.push_back(v.vec());
        acc = detail::differentiate_samples(c.t, vel);
    }
    {
        const Mat g0 = f.matrix(c.x.front());
        if ((g0 * eta0.vec() - c.v.front().vec()).norm() > horizontal_tol * std::max(1.0, c.v.front().norm()))
            throw std::invalid_argument("canonical_cotangent_lift: initial lift does not project to the velocity");
    }
    CotangentLift out;
    for (std::size_t i = 0; i < N; ++i) {
        const Point& x = c.x[i];
        const Vec& xd = c.v[i].vec();
        const Mat g = f.matrix(x);
        const auto dg = f.gradient(x);
        const auto split = detail::rank_split(f, g);
        const Vec proj = split.range * (split.range.transpose() * xd);
        if ((xd - proj).norm() > horizontal_tol * std::max(1.0, xd.norm()))
            throw NotHorizontal("canonical_cotangent_lift: curve is not horizontal at sample " + std::to_string(i));
        const auto pinv = g.completeOrthogonalDecomposition().pseudoInverse();
        const Vec eta = pinv * xd;
        if (!is_two_step_generator(f, x, Covector(eta)).generator)
            throw NotInjective("canonical_cotangent_lift: Gamma(xi, .) is not injective at sample " + std::to_string(i));
        const auto gam = christoffel_from(x, g, dg);
        const Mat& V = split.kernel;
        const int r = static_cast<int>(V.cols());
        std::vector<Vec> gl(static_cast<std::size_t>(r)), zl(static_cast<std::size_t>(r));
        for (int l = 0; l < r; ++l) {
            gl[static_cast<std::size_t>(l)] = gam.contract(eta, V.col(l));
            zl[static_cast<std::size_t>(l)] = pinv * gl[static_cast<std::size_t>(l)];
        }
        Mat dgx = Mat::Zero(n, n);  // d_p g xdot^p
        for (int p = 0; p < n; ++p) dgx += xd[p] * dg[static_cast<std::size_t>(p)];
        // residual_l(xi) = <xddot - dgx xi, zeta_l> + 1/2 Gamma_l^j xi^T d_j g xi
        const auto residual = [&](const Vec& xi, int l) {
            const Vec& G = gl[static_cast<std::size_t>(l)];
            double s = (acc[i] - dgx * xi).dot(zl[static_cast<std::size_t>(l)]);
            for (int j = 0; j < n; ++j)
                if (G[j] != 0.0) s += 0.5 * G[j] * xi.dot(dg[static_cast<std::size_t>(j)] * xi);
            return s;
        };
        Mat M(r, r);
        Vec rhs(r);
        for (int l = 0; l < r; ++l) {
            rhs[l] = -residual(eta, l);
            for (int k = 0; k < r; ++k) M(l, k) = 2.0 * gl[static_cast<std::size_t>(k)].dot(zl[static_cast<std::size_t>(l)]);
        }
        Eigen::JacobiSVD<Mat> svd(M, Eigen::ComputeThinU | Eigen::ComputeThinV);
        const auto& sv = svd.singularValues();
        if (sv.size() == 0 || sv[sv.size() - 1] <= 1e-12 * std::max(1.0, sv[0]))
            throw NotInjective("canonical_cotangent_lift: lift equations are singular at sample " + std::to_string(i));
        const Vec a = svd.solve(rhs);
        const Vec xi = eta + V * a;
        for (int l = 0; l < r; ++l)
            out.max_orthogonality_residual = std::max(out.max_orthogonality_residual, std::abs(residual(xi, l)));
        out.max_horizontal_residual = std::max(out.max_horizontal_residual, (g * xi - xd).norm());
        out.xi.emplace_back(xi);
    }
    return out;
}

// The Hamiltonian lift of an integrated extremal, viewed as a horizontal curve
// with exact velocities and accelerations.
inline HorizontalCurve curve_of(const CometricField& f, const Trajectory& tr) {
    HorizontalCurve c;
    c.t = tr.t;
    for (const auto& s : tr.states) {
        const auto [xd, xid] = hamiltonian_rhs(f, s);
        const auto dg = f.gradient(s.x);
        Vec acc = f.matrix(s.x) * xid.vec();
        for (int p = 0; p < f.dim(); ++p) acc += xd[p] * (dg[static_cast<std::size_t>(p)] * s.xi.vec());
        c.x.push_back(s.x);
        c.v.push_back(xd);
        c.a.emplace_back(acc);
    }
    return c;
}

enum class TimeDirection { Future, Past, NotCausal };

// Future/past label of w relative to a timelike field value T in an index-1 fiber.
inline TimeDirection time_direction(const CometricField& f, const Point& x, const TangentVector& T,
                                    const TangentVector& w, double tol = kCausalTol) {
    if (f.index() != 1) throw std::invalid_argument("time orientation is only defined for index 1");
    if (metric_from_cometric(f, x, T, T) >= -tol) throw std::invalid_argument("time orientation field is not timelike");
    if (metric_from_cometric(f, x, w, w) > tol || w.norm() == 0.0) return TimeDirection::NotCausal;
    const double q = metric_from_cometric(f, x, T, w);
    if (q < 0.0) return TimeDirection::Future;
    if (q > 0.0) return TimeDirection::Past;
    return TimeDirection::NotCausal;
}

// cosh^{-1}(|Q(v,w)| / (|v||w|)) for timelike v, w.
inline double hyperbolic_angle(const CometricField& f, const Point& x, const TangentVector& v,
                               const TangentVector& w) {
    const double qv = metric_from_cometric(f, x, v, v);
    const double qw = metric_from_cometric(f, x, w, w);
    if (qv >= 0.0 || qw >= 0.0) throw std::invalid_argument("hyperbolic_angle: vectors must be timelike");
    const double c = std::abs(metric_from_cometric(f, x, v, w)) / std::sqrt(qv * qw);
    return std::acosh(std::max(1.0, c));
}

inline std::string format_g17(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

// CSV: t, x1..xn, xi1..xin, H
inline void write_csv(std::ostream& os, const CometricField& f, const Trajectory& tr) {
    const int n = f.dim();
    os << "t";
    for (int i = 1; i <= n; ++i) os << ",x" << i;
    for (int i = 1; i <= n; ++i) os << ",xi" << i;
    os << ",H\n";
    for (std::size_t r = 0; r < tr.size(); ++r) {
        const auto& s = tr.states[r];
        os << format_g17(tr.t[r]);
        for (int i = 0; i < n; ++i) os << ',' << format_g17(s.x[i]);
        for (int i = 0; i < n; ++i) os << ',' << format_g17(s.xi[i]);
        os << ',' << format_g17(hamiltonian(f, s)) << '\n';
    }
}

}  // namespace ssgeom
