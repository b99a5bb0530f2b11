// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <chrono>
#include <cstdio>
#include <functional>
#include <limits>
#include <string>

#include "longest_curve.hpp"
#include "support.hpp"

using namespace ssgeom;
using namespace ssgeom::testing;

namespace {

int failures = 0;

void report(int id, const char* name, bool pass, const std::string& detail) {
    std::printf("%s [%d] %s: %s\n", pass ? "PASS" : "FAIL", id, name, detail.c_str());
    std::fflush(stdout);
    failures += pass ? 0 : 1;
}

std::string fmt(const char* f, double a) {
    char buf[160];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}
std::string fmt(const char* f, double a, double b) {
    char buf[160];
    std::snprintf(buf, sizeof buf, f, a, b);
    return buf;
}
std::string fmt(const char* f, double a, double b, double c) {
    char buf[200];
    std::snprintf(buf, sizeof buf, f, a, b, c);
    return buf;
}

// Runs a criterion body; an escaping exception is a failure with its message.
void guarded(int id, const char* name, const std::function<void()>& body) {
    try {
        body();
    } catch (const std::exception& e) {
        report(id, name, false, std::string("exception: ") + e.what());
    }
}

void closed_form() {
    Rng r(1001);
    const auto t0 = std::chrono::steady_clock::now();
    double worst = 0.0;
    for (int i = 0; i < 50; ++i) {
        const auto P = random_quaternion_params(r, 0.1);
        const auto tr = integrate_extremal(quaternion_group(), Point::zero(7), P.initial_covector(), 1.0);
        for (std::size_t k = 0; k < tr.size(); ++k)
            worst = std::max(worst, (tr.states[k].x.vec() - quaternion_closed_form_extremal(P, tr.t[k]).vec()).norm());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    report(1, "closed-form oracle", worst <= 1e-6 && secs <= 10.0,
           fmt("max |numeric - closed form| = %.3e (tol 1e-6), runtime %.2f s (limit 10 s)", worst, secs));
}

void conservation() {
    Rng r(1002);
    double worst = 0.0;
    for (auto id : all_models()) {
        const auto& f = model_field(id);
        for (int i = 0; i < 50; ++i) {
            FlowOptions o;
            o.throw_on_drift = false;
            const auto tr = integrate_extremal(f, random_point(r, f.dim(), 1.0), random_covector(r, f.dim()), 1.0, o);
            worst = std::max(worst, tr.max_drift);
        }
    }
    report(2, "Hamiltonian conservation", worst <= 1e-9, fmt("max |H(t) - H(0)| = %.3e over 100 extremals (tol 1e-9)", worst));
}

void taylor() {
    Rng r(1003);
    double g1 = 0.0, g2 = 0.0, ratio = std::numeric_limits<double>::infinity();
    for (auto id : all_models()) {
        const auto& f = model_field(id);
        const int n = f.dim();
        for (int i = 0; i < 20; ++i) {
            const Point p = random_point(r, n, 2.0);
            const auto c = taylor_coefficients(f, p);
            const auto G = christoffel_at(f, p);
            const Mat g = f.matrix(p);
            for (int k = 0; k < n; ++k)
                for (int a = 0; a < n; ++a) {
                    g1 = std::max(g1, std::abs(c.gamma1()(k, a) - g(k, a)));
                    for (int b = 0; b < n; ++b) g2 = std::max(g2, std::abs(c.gamma2(k, a, b) + G(k, a, b)));
                }
            if (i < 5) {
                const Point q = random_point(r, n, 1.0);
                const auto cq = taylor_coefficients(f, q);
                const Covector u(r.unit_vec(n));
                double prev = -1.0;
                for (double s : {0.1, 0.05, 0.025}) {
                    const double rem = (exp_map(f, q, s * u) - taylor_exp(cq, s * u)).norm();
                    if (prev > 1e-12) ratio = std::min(ratio, prev / rem);
                    prev = rem;
                }
            }
        }
    }
    report(3, "Taylor identities", g1 <= 1e-12 && g2 <= 1e-12 && ratio >= 14.0,
           fmt("max |gamma1 - g| = %.3e, max |gamma2 + Gamma| = %.3e (tol 1e-12), min remainder ratio per halving %.2f (>= 14)",
               g1, g2, ratio));
}

void homogeneity() {
    Rng r(1004);
    double worst = 0.0;
    for (auto id : all_models()) {
        const auto& f = model_field(id);
        const double e = 2.0 * (f.dim() - f.rank());
        for (int j = 0; j < 5; ++j) {
            const auto ctx = diffeo_context(f, random_point(r, f.dim(), 1.0));
            for (int i = 0; i < 10; ++i) {
                const Covector u = random_covector(r, f.dim());
                const double d = truncated_jacobian(ctx, u).det;
                for (double s : {0.5, 2.0, 3.0}) {
                    const double ds = truncated_jacobian(ctx, s * u).det;
                    worst = std::max(worst, std::abs(ds / d / std::pow(s, e) - 1.0));
                }
            }
        }
    }
    report(4, "det W~ homogeneity", worst <= 1e-8,
           fmt("max relative deviation from s^{2(n-m)} = %.3e (tol 1e-8), n-m = 1 and 3", worst));
}

void gauss() {
    Rng r(1005);
    double worst = 0.0;
    for (auto id : all_models()) {
        const auto& f = model_field(id);
        for (int i = 0; i < 50; ++i) {
            const Point p = random_point(r, f.dim(), 1.0);
            worst = std::max(worst, gauss_lemma_check(f, p, random_covector(r, f.dim()), random_covector(r, f.dim())).residual);
        }
    }
    report(5, "Gauss lemma", worst <= 1e-6, fmt("max residual = %.3e over 100 pairs (tol 1e-6)", worst));
}

void bracket() {
    Rng r(1006);
    double ident = 0.0, fd = 0.0;
    for (auto id : all_models()) {
        const auto& f = model_field(id);
        const int n = f.dim();
        for (int i = 0; i < 200; ++i) {
            const Point x = random_point(r, n, 2.0);
            const Covector xi = random_covector(r, n), eta = random_covector(r, n);
            const Covector v = random_annihilator(r, f, x);
            const double b = bracket_form(f, x, xi, eta, v);
            ident = std::max(ident, std::abs(b - 2.0 * pairing(gamma_contract(christoffel_at(f, x), xi, v), eta)));
            const VectorFieldFn fa = [&](const Vec& y) { return Vec(f.matrix(Point(y)) * xi.vec()); };
            const VectorFieldFn fb = [&](const Vec& y) { return Vec(f.matrix(Point(y)) * eta.vec()); };
            fd = std::max(fd, std::abs(b - pairing(lie_bracket_fd(fa, fb, x), v)));
        }
    }
    report(6, "bracket/Christoffel identity", ident <= 1e-9 && fd <= 1e-8,
           fmt("identity residual %.3e (tol 1e-9), differenced-bracket residual %.3e (tol 1e-8), 200 samples per model",
               ident, fd));
}

void generator() {
    Rng r(1007);
    int positive = 0, total = 0;
    double smallest = std::numeric_limits<double>::infinity();
    for (auto id : all_models()) {
        const auto& f = model_field(id);
        for (int i = 0; i < 100; ++i) {
            const Point x = random_point(r, f.dim(), 2.0);
            Covector xi = random_covector(r, f.dim());
            if (is_annihilator(f.matrix(x), xi.vec())) continue;
            const auto res = is_two_step_generator(f, x, xi);
            positive += res.generator ? 1 : 0;
            smallest = std::min(smallest, res.sigma_min);
            ++total;
        }
    }
    int negatives = 0;
    for (int i = 0; i < 20; ++i) {
        Covector xi = random_covector(r, 3);
        xi[0] += 1.5;
        negatives += is_two_step_generator(constant_fixture(), random_point(r, 3), xi).generator ? 0 : 1;
    }
    report(7, "two-step generator ground truth", positive == total && total == 200 && negatives == 20,
           fmt("true on %.0f/%.0f model samples (smallest sigma %.3e), ", positive, total, smallest) +
               fmt("false on %.0f/20 constant-fixture samples", negatives));
}

void quaternion_algebra() {
    Rng r(1008);
    double zrel = 0.0, cid = 0.0, eig = 0.0, skew = 0.0;
    for (int i = 0; i < 50; ++i) {
        auto P = random_quaternion_params(r, 0.1);
        if (i % 5 == 0) P = QuaternionExtremalParams(P.xdot0, {0.0, P.theta[1], P.theta[2]});
        for (double t : {0.3, 0.7, 1.0}) {
            const auto q = quaternion_closed_form_extremal(P, t);
            const double z2 = q.z[0] * q.z[0] + q.z[1] * q.z[1] + q.z[2] * q.z[2];
            zrel = std::max(zrel, std::abs(quaternion_znorm_closed_form(P, t) - z2) / std::max(z2, 1e-300));
        }
        const auto& c = P.c;
        const auto c13 = c[0] * c[2], c24 = c[1] * c[3];
        cid = std::max({cid, std::abs(c[0] * c[1] - std::conj(c[2] * c[3])), std::abs(c13.imag()), std::max(0.0, c13.real()),
                        std::abs(c24.imag()), std::max(0.0, c24.real())});
        for (double v : quaternion_eigen_residuals(P.theta)) eig = std::max(eig, v);
        const Eigen::Matrix4d A = quaternion_A(P.theta), Q = quaternion_Q();
        skew = std::max(skew, (Q * A + A.transpose() * Q).cwiseAbs().maxCoeff());
    }
    const bool pass = zrel <= 1e-8 && cid <= 1e-10 && eig <= 1e-9 && skew <= 1e-14;
    report(8, "quaternion closed-form algebra", pass,
           fmt("z-norm relative %.3e (tol 1e-8), c identities %.3e (tol 1e-10), ", zrel, cid) +
               fmt("eigen residual %.3e (tol 1e-9), QA + A^T Q %.3e (tol 1e-14)", eig, skew));
}

void annihilator_fixed() {
    Rng r(1009);
    double worst = 0.0;
    for (auto id : all_models()) {
        const auto& f = model_field(id);
        for (int i = 0; i < 20; ++i) {
            const Point p = random_point(r, f.dim(), 2.0);
            worst = std::max(worst, (exp_map(f, p, random_annihilator(r, f, p)) - p).norm());
        }
    }
    report(9, "annihilator fixed point", worst <= 1e-12, fmt("max |exp_p(v) - p| = %.3e (tol 1e-12)", worst));
}

void longest_curve() {
    const auto rep = longest_curve_sampling(1010, 100);
    const double excess = rep.best_perturbed - rep.extremal_length;
    report(10, "longest-curve sampling", rep.accepted == 100 && excess <= 1e-6,
           fmt("extremal L = %.9f, best of %.0f perturbations %.9f", rep.extremal_length, rep.accepted,
               rep.best_perturbed) +
               fmt(" (excess %.3e, allowed 1e-6; endpoint gap %.1e)", excess, rep.worst_endpoint_gap));
}

}  // namespace

int main() {
    guarded(1, "closed-form oracle", closed_form);
    guarded(2, "Hamiltonian conservation", conservation);
    guarded(3, "Taylor identities", taylor);
    guarded(4, "det W~ homogeneity", homogeneity);
    guarded(5, "Gauss lemma", gauss);
    guarded(6, "bracket/Christoffel identity", bracket);
    guarded(7, "two-step generator ground truth", generator);
    guarded(8, "quaternion closed-form algebra", quaternion_algebra);
    guarded(9, "annihilator fixed point", annihilator_fixed);
    guarded(10, "longest-curve sampling", longest_curve);
    std::printf("%d/10 criteria passed\n", 10 - failures);
    return failures == 0 ? 0 : 1;
}
