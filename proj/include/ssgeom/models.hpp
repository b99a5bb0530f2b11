#pragma once

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <complex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "christoffel.hpp"
#include "cometric.hpp"

namespace ssgeom {

enum class ModelId { HeisenbergLorentz, QuaternionHType };

inline std::string_view model_name(ModelId id) {
    return id == ModelId::HeisenbergLorentz ? "heisenberg-lorentz" : "quaternion-h-type";
}

inline std::optional<ModelId> parse_model_id(std::string_view s) {
    if (s == "heisenberg-lorentz") return ModelId::HeisenbergLorentz;
    if (s == "quaternion-h-type") return ModelId::QuaternionHType;
    return std::nullopt;
}

namespace detail {

inline Expression c(double v) { return Expression::constant(v); }
inline Expression x(int i) { return Expression::coordinate(i); }

// g = sum_a eps_a X_a (x) X_a
inline CometricField field_from_frames(const std::vector<VectorFieldExpr>& frames, const std::vector<double>& eps,
                                       int n, int nu) {
    std::vector<Expression> e(static_cast<std::size_t>(n * n), c(0.0));
    for (int j = 0; j < n; ++j)
        for (int k = j; k < n; ++k) {
            Expression s = c(0.0);
            for (std::size_t a = 0; a < frames.size(); ++a)
                s = s + eps[a] * (frames[a][static_cast<std::size_t>(j)] * frames[a][static_cast<std::size_t>(k)]);
            e[static_cast<std::size_t>(j * n + k)] = s;
            e[static_cast<std::size_t>(k * n + j)] = s;
        }
    return CometricField(n, static_cast<int>(frames.size()), nu, std::move(e));
}

}  // namespace detail

// Horizontal frame fields X_a; the cometric is sum_a eps_a X_a X_a^T.
inline std::vector<VectorFieldExpr> frame_fields(ModelId id) {
    using detail::c;
    using detail::x;
    if (id == ModelId::HeisenbergLorentz) {
        // X = d/dx + (y/2) d/dz,  Y = d/dy - (x/2) d/dz
        return {{c(1), c(0), 0.5 * x(2)}, {c(0), c(1), -0.5 * x(1)}};
    }
    const Expression h = c(0.5);
    return {
        {c(1), c(0), c(0), c(0), h * x(2), -h * x(4), -h * x(3)},
        {c(0), c(1), c(0), c(0), -h * x(1), -h * x(3), h * x(4)},
        {c(0), c(0), c(1), c(0), h * x(4), h * x(2), h * x(1)},
        {c(0), c(0), c(0), c(1), -h * x(3), h * x(1), -h * x(2)},
    };
}

inline std::vector<double> frame_signs(ModelId id) {
    return id == ModelId::HeisenbergLorentz ? std::vector<double>{-1, 1} : std::vector<double>{-1, -1, 1, 1};
}

// Vertical fields d/dz_i (the last n - m coordinates).
inline std::vector<VectorFieldExpr> vertical_fields(ModelId id) {
    const int n = id == ModelId::HeisenbergLorentz ? 3 : 7;
    const int m = id == ModelId::HeisenbergLorentz ? 2 : 4;
    std::vector<VectorFieldExpr> out;
    for (int i = m; i < n; ++i) {
        VectorFieldExpr z(static_cast<std::size_t>(n), detail::c(0));
        z[static_cast<std::size_t>(i)] = detail::c(1);
        out.push_back(z);
    }
    return out;
}

inline const CometricField& heisenberg_lorentz() {
    static const CometricField f =
        detail::field_from_frames(frame_fields(ModelId::HeisenbergLorentz), frame_signs(ModelId::HeisenbergLorentz), 3, 1);
    return f;
}

inline const CometricField& quaternion_group() {
    static const CometricField f =
        detail::field_from_frames(frame_fields(ModelId::QuaternionHType), frame_signs(ModelId::QuaternionHType), 7, 2);
    return f;
}

inline const CometricField& model_field(ModelId id) {
    return id == ModelId::HeisenbergLorentz ? heisenberg_lorentz() : quaternion_group();
}

// Rows are X_a(x).
inline Mat frames_at(ModelId id, const Point& x) {
    const auto fr = frame_fields(id);
    Mat out(static_cast<Eigen::Index>(fr.size()), x.size());
    for (std::size_t a = 0; a < fr.size(); ++a) out.row(static_cast<Eigen::Index>(a)) = evaluate_field(fr[a], x).transpose();
    return out;
}

// Time orientation of the sub-Lorentzian model: the timelike frame field X.
inline TangentVector heisenberg_time_field(const Point& x) {
    return TangentVector(Vec(frames_at(ModelId::HeisenbergLorentz, x).row(0).transpose()));
}

namespace quat {

using Q4 = std::array<double, 4>;

// Hamilton product with ij = k.
inline Q4 mul(const Q4& p, const Q4& q) {
    return {p[0] * q[0] - p[1] * q[1] - p[2] * q[2] - p[3] * q[3],
            p[0] * q[1] + p[1] * q[0] + p[2] * q[3] - p[3] * q[2],
            p[0] * q[2] - p[1] * q[3] + p[2] * q[0] + p[3] * q[1],
            p[0] * q[3] + p[1] * q[2] - p[2] * q[1] + p[3] * q[0]};
}

inline Q4 conj(const Q4& p) { return {p[0], -p[1], -p[2], -p[3]}; }

// Vertical part of the group law: z'' = z + z' + B(x, x') / 2, with
// B = (-Im_i, Im_k, Im_j) of x' * conj(x). This is the ordering that
// reproduces the frame fields above.
inline std::array<double, 3> cocycle(const Q4& x, const Q4& xp) {
    const Q4 w = mul(xp, conj(x));
    return {-w[1], w[3], w[2]};
}

}  // namespace quat

inline Vec group_multiply(ModelId id, const Vec& a, const Vec& b) {
    if (id == ModelId::HeisenbergLorentz) {
        require_dim(3, static_cast<int>(a.size()), "group_multiply");
        require_dim(3, static_cast<int>(b.size()), "group_multiply");
        return Vec{{a[0] + b[0], a[1] + b[1], a[2] + b[2] + 0.5 * (a[1] * b[0] - a[0] * b[1])}};
    }
    require_dim(7, static_cast<int>(a.size()), "group_multiply");
    require_dim(7, static_cast<int>(b.size()), "group_multiply");
    const auto B = quat::cocycle({a[0], a[1], a[2], a[3]}, {b[0], b[1], b[2], b[3]});
    Vec out = a + b;
    for (int i = 0; i < 3; ++i) out[4 + i] += 0.5 * B[static_cast<std::size_t>(i)];
    return out;
}

using cplx = std::complex<double>;

// Integration constants of the quaternion extremal through the identity with
// initial velocity xdot0 and first integrals theta.
struct QuaternionExtremalParams {
    std::array<double, 4> xdot0{};
    std::array<double, 3> theta{};
    cplx k, a;
    double kabs = 0.0;
    std::array<cplx, 4> c{};
    cplx w1, w2;

    static constexpr double kMinK = 1e-6;

    QuaternionExtremalParams(const std::array<double, 4>& v, const std::array<double, 3>& th) : xdot0(v), theta(th) {
        const cplx I(0, 1);
        k = cplx(th[1], th[2]);
        kabs = std::abs(k);
        if (!(kabs >= kMinK))
            throw ModelError("quaternion closed form needs |k| >= 1e-6 (theta2, theta3 too small)");
        a = cplx(kabs, th[0]);
        const cplx ab = std::conj(a), kb = std::conj(k);
        const cplx p12(v[0], v[1]), m12(v[0], -v[1]), p43(v[3], v[2]), m43(v[3], -v[2]);
        c[0] = (k * p12 + kabs * p43) / (4.0 * I * a * k * kabs);
        c[1] = (-kb * m12 + kabs * m43) / (4.0 * I * a * kb * kabs);
        c[2] = (kb * m12 + kabs * m43) / (4.0 * I * ab * kb * kabs);
        c[3] = (-k * p12 + kabs * p43) / (4.0 * I * ab * k * kabs);
        w1 = k / kabs * p12;
        w2 = p43;
    }

    // Covector at the identity producing this extremal.
    Covector initial_covector() const {
        return Covector{-xdot0[0], -xdot0[1], xdot0[2], xdot0[3], theta[0], theta[1], theta[2]};
    }
};

namespace detail {

inline double real_part(cplx z, const char* what) {
    if (std::abs(z.imag()) > 1e-8 * std::max(1.0, std::abs(z.real())))
        throw ModelError(std::string("closed form: imaginary residue in ") + what);
    return z.real();
}

}  // namespace detail

struct QuaternionPoint {
    std::array<double, 4> x{};
    std::array<double, 3> z{};
    Vec vec() const { return Vec{{x[0], x[1], x[2], x[3], z[0], z[1], z[2]}}; }
};

inline QuaternionPoint quaternion_closed_form_extremal(const QuaternionExtremalParams& P, double t) {
    const cplx I(0, 1);
    const auto& [c1, c2, c3, c4] = P.c;
    const cplx a = P.a, ab = std::conj(a), k = P.k, kb = std::conj(k);
    const double K = P.kabs, t1 = P.theta[0], t2 = P.theta[1], t3 = P.theta[2];
    const cplx ea = std::exp(a * t), ema = std::exp(-a * t), eb = std::exp(ab * t), emb = std::exp(-ab * t);
    const cplx e2k = std::exp(2.0 * K * t), em2k = std::exp(-2.0 * K * t);
    QuaternionPoint out;
    out.x[0] = detail::real_part(I * K * (c1 * ea + c2 * ema + c3 * eb + c4 * emb) - I * K * (c1 + c2 + c3 + c4), "x1");
    out.x[1] = detail::real_part(K * (c1 * ea - c2 * ema - c3 * eb + c4 * emb) - K * (c1 - c2 - c3 + c4), "x2");
    out.x[2] = detail::real_part(c1 * k * ea + c2 * kb * ema - c3 * kb * eb - c4 * k * emb -
                                     (c1 * k + c2 * kb - c3 * kb - c4 * k),
                                 "x3");
    out.x[3] = detail::real_part(I * (c1 * k * ea - c2 * kb * ema + c3 * kb * eb - c4 * k * emb) -
                                     I * (c1 * k - c2 * kb + c3 * kb - c4 * k),
                                 "x4");
    const cplx c12 = c1 * c2, c34 = c3 * c4, c13 = c1 * c3, c24 = c2 * c4;
    const cplx sa = ea - ema, sb = eb - emb;
    const cplx lin = -2.0 * (c12 * a + c34 * ab) * t + c12 * sa + c34 * sb;
    const cplx ex = c13 * e2k + c24 * em2k - c13 - c24;
    const cplx osc = c13 * ea + c24 * ema - c13 * eb - c24 * emb;
    out.z[0] = detail::real_part(2.0 * I * K * K * (-2.0 * (c12 * a - c34 * ab) * t + c12 * sa - c34 * sb), "z1");
    out.z[1] = detail::real_part(2.0 * t2 * K * lin + 2.0 * t1 * t3 * ex + 2.0 * I * t3 * K * osc, "z2");
    out.z[2] = detail::real_part(2.0 * t3 * K * lin - 2.0 * t1 * t2 * ex - 2.0 * I * t2 * K * osc, "z3");
    return out;
}

// -x1^2 - x2^2 + x3^2 + x4^2
inline double quaternion_x_quadratic(const std::array<double, 4>& x) {
    return -x[0] * x[0] - x[1] * x[1] + x[2] * x[2] + x[3] * x[3];
}

inline double homogeneous_norm(const std::array<double, 4>& x, const std::array<double, 3>& z) {
    const double q = quaternion_x_quadratic(x);
    return std::pow(q * q + z[0] * z[0] + z[1] * z[1] + z[2] * z[2], 0.25);
}

// -64 |k|^2 Re(c1 c2 sinh^2(a t / 2))
inline double quaternion_xnorm_closed_form(const QuaternionExtremalParams& P, double t) {
    const cplx s = std::sinh(P.a * t / 2.0);
    return -64.0 * P.kabs * P.kabs * (P.c[0] * P.c[1] * s * s).real();
}

inline double quaternion_znorm_closed_form(const QuaternionExtremalParams& P, double t) {
    const double K = P.kabs, t1 = P.theta[0];
    const auto& c = P.c;
    const cplx f = c[0] * c[2] * std::exp(K * t) - c[1] * c[3] * std::exp(-K * t);
    const double g = t1 * std::sinh(K * t) - K * std::sin(t1 * t);
    const cplx prod = c[0] * c[1] * c[2] * c[3];
    const double h1 = K * t - std::sinh(K * t) * std::cos(t1 * t);
    const double h2 = t1 * t - std::cosh(K * t) * std::sin(t1 * t);
    const cplx v = 16.0 * K * K * f * f * g * g + 64.0 * K * K * K * K * prod * (h1 * h1 + h2 * h2);
    return detail::real_part(v, "z-norm");
}

// x'' = A(theta) x' along quaternion extremals.
inline Eigen::Matrix4d quaternion_A(const std::array<double, 3>& th) {
    const double a = th[0], b = th[1], c = th[2];
    Eigen::Matrix4d A;
    A << 0, -a, c, b,
         a, 0, b, -c,
         c, b, 0, a,
         b, -c, -a, 0;
    return A;
}

inline Eigen::Matrix4d quaternion_Q() { return Eigen::Vector4d(-1, -1, 1, 1).asDiagonal(); }

// |det(A - lambda I)| at lambda in {a, -a, conj a, -conj a}.
inline std::array<double, 4> quaternion_eigen_residuals(const std::array<double, 3>& th) {
    const Eigen::Matrix4cd A = quaternion_A(th).cast<cplx>();
    const cplx a(std::hypot(th[1], th[2]), th[0]);
    std::array<double, 4> r{};
    const cplx lam[4] = {a, -a, std::conj(a), -std::conj(a)};
    for (int i = 0; i < 4; ++i) r[static_cast<std::size_t>(i)] = std::abs((A - lam[i] * Eigen::Matrix4cd::Identity()).determinant());
    return r;
}

}  // namespace ssgeom
