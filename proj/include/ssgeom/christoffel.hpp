#pragma once

#include <Eigen/Dense>

#include <functional>
#include <vector>

#include "cometric.hpp"

namespace ssgeom {

// Raised-index tensor Gamma^{kpq} at a point, together with g at that point
// so that annihilator arguments can be validated.
class ChristoffelTensor {
public:
    ChristoffelTensor(Point x, Mat g, std::vector<double> data)
        : x_(std::move(x)), g_(std::move(g)), data_(std::move(data)), n_(static_cast<int>(g_.rows())) {}

    int dim() const noexcept { return n_; }
    const Point& point() const noexcept { return x_; }
    const Mat& cometric() const noexcept { return g_; }
    double operator()(int k, int p, int q) const { return data_[static_cast<std::size_t>((k * n_ + p) * n_ + q)]; }
    const std::vector<double>& data() const noexcept { return data_; }

    // Gamma^{kpq} xi_p v_q without any argument checks.
    Vec contract(const Vec& xi, const Vec& v) const {
        Vec out = Vec::Zero(n_);
        for (int k = 0; k < n_; ++k) {
            double s = 0.0;
            for (int p = 0; p < n_; ++p) {
                if (xi[p] == 0.0) continue;
                double t = 0.0;
                for (int q = 0; q < n_; ++q) t += (*this)(k, p, q) * v[q];
                s += xi[p] * t;
            }
            out[k] = s;
        }
        return out;
    }

    // Matrix M^{kp} = Gamma^{kpq} u_q (last slot contracted).
    Mat contract_last(const Vec& u) const {
        Mat out = Mat::Zero(n_, n_);
        for (int k = 0; k < n_; ++k)
            for (int p = 0; p < n_; ++p) {
                double s = 0.0;
                for (int q = 0; q < n_; ++q) s += (*this)(k, p, q) * u[q];
                out(k, p) = s;
            }
        return out;
    }

private:
    Point x_;
    Mat g_;
    std::vector<double> data_;
    int n_;
};

// Gamma^{kpq} = 1/2 (g^{kj} d_j g^{pq} - g^{pj} d_j g^{kq} - g^{qj} d_j g^{kp})
inline ChristoffelTensor christoffel_from(const Point& x, const Mat& g, const std::vector<Mat>& dg) {
    const int n = static_cast<int>(g.rows());
    // t[k](p,q) = g^{kj} d_j g^{pq}
    std::vector<Mat> t(static_cast<std::size_t>(n), Mat::Zero(n, n));
    for (int k = 0; k < n; ++k)
        for (int j = 0; j < n; ++j)
            if (g(k, j) != 0.0) t[static_cast<std::size_t>(k)] += g(k, j) * dg[static_cast<std::size_t>(j)];
    std::vector<double> data(static_cast<std::size_t>(n * n * n));
    for (int k = 0; k < n; ++k)
        for (int p = 0; p < n; ++p)
            for (int q = 0; q < n; ++q)
                data[static_cast<std::size_t>((k * n + p) * n + q)] =
                    0.5 * (t[static_cast<std::size_t>(k)](p, q) - t[static_cast<std::size_t>(p)](k, q) -
                           t[static_cast<std::size_t>(q)](k, p));
    return ChristoffelTensor(x, g, std::move(data));
}

inline ChristoffelTensor christoffel_at(const CometricField& f, const Point& x) {
    return christoffel_from(x, f.matrix(x), f.gradient(x));
}

inline constexpr double kAnnihilatorTol = 1e-8;

inline bool is_annihilator(const Mat& g, const Vec& v, double tol = kAnnihilatorTol) {
    return (g * v).norm() <= tol * std::max(1.0, v.norm());
}

// Gamma(xi, v) for an annihilator v; the result is horizontal.
inline TangentVector gamma_contract(const ChristoffelTensor& gam, const Covector& xi, const Covector& v) {
    require_dim(gam.dim(), xi.size(), "gamma_contract");
    require_dim(gam.dim(), v.size(), "gamma_contract");
    if (!is_annihilator(gam.cometric(), v.vec())) throw NotAnnihilator("gamma_contract: v is not an annihilator");
    return TangentVector(gam.contract(xi.vec(), v.vec()));
}

// <[g xi, g eta], v> for constant-coefficient covectors xi, eta, with
// [X, Y]^r = Y^j d_j X^r - X^j d_j Y^r. In coordinates:
// (g^{jq} d_j g^{rp} - g^{jp} d_j g^{rq}) xi_p eta_q v_r = 2 <Gamma(xi, v), eta>.
inline double bracket_form(const CometricField& f, const Point& x, const Covector& xi, const Covector& eta,
                           const Covector& v) {
    require_dim(f.dim(), xi.size(), "bracket_form");
    require_dim(f.dim(), eta.size(), "bracket_form");
    require_dim(f.dim(), v.size(), "bracket_form");
    const Mat g = f.matrix(x);
    if (!is_annihilator(g, v.vec())) throw NotAnnihilator("bracket_form: v is not an annihilator");
    const auto dg = f.gradient(x);
    const Vec gxi = g * xi.vec();
    const Vec geta = g * eta.vec();
    double s = 0.0;
    for (int j = 0; j < f.dim(); ++j) {
        const Mat& d = dg[static_cast<std::size_t>(j)];
        s += geta[j] * v.vec().dot(d * xi.vec()) - gxi[j] * v.vec().dot(d * eta.vec());
    }
    return s;
}

// A vector field given by n component expressions.
using VectorFieldExpr = std::vector<Expression>;

inline Vec evaluate_field(const VectorFieldExpr& y, const Point& x) {
    Vec out(static_cast<Eigen::Index>(y.size()));
    const std::span<const double> pt(x.vec().data(), static_cast<std::size_t>(x.size()));
    for (std::size_t i = 0; i < y.size(); ++i) out[static_cast<Eigen::Index>(i)] = y[i].evaluate(pt);
    return out;
}

// Components of g xi for a constant-coefficient covector xi.
inline VectorFieldExpr cometric_field_of(const CometricField& f, const Covector& xi) {
    VectorFieldExpr out;
    for (int k = 0; k < f.dim(); ++k) {
        Expression e = Expression::constant(0.0);
        for (int j = 0; j < f.dim(); ++j)
            if (xi[j] != 0.0) e = e + xi[j] * f.entry(k, j);
        out.push_back(e);
    }
    return out;
}

// [X, Y]^r = Y^j d_j X^r - X^j d_j Y^r, derivatives taken symbolically.
inline TangentVector lie_bracket(const VectorFieldExpr& a, const VectorFieldExpr& b, const Point& x) {
    const int n = x.size();
    require_dim(n, static_cast<int>(a.size()), "lie_bracket");
    require_dim(n, static_cast<int>(b.size()), "lie_bracket");
    const Vec av = evaluate_field(a, x), bv = evaluate_field(b, x);
    const std::span<const double> pt(x.vec().data(), static_cast<std::size_t>(n));
    Vec out = Vec::Zero(n);
    for (int r = 0; r < n; ++r)
        for (int j = 0; j < n; ++j) {
            const auto ur = static_cast<std::size_t>(r);
            out[r] += bv[j] * differentiate(a[ur], j + 1).evaluate(pt) - av[j] * differentiate(b[ur], j + 1).evaluate(pt);
        }
    return TangentVector(out);
}

using VectorFieldFn = std::function<Vec(const Vec&)>;

// Same bracket convention as lie_bracket, with central differences.
inline TangentVector lie_bracket_fd(const VectorFieldFn& a, const VectorFieldFn& b, const Point& x, double h = 1e-5) {
    const Vec av = a(x.vec()), bv = b(x.vec());
    const auto dirderiv = [&](const VectorFieldFn& fld, const Vec& dir) {
        return Vec((fld(x.vec() + h * dir) - fld(x.vec() - h * dir)) / (2 * h));
    };
    return TangentVector(Vec(dirderiv(a, bv) - dirderiv(b, av)));
}

// (grad_sym Y)^{kq} = g^{kj} d_j Y^q + g^{qj} d_j Y^k - Y^j d_j g^{kq}
inline Mat sym_covariant_derivative(const CometricField& f, const Point& x, const VectorFieldExpr& y) {
    const int n = f.dim();
    require_dim(n, static_cast<int>(y.size()), "sym_covariant_derivative");
    const Mat g = f.matrix(x);
    const auto dg = f.gradient(x);
    const std::span<const double> pt(x.vec().data(), static_cast<std::size_t>(n));
    Mat jac(n, n);  // jac(q, j) = d_j Y^q
    for (int q = 0; q < n; ++q)
        for (int j = 0; j < n; ++j) jac(q, j) = differentiate(y[static_cast<std::size_t>(q)], j + 1).evaluate(pt);
    const Vec yv = evaluate_field(y, x);
    Mat out = g * jac.transpose();
    out += out.transpose().eval();
    for (int j = 0; j < n; ++j) out -= yv[j] * dg[static_cast<std::size_t>(j)];
    return out;
}

struct GeneratorTest {
    bool generator;
    double sigma_min;
    double sigma_max;
};

// Injectivity of v -> Gamma(xi, v) from the annihilator space into S.
inline GeneratorTest is_two_step_generator(const CometricField& f, const Point& x, const Covector& xi,
                                           double rel_cutoff = 1e-9) {
    require_dim(f.dim(), xi.size(), "is_two_step_generator");
    const Mat g = f.matrix(x);
    if (is_annihilator(g, xi.vec())) throw NotAnnihilator("is_two_step_generator: xi is an annihilator");
    const auto split = detail::rank_split(f, g);
    const auto gam = christoffel_from(x, g, f.gradient(x));
    const int nk = static_cast<int>(split.kernel.cols());
    Mat map(split.range.cols(), nk);
    for (int l = 0; l < nk; ++l) map.col(l) = split.range.transpose() * gam.contract(xi.vec(), split.kernel.col(l));
    const Vec s = Eigen::JacobiSVD<Mat>(map).singularValues();
    const double smax = s.size() ? s[0] : 0.0;
    const double smin = s.size() >= nk && nk > 0 ? s[nk - 1] : 0.0;
    return {smax > 0.0 && smin > rel_cutoff * smax, smin, smax};
}

}  // namespace ssgeom
