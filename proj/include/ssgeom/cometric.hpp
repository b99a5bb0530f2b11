#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "coords.hpp"
#include "errors.hpp"
#include "expression.hpp"

namespace ssgeom {

// Degenerate symmetric cometric g^{jk}(x) of rank m and index nu on an
// n-dimensional chart. Array indices are 0-based; expression sources use
// 1-based coordinate names x1..xn.
class CometricField {
public:
    struct Entry {
        int j;
        int k;
        Expression expr;
    };

    // `entries` is row-major n*n and must be symmetric tree-for-tree.
    CometricField(int n, int m, int nu, std::vector<Expression> entries)
        : n_(n), m_(m), nu_(nu), g_(std::move(entries)) {
        if (n < 3) throw std::invalid_argument("cometric: dimension must be >= 3");
        if (m <= 1 || m >= n) throw std::invalid_argument("cometric: rank must satisfy 1 < m < n");
        if (nu < 0 || nu > m) throw std::invalid_argument("cometric: index must satisfy 0 <= nu <= m");
        if (static_cast<int>(g_.size()) != n * n) throw std::invalid_argument("cometric: need n*n entries");
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k) {
                if (g_[idx(j, k)].max_coordinate() > n)
                    throw std::invalid_argument("cometric: entry references a coordinate beyond the dimension");
                if (k > j && !same_tree(g_[idx(j, k)], g_[idx(k, j)]))
                    throw std::invalid_argument("cometric: entries (j,k) and (k,j) differ");
            }
        build_derivatives();
    }

    // Upper-triangle entries (j <= k, 0-based); the rest is zero.
    static CometricField from_upper(int n, int m, int nu, const std::vector<Entry>& upper) {
        std::vector<Expression> e(static_cast<std::size_t>(n * n), Expression::constant(0.0));
        for (const auto& en : upper) {
            if (en.j < 0 || en.k < 0 || en.j >= n || en.k >= n)
                throw std::invalid_argument("cometric: entry index out of range");
            if (en.j > en.k) throw std::invalid_argument("cometric: only entries with j <= k may be listed");
            e[static_cast<std::size_t>(en.j * n + en.k)] = en.expr;
            e[static_cast<std::size_t>(en.k * n + en.j)] = en.expr;
        }
        return CometricField(n, m, nu, std::move(e));
    }

    int dim() const noexcept { return n_; }
    int rank() const noexcept { return m_; }
    int index() const noexcept { return nu_; }

    const Expression& entry(int j, int k) const { return g_[idx(j, k)]; }
    const Expression& derivative(int j, int k, int p) const { return dg_[static_cast<std::size_t>(idx(j, k) * n_ + p)]; }

    // True when every entry is a constant tree.
    bool is_constant() const {
        return std::all_of(g_.begin(), g_.end(), [](const Expression& e) { return e.max_coordinate() == 0; });
    }

    Mat matrix(const Point& x) const {
        check(x);
        Mat g(n_, n_);
        const std::span<const double> pt(x.vec().data(), static_cast<std::size_t>(n_));
        for (int j = 0; j < n_; ++j)
            for (int k = j; k < n_; ++k) g(j, k) = g(k, j) = g_[idx(j, k)].evaluate(pt);
        return g;
    }

    // grad[p] = d g / d x^p
    std::vector<Mat> gradient(const Point& x) const {
        check(x);
        std::vector<Mat> out(static_cast<std::size_t>(n_), Mat::Zero(n_, n_));
        const std::span<const double> pt(x.vec().data(), static_cast<std::size_t>(n_));
        for (const auto& t : d1_) {
            const double v = t.expr.evaluate(pt);
            out[static_cast<std::size_t>(t.p)](t.j, t.k) = v;
            out[static_cast<std::size_t>(t.p)](t.k, t.j) = v;
        }
        return out;
    }

    // hess[p*n + q] = d^2 g / dx^p dx^q
    std::vector<Mat> hessian(const Point& x) const {
        check(x);
        std::vector<Mat> out(static_cast<std::size_t>(n_ * n_), Mat::Zero(n_, n_));
        const std::span<const double> pt(x.vec().data(), static_cast<std::size_t>(n_));
        for (const auto& t : d2_) {
            const double v = t.expr.evaluate(pt);
            Mat& h = out[static_cast<std::size_t>(t.p * n_ + t.q)];
            h(t.j, t.k) = v;
            h(t.k, t.j) = v;
            if (t.p != t.q) {
                Mat& h2 = out[static_cast<std::size_t>(t.q * n_ + t.p)];
                h2(t.j, t.k) = v;
                h2(t.k, t.j) = v;
            }
        }
        return out;
    }

    // out(p, q) = xi^T (d^2 g / dx^p dx^q) xi
    Mat hessian_quadratic(const Point& x, const Vec& xi) const {
        check(x);
        Mat out = Mat::Zero(n_, n_);
        const std::span<const double> pt(x.vec().data(), static_cast<std::size_t>(n_));
        for (const auto& t : d2_) {
            const double c = t.expr.evaluate(pt) * xi[t.j] * xi[t.k] * (t.j == t.k ? 1.0 : 2.0);
            out(t.p, t.q) += c;
            if (t.p != t.q) out(t.q, t.p) += c;
        }
        return out;
    }

private:
    struct D1 {
        int j, k, p;
        Expression expr;
    };
    struct D2 {
        int j, k, p, q;
        Expression expr;
    };

    std::size_t idx(int j, int k) const { return static_cast<std::size_t>(j * n_ + k); }

    void check(const Point& x) const { require_dim(n_, x.size(), "cometric"); }

    void build_derivatives() {
        dg_.assign(static_cast<std::size_t>(n_ * n_ * n_), Expression::constant(0.0));
        for (int j = 0; j < n_; ++j)
            for (int k = j; k < n_; ++k)
                for (int p = 0; p < n_; ++p) {
                    Expression d = differentiate(g_[idx(j, k)], p + 1);
                    dg_[static_cast<std::size_t>(idx(j, k) * n_ + p)] = d;
                    dg_[static_cast<std::size_t>(idx(k, j) * n_ + p)] = d;
                    if (d.is_zero()) continue;
                    d1_.push_back({j, k, p, d});
                    for (int q = p; q < n_; ++q) {
                        Expression dd = differentiate(d, q + 1);
                        if (!dd.is_zero()) d2_.push_back({j, k, p, q, dd});
                    }
                }
    }

    int n_, m_, nu_;
    std::vector<Expression> g_;
    std::vector<Expression> dg_;
    std::vector<D1> d1_;
    std::vector<D2> d2_;
};

inline constexpr double kRankCutoff = 1e-10;
inline constexpr double kCausalTol = 1e-9;

// v^k = g^{kj}(x) xi_j
inline TangentVector apply_cometric(const CometricField& f, const Point& x, const Covector& xi) {
    require_dim(f.dim(), xi.size(), "apply_cometric");
    return TangentVector(Vec(f.matrix(x) * xi.vec()));
}

namespace detail {

struct RankSplit {
    Mat range;   // orthonormal columns spanning the column space
    Mat kernel;  // orthonormal columns spanning the kernel
};

inline RankSplit rank_split(const CometricField& f, const Mat& g) {
    Eigen::JacobiSVD<Mat> svd(g, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const auto& s = svd.singularValues();
    const double cutoff = kRankCutoff * (s.size() ? s[0] : 0.0);
    int r = 0;
    while (r < s.size() && s[r] > cutoff) ++r;
    if (r != f.rank())
        throw RankMismatch("cometric has numerical rank " + std::to_string(r) + " but declared rank " +
                           std::to_string(f.rank()));
    return {svd.matrixU().leftCols(r), svd.matrixV().rightCols(f.dim() - r)};
}

}  // namespace detail

inline std::vector<Covector> annihilator_basis(const CometricField& f, const Point& x) {
    const auto split = detail::rank_split(f, f.matrix(x));
    std::vector<Covector> out;
    for (int c = 0; c < split.kernel.cols(); ++c) out.emplace_back(Vec(split.kernel.col(c)));
    return out;
}

inline std::vector<TangentVector> horizontal_basis(const CometricField& f, const Point& x) {
    const auto split = detail::rank_split(f, f.matrix(x));
    std::vector<TangentVector> out;
    for (int c = 0; c < split.range.cols(); ++c) out.emplace_back(Vec(split.range.col(c)));
    return out;
}

// Matrix forms of the two bases (columns), same numerics as above.
inline Mat annihilator_matrix(const CometricField& f, const Point& x) {
    return detail::rank_split(f, f.matrix(x)).kernel;
}
inline Mat horizontal_matrix(const CometricField& f, const Point& x) {
    return detail::rank_split(f, f.matrix(x)).range;
}

enum class CausalClass { Timelike, Null, Spacelike, Annihilator };

inline const char* to_string(CausalClass c) {
    switch (c) {
    case CausalClass::Timelike: return "timelike";
    case CausalClass::Null: return "null";
    case CausalClass::Spacelike: return "spacelike";
    case CausalClass::Annihilator: return "annihilator";
    }
    return "?";
}

struct CausalCharacter {
    CausalClass cls;
    double scalar;  // <g xi, xi>
};

inline CausalCharacter classify(const Mat& g, const Vec& xi, double tol = kCausalTol) {
    const Vec gx = g * xi;
    const double s = gx.dot(xi);
    if (gx.norm() <= tol * xi.norm()) return {CausalClass::Annihilator, s};
    if (s < -tol) return {CausalClass::Timelike, s};
    if (s > tol) return {CausalClass::Spacelike, s};
    return {CausalClass::Null, s};
}

inline CausalCharacter causal_character(const CometricField& f, const Point& x, const Covector& xi,
                                        double tol = kCausalTol) {
    if (!(tol > 0)) throw std::invalid_argument("causal_character: tol must be positive");
    require_dim(f.dim(), xi.size(), "causal_character");
    return classify(f.matrix(x), xi.vec(), tol);
}

// Q_x(V, W) for horizontal V, W: solve g xi = V in the column space and pair with W.
inline double metric_from_cometric(const CometricField& f, const Point& x, const TangentVector& v,
                                   const TangentVector& w, double tol = 1e-8) {
    require_dim(f.dim(), v.size(), "metric_from_cometric");
    require_dim(f.dim(), w.size(), "metric_from_cometric");
    const Mat g = f.matrix(x);
    const auto split = detail::rank_split(f, g);
    const auto off = [&](const Vec& y) { return (y - split.range * (split.range.transpose() * y)).norm(); };
    if (off(v.vec()) > tol * std::max(1.0, v.norm()) || off(w.vec()) > tol * std::max(1.0, w.norm()))
        throw NotHorizontal("metric_from_cometric: vector is not horizontal");
    const Vec xi = g.completeOrthogonalDecomposition().pseudoInverse() * v.vec();
    return w.vec().dot(xi);
}

struct Signature {
    int negative = 0;
    int positive = 0;
    int zero = 0;
    friend bool operator==(const Signature&, const Signature&) = default;
};

inline Signature signature(const CometricField& f, const Point& x) {
    Eigen::SelfAdjointEigenSolver<Mat> es(f.matrix(x));
    const auto& ev = es.eigenvalues();
    const double cutoff = kRankCutoff * ev.cwiseAbs().maxCoeff();
    Signature s;
    for (Eigen::Index i = 0; i < ev.size(); ++i) {
        if (ev[i] < -cutoff) ++s.negative;
        else if (ev[i] > cutoff) ++s.positive;
        else ++s.zero;
    }
    return s;
}

inline Signature declared_signature(const CometricField& f) {
    return {f.index(), f.rank() - f.index(), f.dim() - f.rank()};
}

}  // namespace ssgeom
