#pragma once

// Shared fixtures and hand-rolled generators for the test binaries.

#include <ssgeom/ssgeom.hpp>

#include <cstdint>
#include <random>
#include <vector>

namespace ssgeom::testing {

class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(eng_); }
    double normal() { return std::normal_distribution<double>()(eng_); }
    int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(eng_); }

    Vec uniform_vec(int n, double lo, double hi) {
        Vec v(n);
        for (int i = 0; i < n; ++i) v[i] = uniform(lo, hi);
        return v;
    }
    Vec unit_vec(int n) {
        Vec v(n);
        for (int i = 0; i < n; ++i) v[i] = normal();
        return v.normalized();
    }

    std::mt19937_64& engine() { return eng_; }

private:
    std::mt19937_64 eng_;
};

// Random polynomial tree over x1..xn, depth-limited.
inline Expression random_expression(Rng& r, int n, int depth) {
    const int pick = depth <= 0 ? r.integer(0, 1) : r.integer(0, 5);
    switch (pick) {
    case 0: return Expression::constant(std::round(r.uniform(-3, 3) * 4) / 4);
    case 1: return Expression::coordinate(r.integer(1, n));
    case 2: return Expression::negation(random_expression(r, n, depth - 1));
    case 3: return Expression::sum(random_expression(r, n, depth - 1), random_expression(r, n, depth - 1));
    case 4: return Expression::difference(random_expression(r, n, depth - 1), random_expression(r, n, depth - 1));
    default: return Expression::product(random_expression(r, n, depth - 1), random_expression(r, n, depth - 1));
    }
}

// g = diag(-1, 1, 0) everywhere: Gamma vanishes identically.
inline const CometricField& constant_fixture() {
    static const CometricField f = CometricField::from_upper(
        3, 2, 1, {{0, 0, Expression::constant(-1.0)}, {1, 1, Expression::constant(1.0)}});
    return f;
}

inline Point random_point(Rng& r, int n, double scale = 1.0) { return Point(r.uniform_vec(n, -scale, scale)); }

inline Covector random_covector(Rng& r, int n, double scale = 1.0) { return Covector(r.uniform_vec(n, -scale, scale)); }

// Random element of ker g(x).
inline Covector random_annihilator(Rng& r, const CometricField& f, const Point& x) {
    const Mat K = annihilator_matrix(f, x);
    return Covector(Vec(K * r.uniform_vec(static_cast<int>(K.cols()), -1, 1)));
}

// Random horizontal vector at x.
inline TangentVector random_horizontal(Rng& r, const CometricField& f, const Point& x) {
    const Mat H = horizontal_matrix(f, x);
    return TangentVector(Vec(H * r.uniform_vec(static_cast<int>(H.cols()), -1, 1)));
}

// Quaternion initial data (xdot0, theta) with |k| > kmin.
inline QuaternionExtremalParams random_quaternion_params(Rng& r, double kmin = 0.1) {
    for (;;) {
        std::array<double, 4> v{};
        std::array<double, 3> th{};
        for (auto& e : v) e = r.uniform(-1, 1);
        for (auto& e : th) e = r.uniform(-1, 1);
        if (std::hypot(th[1], th[2]) > kmin) return QuaternionExtremalParams(v, th);
    }
}

inline const std::vector<ModelId>& all_models() {
    static const std::vector<ModelId> ids{ModelId::HeisenbergLorentz, ModelId::QuaternionHType};
    return ids;
}

}  // namespace ssgeom::testing
