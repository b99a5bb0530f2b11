#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <initializer_list>
#include <string>

#include "errors.hpp"

namespace ssgeom {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Coordinate tuple tagged by its geometric role. Points, covectors and
// tangent vectors share storage but do not convert into each other.
template <class Tag>
class Coords {
public:
    Coords() = default;
    explicit Coords(Vec v) : v_(std::move(v)) {}
    explicit Coords(int n) : v_(Vec::Zero(n)) {}
    Coords(std::initializer_list<double> xs) : v_(static_cast<Eigen::Index>(xs.size())) {
        Eigen::Index i = 0;
        for (double x : xs) v_[i++] = x;
    }

    static Coords zero(int n) { return Coords(Vec::Zero(n)); }
    static Coords unit(int n, int i) { return Coords(Vec::Unit(n, i)); }

    int size() const noexcept { return static_cast<int>(v_.size()); }
    const Vec& vec() const noexcept { return v_; }
    Vec& vec() noexcept { return v_; }
    double operator[](int i) const { return v_[i]; }
    double& operator[](int i) { return v_[i]; }
    double norm() const { return v_.norm(); }
    bool all_finite() const { return v_.allFinite(); }

    friend Coords operator+(const Coords& a, const Coords& b) { return Coords(Vec(a.v_ + b.v_)); }
    friend Coords operator-(const Coords& a, const Coords& b) { return Coords(Vec(a.v_ - b.v_)); }
    friend Coords operator-(const Coords& a) { return Coords(Vec(-a.v_)); }
    friend Coords operator*(double s, const Coords& a) { return Coords(Vec(s * a.v_)); }
    friend Coords operator*(const Coords& a, double s) { return Coords(Vec(s * a.v_)); }

private:
    Vec v_;
};

struct PointTag {};
struct CovectorTag {};
struct TangentTag {};

using Point = Coords<PointTag>;
using Covector = Coords<CovectorTag>;
using TangentVector = Coords<TangentTag>;

// <Y, xi> = Y^k xi_k
inline double pairing(const TangentVector& y, const Covector& xi) {
    if (y.size() != xi.size()) throw DimensionMismatch("pairing: dimension mismatch");
    return y.vec().dot(xi.vec());
}

inline void require_dim(int expected, int got, const char* what) {
    if (expected != got)
        throw DimensionMismatch(std::string(what) + ": expected dimension " + std::to_string(expected) +
                                ", got " + std::to_string(got));
}

}  // namespace ssgeom
