// Shoots a fan of extremals from the origin of the Heisenberg group with the
// Lorentzian horizontal metric and prints endpoint, causal class and length.

#include <cmath>
#include <cstdio>

#include <ssgeom/ssgeom.hpp>

int main() {
    using namespace ssgeom;
    const auto& H = heisenberg_lorentz();
    const Point p = Point::zero(3);
    std::printf("%8s %10s %10s %10s %10s %12s\n", "angle", "x", "y", "z", "L", "class");
    for (int i = 0; i < 12; ++i) {
        const double a = 2 * M_PI * i / 12;
        const Covector xi{std::cos(a), std::sin(a), 0.5};
        const auto tr = integrate_extremal(H, p, xi, 1.0);
        const Point& x = tr.back().x;
        std::printf("%8.4f %10.6f %10.6f %10.6f %10.6f %12s\n", a, x[0], x[1], x[2], natural_parameter(H, tr),
                    to_string(tr.causal.cls));
    }
    const auto ctx = diffeo_context(H, p);
    const auto cal = calibrate_delta(ctx);
    std::printf("delta_hat at the origin: %.6g\n", cal.delta_hat);
    return 0;
}
