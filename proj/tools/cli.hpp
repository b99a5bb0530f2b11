#pragma once

// Command-line front end. run_cli is kept separate from main so the tests can
// drive it in process.

#include <CLI11.hpp>
#include <json.hpp>

#include <ssgeom/field_io.hpp>
#include <ssgeom/ssgeom.hpp>

#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace ssgeom::cli {

enum ExitCode : int { kOk = 0, kBadConfig = 1, kBlowUp = 2, kDrift = 3, kPropertyFailure = 4 };

struct RunConfig {
    std::string model;
    std::string field_file;
    std::string xi;
    std::string point;
    double t_end = 1.0;
    double step = 1e-3;
    double adaptive_tol = 0.0;
    std::string out;
    std::uint64_t seed = 42;
    std::string suite = "all";
    int resolution = 100;
};

struct BadConfig : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline std::vector<double> parse_reals(const std::string& s, const char* what) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(tok, &used);
        } catch (const std::exception&) {
            throw BadConfig(std::string("cannot parse ") + what + ": '" + tok + "'");
        }
        if (tok.find_first_not_of(" \t", used) != std::string::npos)
            throw BadConfig(std::string("cannot parse ") + what + ": '" + tok + "'");
        out.push_back(v);
    }
    return out;
}

inline const CometricField& load_field(const RunConfig& cfg, std::optional<CometricField>& storage) {
    if (cfg.model.empty() == cfg.field_file.empty()) throw BadConfig("give exactly one of --model or --field-file");
    if (!cfg.model.empty()) {
        const auto id = parse_model_id(cfg.model);
        if (!id) throw BadConfig("unknown model '" + cfg.model + "'");
        return model_field(*id);
    }
    storage.emplace(load_field_file(cfg.field_file));
    return *storage;
}

inline Point base_point(const RunConfig& cfg, int n) {
    if (cfg.point.empty()) return Point::zero(n);
    const auto v = parse_reals(cfg.point, "--point");
    if (static_cast<int>(v.size()) != n) throw BadConfig("--point needs " + std::to_string(n) + " components");
    return Point(Vec(Eigen::Map<const Vec>(v.data(), n)));
}

// Writes to the --out file, or to `fallback` when no file is given.
inline void emit(const RunConfig& cfg, std::ostream& fallback, const std::function<void(std::ostream&)>& body) {
    if (cfg.out.empty()) {
        body(fallback);
        return;
    }
    std::ofstream os(cfg.out);
    if (!os) throw BadConfig("cannot open output file '" + cfg.out + "'");
    body(os);
}

inline FlowOptions flow_options(const RunConfig& cfg) {
    if (!(cfg.step > 0.0)) throw BadConfig("--step must be positive");
    if (cfg.adaptive_tol < 0.0) throw BadConfig("--adaptive-tol must be non-negative");
    FlowOptions o;
    o.control.step = cfg.step;
    o.control.adaptive_tol = cfg.adaptive_tol;
    return o;
}

inline int cmd_shoot(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    std::optional<CometricField> storage;
    const auto& f = load_field(cfg, storage);
    const int n = f.dim();
    if (cfg.xi.empty()) throw BadConfig("--xi is required");
    const auto xv = parse_reals(cfg.xi, "--xi");
    if (static_cast<int>(xv.size()) != n) throw BadConfig("--xi needs " + std::to_string(n) + " components");
    if (!(cfg.t_end > 0.0)) throw BadConfig("--t-end must be positive");
    const Covector xi0(Vec(Eigen::Map<const Vec>(xv.data(), n)));
    const Point x0 = base_point(cfg, n);
    const FlowOptions opts = flow_options(cfg);
    const auto tr = integrate_extremal(f, x0, xi0, cfg.t_end, opts);
    emit(cfg, out, [&](std::ostream& os) { write_csv(os, f, tr); });

    std::ostream& log = cfg.out.empty() ? err : out;
    log << "H0 " << format_g17(tr.H0) << '\n';
    log << "class " << to_string(tr.causal.cls) << '\n';
    log << "natural_parameter " << format_g17(natural_parameter(f, tr)) << '\n';
    log << "energy " << format_g17(energy(f, tr)) << '\n';
    log << "max_drift " << format_g17(tr.max_drift) << '\n';
    if (tr.drift_warning) log << "warning Hamiltonian drift above " << format_g17(opts.drift_warning) << '\n';
    if (cfg.adaptive_tol == 0.0) {
        // Step halving: e1 = |x(h) - x(h/2)|, e2 = |x(h/2) - x(h/4)|, ratio ~ 16 for RK4.
        FlowOptions o = opts;
        o.throw_on_drift = false;
        o.control.step = cfg.step / 2;
        const Vec x2 = integrate_extremal(f, x0, xi0, cfg.t_end, o).back().x.vec();
        o.control.step = cfg.step / 4;
        const Vec x4 = integrate_extremal(f, x0, xi0, cfg.t_end, o).back().x.vec();
        const double e1 = (tr.back().x.vec() - x2).norm(), e2 = (x2 - x4).norm();
        log << "endpoint_difference " << format_g17(e1) << '\n';
        log << "convergence_ratio " << (e2 > 0.0 ? format_g17(e1 / e2) : std::string("nan")) << '\n';
    }
    return kOk;
}

inline int cmd_expscan(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    std::optional<CometricField> storage;
    const auto& f = load_field(cfg, storage);
    if (cfg.resolution <= 0) throw BadConfig("--resolution must be positive");
    const int n = f.dim();
    const Point p = base_point(cfg, n);
    const auto ctx = diffeo_context(f, p);
    const auto cal = calibrate_delta(ctx, 500, cfg.seed);

    // Rank 2: circle in the first two coordinates, starting at pi/4 so that
    // the diagonals are hit exactly. Higher rank: seeded unit covectors.
    std::vector<Vec> us;
    if (f.rank() == 2) {
        for (int i = 0; i < cfg.resolution; ++i) {
            const double phi = M_PI / 4 + 2 * M_PI * i / cfg.resolution;
            Vec u = Vec::Zero(n);
            u[0] = std::cos(phi);
            u[1] = std::sin(phi);
            us.push_back(u);
        }
    } else {
        std::mt19937_64 rng(cfg.seed);
        std::normal_distribution<double> N01;
        for (int i = 0; i < cfg.resolution; ++i) {
            Vec u(n);
            for (int k = 0; k < n; ++k) u[k] = N01(rng);
            us.push_back(u.normalized());
        }
    }
    nlohmann::json arr = nlohmann::json::array();
    int good = 0;
    for (const auto& u : us) {
        const auto r = local_diffeo_test(ctx, Covector(u), cal.delta);
        good += r.local_diffeo ? 1 : 0;
        arr.push_back({{"u", std::vector<double>(u.data(), u.data() + u.size())},
                       {"cometric_scalar", r.cometric_scalar},
                       {"detW", r.det_W_tilde},
                       {"local_diffeo", r.local_diffeo}});
    }
    emit(cfg, out, [&](std::ostream& os) { os << arr.dump(2) << '\n'; });
    std::ostream& log = cfg.out.empty() ? err : out;
    log << "local_diffeo_fraction " << format_g17(static_cast<double>(good) / cfg.resolution) << " (" << good << '/'
        << cfg.resolution << ")\n";
    log << "delta_hat " << format_g17(cal.delta_hat) << " delta " << format_g17(cal.delta) << '\n';
    return kOk;
}

inline int cmd_christoffel(const RunConfig& cfg, std::ostream& out, std::ostream&) {
    std::optional<CometricField> storage;
    const auto& f = load_field(cfg, storage);
    const int n = f.dim();
    const auto G = christoffel_at(f, base_point(cfg, n));
    nlohmann::json arr = nlohmann::json::array();
    for (int k = 0; k < n; ++k) {
        nlohmann::json a = nlohmann::json::array();
        for (int p = 0; p < n; ++p) {
            nlohmann::json b = nlohmann::json::array();
            for (int q = 0; q < n; ++q) b.push_back(G(k, p, q));
            a.push_back(b);
        }
        arr.push_back(a);
    }
    emit(cfg, out, [&](std::ostream& os) { os << arr.dump() << '\n'; });
    return kOk;
}

// ---- verification suites ----

class Suite {
public:
    Suite(std::ostream& out, std::uint64_t seed) : out_(out), rng_(seed) {}

    // Records max residual against a tolerance.
    void check(const std::string& name, double residual, double tol) {
        const bool pass = residual <= tol;
        out_ << (pass ? "PASS " : "FAIL ") << name << " residual=" << format_g17(residual)
             << " tol=" << format_g17(tol) << '\n';
        failed_ |= !pass;
    }
    void check_at_least(const std::string& name, double value, double bound) {
        const bool pass = value >= bound;
        out_ << (pass ? "PASS " : "FAIL ") << name << " value=" << format_g17(value) << " min=" << format_g17(bound)
             << '\n';
        failed_ |= !pass;
    }
    void flag(const std::string& name, bool pass, const std::string& detail) {
        out_ << (pass ? "PASS " : "FAIL ") << name << ' ' << detail << '\n';
        failed_ |= !pass;
    }

    double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
    Vec vec(int n, double scale) {
        Vec v(n);
        for (int i = 0; i < n; ++i) v[i] = uniform(-scale, scale);
        return v;
    }
    Vec unit(int n) {
        std::normal_distribution<double> N01;
        Vec v(n);
        for (int i = 0; i < n; ++i) v[i] = N01(rng_);
        return v.normalized();
    }
    Covector annihilator(const CometricField& f, const Point& x) {
        const Mat K = annihilator_matrix(f, x);
        return Covector(Vec(K * vec(static_cast<int>(K.cols()), 1.0)));
    }

    bool failed() const noexcept { return failed_; }
    std::ostream& out() { return out_; }

private:
    std::ostream& out_;
    std::mt19937_64 rng_;
    bool failed_ = false;
};

inline const std::vector<ModelId>& models() {
    static const std::vector<ModelId> ids{ModelId::HeisenbergLorentz, ModelId::QuaternionHType};
    return ids;
}

inline std::string tag(ModelId id, const char* what) { return std::string(model_name(id)) + ": " + what; }

inline void suite_tensor(Suite& s) {
    for (auto id : models()) {
        const auto& f = model_field(id);
        const int n = f.dim();
        double kern = 0, dual = 0, orth = 0;
        bool sig = true;
        for (int i = 0; i < 50; ++i) {
            const Point x(s.vec(n, 2.0));
            const Mat g = f.matrix(x);
            for (const auto& v : annihilator_basis(f, x)) kern = std::max(kern, (g * v.vec()).norm());
            const Covector xi(s.vec(n, 1.0));
            const Mat H = horizontal_matrix(f, x);
            const TangentVector W(Vec(H * s.vec(static_cast<int>(H.cols()), 1.0)));
            dual = std::max(dual, std::abs(metric_from_cometric(f, x, W, apply_cometric(f, x, xi)) - pairing(W, xi)));
            for (const auto& v : annihilator_basis(f, x)) orth = std::max(orth, std::abs(pairing(W, v)));
            sig = sig && signature(f, x) == declared_signature(f);
        }
        s.check(tag(id, "annihilator residual |g v|"), kern, 1e-10);
        s.check(tag(id, "duality <W, g xi> = xi(W)"), dual, 1e-9);
        s.check(tag(id, "annihilators vanish on horizontal vectors"), orth, 1e-10);
        s.flag(tag(id, "signature constant"), sig, "on 50 points");
    }
}

inline void suite_christoffel(Suite& s) {
    for (auto id : models()) {
        const auto& f = model_field(id);
        const int n = f.dim();
        double ident = 0, fd = 0, quot = 0, horiz = 0;
        for (int i = 0; i < 100; ++i) {
            const Point x(s.vec(n, 2.0));
            const Covector xi(s.vec(n, 1.0)), eta(s.vec(n, 1.0));
            const Covector v = s.annihilator(f, x), w = s.annihilator(f, x);
            const auto G = christoffel_at(f, x);
            const double b = bracket_form(f, x, xi, eta, v);
            ident = std::max(ident, std::abs(b - 2.0 * pairing(gamma_contract(G, xi, v), eta)));
            const auto fa = [&](const Vec& y) { return Vec(f.matrix(Point(y)) * xi.vec()); };
            const auto fb = [&](const Vec& y) { return Vec(f.matrix(Point(y)) * eta.vec()); };
            fd = std::max(fd, std::abs(b - pairing(lie_bracket_fd(fa, fb, x), v)));
            const TangentVector a = gamma_contract(G, xi, v);
            quot = std::max(quot, (a - gamma_contract(G, xi + w, v)).norm());
            for (const auto& k : annihilator_basis(f, x)) horiz = std::max(horiz, std::abs(pairing(a, k)));
        }
        s.check(tag(id, "bracket identity <[g xi, g eta], v> = 2<Gamma(xi,v), eta>"), ident, 1e-9);
        s.check(tag(id, "bracket against differenced commutator"), fd, 1e-8);
        s.check(tag(id, "Gamma(xi, v) independent of xi mod annihilators"), quot, 1e-12);
        s.check(tag(id, "Gamma(xi, v) horizontal"), horiz, 1e-10);
        double sigma = std::numeric_limits<double>::infinity();
        for (int i = 0; i < 50; ++i)
            sigma = std::min(sigma, is_two_step_generator(f, Point(s.vec(n, 2.0)), Covector(s.vec(n, 1.0))).sigma_min);
        s.check_at_least(tag(id, "two-step generator smallest singular value"), sigma, 1e-9);
    }
}

inline void suite_flow(Suite& s) {
    for (auto id : models()) {
        const auto& f = model_field(id);
        const int n = f.dim();
        double drift = 0, horiz = 0, lift = 0;
        bool causal = true;
        for (int i = 0; i < 20; ++i) {
            const auto tr = integrate_extremal(f, Point(s.vec(n, 1.0)), Covector(s.vec(n, 1.0)), 1.0);
            drift = std::max(drift, tr.max_drift);
            const auto c = curve_of(f, tr);
            for (std::size_t k = 0; k < tr.size(); k += 100) {
                for (const auto& v : annihilator_basis(f, c.x[k])) horiz = std::max(horiz, std::abs(pairing(c.v[k], v)));
                if (std::abs(tr.H0) > 1e-6)
                    causal = causal && causal_character(f, tr.states[k].x, tr.states[k].xi).cls == tr.causal.cls;
            }
            if (i < 3) {
                const auto l = canonical_cotangent_lift(f, c, tr.states.front().xi);
                for (std::size_t k = 0; k < tr.size(); ++k) lift = std::max(lift, (l.xi[k] - tr.states[k].xi).norm());
            }
        }
        s.check(tag(id, "Hamiltonian conservation"), drift, 1e-9);
        s.check(tag(id, "extremal velocity horizontal"), horiz, 1e-10);
        s.flag(tag(id, "causal character constant"), causal, "on 20 extremals");
        s.check(tag(id, "canonical lift reproduces the Hamiltonian covector"), lift, 1e-8);
    }
}

inline void suite_expmap(Suite& s) {
    for (auto id : models()) {
        const auto& f = model_field(id);
        const int n = f.dim();
        double g1 = 0, g2 = 0, fixed = 0, gauss = 0, homog = 0;
        double ratio = std::numeric_limits<double>::infinity();
        for (int i = 0; i < 10; ++i) {
            const Point p(s.vec(n, 1.0));
            const auto c = taylor_coefficients(f, p);
            const auto G = christoffel_at(f, p);
            g1 = std::max(g1, (c.gamma1() - f.matrix(p)).norm());
            for (int k = 0; k < n; ++k)
                for (int a = 0; a < n; ++a)
                    for (int b = 0; b < n; ++b) g2 = std::max(g2, std::abs(c.gamma2(k, a, b) + G(k, a, b)));
            fixed = std::max(fixed, (exp_map(f, p, s.annihilator(f, p)) - p).norm());
            gauss = std::max(gauss, gauss_lemma_check(f, p, Covector(s.vec(n, 1.0)), Covector(s.vec(n, 1.0))).residual);
            const auto ctx = diffeo_context(f, p);
            const Covector u(s.vec(n, 1.0));
            const double d = truncated_jacobian(ctx, u).det;
            const double e = 2.0 * (n - f.rank());
            for (double t : {2.0, 3.0, 0.5}) {
                const double dt = truncated_jacobian(ctx, t * u).det;
                homog = std::max(homog, std::abs(dt - std::pow(t, e) * d) / std::max(std::abs(dt), 1e-300));
            }
            if (i < 3) {
                const Covector w(s.unit(n));
                const double r1 = (exp_map(f, p, 0.1 * w) - taylor_exp(c, 0.1 * w)).norm();
                const double r2 = (exp_map(f, p, 0.05 * w) - taylor_exp(c, 0.05 * w)).norm();
                if (r1 > 1e-12) ratio = std::min(ratio, r1 / r2);
            }
        }
        s.check(tag(id, "gamma1 = g"), g1, 1e-12);
        s.check(tag(id, "gamma2 = -Gamma"), g2, 1e-12);
        s.check_at_least(tag(id, "Taylor remainder ratio at s = 0.1, 0.05"), ratio, 14.0);
        s.check(tag(id, "annihilator fixed point"), fixed, 1e-12);
        s.check(tag(id, "Gauss lemma"), gauss, 1e-6);
        s.check(tag(id, "det W~ homogeneity (relative)"), homog, 1e-8);
    }
}

inline void suite_models(Suite& s) {
    const auto& Q = quaternion_group();
    double cf = 0, assoc = 0, eig = 0, cid = 0;
    for (int i = 0; i < 20; ++i) {
        std::array<double, 4> v{};
        std::array<double, 3> th{};
        for (auto& e : v) e = s.uniform(-1, 1);
        do {
            for (auto& e : th) e = s.uniform(-1, 1);
        } while (std::hypot(th[1], th[2]) < 0.1);
        const QuaternionExtremalParams P(v, th);
        const auto tr = integrate_extremal(Q, Point::zero(7), P.initial_covector(), 1.0);
        cf = std::max(cf, (tr.back().x.vec() - quaternion_closed_form_extremal(P, 1.0).vec()).norm());
        for (double r : quaternion_eigen_residuals(th)) eig = std::max(eig, r);
        const double a2 = std::norm(P.a), k2 = P.kabs * P.kabs;
        const auto prod = P.c[0] * P.c[1] * P.c[2] * P.c[3];
        cid = std::max(cid, std::abs(prod - std::norm(P.w2 * P.w2 - P.w1 * P.w1) / (256 * a2 * a2 * k2 * k2)));
    }
    for (auto id : models()) {
        const int n = model_field(id).dim();
        for (int i = 0; i < 50; ++i) {
            const Vec a = s.vec(n, 2.0), b = s.vec(n, 2.0), c = s.vec(n, 2.0);
            assoc = std::max(assoc, (group_multiply(id, group_multiply(id, a, b), c) -
                                     group_multiply(id, a, group_multiply(id, b, c)))
                                        .norm());
        }
    }
    s.check("quaternion-h-type: closed form vs integrator at t = 1", cf, 1e-6);
    s.check("group law associativity", assoc, 1e-12);
    s.check("eigenvalues of A(theta)", eig, 1e-9);
    s.check("c1 c2 c3 c4 = |w2^2 - w1^2|^2 / (256 |a|^4 |k|^4)", cid, 1e-12);
}

inline int cmd_verify(const RunConfig& cfg, std::ostream& out, std::ostream&) {
    static const std::vector<std::pair<std::string, void (*)(Suite&)>> suites{
        {"tensor", suite_tensor}, {"christoffel", suite_christoffel}, {"flow", suite_flow},
        {"expmap", suite_expmap}, {"models", suite_models}};
    bool known = cfg.suite == "all";
    for (const auto& [name, fn] : suites) known = known || name == cfg.suite;
    if (!known) throw BadConfig("unknown suite '" + cfg.suite + "'");
    Suite s(out, cfg.seed);
    for (const auto& [name, fn] : suites) {
        if (cfg.suite != "all" && cfg.suite != name) continue;
        out << "== " << name << '\n';
        fn(s);
    }
    out << (s.failed() ? "verify: FAILED" : "verify: all properties passed") << '\n';
    return s.failed() ? kPropertyFailure : kOk;
}

inline int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Extremals and exponential maps on sub-semi-Riemannian manifolds", "ssgeom"};
    app.require_subcommand(1);
    RunConfig cfg;
    const auto common = [&](CLI::App* sub) {
        sub->add_option("--model", cfg.model, "model id: heisenberg-lorentz | quaternion-h-type");
        sub->add_option("--field-file", cfg.field_file, "JSON field definition");
        sub->add_option("--point", cfg.point, "base point, comma-separated (default origin)");
        sub->add_option("--out", cfg.out, "output file (default: stdout, summary to stderr)");
        sub->add_option("--seed", cfg.seed, "seed for randomized steps")->capture_default_str();
    };
    auto* shoot = app.add_subcommand("shoot", "integrate an extremal and write a CSV trajectory");
    common(shoot);
    shoot->add_option("--xi", cfg.xi, "initial covector, comma-separated");
    shoot->add_option("--t-end", cfg.t_end, "final time")->capture_default_str();
    shoot->add_option("--step", cfg.step, "fixed RK4 step")->capture_default_str();
    shoot->add_option("--adaptive-tol", cfg.adaptive_tol, "use Dormand-Prince with this tolerance");
    auto* scan = app.add_subcommand("expscan", "local diffeomorphism test over unit covectors");
    common(scan);
    scan->add_option("--resolution", cfg.resolution, "number of covectors")->capture_default_str();
    auto* verify = app.add_subcommand("verify", "run property suites");
    verify->add_option("--suite", cfg.suite, "tensor | christoffel | flow | expmap | models | all")
        ->capture_default_str();
    verify->add_option("--seed", cfg.seed, "seed")->capture_default_str();
    auto* gam = app.add_subcommand("christoffel", "dump Gamma^{kpq} at a point as a JSON 3-d array");
    common(gam);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return kBadConfig;
    }

    try {
        if (shoot->parsed()) return cmd_shoot(cfg, out, err);
        if (scan->parsed()) return cmd_expscan(cfg, out, err);
        if (verify->parsed()) return cmd_verify(cfg, out, err);
        return cmd_christoffel(cfg, out, err);
    } catch (const BlowUp& e) {
        err << "error: " << e.what() << " (last valid time " << format_g17(e.last_time) << ")\n";
        return kBlowUp;
    } catch (const DriftError& e) {
        err << "error: " << e.what() << '\n';
        return kDrift;
    } catch (const BadConfig& e) {
        err << "error: " << e.what() << '\n';
        return kBadConfig;
    } catch (const FieldFormatError& e) {
        err << "error: " << e.what() << '\n';
        return kBadConfig;
    } catch (const GeometryError& e) {
        err << "error: " << e.what() << '\n';
        return kBadConfig;
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << '\n';
        return kBadConfig;
    }
}

}  // namespace ssgeom::cli
