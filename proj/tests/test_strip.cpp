#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <limits>

#include "testutil.hpp"
#include "ww/strip.hpp"

using namespace ww;
using namespace wwtest;

namespace {
constexpr double eps = std::numeric_limits<double>::epsilon();

RealField surface_of(const StripField& v) { return v.surface(); }
}  // namespace

TEST_CASE("flat map is the identity flattening") {
    Grid g(1, 32, 2.0 * pi);
    auto zg = make_zgrid(10.0, 32);
    RealField eta(g);
    FlattenMap map = build_map(eta, zg, 0.5);
    CHECK(map.delta == 0.5);
    for (int i = 0; i < zg->levels(); ++i)
        for (std::size_t j = 0; j < g.size(); ++j) {
            CHECK(map.rho.level(i)[j] == doctest::Approx(zg->z[i]).epsilon(1e-14));
            CHECK(map.rho_z.level(i)[j] == doctest::Approx(1.0));
        }
}

TEST_CASE("map surface trace equals eta and delta needs no halving for a mild wave") {
    Grid g(1, 64, 2.0 * pi);
    auto zg = make_zgrid(10.0, 32);
    RealField eta = field_from(g, [](double x, double) { return 0.1 * std::cos(x); });
    FlattenMap map = build_map(eta, zg, 0.5);
    // |dz rho - 1| <= delta * 0.1 = 0.05 by hand, so no halving happens
    CHECK(map.delta == 0.5);
    double min_rz = 1e300;
    for (double v : map.rho_z.values) min_rz = std::min(min_rz, v);
    CHECK(min_rz >= 0.95 - 1e-12);
    CHECK(linf_diff(surface_of(map.rho), eta) < 100 * eps);

    RealField rnd = random_band_limited(g, 0, 10, 3u, 1.5, 0.1);
    FlattenMap map2 = build_map(rnd, zg, 0.5);
    CHECK(linf_diff(surface_of(map2.rho), rnd) < 1e-12);
}

TEST_CASE("rough surface rejected when no delta is admissible") {
    Grid g(1, 64, 2.0 * pi);
    auto zg = make_zgrid(10.0, 16);
    // slope so large that dz rho < 1/2 for every delta: e^{delta z|D|}|D| eta
    // keeps amplitude ~ |D|eta near z=0 regardless of delta
    RealField eta = field_from(g, [](double x, double) { return 1e6 * std::cos(x); });
    CHECK_THROWS_AS(build_map(eta, zg, 0.5), SurfaceTooRoughError);
}

TEST_CASE("coefficients at the flat surface") {
    Grid g(1, 32, 2.0 * pi);
    auto zg = make_zgrid(10.0, 24);
    FlattenMap map = build_map(RealField(g), zg, 0.5);
    EllipticCoefficients c = coefficients(map);
    for (double v : c.alpha.values) CHECK(v == doctest::Approx(1.0));
    for (double v : c.beta[0].values) CHECK(std::fabs(v) < 100 * eps);
    for (double v : c.gamma.values) CHECK(std::fabs(v) < 100 * eps);
}

TEST_CASE("coefficients match the first-order symbolic expansion") {
    Grid g(1, 64, 2.0 * pi);
    auto zg = make_zgrid(10.0, 32);
    const double e = 1e-3, delta = 0.5;
    RealField eta = field_from(g, [e](double x, double) { return e * std::cos(x); });
    FlattenMap map = build_map(eta, zg, delta);
    REQUIRE(map.delta == delta);
    EllipticCoefficients c = coefficients(map);
    double worst_a = 0.0, worst_b = 0.0, worst_g = 0.0;
    for (int i = 0; i < zg->levels(); ++i) {
        double ez = std::exp(delta * zg->z[i]);
        for (std::size_t j = 0; j < g.size(); ++j) {
            double x = g.node(j)[0];
            double alpha_sym = 1.0 + 2.0 * e * delta * ez * std::cos(x);
            double beta_sym = 2.0 * e * ez * std::sin(x);
            double gamma_sym = e * ez * (delta * delta - 1.0) * std::cos(x);
            worst_a = std::max(worst_a, std::fabs(c.alpha.level(i)[j] - alpha_sym));
            worst_b = std::max(worst_b, std::fabs(c.beta[0].level(i)[j] - beta_sym));
            worst_g = std::max(worst_g, std::fabs(c.gamma.level(i)[j] - gamma_sym));
        }
    }
    CHECK(worst_a <= 1e-5);
    CHECK(worst_b <= 1e-5);
    CHECK(worst_g <= 1e-5);
}

TEST_CASE("flat solve reproduces the harmonic half-space extension") {
    Grid g(1, 64, 2.0 * pi);
    auto zg = make_zgrid(10.0, 64);
    StripSolver solver(g, zg);
    FlattenMap map = build_map(RealField(g), zg, 0.5);
    EllipticCoefficients c = coefficients(map);

    RealField f = field_from(g, [](double x, double) { return std::cos(2.0 * x); });
    SolveStats stats;
    StripField v = solver.solve(c, f, nullptr, 1e-11, &stats);
    CHECK(stats.residual <= 1e-11);

    double worst = 0.0;
    for (int i = 0; i < zg->levels(); ++i)
        for (std::size_t j = 0; j < g.size(); ++j) {
            double expect = std::exp(2.0 * zg->z[i]) * std::cos(2.0 * g.node(j)[0]);
            worst = std::max(worst, std::fabs(v.level(i)[j] - expect));
        }
    CHECK(worst <= 1e-6);

    StripField zero = solver.solve(c, RealField(g), nullptr, 1e-11);
    CHECK(max_abs(zero.surface()) == 0.0);
}

TEST_CASE("flat solve matches e^{kz} up to three quarters of Nyquist") {
    Grid g(1, 16, 2.0 * pi);
    auto zg = make_zgrid(10.0, 64);
    StripSolver solver(g, zg);
    EllipticCoefficients c = coefficients(build_map(RealField(g), zg, 0.5));
    for (int k = 1; k <= 6; ++k) {
        RealField f = field_from(g, [k](double x, double) { return std::cos(k * x); });
        StripField v = solver.solve(c, f, nullptr, 1e-11);
        double worst = 0.0;
        for (int i = 0; i < zg->levels(); ++i)
            for (std::size_t j = 0; j < g.size(); ++j)
                worst = std::max(worst, std::fabs(v.level(i)[j] -
                                                  std::exp(k * zg->z[i]) * std::cos(k * g.node(j)[0])));
        CHECK(worst <= 1e-7);
    }
}

TEST_CASE("maximum principle proxy for the homogeneous solve") {
    Grid g(1, 64, 2.0 * pi);
    auto zg = make_zgrid(10.0, 48);
    StripSolver solver(g, zg);
    RealField eta = field_from(g, [](double x, double) { return 0.1 * std::cos(x); });
    EllipticCoefficients c = coefficients(build_map(eta, zg, 0.5));
    RealField f = random_band_limited(g, 0, 6, 5u, 1.0);
    StripField v = solver.solve(c, f, nullptr, 1e-11);
    double lo = 1e300, hi = -1e300;
    for (double q : f.values) {
        lo = std::min(lo, q);
        hi = std::max(hi, q);
    }
    for (double q : v.values) {
        CHECK(q >= lo - 1e-8);
        CHECK(q <= hi + 1e-8);
    }
}

TEST_CASE("surface normal derivative converges at second order in wave slope") {
    // eta = e cos x, f = cos x: dy phi at the surface expands as
    // cos(x) + e (cos^2 x - cos 2x) + O(e^2)
    Grid g(1, 64, 2.0 * pi);
    auto zg = make_zgrid(10.0, 48);
    StripSolver solver(g, zg);
    RealField f = field_from(g, [](double x, double) { return std::cos(x); });
    std::vector<double> es = {0.04, 0.02};
    std::vector<double> errs;
    for (double e : es) {
        RealField eta = field_from(g, [e](double x, double) { return e * std::cos(x); });
        FlattenMap map = build_map(eta, zg, 0.5);
        StripField v = solver.solve(coefficients(map), f, nullptr, 1e-11);
        CartesianDerivs cd = pushforward_derivatives(v, map);
        RealField dy_surf = cd.dy.surface();
        double worst = 0.0;
        for (std::size_t j = 0; j < g.size(); ++j) {
            double x = g.node(j)[0];
            double oracle = std::cos(x) + e * (std::cos(x) * std::cos(x) - std::cos(2.0 * x));
            worst = std::max(worst, std::fabs(dy_surf[j] - oracle));
        }
        errs.push_back(worst);
    }
    double order = std::log(errs[0] / errs[1]) / std::log(es[0] / es[1]);
    CHECK(order >= 1.9);
}

TEST_CASE("decoupling symbols: flat case and algebraic identities") {
    Grid g(1, 32, 2.0 * pi);
    auto zg = make_zgrid(10.0, 24);
    EllipticCoefficients cflat = coefficients(build_map(RealField(g), zg, 0.5));
    auto [lo, hi] = decoupling_symbols(cflat, zg->m);
    for (std::size_t s = 0; s < g.size(); ++s) {
        double r = g.xi_norm(s);
        for (std::size_t j = 0; j < g.size(); ++j) {
            CHECK(std::abs(lo.column(s)[j] - Complex(-r, 0.0)) < 1e-12 * (1.0 + r));
            CHECK(std::abs(hi.column(s)[j] - Complex(r, 0.0)) < 1e-12 * (1.0 + r));
        }
    }

    RealField eta = random_band_limited(g, 0, 6, 9u, 1.0, 0.15);
    EllipticCoefficients c = coefficients(build_map(eta, zg, 0.5));
    auto [a_sym, A_sym] = decoupling_symbols(c, zg->m);
    // c2 measured from the coefficients at the sampled level
    double c2 = 1e300;
    for (std::size_t j = 0; j < g.size(); ++j) {
        double alpha = c.alpha.level(zg->m)[j];
        double beta = c.beta[0].level(zg->m)[j];
        c2 = std::min(c2, 4.0 * alpha - beta * beta);
    }
    CHECK(c2 > 0.0);
    double scale = 0.0;
    for (std::size_t s = 0; s < g.size(); ++s) {
        double r = g.xi_norm(s);
        for (std::size_t j = 0; j < g.size(); ++j) {
            double alpha = c.alpha.level(zg->m)[j];
            scale = std::max(scale, alpha * r * r);
        }
    }
    for (std::size_t s = 0; s < g.size(); ++s) {
        double r = g.xi_norm(s);
        for (std::size_t j = 0; j < g.size(); ++j) {
            double alpha = c.alpha.level(zg->m)[j];
            Complex prod = a_sym.column(s)[j] * A_sym.column(s)[j];
            CHECK(std::abs(prod + alpha * r * r) <= 1e-12 * scale);
            CHECK(A_sym.column(s)[j].real() >= 0.5 * std::sqrt(c2) * r - 1e-12);
        }
    }
}

TEST_CASE("degenerate coefficients are rejected") {
    Grid g(1, 32, 2.0 * pi);
    auto zg = make_zgrid(10.0, 16);
    EllipticCoefficients c = coefficients(build_map(RealField(g), zg, 0.5));
    // force a sign flip in alpha
    for (double& v : c.alpha.values) v = -1.0;
    CHECK_THROWS_AS(decoupling_symbols(c, 0), DegenerateSymbolError);
}

TEST_CASE("pushforward derivatives: flat case is the identity map") {
    Grid g(1, 32, 2.0 * pi);
    auto zg = make_zgrid(10.0, 32);
    FlattenMap map = build_map(RealField(g), zg, 0.5);
    StripField v(g, zg);
    for (int i = 0; i < zg->levels(); ++i)
        for (std::size_t j = 0; j < g.size(); ++j)
            v.level(i)[j] = std::exp(2.0 * zg->z[i]) * std::sin(2.0 * g.node(j)[0]);
    CartesianDerivs cd = pushforward_derivatives(v, map);
    CHECK(linf_diff(cd.dy.surface(), dz(v).surface()) < 1e-12);
    CHECK(linf_diff(cd.grad_x[0].surface(), dx(v, 0).surface()) < 1e-12);
}

TEST_CASE("pushforward of the height function itself") {
    Grid g(1, 32, 2.0 * pi);
    auto zg = make_zgrid(10.0, 32);
    RealField eta = field_from(g, [](double x, double) { return 0.2 * std::cos(x); });
    FlattenMap map = build_map(eta, zg, 0.5);
    // v = rho means phi(x,y) = y
    CartesianDerivs cd = pushforward_derivatives(map.rho, map);
    for (double q : cd.dy.values) CHECK(q == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(max_abs(RealField(g, std::vector<double>(cd.grad_x[0].surface().values))) < 1e-10);
    for (double q : cd.dyy.values) CHECK(std::fabs(q) < 1e-9);
    for (double q : cd.dxy[0].values) CHECK(std::fabs(q) < 1e-9);
    for (double q : cd.hess_xx[0].values) CHECK(std::fabs(q) < 1e-9);
}

TEST_CASE("pushforward second derivatives match analytic values in the flat case") {
    Grid g(1, 32, 2.0 * pi);
    auto zg = make_zgrid(10.0, 48);
    FlattenMap map = build_map(RealField(g), zg, 0.5);
    const int k = 2;
    StripField v(g, zg);
    for (int i = 0; i < zg->levels(); ++i)
        for (std::size_t j = 0; j < g.size(); ++j)
            v.level(i)[j] = std::exp(k * zg->z[i]) * std::sin(k * g.node(j)[0]);
    CartesianDerivs cd = pushforward_derivatives(v, map);
    double w1 = 0, w2 = 0, w3 = 0;
    for (int i = 0; i < zg->levels(); ++i)
        for (std::size_t j = 0; j < g.size(); ++j) {
            double x = g.node(j)[0], zz = zg->z[i];
            double e = std::exp(k * zz);
            w1 = std::max(w1, std::fabs(cd.dyy.level(i)[j] - k * k * e * std::sin(k * x)));
            w2 = std::max(w2, std::fabs(cd.hess_xx[0].level(i)[j] + k * k * e * std::sin(k * x)));
            w3 = std::max(w3, std::fabs(cd.dxy[0].level(i)[j] - k * k * e * std::cos(k * x)));
        }
    CHECK(w1 < 1e-8);
    CHECK(w2 < 1e-8);
    CHECK(w3 < 1e-8);
}

TEST_CASE("bottom truncation error decays with strip depth") {
    Grid g(1, 32, 2.0 * pi);
    RealField eta = field_from(g, [](double x, double) { return 0.1 * std::cos(x); });
    RealField f = field_from(g, [](double x, double) { return std::cos(x); });

    auto solve_dz_trace = [&](double depth, int m) {
        auto zg = make_zgrid(depth, m);
        StripSolver solver(g, zg);
        FlattenMap map = build_map(eta, zg, 0.5);
        StripField v = solver.solve(coefficients(map), f, nullptr, 1e-11);
        return dz(v).surface();
    };
    RealField t10 = solve_dz_trace(10.0, 48);
    RealField t20 = solve_dz_trace(20.0, 72);
    double rel = linf_diff(t10, t20) / max_abs(t20);
    CHECK(rel < std::exp(-10.0));
}
