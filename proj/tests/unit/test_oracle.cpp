#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "structsim/grid.hpp"
#include "structsim/oracle.hpp"
#include "structsim/params.hpp"
#include "structsim/r0.hpp"
#include "structsim/solver.hpp"

using namespace structsim;

namespace {

double l1_rel(std::span<const double> a, std::span<const double> b) {
    double n = 0.0, d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        n += std::abs(a[i] - b[i]);
        d += std::abs(b[i]);
    }
    return d > 0.0 ? n / d : n;
}

ModelParams decoupled() {
    ModelParams p = preset("forward");
    p.beta_h = RateSpec::constant(0.0);
    p.beta_m = RateSpec::constant(0.0);
    return p;
}

}  // namespace

TEST_CASE("exact path integrals of the closed-form rates") {
    CHECK(exact_path_integral(RateSpec::constant(2.0), 1.0, 0.0, 0.75) == doctest::Approx(1.5).epsilon(1e-15));
    RateSpec pw = RateSpec::piecewise(0.1, 0.0, 50.0);
    CHECK(exact_path_integral(pw, 3.0, 0.05, 0.1) == doctest::Approx(50.0 * 0.05).epsilon(1e-13));
    CHECK(exact_path_integral(pw, 3.0, 0.0, 0.1) == doctest::Approx(0.0).epsilon(1e-15));
    RateSpec gs = RateSpec::gauss(0.1, 0.3, 0.1);
    double mid = path_integral([&](double a, double s) { return gs(a, s); }, 0.0, 0.0, 0.6, 1e-5);
    CHECK(exact_path_integral(gs, 0.0, 0.0, 0.6) == doctest::Approx(mid).epsilon(1e-9));
}

TEST_CASE("decoupled oracle at t = 0 returns the initial data") {
    ModelParams p = decoupled();
    Grid g = Grid::make(0.01, 10.0, 1.5, 0.6, 1.5, 1.0);
    StateFields s = default_initial(p, g, 0.05, Mode::Full);
    StateFields o = volterra_decoupled(p, g, s, 0.0);
    CHECK(l1_rel(o.full().s, s.full().s) == 0.0);
    CHECK(l1_rel(o.full().i.values(), s.full().i.values()) == 0.0);
}

TEST_CASE("full solver matches the decoupled oracle after 100 steps") {
    ModelParams p = decoupled();
    Grid g = Grid::make(0.01, 10.0, 1.5, 0.6, 1.5, 1.0);
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    StateFields init = zero_state(g, Mode::Full);
    for (double& v : init.full().s) v = p.lambda_h * u(rng);
    for (double& v : init.full().i.values()) v = 1e4 * u(rng);
    for (double& v : init.full().r.values()) v = 1e4 * u(rng);
    for (double& v : init.s_m) v = p.lambda_m * u(rng);
    for (double& v : init.i_m.values()) v = 1e5 * u(rng);
    StateFields oracle = volterra_decoupled(p, g, init, 1.0);
    StateFields s = init;
    TransportSolver solver(p, g, Mode::Full);
    for (int n = 0; n < 100; ++n) solver.step(s);
    CHECK(l1_rel(s.full().s, oracle.full().s) <= 1e-10);
    CHECK(l1_rel(s.full().i.values(), oracle.full().i.values()) <= 1e-10);
    CHECK(l1_rel(s.full().r.values(), oracle.full().r.values()) <= 1e-10);
    CHECK(l1_rel(s.s_m, oracle.s_m) <= 1e-10);
    CHECK(l1_rel(s.i_m.values(), oracle.i_m.values()) <= 1e-10);
}

TEST_CASE("g is decreasing with g(0) equal to the closed form") {
    ModelParams p = preset("forward");
    Grid g = default_grid(p, 0.01);
    LinearizedKernels k = linearized_kernels(p, g);
    double r0 = r0_closed_form(p, g).r0_squared_closed_form;
    CHECK(g_of_lambda(k, 0.0) == doctest::Approx(r0).epsilon(1e-10));
    double prev = g_of_lambda(k, -0.02);
    for (double l : {-0.01, 0.0, 0.5, 1.0, 3.0}) {
        double v = g_of_lambda(k, l);
        CHECK(v < prev);
        prev = v;
    }
}

TEST_CASE("growth rate sign follows the threshold") {
    ModelParams p = preset("forward");
    Grid g = default_grid(p, 0.01);
    GrowthRate up = dominant_growth_rate(p, g);
    REQUIRE(up.lambda_star);
    CHECK(*up.lambda_star > 0.0);
    CHECK(g_of_lambda(p, g, *up.lambda_star) == doctest::Approx(1.0).epsilon(1e-8));
    p.lambda_m = 5e6;
    GrowthRate down = dominant_growth_rate(p, g);
    if (down.lambda_star) {
        CHECK(*down.lambda_star < 0.0);
        CHECK(*down.lambda_star > -down.mu0);
    }
}

TEST_CASE("frozen growth rate at the default grid") {
    ModelParams p = preset("forward");
    auto r = dominant_growth_rate(p, default_grid(p));
    REQUIRE(r.lambda_star);
    CHECK(*r.lambda_star == doctest::Approx(2.238865590283731).epsilon(1e-9));
}
