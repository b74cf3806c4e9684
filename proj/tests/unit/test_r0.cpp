#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "structsim/oracle.hpp"
#include "structsim/params.hpp"
#include "structsim/r0.hpp"

using namespace structsim;

namespace {

double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(a), std::abs(b)); }

}  // namespace

TEST_CASE("frozen closed-form values at the default grid") {
    ModelParams f = preset("forward");
    CHECK(r0_closed_form(f, default_grid(f)).r0_squared_closed_form ==
          doctest::Approx(1.2974868047460129).epsilon(1e-12));
    ModelParams b = preset("backward");
    CHECK(r0_closed_form(b, default_grid(b)).r0_squared_closed_form ==
          doctest::Approx(0.42205684291964407).epsilon(1e-12));
}

TEST_CASE("R0 is linear in mosquito recruitment") {
    ModelParams p = preset("forward");
    Grid g = default_grid(p, 0.01);
    double per = r0_per_lambda_m(p, g);
    for (double lm : {1e6, 5e6, 3.3e7}) {
        p.lambda_m = lm;
        CHECK(rel(r0_closed_form(p, g).r0_squared_closed_form, per * lm) < 1e-13);
    }
    double lm = lambda_m_for_target_r0(p, g, 1.0);
    p.lambda_m = lm;
    CHECK(r0_closed_form(p, g).r0_squared_closed_form == doctest::Approx(1.0).epsilon(1e-13));
}

TEST_CASE("closed form, power iteration, reduced formula and g(0) agree") {
    for (const char* name : {"forward", "backward"}) {
        ModelParams p = preset(name);
        Grid g = default_grid(p, 0.01);
        R0Report r = r0_all(p, g);
        REQUIRE(r.has_power_iter);
        REQUIRE(r.has_reduced);
        CHECK(rel(r.r0_squared_closed_form, r.r0_squared_power_iter) < 1e-10);
        CHECK(rel(r.r0_squared_closed_form, r.r0_squared_reduced) < 1e-10);
        CHECK(rel(r.r0_squared_closed_form, g_of_lambda(p, g, 0.0)) < 1e-10);
        CHECK(r.r0 == doctest::Approx(std::sqrt(r.r0_squared_closed_form)).epsilon(1e-14));
    }
}

TEST_CASE("dense power iteration matches matrix-free on a small grid") {
    ModelParams p = preset("forward");
    Grid g = Grid::make(0.02, 20.0, 1.5, 0.6, 1.5, 1.0);
    PowerOptions dense;
    dense.dense = true;
    double a = power_iteration_r0(p, g).r0_squared_power_iter;
    double b = power_iteration_r0(p, g, dense).r0_squared_power_iter;
    CHECK(rel(a, b) < 1e-10);
    CHECK(rel(a, r0_closed_form(p, g).r0_squared_closed_form) < 1e-10);
}

TEST_CASE("age-dependent mortality keeps power iteration and closed form together") {
    ModelParams p = preset("forward");
    p.mu_h = RateSpec::piecewise(5.0, 0.06, 0.022, Variable::Age);
    Grid g = Grid::make(0.01, 60.0, 1.5, 0.6, 1.5, 1.0);
    R0Report r = r0_all(p, g);
    CHECK_FALSE(r.has_reduced);
    CHECK(rel(r.r0_squared_closed_form, r.r0_squared_power_iter) < 1e-8);
}

TEST_CASE("power iteration on a 2x2 positive matrix") {
    auto apply = [](std::span<const double> v) { return std::vector<double>{2.0 * v[0] + v[1], v[0] + 2.0 * v[1]}; };
    PowerResult r = power_iterate(apply, {1.0, 0.5}, 1e-14, 200);
    CHECK(r.eigenvalue == doctest::Approx(3.0).epsilon(1e-12));
}

TEST_CASE("cell average decay") {
    CHECK(cell_average_decay(0.0) == 1.0);
    CHECK(cell_average_decay(1e-10) == doctest::Approx(1.0 - 5e-11).epsilon(1e-15));
    CHECK(cell_average_decay(2.0) == doctest::Approx((1.0 - std::exp(-2.0)) / 2.0).epsilon(1e-15));
}

TEST_CASE("next-generation operator maps positive vectors to positive vectors") {
    ModelParams p = preset("forward");
    Grid g = Grid::make(0.02, 20.0, 1.5, 0.6, 1.5, 1.0);
    NextGenerationOperator op(p, g);
    std::vector<double> h(op.human_size(), 1.0);
    auto m = op.apply_gm(h);
    CHECK(m.size() == op.mosquito_size());
    auto back = op.apply_gh(m);
    auto hh = op.apply_hh(h);
    REQUIRE(back.size() == hh.size());
    for (std::size_t i = 0; i < hh.size(); ++i) CHECK(back[i] == doctest::Approx(hh[i]).epsilon(1e-14));
    double sum = 0.0;
    for (double v : hh) sum += v;
    CHECK(sum > 0.0);
}
