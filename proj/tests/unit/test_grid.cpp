#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <numeric>

#include "structsim/grid.hpp"
#include "structsim/params.hpp"

using namespace structsim;

TEST_CASE("grid cell counts follow the extents") {
    Grid g = Grid::make(0.005, 10.0, 1.5, 0.6, 1.5, 1.0);
    CHECK(g.n_ah == 2000);
    CHECK(g.n_am == 300);
    CHECK(g.n_th == 120);
    CHECK(g.n_tm == 300);
    CHECK(g.n_eta == 200);
    CHECK(g.center(0) == doctest::Approx(0.0025));
    ModelParams p = preset("forward");
    Grid d = default_grid(p);
    CHECK(d.a_max_h >= 5.0 / 0.022);
    CHECK(d.a_max_h - 5.0 / 0.022 < d.delta);
}

TEST_CASE("triangular field stores by diagonal") {
    TriangularField f(6, 3);
    CHECK(f.size() == 3 + 3 + 3 + 3 + 2 + 1);
    CHECK(f.row_length(0) == 3);
    CHECK(f.row_length(4) == 2);
    CHECK(f.row_length(5) == 1);
    f.fill(0.0);
    f.at(4, 2) = 7.0;
    CHECK(f.diagonal(2)[2] == 7.0);
    f.at(5, 0) = 1.0;
    CHECK(f.diagonal(5)[0] == 1.0);
    CHECK(integrate_triangular(f, 0.5) == doctest::Approx(8.0 * 0.25));
    CHECK(f.same_shape(TriangularField(6, 3)));
    CHECK_FALSE(f.same_shape(TriangularField(6, 4)));
}

TEST_CASE("survival with constant mortality is exponential and integrates to 1/mu") {
    ModelParams p = preset("forward");
    Grid g = Grid::make(0.01, 100.0, 1.5, 0.6, 1.5, 1.0);
    SurvivalTable s = build_survival(p, g);
    CHECK(s.pi_h[0] == 1.0);
    CHECK(s.pi_h[5000] == doctest::Approx(std::exp(-0.022 * 50.0)).epsilon(1e-12));
    CHECK(s.integral_h() == doctest::Approx(1.0 / 0.022).epsilon(1e-12));
    CHECK(s.integral_m() == doctest::Approx(1.0 / 20.0).epsilon(1e-12));
    CHECK(s.tail_fraction_h() == doctest::Approx(std::exp(-0.022 * 100.0)).epsilon(1e-10));
}

TEST_CASE("path integral is exact for constants and linear functions") {
    auto c = [](double, double) { return 2.0; };
    CHECK(path_integral(c, 0.0, 0.0, 1.234, 0.1) == doctest::Approx(2.468).epsilon(1e-13));
    auto lin = [](double a, double) { return a; };
    CHECK(path_integral(lin, 1.0, 0.0, 2.0, 0.1) == doctest::Approx(4.0).epsilon(1e-13));
    CHECK(path_integral(c, 0.0, 0.0, 0.0, 0.1) == 0.0);
}

TEST_CASE("survival at centres sits between node values") {
    std::vector<double> nodes{1.0, std::exp(-0.5), std::exp(-1.0)};
    auto c = survival_at_centers(RateSpec::constant(1.0), nodes, 0.5);
    REQUIRE(c.size() >= 2);
    CHECK(c[0] == doctest::Approx(std::exp(-0.25)).epsilon(1e-14));
    CHECK(c[1] == doctest::Approx(std::exp(-0.75)).epsilon(1e-14));
}

TEST_CASE("one-dimensional integration is the cell sum") {
    std::vector<double> v{1.0, 2.0, 3.0};
    CHECK(integrate_1d(v, 0.5) == 3.0);
}
