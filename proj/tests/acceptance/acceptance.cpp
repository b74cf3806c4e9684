#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <thread>
#include <vector>

#if defined(__SSE__)
#include <xmmintrin.h>
#endif

#include "structsim/equilibrium.hpp"
#include "structsim/grid.hpp"
#include "structsim/oracle.hpp"
#include "structsim/params.hpp"
#include "structsim/r0.hpp"
#include "structsim/solver.hpp"

using namespace structsim;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

template <class F>
auto timed(double& secs, F&& f) {
    auto t0 = Clock::now();
    auto r = f();
    secs = seconds_since(t0);
    return r;
}

std::string num(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6g", x);
    return buf;
}

struct Outcome {
    bool pass = true;
    std::string detail;
    void require(bool ok, const std::string& what) {
        pass = pass && ok;
        if (!detail.empty()) detail += "; ";
        detail += what + (ok ? "" : " [x]");
    }
};

ModelParams with_lambda_m(const std::string& name, double lambda_m) {
    ModelParams p = preset(name);
    p.lambda_m = lambda_m;
    return p;
}

double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(a), std::abs(b)); }

Outcome criterion1() {
    Outcome o;
    struct Case {
        const char* name;
        double lo, hi;
    };
    for (Case c : {Case{"forward", -1.41, -1.27}, Case{"backward", 3.8, 4.2}}) {
        ModelParams p = preset(c.name);
        Grid g = default_grid(p, 0.005);
        double secs = 0.0;
        double cb = timed(secs, [&] { return c_bif(reduced_kernels(p, g)); });
        o.require(cb >= c.lo && cb <= c.hi, std::string(c.name) + " c_bif " + num(cb) + " in [" + num(c.lo) + ", " +
                                                num(c.hi) + "]");
        o.require(secs < 1.0, num(secs) + " s");
    }
    return o;
}

Outcome criterion2() {
    Outcome o;
    struct Case {
        const char* name;
        double lambda_m, target, tol;
    };
    double worst = 0.0;
    std::vector<double> values;
    for (Case c : {Case{"forward", 7e6, 1.16, 0.03}, Case{"forward", 5e6, 0.83, 0.03},
                   Case{"backward", 7.4e7, 1.12, 0.03}, Case{"backward", 1e7, 0.15, 0.01},
                   Case{"backward", 2.5e7, 0.38, 0.02}}) {
        ModelParams p = with_lambda_m(c.name, c.lambda_m);
        Grid g = default_grid(p, 0.005);
        double secs = 0.0;
        double r0 = timed(secs, [&] { return r0_closed_form(p, g).r0_squared_closed_form; });
        worst = std::max(worst, secs);
        values.push_back(r0);
        o.require(std::abs(r0 - c.target) <= c.tol,
                  std::string(c.name) + " R0(" + num(c.lambda_m) + ") = " + num(r0) + " vs " + num(c.target));
    }
    double ratio_f = values[0] / values[1];
    double ratio_b = values[4] / values[3];
    o.require(std::abs(ratio_f / 1.4 - 1.0) <= 1e-12, "ratio 7e6/5e6 = " + num(ratio_f));
    o.require(std::abs(ratio_b / 2.5 - 1.0) <= 1e-12, "ratio 2.5e7/1e7 = " + num(ratio_b));
    o.require(worst < 1.0, "slowest " + num(worst) + " s");
    return o;
}

Outcome criterion3() {
    Outcome o;
    for (const char* name : {"forward", "backward"}) {
        ModelParams p = preset(name);
        Grid g = default_grid(p, 0.005);
        R0Report r = r0_all(p, g);
        double g0 = g_of_lambda(p, g, 0.0);
        std::vector<double> v{r.r0_squared_closed_form, r.r0_squared_power_iter, r.r0_squared_reduced, g0};
        double gap = 0.0;
        for (std::size_t i = 0; i < v.size(); ++i)
            for (std::size_t j = i + 1; j < v.size(); ++j) gap = std::max(gap, rel(v[i], v[j]));
        o.require(r.has_power_iter && r.has_reduced && gap <= 1e-8, std::string(name) + " max gap " + num(gap));
    }
    return o;
}

unsigned worker_count() { return std::max(1u, std::thread::hardware_concurrency()); }

Outcome criterion4() {
    Outcome o;
    {
        ModelParams p = preset("backward");
        Grid g = default_grid(p, 0.005);
        double hi = lambda_m_for_target_r0(p, g, 1.5);
        double secs = 0.0;
        auto branch = timed(secs, [&] { return trace_branch(p, g, hi / 200.0, hi, 200, worker_count()); });
        bool ok = branch.classification == Classification::Backward && branch.fold_r0_star &&
                  std::abs(*branch.fold_r0_star - 0.29) <= 0.02;
        o.require(ok, std::string("backward ") + classification_name(branch.classification) + " fold " +
                          (branch.fold_r0_star ? num(*branch.fold_r0_star) : std::string("none")));
        o.require(secs < 30.0, "200-point sweep " + num(secs) + " s");
    }
    {
        ModelParams p = preset("forward");
        Grid g = default_grid(p, 0.005);
        double hi = lambda_m_for_target_r0(p, g, 2.0);
        auto branch = trace_branch(p, g, hi / 200.0, hi, 200, worker_count());
        o.require(branch.classification == Classification::Forward && !branch.fold_r0_star,
                  std::string("forward ") + classification_name(branch.classification) +
                      (branch.fold_r0_star ? " fold " + num(*branch.fold_r0_star) : " no fold"));
    }
    return o;
}

Outcome criterion5() {
    Outcome o;
    struct Case {
        const char* name;
        double r0;
        std::size_t roots;
    };
    for (Case c : {Case{"backward", 0.15, 0}, Case{"backward", 0.38, 2}, Case{"backward", 1.12, 1},
                   Case{"forward", 0.83, 0}, Case{"forward", 1.16, 1}}) {
        ModelParams p = preset(c.name);
        ReducedKernels k = reduced_kernels(p, default_grid(p, 0.005));
        std::size_t n = solve_endemic(c.r0, k).size();
        o.require(n == c.roots, std::string(c.name) + " R0 " + num(c.r0) + ": " + std::to_string(n) + " roots");
    }
    return o;
}

double l1_rel(std::span<const double> a, std::span<const double> b) {
    double num_ = 0.0, den = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        num_ += std::abs(a[i] - b[i]);
        den += std::abs(b[i]);
    }
    return den > 0.0 ? num_ / den : num_;
}

double field_error(const StateFields& x, const StateFields& y) {
    const HumanFull& a = x.full();
    const HumanFull& b = y.full();
    return std::max({l1_rel(a.s, b.s), l1_rel(a.i.values(), b.i.values()), l1_rel(a.r.values(), b.r.values()),
                     l1_rel(x.s_m, y.s_m), l1_rel(x.i_m.values(), y.i_m.values())});
}

Outcome criterion6() {
    Outcome o;
    ModelParams p = preset("forward");
    p.beta_h = RateSpec::constant(0.0);
    p.beta_m = RateSpec::constant(0.0);
    Grid g = Grid::make(0.005, 10.0, 1.5, 0.6, 1.5, 1.0);
    std::mt19937_64 rng(20260101);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    TransportSolver solver(p, g, Mode::Full);
    for (int trial = 0; trial < 3; ++trial) {
        StateFields init = zero_state(g, Mode::Full);
        HumanFull& h = init.full();
        for (double& v : h.s) v = p.lambda_h * u(rng);
        for (double& v : h.i.values()) v = 0.1 * p.lambda_h * u(rng);
        for (double& v : h.r.values()) v = 0.1 * p.lambda_h * u(rng);
        for (double& v : init.s_m) v = p.lambda_m * u(rng);
        for (double& v : init.i_m.values()) v = 0.1 * p.lambda_m * u(rng);
        StateFields oracle = volterra_decoupled(p, g, init, 0.5);
        StateFields state = init;
        for (int n = 0; n < 100; ++n) solver.step(state);
        double err = field_error(state, oracle);
        o.require(err <= 1e-10, "IC " + std::to_string(trial) + " rel L1 " + num(err));
    }
    return o;
}

Outcome criterion7() {
    Outcome o;
    ModelParams p = with_lambda_m("forward", 7e6);
    Grid g = default_grid(p, 0.005);
    auto lambda_star = dominant_growth_rate(p, g).lambda_star;
    auto series = simulate(p, g, default_initial(p, g, 1e-6, Mode::Reduced), 2.5, 1).series;
    double st = 0.0, sy = 0.0, stt = 0.0, sty = 0.0, n = 0.0;
    for (const auto& ob : series) {
        if (ob.t < 1.0 - 1e-9 || ob.total_i_m <= 0.0) continue;
        double y = std::log(ob.total_i_m);
        st += ob.t;
        sy += y;
        stt += ob.t * ob.t;
        sty += ob.t * y;
        n += 1.0;
    }
    double slope = (n * sty - st * sy) / (n * stt - st * st);
    bool ok = lambda_star && std::abs(slope / *lambda_star - 1.0) <= 0.05;
    o.require(ok, "fitted " + num(slope) + " on t in [1, 2.5] vs lambda* " +
                      (lambda_star ? num(*lambda_star) : std::string("none")));
    return o;
}

double largest_root_i_h(const ModelParams& p, const Grid& g) {
    ReducedKernels k = reduced_kernels(p, g);
    double r0 = r0_closed_form(p, g).r0_squared_closed_form;
    auto roots = solve_endemic(r0, k);
    if (roots.empty()) return NAN;
    EquilibriumState e = reconstruct_equilibrium(roots.back(), p, g);
    return observe(e.state, p, g).total_i_h;
}

Outcome criterion8() {
    Outcome o;
    double secs = 0.0;
    {
        ModelParams p = with_lambda_m("forward", 7e6);
        Grid g = default_grid(p, 0.005);
        double target = largest_root_i_h(p, g);
        auto last = timed(secs, [&] {
            return simulate(p, g, default_initial(p, g, 1e-2, Mode::Reduced), 600.0, 1000).series.back();
        });
        o.require(rel(last.total_i_h, target) <= 0.01 && secs <= 120.0,
                  "forward R0>1: I_h " + num(last.total_i_h) + " vs " + num(target) + " (" + num(secs) + " s)");
    }
    {
        ModelParams p = with_lambda_m("forward", 5e6);
        Grid g = default_grid(p, 0.005);
        auto last = timed(secs, [&] {
            return simulate(p, g, default_initial(p, g, 1e-2, Mode::Reduced), 50.0, 1000).series.back();
        });
        o.require(last.total_i_h < 1e-6 * last.n_h && secs <= 120.0,
                  "forward R0<1: I_h/N_h " + num(last.total_i_h / last.n_h) + " at t=50 (" + num(secs) + " s)");
    }
    {
        ModelParams p = with_lambda_m("backward", 2.5e7);
        Grid g = default_grid(p, 0.005);
        double target = largest_root_i_h(p, g);
        auto large = timed(secs, [&] {
            return simulate(p, g, endemic_blend(p, g, 0.9), 500.0, 1000).series.back();
        });
        o.require(rel(large.total_i_h, target) <= 0.01 && secs <= 120.0,
                  "backward large seed: I_h " + num(large.total_i_h) + " vs " + num(target) + " (" + num(secs) +
                      " s)");
        auto small = timed(secs, [&] {
            return simulate(p, g, endemic_blend(p, g, 1e-4), 500.0, 1000).series.back();
        });
        o.require(small.total_i_h < 1e-6 * small.n_h && secs <= 120.0,
                  "backward small seed: I_h/N_h " + num(small.total_i_h / small.n_h) + " (" + num(secs) + " s)");
    }
    return o;
}

bool nonnegative(const StateFields& s) {
    auto ok = [](std::span<const double> v) {
        return std::all_of(v.begin(), v.end(), [](double x) { return x >= 0.0; });
    };
    bool human = s.mode() == Mode::Full
                     ? ok(s.full().s) && ok(s.full().i.values()) && ok(s.full().r.values())
                     : s.reduced().s >= 0.0 && ok(s.reduced().i) && ok(s.reduced().r);
    return human && ok(s.s_m) && ok(s.i_m.values());
}

double sup_rate(const RateSpec& r, const Grid& g, std::size_t n_age, std::size_t n_struct) {
    double m = 0.0;
    std::size_t stride = std::max<std::size_t>(1, n_age / 4000);
    for (std::size_t i = 0; i < n_age; i += stride)
        for (std::size_t k = 0; k <= std::min(i, n_struct); ++k) m = std::max(m, r(g.center(i), g.center(k)));
    return m;
}

struct Totals {
    double s_h, i_h, r_h, s_m, i_m;
};

Totals totals(const StateFields& s, const ModelParams& p, const Grid& g) {
    Observables ob = observe(s, p, g);
    double s_h = s.mode() == Mode::Full ? integrate_1d(s.full().s, g.delta) : s.reduced().s;
    double s_m = integrate_1d(s.s_m, g.delta);
    return {s_h, ob.total_i_h, ob.n_h - s_h - ob.total_i_h, s_m, ob.total_i_m};
}

// Steps a run, checking positivity and the population sandwich after every step.
struct InvariantRun {
    std::size_t steps = 0;
    bool positive = true;
    double worst_h = -INFINITY;  // largest bound violation over the tolerance, humans
    double worst_m = -INFINITY;
    StateFields final_state;
};

InvariantRun invariant_run(const ModelParams& p, const Grid& g, StateFields state, std::size_t steps) {
    InvariantRun r;
    ValidationReport v = validate(p, g);
    double mu0 = v.mu0;
    double sh = sup_rate(p.mu_h, g, g.n_ah, 0) + sup_rate(p.nu_h, g, g.n_ah, g.n_th);
    double sm = sup_rate(p.mu_m, g, g.n_am, 0) + sup_rate(p.nu_m, g, g.n_am, g.n_tm);
    double tol_h = 3.0 * g.delta * p.lambda_h;
    double tol_m = 3.0 * g.delta * p.lambda_m;
    double nh0 = human_population(state, g);
    double nm0 = mosquito_population(state, g);
    TransportSolver solver(p, g, state.mode());
    for (std::size_t n = 1; n <= steps; ++n) {
        solver.step(state);
        double t = static_cast<double>(n) * g.delta;
        r.positive = r.positive && nonnegative(state);
        double nh = human_population(state, g);
        double nm = mosquito_population(state, g);
        double up_h = nh0 * std::exp(-mu0 * t) + p.lambda_h / mu0 * -std::expm1(-mu0 * t);
        double lo_h = nh0 * std::exp(-sh * t) + p.lambda_h / sh * -std::expm1(-sh * t);
        double up_m = nm0 * std::exp(-mu0 * t) + p.lambda_m / mu0 * -std::expm1(-mu0 * t);
        double lo_m = nm0 * std::exp(-sm * t) + p.lambda_m / sm * -std::expm1(-sm * t);
        r.worst_h = std::max({r.worst_h, (nh - up_h) / tol_h, (lo_h - nh) / tol_h});
        r.worst_m = std::max({r.worst_m, (nm - up_m) / tol_m, (lo_m - nm) / tol_m});
    }
    r.steps = steps;
    r.final_state = std::move(state);
    return r;
}

double dfe_drift(const ModelParams& p, const Grid& g, Mode mode, std::size_t steps, bool& infected_zero) {
    StateFields s0 = dfe_state(p, g, mode);
    StateFields s = s0;
    TransportSolver solver(p, g, mode);
    for (std::size_t n = 0; n < steps; ++n) solver.step(s);
    auto zero = [](std::span<const double> v) {
        return std::all_of(v.begin(), v.end(), [](double x) { return x == 0.0; });
    };
    auto drift = [](std::span<const double> a, std::span<const double> b) {
        double d = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]) / std::max(b[i], 1e-300));
        return d;
    };
    double d = drift(s.s_m, s0.s_m);
    infected_zero = zero(s.i_m.values());
    if (mode == Mode::Full) {
        d = std::max(d, drift(s.full().s, s0.full().s));
        infected_zero = infected_zero && zero(s.full().i.values()) && zero(s.full().r.values());
    } else {
        d = std::max(d, std::abs(s.reduced().s / s0.reduced().s - 1.0));
        infected_zero = infected_zero && zero(s.reduced().i) && zero(s.reduced().r);
    }
    return d;
}

Outcome criterion9() {
    Outcome o;
    {
        ModelParams p = with_lambda_m("forward", 7e6);
        Grid g = default_grid(p, 0.005);
        double mu0 = validate(p, g).mu0;
        auto steps = static_cast<std::size_t>(std::ceil(20.0 / mu0 / g.delta));
        InvariantRun r = invariant_run(p, g, default_initial(p, g, 1e-2, Mode::Reduced), steps);
        o.require(r.positive, "forward positivity over " + std::to_string(r.steps) + " steps");
        o.require(r.worst_h <= 1.0 && r.worst_m <= 1.0,
                  "forward sandwich excess/tol h " + num(r.worst_h) + " m " + num(r.worst_m));
        Totals tt = totals(r.final_state, p, g);
        double bh = p.lambda_h / mu0 * 1.01, bm = p.lambda_m / mu0 * 1.01;
        o.require(tt.s_h <= bh && tt.i_h <= bh && tt.r_h <= bh && tt.s_m <= bm && tt.i_m <= bm,
                  "t = 20/mu0 totals within Lambda/mu0 (N_h/bound " + num(tt.s_h + tt.i_h + tt.r_h) + "/" +
                      num(bh) + ")");
    }
    {
        ModelParams p = with_lambda_m("backward", 7.4e7);
        Grid g = default_grid(p, 0.005);
        InvariantRun r = invariant_run(p, g, default_initial(p, g, 1e-2, Mode::Reduced), 10000);
        o.require(r.positive && r.worst_h <= 1.0 && r.worst_m <= 1.0,
                  "backward 1e4 steps positive, sandwich h " + num(r.worst_h) + " m " + num(r.worst_m));
    }
    {
        ModelParams p = with_lambda_m("forward", 7e6);
        Grid g = Grid::make(0.005, 20.0, 1.5, 0.6, 1.5, 1.0);
        InvariantRun r = invariant_run(p, g, default_initial(p, g, 1e-2, Mode::Full), 10000);
        o.require(r.positive, "FULL coarse grid positivity over 1e4 steps");
    }
    for (const char* name : {"forward", "backward"}) {
        ModelParams p = preset(name);
        Grid g = default_grid(p, 0.005);
        bool zero = false;
        double d = dfe_drift(p, g, Mode::Reduced, 10000, zero);
        o.require(zero && d <= 1e-12, std::string(name) + " DFE drift " + num(d));
    }
    {
        ModelParams p = preset("forward");
        Grid g = Grid::make(0.005, 20.0, 1.5, 0.6, 1.5, 1.0);
        bool zero = false;
        double d = dfe_drift(p, g, Mode::Full, 10000, zero);
        o.require(zero && d <= 1e-12, "FULL DFE drift " + num(d));
    }
    return o;
}

ModelParams random_age_free(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    auto in = [&](double lo, double hi) { return lo + (hi - lo) * u(rng); };
    ModelParams p = preset("forward");
    p.name = "random";
    p.mu_h = RateSpec::constant(in(0.002, 0.03));
    p.nu_h = RateSpec::constant(in(0.02, 0.2));
    p.mu_m = RateSpec::constant(in(10.0, 30.0));
    p.nu_m = RateSpec::constant(in(10.0, 40.0));
    p.gamma_h = RateSpec::piecewise(in(0.05, 0.2), 0.0, in(10.0, 80.0));
    p.k_h = RateSpec::piecewise(in(0.05, 0.2), 0.0, in(10.0, 80.0));
    p.beta_h = RateSpec::gauss(in(0.05, 0.2), in(0.2, 0.4), in(0.05, 0.15));
    p.beta_m = RateSpec::gauss_exp(in(0.02, 0.1), in(0.1, 0.3), in(0.1, 0.3), in(0.5, 2.0));
    return p;
}

Outcome criterion10() {
    Outcome o;
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (const char* name : {"forward", "backward"}) {
        ModelParams p = preset(name);
        ReducedKernels k = reduced_kernels(p, default_grid(p, 0.005));
        double kb = k_bar(k);
        double worst = 0.0;
        for (int n = 0; n < 50; ++n) {
            double r0 = 0.1 + 1.9 * u(rng);
            double kk = kb * (0.01 + 0.98 * u(rng));
            double h = 1e-5 * kb;
            double fd = (f_value(r0, kk + h, k) - f_value(r0, kk - h, k)) / (2.0 * h);
            double an = dk_f(r0, kk, k);
            worst = std::max(worst, std::abs(an - fd) / std::max(std::abs(an), std::abs(fd)));
        }
        o.require(worst <= 1e-6, std::string(name) + " worst FD rel " + num(worst));
    }
    int agree = 0;
    for (int n = 0; n < 20; ++n) {
        ModelParams p = random_age_free(rng);
        ReducedKernels k = reduced_kernels(p, default_grid(p, 0.005));
        double d = dk_f(1.0, 0.0, k);
        double c = c_bif(k);
        if ((d > 0.0) == (c > 0.0)) ++agree;
    }
    o.require(agree == 20, "sign agreement " + std::to_string(agree) + "/20");
    return o;
}

}  // namespace

int main() {
#if defined(__SSE__)
    _mm_setcsr(_mm_getcsr() | 0x8040);  // flush denormals to zero
#endif
    std::vector<std::function<Outcome()>> criteria{criterion1, criterion2, criterion3, criterion4, criterion5,
                                                   criterion6, criterion7, criterion8, criterion9, criterion10};
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        auto t0 = Clock::now();
        Outcome o;
        try {
            o = criteria[i]();
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail = std::string("exception: ") + e.what();
        }
        std::printf("criterion %2zu: %s  %s  (%.1f s)\n", i + 1, o.pass ? "PASS" : "FAIL", o.detail.c_str(),
                    seconds_since(t0));
        std::fflush(stdout);
        failed += o.pass ? 0 : 1;
    }
    std::printf("%d of %zu criteria failed\n", failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
