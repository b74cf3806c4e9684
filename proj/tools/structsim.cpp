#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#if defined(__SSE__)
#include <xmmintrin.h>
#endif

#include "CLI11.hpp"
#include "structsim/equilibrium.hpp"
#include "structsim/errors.hpp"
#include "structsim/grid.hpp"
#include "structsim/io.hpp"
#include "structsim/oracle.hpp"
#include "structsim/params.hpp"
#include "structsim/r0.hpp"
#include "structsim/solver.hpp"

namespace fs = std::filesystem;
using namespace structsim;

namespace {

struct Globals {
    std::string preset = "forward";
    std::string config;
    std::optional<double> delta, a_max_h, a_max_m, tau_max_h, tau_max_m, eta_max, lambda_m;
    std::string out;
    std::string svg;
    unsigned threads = 1;
    bool quiet = false;
    std::string command_line;
};

struct Setup {
    ModelParams params;
    Grid grid;
    std::string preset;
    std::string config_text;
};

struct UsageError : Error {
    using Error::Error;
};

Setup load(const Globals& g) {
    Setup s;
    GridOverrides ov;
    if (!g.config.empty()) {
        Config c = load_config(g.config);
        s.params = c.params;
        ov = c.grid;
        s.preset = "";
    } else {
        auto names = preset_names();
        if (std::find(names.begin(), names.end(), g.preset) == names.end())
            throw UsageError("unknown preset '" + g.preset + "'");
        s.params = preset(g.preset);
        s.preset = g.preset;
    }
    if (g.lambda_m) s.params.lambda_m = *g.lambda_m;
    if (g.delta) ov.delta = g.delta;
    if (g.a_max_h) ov.a_max_h = g.a_max_h;
    if (g.a_max_m) ov.a_max_m = g.a_max_m;
    if (g.tau_max_h) ov.tau_max_h = g.tau_max_h;
    if (g.tau_max_m) ov.tau_max_m = g.tau_max_m;
    if (g.eta_max) ov.eta_max = g.eta_max;
    s.grid = resolve_grid(s.params, ov);
    s.config_text = to_config_text(s.params, ov);
    return s;
}

void say(const Globals& g, const std::string& line) {
    if (!g.quiet) std::cout << line << '\n';
}

std::string fmt(double x) { return format_double(x); }

class Outputs {
public:
    Outputs(const Globals& g, const Setup& s) : g_(g), s_(s), start_(std::chrono::steady_clock::now()) {}

    void csv(const fs::path& path, const CsvTable& t) { file(path, t.text()); }
    void svg(const fs::path& path, const SvgPlot& p) { file(path, render_svg(p)); }

    void finish(const fs::path& manifest_path) {
        if (files_.empty()) return;
        RunManifest m;
        m.command_line = g_.command_line;
        m.preset = s_.preset;
        m.config_text = s_.config_text;
        m.grid = s_.grid;
        m.tool_version = STRUCTSIM_VERSION;
        m.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
        for (const auto& f : files_) m.outputs.push_back({f.string(), sha256_file(f)});
        write_manifest(manifest_path, m);
        say(g_, "wrote " + manifest_path.string());
    }

private:
    void file(const fs::path& path, const std::string& text) {
        write_text(path, text);
        files_.push_back(path);
        say(g_, "wrote " + path.string());
    }

    const Globals& g_;
    const Setup& s_;
    std::chrono::steady_clock::time_point start_;
    std::vector<fs::path> files_;
};

fs::path manifest_for(const fs::path& p) {
    fs::path m = p;
    m.replace_extension(".manifest.json");
    return m;
}

CsvTable series_table(const std::vector<Observables>& series) {
    CsvTable t;
    t.header = {"t", "n_h", "n_m", "total_i_h", "total_i_m", "foi_mh_total", "foi_hm_total"};
    for (const auto& o : series) t.add_row({o.t, o.n_h, o.n_m, o.total_i_h, o.total_i_m, o.foi_mh_total, o.foi_hm_total});
    return t;
}

SvgPlot series_plot(const std::string& title, const std::vector<Observables>& series) {
    SvgPlot p;
    p.title = title;
    p.x_label = "time";
    p.y_label = "infected";
    p.log_x = p.log_y = true;
    SvgSeries h{"I_h", {}, {}}, m{"I_m", {}, {}};
    for (const auto& o : series) {
        h.x.push_back(o.t);
        h.y.push_back(o.total_i_h);
        m.x.push_back(o.t);
        m.y.push_back(o.total_i_m);
    }
    p.series = {h, m};
    return p;
}

CsvTable branch_table(const BifurcationBranch& b) {
    CsvTable t;
    t.header = {"lambda_m", "r0", "n_roots", "k1", "k2", "c_bif", "r0_star"};
    std::string star = b.fold_r0_star ? format_double(*b.fold_r0_star) : "";
    for (const auto& pt : b.points) {
        auto root = [&](std::size_t i) { return i < pt.roots.size() ? format_double(pt.roots[i]) : std::string(); };
        t.rows.push_back({format_double(pt.lambda_m), format_double(pt.r0), std::to_string(pt.roots.size()), root(0),
                          root(1), format_double(b.c_bif), star});
    }
    return t;
}

SvgPlot branch_plot(const std::string& title, const BifurcationBranch& b) {
    SvgPlot p;
    p.title = title;
    p.x_label = "R0";
    p.y_label = "K";
    SvgSeries lower{"lower branch", {}, {}}, upper{"upper branch", {}, {}}, dfe{"disease free", {}, {}};
    for (const auto& pt : b.points) {
        dfe.x.push_back(pt.r0);
        dfe.y.push_back(0.0);
        if (pt.roots.size() >= 2) {
            lower.x.push_back(pt.r0);
            lower.y.push_back(pt.roots.front());
        }
        if (!pt.roots.empty()) {
            upper.x.push_back(pt.r0);
            upper.y.push_back(pt.roots.back());
        }
    }
    p.series = {upper, lower, dfe};
    return p;
}

struct SimArgs {
    double t_end = 50.0;
    double seed = 1e-2;
    std::string mode = "reduced";
    std::size_t every = 20;
    std::string snapshot;
};

std::vector<Observables> run_sim(const Setup& s, Mode mode, double seed, double t_end, std::size_t every,
                                 StateFields* final_state = nullptr) {
    StateFields init = default_initial(s.params, s.grid, seed, mode);
    SimulationResult r = simulate(s.params, s.grid, std::move(init), t_end, every);
    if (final_state) *final_state = std::move(r.final_state);
    return std::move(r.series);
}

int cmd_validate(const Globals& g) {
    Setup s = load(g);
    ValidationReport rep = validate(s.params, s.grid);
    for (const auto& c : rep.checks) say(g, std::string(c.passed ? "ok    " : "FAIL  ") + c.name + "  " + c.detail);
    say(g, "mu0 = " + fmt(rep.mu0));
    say(g, std::string("reduced mode eligible: ") + (rep.reduced_mode_eligible ? "yes" : "no"));
    return rep.ok() ? 0 : 1;
}

int cmd_r0(const Globals& g, bool dense) {
    Setup s = load(g);
    PowerOptions po;
    po.dense = dense;
    R0Report r = s.params.lambda_m > 0.0 ? r0_all(s.params, s.grid, po) : r0_closed_form(s.params, s.grid);
    say(g, "r0 (closed form)     = " + fmt(r.r0_squared_closed_form));
    say(g, "spectral radius      = " + fmt(r.r0));
    if (r.has_power_iter)
        say(g, "r0 (power iteration) = " + fmt(r.r0_squared_power_iter) + "  iterations " +
                   std::to_string(r.iterations) + "  residual " + fmt(r.residual));
    if (r.has_reduced) say(g, "r0 (reduced)         = " + fmt(r.r0_squared_reduced));
    say(g, "population ratio     = " + fmt(r.population_ratio));
    say(g, "kernel mass m->h     = " + fmt(r.kernel_mass_mh));
    say(g, "kernel mass h->m     = " + fmt(r.kernel_mass_hm));
    say(g, "tail fraction pi_h   = " + fmt(r.tail_fraction_h));
    if (!g.out.empty()) {
        Outputs o(g, s);
        CsvTable t;
        t.header = {"r0_closed_form", "r0_power_iter", "r0_reduced", "spectral_radius"};
        t.add_row({r.r0_squared_closed_form, r.has_power_iter ? r.r0_squared_power_iter : NAN,
                   r.has_reduced ? r.r0_squared_reduced : NAN, r.r0});
        o.csv(g.out, t);
        o.finish(manifest_for(g.out));
    }
    return 0;
}

int cmd_simulate(const Globals& g, const SimArgs& a) {
    Setup s = load(g);
    Mode mode = parse_mode(a.mode);
    StateFields fin;
    auto series = run_sim(s, mode, a.seed, a.t_end, a.every, &fin);
    const auto& last = series.back();
    say(g, "t = " + fmt(last.t) + "  N_h = " + fmt(last.n_h) + "  N_m = " + fmt(last.n_m) + "  I_h = " +
               fmt(last.total_i_h) + "  I_m = " + fmt(last.total_i_m));
    Outputs o(g, s);
    if (!g.out.empty()) o.csv(g.out, series_table(series));
    if (!g.svg.empty()) o.svg(g.svg, series_plot("simulation", series));
    if (!a.snapshot.empty()) {
        write_snapshot(a.snapshot, fin, s.grid);
        say(g, "wrote " + a.snapshot);
    }
    if (!g.out.empty()) o.finish(manifest_for(g.out));
    return 0;
}

int cmd_growth(const Globals& g) {
    Setup s = load(g);
    GrowthRate r = dominant_growth_rate(s.params, s.grid);
    say(g, "g(0)   = " + fmt(r.g0));
    say(g, "mu0    = " + fmt(r.mu0));
    if (r.lambda_star)
        say(g, "lambda* = " + fmt(*r.lambda_star) + "  (bisection steps " + std::to_string(r.iterations) + ")");
    else
        say(g, "lambda* = none  (" + r.note + ")");
    return 0;
}

struct BifArgs {
    std::optional<double> lo, hi;
    double r0_max = 2.0;
    std::size_t points = 200;
};

BifurcationBranch run_branch(const Globals& g, const Setup& s, const BifArgs& a) {
    double hi = a.hi ? *a.hi : lambda_m_for_target_r0(s.params, s.grid, a.r0_max);
    double lo = a.lo ? *a.lo : hi / static_cast<double>(a.points);
    return trace_branch(s.params, s.grid, lo, hi, a.points, g.threads);
}

void print_branch(const Globals& g, const BifurcationBranch& b) {
    say(g, "c_bif          = " + fmt(b.c_bif));
    say(g, "classification = " + std::string(classification_name(b.classification)));
    say(g, "k_bar          = " + fmt(b.k_bar));
    say(g, "fold r0*       = " + (b.fold_r0_star ? fmt(*b.fold_r0_star) : std::string("none")));
}

int cmd_bifurcate(const Globals& g, const BifArgs& a) {
    Setup s = load(g);
    ReducedKernels rk = reduced_kernels(s.params, s.grid);
    BifurcationBranch b = run_branch(g, s, a);
    print_branch(g, b);
    if (auto f = fold_point(rk)) say(g, "fold (max f)   = " + fmt(f->r0_star) + " at K = " + fmt(f->k_star));
    Outputs o(g, s);
    if (!g.out.empty()) o.csv(g.out, branch_table(b));
    if (!g.svg.empty()) o.svg(g.svg, branch_plot("bifurcation", b));
    if (!g.out.empty()) o.finish(manifest_for(g.out));
    return 0;
}

struct Recipe {
    std::string preset;
    bool branch = false;
    double lambda_m = 0.0;
    double seed = 0.0;
    double t_end = 0.0;
    double r0_max = 0.0;
    bool blend = false;  // seed is the weight of the endemic equilibrium in a blend with the DFE
};

const std::map<std::string, Recipe>& recipes() {
    static const std::map<std::string, Recipe> r = {
        {"fig2-forward", {"forward", true, 0.0, 0.0, 0.0, 2.0}},
        {"fig2-backward", {"backward", true, 0.0, 0.0, 0.0, 1.5}},
        {"fig3-left", {"forward", false, 7e6, 1e-2, 600.0, 0.0}},
        {"fig3-right", {"forward", false, 5e6, 1e-2, 100.0, 0.0}},
        {"fig4-tl", {"backward", false, 7.4e7, 1e-2, 600.0, 0.0}},
        {"fig4-tr", {"backward", false, 1e7, 1e-2, 100.0, 0.0}},
        {"fig4-bl", {"backward", false, 2.5e7, 0.9, 500.0, 0.0, true}},
        {"fig4-br", {"backward", false, 2.5e7, 1e-4, 500.0, 0.0, true}},
    };
    return r;
}

int cmd_reproduce(Globals g, const std::string& id, std::optional<double> t_end, std::optional<double> seed,
                  std::size_t points) {
    auto it = recipes().find(id);
    if (it == recipes().end()) throw UsageError("unknown figure id '" + id + "'");
    const Recipe& rc = it->second;
    if (g.config.empty()) g.preset = rc.preset;
    if (!rc.branch && !g.lambda_m) g.lambda_m = rc.lambda_m;
    Setup s = load(g);
    fs::path dir = g.out.empty() ? fs::path("out") / id : fs::path(g.out);
    Outputs o(g, s);
    if (rc.branch) {
        BifArgs a;
        a.r0_max = rc.r0_max;
        a.points = points;
        BifurcationBranch b = run_branch(g, s, a);
        print_branch(g, b);
        o.csv(dir / "branch.csv", branch_table(b));
        o.svg(g.svg.empty() ? dir / "branch.svg" : fs::path(g.svg), branch_plot(id, b));
    } else {
        double te = t_end.value_or(rc.t_end);
        double sd = seed.value_or(rc.seed);
        std::size_t every = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(0.1 / s.grid.delta)));
        StateFields init = rc.blend ? endemic_blend(s.params, s.grid, sd)
                                    : default_initial(s.params, s.grid, sd, Mode::Reduced);
        auto series = simulate(s.params, s.grid, std::move(init), te, every).series;
        double r0 = r0_closed_form(s.params, s.grid).r0_squared_closed_form;
        const auto& last = series.back();
        say(g, "lambda_m = " + fmt(s.params.lambda_m) + "  r0 = " + fmt(r0) + "  seed = " + fmt(sd));
        say(g, "t = " + fmt(last.t) + "  I_h/N_h = " + fmt(last.total_i_h / last.n_h) + "  I_m = " + fmt(last.total_i_m));
        o.csv(dir / "series.csv", series_table(series));
        o.svg(g.svg.empty() ? dir / "series.svg" : fs::path(g.svg), series_plot(id, series));
    }
    o.finish(dir / "manifest.json");
    return 0;
}

int cmd_report(const Globals& g) {
    Setup s = load(g);
    const auto& p = s.params;
    R0Report r = r0_closed_form(p, s.grid);
    std::vector<std::pair<std::string, double>> methods = {{"closed", r.r0_squared_closed_form}};
    if (p.lambda_m > 0.0) {
        R0Report pw = power_iteration_r0(p, s.grid);
        methods.emplace_back("power", pw.r0_squared_power_iter);
    } else {
        methods.emplace_back("power", 0.0);
    }
    if (p.reduced_mode_eligible()) methods.emplace_back("reduced", r0_reduced(p, s.grid));
    methods.emplace_back("g(0)", g_of_lambda(p, s.grid, 0.0));

    std::cout << "model            " << p.name << '\n';
    std::cout << "lambda_m         " << fmt(p.lambda_m) << '\n';
    for (const auto& [name, v] : methods) std::cout << std::left << std::setw(17) << "r0 " + name << fmt(v) << '\n';
    double worst = 0.0;
    for (std::size_t i = 0; i < methods.size(); ++i)
        for (std::size_t j = i + 1; j < methods.size(); ++j) {
            double a = methods[i].second, b = methods[j].second;
            double scale = std::max(std::abs(a), std::abs(b));
            if (scale > 0.0) worst = std::max(worst, std::abs(a - b) / scale);
        }
    std::cout << "max method gap   " << fmt(worst) << '\n';
    if (p.reduced_mode_eligible()) {
        ReducedKernels rk = reduced_kernels(p, s.grid);
        double cb = c_bif(rk);
        std::cout << "c_bif            " << fmt(cb) << "  ("
                  << classification_name(cb > 0.0 ? Classification::Backward : Classification::Forward) << ")\n";
        std::cout << "k_bar            " << fmt(k_bar(rk)) << '\n';
        auto roots = solve_endemic(r.r0_squared_closed_form, rk);
        std::cout << "endemic roots    " << roots.size();
        for (double k : roots) std::cout << "  K=" << fmt(k);
        std::cout << '\n';
        if (auto f = fold_point(rk)) std::cout << "fold r0*         " << fmt(f->r0_star) << '\n';
    } else {
        std::cout << "bifurcation      not available (age-dependent human rates)\n";
    }
    if (worst > 1e-6) {
        std::cerr << "r0 methods disagree by " << fmt(worst) << " (limit 1e-6)\n";
        return 1;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
#if defined(__SSE__)
    _mm_setcsr(_mm_getcsr() | 0x8040);  // flush denormals to zero
#endif
    CLI::App app{"structsim: age and infection-age structured malaria model"};
    app.require_subcommand(1);
    Globals g;
    for (int i = 0; i < argc; ++i) g.command_line += (i ? " " : "") + std::string(argv[i]);

    auto add_globals = [&](CLI::App* a) {
        a->add_option("--preset", g.preset, "parameter preset (forward, backward)");
        a->add_option("--config", g.config, "config file");
        a->add_option("--delta", g.delta, "grid step");
        a->add_option("--a-max-h", g.a_max_h, "human age truncation");
        a->add_option("--a-max-m", g.a_max_m, "mosquito age truncation");
        a->add_option("--tau-max-h", g.tau_max_h, "human infection-age truncation");
        a->add_option("--tau-max-m", g.tau_max_m, "mosquito infection-age truncation");
        a->add_option("--eta-max", g.eta_max, "recovery-age truncation");
        a->add_option("--lambda-m", g.lambda_m, "mosquito recruitment override");
        a->add_option("--out", g.out, "output path");
        a->add_option("--svg", g.svg, "svg output path");
        a->add_option("--threads", g.threads, "worker threads");
        a->add_flag("--quiet", g.quiet, "suppress progress output");
    };

    auto* validate_cmd = app.add_subcommand("validate", "check parameters against the model assumptions");
    auto* r0_cmd = app.add_subcommand("r0", "basic reproduction number by every available method");
    bool dense = false;
    r0_cmd->add_flag("--dense", dense, "assemble the next-generation matrix for power iteration");
    auto* sim_cmd = app.add_subcommand("simulate", "run the transport solver");
    SimArgs sa;
    sim_cmd->add_option("--t-end", sa.t_end, "final time");
    sim_cmd->add_option("--seed", sa.seed, "initial infected fraction");
    sim_cmd->add_option("--mode", sa.mode, "reduced or full");
    sim_cmd->add_option("--every", sa.every, "output every n steps");
    sim_cmd->add_option("--snapshot", sa.snapshot, "write the final state");
    auto* growth_cmd = app.add_subcommand("growth-rate", "real root of the linearised characteristic equation");
    auto* bif_cmd = app.add_subcommand("bifurcate", "endemic branch over a lambda_m sweep");
    BifArgs ba;
    bif_cmd->add_option("--lambda-m-min", ba.lo, "smallest lambda_m");
    bif_cmd->add_option("--lambda-m-max", ba.hi, "largest lambda_m");
    bif_cmd->add_option("--r0-max", ba.r0_max, "largest r0 when --lambda-m-max is absent");
    bif_cmd->add_option("--points", ba.points, "number of sweep points");
    auto* rep_cmd = app.add_subcommand("reproduce", "regenerate a figure-level result");
    std::string fig;
    std::optional<double> rt_end, rseed;
    std::size_t rpoints = 200;
    rep_cmd->add_option("figure", fig, "figure id")->required();
    rep_cmd->add_option("--t-end", rt_end, "final time");
    rep_cmd->add_option("--seed", rseed, "initial infected fraction");
    rep_cmd->add_option("--points", rpoints, "sweep points for branch figures");
    auto* report_cmd = app.add_subcommand("report", "summary of r0, bifurcation constant and roots");

    add_globals(&app);
    for (auto* c : {validate_cmd, r0_cmd, sim_cmd, growth_cmd, bif_cmd, rep_cmd, report_cmd}) add_globals(c);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (*validate_cmd) return cmd_validate(g);
        if (*r0_cmd) return cmd_r0(g, dense);
        if (*sim_cmd) return cmd_simulate(g, sa);
        if (*growth_cmd) return cmd_growth(g);
        if (*bif_cmd) return cmd_bifurcate(g, ba);
        if (*rep_cmd) return cmd_reproduce(g, fig, rt_end, rseed, rpoints);
        if (*report_cmd) return cmd_report(g);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 2;
}
