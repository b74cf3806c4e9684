#include "structsim/grid.hpp"

#include <string>

#include "structsim/errors.hpp"

namespace structsim {

namespace {

std::size_t cells(double extent, double delta, const char* name) {
    if (!(extent > 0.0) || !std::isfinite(extent))
        throw DomainError(std::string("grid: ") + name + " must be positive and finite");
    double ratio = extent / delta;
    double n = std::round(ratio);
    if (n < 1.0 || std::abs(ratio - n) > 1e-9 * std::max(1.0, ratio))
        throw DomainError(std::string("grid: ") + name + " is not an integer multiple of delta");
    return static_cast<std::size_t>(n);
}

double round_up(double x, double delta) { return std::ceil(x / delta - 1e-9) * delta; }

}  // namespace

Grid Grid::make(double delta, double a_max_h, double a_max_m, double tau_max_h, double tau_max_m,
                double eta_max) {
    if (!(delta > 0.0) || !std::isfinite(delta)) throw DomainError("grid: delta must be positive");
    Grid g;
    g.delta = delta;
    g.a_max_h = a_max_h;
    g.a_max_m = a_max_m;
    g.tau_max_h = tau_max_h;
    g.tau_max_m = tau_max_m;
    g.eta_max = eta_max;
    g.n_ah = cells(a_max_h, delta, "a_max_h");
    g.n_am = cells(a_max_m, delta, "a_max_m");
    g.n_th = cells(tau_max_h, delta, "tau_max_h");
    g.n_tm = cells(tau_max_m, delta, "tau_max_m");
    g.n_eta = cells(eta_max, delta, "eta_max");
    if (g.n_th > g.n_ah) throw DomainError("grid: tau_max_h exceeds a_max_h");
    if (g.n_tm > g.n_am) throw DomainError("grid: tau_max_m exceeds a_max_m");
    if (g.n_eta > g.n_ah) throw DomainError("grid: eta_max exceeds a_max_h");
    return g;
}

Grid default_grid(const ModelParams& params, double delta) {
    double mu = params.mu_h(0.0, 0.0);
    double a_max_h = mu > 0.0 ? round_up(5.0 / mu, delta) : round_up(100.0, delta);
    double a_max_m = round_up(1.5, delta);
    return Grid::make(delta, std::max(a_max_h, round_up(1.0, delta)), a_max_m, round_up(0.6, delta), a_max_m,
                      round_up(1.0, delta));
}

Grid resolve_grid(const ModelParams& params, const GridOverrides& o) {
    Grid d = default_grid(params, o.delta.value_or(0.005));
    return Grid::make(d.delta, o.a_max_h.value_or(d.a_max_h), o.a_max_m.value_or(d.a_max_m),
                      o.tau_max_h.value_or(d.tau_max_h), o.tau_max_m.value_or(d.tau_max_m),
                      o.eta_max.value_or(d.eta_max));
}

TriangularField::TriangularField(std::size_t n_age, std::size_t n_struct) : n_age_(n_age), n_struct_(n_struct) {
    if (n_struct > n_age) throw DomainError("triangular field: structure axis longer than age axis");
    offsets_.resize(n_age + 1);
    std::size_t off = 0;
    for (std::size_t j = 0; j < n_age; ++j) {
        offsets_[j] = off;
        off += row_length(j);
    }
    offsets_[n_age] = off;
    data_.assign(off, 0.0);
}

void TriangularField::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

namespace {

void survival(const RateSpec& mu, std::size_t n, double delta, std::vector<double>& nodes,
              std::vector<double>& cell, double& tail) {
    nodes.assign(n + 1, 1.0);
    cell.assign(n, 0.0);
    double cum = 0.0;
    double last_rate = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double rate = mu((static_cast<double>(i) + 0.5) * delta, 0.0);
        double x = rate * delta;
        cell[i] = nodes[i] * (x > 1e-8 ? -std::expm1(-x) / rate : delta * (1.0 - 0.5 * x));
        cum += x;
        nodes[i + 1] = std::exp(-cum);
        last_rate = rate;
    }
    tail = last_rate > 0.0 ? nodes[n] / last_rate : 0.0;
}

}  // namespace

SurvivalTable build_survival(const ModelParams& params, const Grid& grid) {
    SurvivalTable t;
    survival(params.mu_h, grid.n_ah, grid.delta, t.pi_h, t.cell_h, t.tail_h);
    survival(params.mu_m, grid.n_am, grid.delta, t.pi_m, t.cell_m, t.tail_m);
    return t;
}

double SurvivalTable::integral_h() const noexcept {
    double s = 0.0;
    for (double v : cell_h) s += v;
    return s + tail_h;
}

double SurvivalTable::integral_m() const noexcept {
    double s = 0.0;
    for (double v : cell_m) s += v;
    return s + tail_m;
}

std::vector<double> survival_at_centers(const RateSpec& mu, std::span<const double> nodes, double delta) {
    std::vector<double> out(nodes.size() - 1);
    for (std::size_t i = 0; i + 1 < nodes.size(); ++i)
        out[i] = nodes[i] * std::exp(-0.5 * delta * mu((static_cast<double>(i) + 0.25) * delta, 0.0));
    return out;
}

double integrate_1d(std::span<const double> values, double delta) noexcept {
    double s = 0.0;
    for (double v : values) s += v;
    return s * delta;
}

double integrate_triangular(const TriangularField& field, double delta) noexcept {
    double s = 0.0;
    for (double v : field.values()) s += v;
    return s * delta * delta;
}

}  // namespace structsim
