#include "structsim/solver.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "structsim/errors.hpp"

namespace structsim {

const char* mode_name(Mode m) noexcept { return m == Mode::Full ? "full" : "reduced"; }

Mode parse_mode(std::string_view s) {
    if (s == "full") return Mode::Full;
    if (s == "reduced") return Mode::Reduced;
    throw ConfigError("unknown mode '" + std::string(s) + "' (expected full or reduced)");
}

namespace {

double sum(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s;
}

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

// Decay over one step along the characteristic from (c_i, c_k) to (c_{i+1}, c_{k+1}).
template <class F>
void fill_decay(TriangularField& out, const F& rate, double d) {
    for (std::size_t j = 0; j < out.n_age(); ++j) {
        auto row = out.diagonal(j);
        double prev = rate((static_cast<double>(j) + 0.5) * d, 0.5 * d);
        for (std::size_t k = 0; k < row.size(); ++k) {
            double a1 = (static_cast<double>(j + k) + 1.5) * d;
            double s1 = (static_cast<double>(k) + 1.5) * d;
            double next = rate(a1, s1);
            row[k] = std::exp(-0.5 * d * (prev + next));
            prev = next;
        }
    }
}

// Diagonal 0 holds mass infected within the current age cell: sampled a quarter cell above a = s.
template <class F>
void fill_values(TriangularField& out, const F& f, double d) {
    for (std::size_t j = 0; j < out.n_age(); ++j) {
        auto row = out.diagonal(j);
        double lag = j == 0 ? 0.25 * d : 0.0;
        for (std::size_t k = 0; k < row.size(); ++k)
            row[k] = f((static_cast<double>(j + k) + 0.5) * d + lag, (static_cast<double>(k) + 0.5) * d);
    }
}

// Share of a cell leaving through one exit over a step: (1 - decay) * part / total, rates averaged
// over the step like the decay itself.
template <class F, class G>
void fill_exit_share(TriangularField& out, const TriangularField& decay, const F& part, const G& total, double d) {
    for (std::size_t j = 0; j < out.n_age(); ++j) {
        auto row = out.diagonal(j);
        auto dec = decay.diagonal(j);
        for (std::size_t k = 0; k < row.size(); ++k) {
            double a0 = (static_cast<double>(j + k) + 0.5) * d, s0 = (static_cast<double>(k) + 0.5) * d;
            double p = 0.5 * (part(a0, s0) + part(a0 + d, s0 + d));
            double r = 0.5 * (total(a0, s0) + total(a0 + d, s0 + d));
            row[k] = r > 0.0 ? (1.0 - dec[k]) * p / r : p * d;
        }
    }
}

template <class F>
std::vector<double> age_decay(const F& mu, std::size_t n, double d) {
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i)
        out[i] = std::exp(-0.5 * d * (mu((static_cast<double>(i) + 0.5) * d) + mu((static_cast<double>(i) + 1.5) * d)));
    return out;
}

// Factor for mass entering structure cell 0 at age cell i: half a step of the given rate.
template <class F>
std::vector<double> entry_factor(const F& rate, std::size_t n, double d) {
    std::vector<double> out(n, 0.0);
    for (std::size_t i = 1; i < n; ++i)
        out[i] = std::exp(-0.5 * d * rate((static_cast<double>(i) + 0.25) * d, 0.25 * d));
    if (n) out[0] = std::exp(-0.25 * d * rate(0.25 * d, 0.125 * d));
    return out;
}

double sup_on_grid(const RateSpec& r, const Grid& g, std::size_t n_age, std::size_t n_struct) {
    std::size_t stride = std::max<std::size_t>(1, n_age / 4000);
    double m = 0.0;
    for (std::size_t i = 0; i < n_age; i += stride)
        for (std::size_t k = 0; k < std::max<std::size_t>(1, n_struct); ++k)
            m = std::max(m, r(g.center(i), n_struct ? g.center(k) : 0.0));
    return m;
}

void shift(std::span<double> row, std::span<const double> decay) {
    for (std::size_t k = row.size(); k-- > 1;) row[k] = row[k - 1] * decay[k - 1];
}

}  // namespace

double epsilon_bar(const ModelParams& p, const Grid& g) {
    double norm = sup_on_grid(p.mu_h, g, g.n_ah, 0) + sup_on_grid(p.nu_h, g, g.n_ah, g.n_th) +
                  sup_on_grid(p.k_h, g, g.n_ah, g.n_eta) + sup_on_grid(p.gamma_h, g, g.n_ah, g.n_th);
    return norm > 0.0 ? p.lambda_h / norm : 0.0;
}

TransportSolver::TransportSolver(const ModelParams& p, const Grid& g, Mode mode) : params_(p), grid_(g), mode_(mode) {
    const double d = g.delta;
    eps_bar_ = structsim::epsilon_bar(p, g);
    auto mu_h = [&](double a) { return p.mu_h(a, 0.0); };
    auto mu_m = [&](double a) { return p.mu_m(a, 0.0); };

    if (mode == Mode::Full) {
        ds_h_ = age_decay(mu_h, g.n_ah, d);
        hs_h_.resize(g.n_ah);
        for (std::size_t i = 0; i < g.n_ah; ++i) hs_h_[i] = std::exp(-0.5 * d * mu_h(g.center(i + 1)));
        newborn_h_ = p.lambda_h * std::exp(-0.5 * d * mu_h(0.25 * d));
        di_h_ = TriangularField(g.n_ah, g.n_th);
        dr_h_ = TriangularField(g.n_ah, g.n_eta);
        beta_h_ = TriangularField(g.n_ah, g.n_th);
        gamma_h_ = TriangularField(g.n_ah, g.n_th);
        k_h_ = TriangularField(g.n_ah, g.n_eta);
        fill_decay(di_h_, [&](double a, double s) { return mu_h(a) + p.nu_h(a, s) + p.gamma_h(a, s); }, d);
        fill_decay(dr_h_, [&](double a, double s) { return mu_h(a) + p.k_h(a, s); }, d);
        fill_values(beta_h_, p.beta_h, d);
        fill_exit_share(gamma_h_, di_h_, [&](double a, double s) { return p.gamma_h(a, s); },
                        [&](double a, double s) { return mu_h(a) + p.nu_h(a, s) + p.gamma_h(a, s); }, d);
        fill_exit_share(k_h_, dr_h_, [&](double a, double s) { return p.k_h(a, s); },
                        [&](double a, double s) { return mu_h(a) + p.k_h(a, s); }, d);
        hi_h_ = entry_factor([&](double a, double s) { return p.nu_h(a, s) + p.gamma_h(a, s); }, g.n_ah, d);
        hr_h_ = entry_factor([&](double a, double s) { return mu_h(a) + p.k_h(a, s); }, g.n_ah, d);
    } else {
        if (!p.reduced_mode_eligible()) throw EligibilityError("REDUCED mode needs age-independent human rates");
        double mu = mu_h(0.0);
        ds_red_ = std::exp(-mu * d);
        hs_red_ = std::exp(-0.5 * mu * d);
        newborn_red_ = d * p.lambda_h * std::exp(-0.5 * mu * d);
        auto r_i = [&](double s) { return mu + p.nu_h(0.0, s) + p.gamma_h(0.0, s); };
        auto r_r = [&](double s) { return mu + p.k_h(0.0, s); };
        di_red_.resize(g.n_th);
        beta_red_.resize(g.n_th);
        gamma_red_.resize(g.n_th);
        for (std::size_t k = 0; k < g.n_th; ++k) {
            double r = 0.5 * (r_i(g.center(k)) + r_i(g.center(k + 1)));
            double gam = 0.5 * (p.gamma_h(0.0, g.center(k)) + p.gamma_h(0.0, g.center(k + 1)));
            di_red_[k] = std::exp(-d * r);
            beta_red_[k] = p.beta_h(0.0, g.center(k));
            gamma_red_[k] = r > 0.0 ? -std::expm1(-d * r) * gam / r : gam * d;
        }
        dr_red_.resize(g.n_eta);
        k_red_.resize(g.n_eta);
        for (std::size_t m = 0; m < g.n_eta; ++m) {
            double r = 0.5 * (r_r(g.center(m)) + r_r(g.center(m + 1)));
            double kk = 0.5 * (p.k_h(0.0, g.center(m)) + p.k_h(0.0, g.center(m + 1)));
            dr_red_[m] = std::exp(-d * r);
            k_red_[m] = r > 0.0 ? -std::expm1(-d * r) * kk / r : kk * d;
        }
        hi_red_ = std::exp(-0.5 * d * (p.nu_h(0.0, 0.25 * d) + p.gamma_h(0.0, 0.25 * d)));
        hr_red_ = std::exp(-0.5 * d * r_r(0.25 * d));
    }

    ds_m_ = age_decay(mu_m, g.n_am, d);
    newborn_m_ = p.lambda_m * std::exp(-0.5 * d * mu_m(0.25 * d));
    di_m_ = TriangularField(g.n_am, g.n_tm);
    beta_m_ = TriangularField(g.n_am, g.n_tm);
    fill_decay(di_m_, [&](double a, double s) { return mu_m(a) + p.nu_m(a, s); }, d);
    fill_values(beta_m_, p.beta_m, d);
    hi_m_ = entry_factor([&](double a, double s) { return p.nu_m(a, s); }, g.n_am, d);
}

double TransportSolver::human_force_integral(const StateFields& st) const {
    const double d = grid_.delta;
    if (st.mode() == Mode::Full) return params_.theta * dot(beta_h_.values(), st.full().i.values()) * d * d;
    return params_.theta * dot(beta_red_, st.reduced().i) * d;
}

double TransportSolver::mosquito_force_integral(const StateFields& st) const {
    const double d = grid_.delta;
    return params_.theta * dot(beta_m_.values(), st.i_m.values()) * d * d;
}

void TransportSolver::step(StateFields& st) const {
    if (st.mode() != mode_) throw DomainError("state mode does not match solver mode");
    double n_h = human_population(st, grid_);
    if (n_h < 0.5 * eps_bar_)
        throw DegeneratePopulation("human population " + std::to_string(n_h) + " fell below half the floor " +
                                   std::to_string(eps_bar_));
    double rho_h = mosquito_force_integral(st) / n_h;
    double rho_m = human_force_integral(st) / n_h;
    if (mode_ == Mode::Full) step_full(st.full(), rho_h);
    else step_reduced(st.reduced(), rho_h);
    step_mosquito(st, rho_m);
    st.t += grid_.delta;
}

void TransportSolver::step_full(HumanFull& h, double rho) const {
    const double d = grid_.delta;
    const std::size_t n = grid_.n_ah;
    const double keep = std::exp(-rho * d);
    const double caught = -std::expm1(-rho * d);
    const double half_keep = std::exp(-0.5 * rho * d);
    const double half_caught = -std::expm1(-0.5 * rho * d);

    std::vector<double> recov(n, 0.0), wane(n, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
        auto row = h.i.diagonal(j);
        auto gam = gamma_h_.diagonal(j);
        for (std::size_t k = 0; k < row.size(); ++k) recov[j + k] += gam[k] * row[k];
    }
    for (std::size_t j = 0; j < n; ++j) {
        auto row = h.r.diagonal(j);
        auto kk = k_h_.diagonal(j);
        for (std::size_t m = 0; m < row.size(); ++m) wane[j + m] += kk[m] * row[m];
    }

    std::vector<double> infected(n, 0.0);
    for (std::size_t i = n; i-- > 1;) {
        double base = h.s[i - 1] * ds_h_[i - 1];
        double inflow = d * wane[i - 1] * hs_h_[i - 1];
        h.s[i] = base * keep + inflow * half_keep;
        infected[i] = (base * caught + inflow * half_caught) / d;
    }
    h.s[0] = newborn_h_ * half_keep;
    infected[0] = newborn_h_ * half_caught / d;

    for (std::size_t j = 0; j < n; ++j) {
        auto row = h.i.diagonal(j);
        shift(row, di_h_.diagonal(j));
        row[0] = infected[j] * hi_h_[j];
    }
    for (std::size_t j = 0; j < n; ++j) {
        auto row = h.r.diagonal(j);
        shift(row, dr_h_.diagonal(j));
        row[0] = j ? recov[j - 1] * hr_h_[j] : 0.0;
    }
}

void TransportSolver::step_reduced(HumanReduced& h, double rho) const {
    const double d = grid_.delta;
    double recov = dot(gamma_red_, h.i);
    double wane = dot(k_red_, h.r);
    double base = h.s * ds_red_;
    double inflow = newborn_red_ + d * wane * hs_red_;
    h.s = base * std::exp(-rho * d) + inflow * std::exp(-0.5 * rho * d);
    double infected = (base * -std::expm1(-rho * d) - inflow * std::expm1(-0.5 * rho * d)) / d;
    shift(h.i, di_red_);
    h.i[0] = infected * hi_red_;
    shift(h.r, dr_red_);
    h.r[0] = recov * hr_red_;
}

void TransportSolver::step_mosquito(StateFields& st, double rho) const {
    const double d = grid_.delta;
    const std::size_t n = grid_.n_am;
    const double keep = std::exp(-rho * d);
    const double caught = -std::expm1(-rho * d);
    std::vector<double> infected(n, 0.0);
    for (std::size_t i = n; i-- > 1;) {
        double base = st.s_m[i - 1] * ds_m_[i - 1];
        st.s_m[i] = base * keep;
        infected[i] = base * caught / d;
    }
    st.s_m[0] = newborn_m_ * std::exp(-0.5 * rho * d);
    infected[0] = -newborn_m_ * std::expm1(-0.5 * rho * d) / d;
    for (std::size_t j = 0; j < n; ++j) {
        auto row = st.i_m.diagonal(j);
        shift(row, di_m_.diagonal(j));
        row[0] = infected[j] * hi_m_[j];
    }
}

StateFields zero_state(const Grid& g, Mode mode) {
    StateFields st;
    if (mode == Mode::Full) {
        HumanFull h;
        h.s.assign(g.n_ah, 0.0);
        h.i = TriangularField(g.n_ah, g.n_th);
        h.r = TriangularField(g.n_ah, g.n_eta);
        st.human = std::move(h);
    } else {
        HumanReduced h;
        h.i.assign(g.n_th, 0.0);
        h.r.assign(g.n_eta, 0.0);
        st.human = std::move(h);
    }
    st.s_m.assign(g.n_am, 0.0);
    st.i_m = TriangularField(g.n_am, g.n_tm);
    return st;
}

StateFields dfe_state(const ModelParams& p, const Grid& g, Mode mode) {
    const double d = g.delta;
    StateFields st = zero_state(g, mode);
    auto profile = [&](const RateSpec& mu, double lambda, std::vector<double>& out) {
        auto f = [&](double a) { return mu(a, 0.0); };
        std::vector<double> dec = age_decay(f, out.size(), d);
        out[0] = lambda * std::exp(-0.5 * d * f(0.25 * d));
        for (std::size_t i = 1; i < out.size(); ++i) out[i] = out[i - 1] * dec[i - 1];
    };
    if (mode == Mode::Full) {
        profile(p.mu_h, p.lambda_h, st.full().s);
    } else {
        if (!p.reduced_mode_eligible()) throw EligibilityError("REDUCED mode needs age-independent human rates");
        double mu = p.mu_h(0.0, 0.0);
        st.reduced().s = d * p.lambda_h * std::exp(-0.5 * mu * d) / -std::expm1(-mu * d);
    }
    profile(p.mu_m, p.lambda_m, st.s_m);
    return st;
}

StateFields default_initial(const ModelParams& p, const Grid& g, double fraction, Mode mode) {
    if (!(fraction >= 0.0 && fraction < 1.0)) throw DomainError("infected fraction must lie in [0, 1)");
    StateFields st = dfe_state(p, g, mode);
    if (fraction == 0.0) return st;
    const double d = g.delta;
    std::size_t band = std::clamp<std::size_t>(static_cast<std::size_t>(std::lround(0.05 / d)), 1, g.n_th);
    std::vector<double> w(band);
    double cum = 0.0;
    for (std::size_t k = 0; k < band; ++k) {
        double tau = g.center(k);
        w[k] = std::exp(-cum - 0.5 * d * (p.nu_h(0.0, tau) + p.gamma_h(0.0, tau)));
        cum += d * (p.nu_h(0.0, tau) + p.gamma_h(0.0, tau));
    }
    if (mode == Mode::Full) {
        auto& h = st.full();
        for (std::size_t i = 0; i < g.n_ah; ++i) {
            std::size_t top = std::min(band, i + 1);
            double wsum = 0.0;
            for (std::size_t k = 0; k < top; ++k) wsum += d * w[k];
            double moved = fraction * h.s[i];
            for (std::size_t k = 0; k < top; ++k) h.i.at(i, k) = moved * w[k] / wsum;
            h.s[i] -= moved;
        }
    } else {
        auto& h = st.reduced();
        double wsum = 0.0;
        for (std::size_t k = 0; k < band; ++k) wsum += d * w[k];
        double moved = fraction * h.s;
        for (std::size_t k = 0; k < band; ++k) h.i[k] = moved * w[k] / wsum;
        h.s -= moved;
    }
    return st;
}

StateFields reduce(const StateFields& st, const Grid& g) {
    if (st.mode() == Mode::Reduced) return st;
    const double d = g.delta;
    StateFields out;
    out.t = st.t;
    out.s_m = st.s_m;
    out.i_m = st.i_m;
    HumanReduced h;
    const auto& f = st.full();
    h.s = d * sum(f.s);
    h.i.assign(g.n_th, 0.0);
    h.r.assign(g.n_eta, 0.0);
    for (std::size_t j = 0; j < g.n_ah; ++j) {
        auto ri = f.i.diagonal(j);
        for (std::size_t k = 0; k < ri.size(); ++k) h.i[k] += d * ri[k];
        auto rr = f.r.diagonal(j);
        for (std::size_t m = 0; m < rr.size(); ++m) h.r[m] += d * rr[m];
    }
    out.human = std::move(h);
    return out;
}

double human_population(const StateFields& st, const Grid& g) noexcept {
    const double d = g.delta;
    if (st.mode() == Mode::Full) {
        const auto& h = st.full();
        return d * sum(h.s) + d * d * (sum(h.i.values()) + sum(h.r.values()));
    }
    const auto& h = st.reduced();
    return h.s + d * (sum(h.i) + sum(h.r));
}

double mosquito_population(const StateFields& st, const Grid& g) noexcept {
    const double d = g.delta;
    return d * sum(st.s_m) + d * d * sum(st.i_m.values());
}

namespace {

double beta_integral_h(const StateFields& st, const ModelParams& p, const Grid& g) {
    const double d = g.delta;
    double s = 0.0;
    if (st.mode() == Mode::Full) {
        const auto& f = st.full().i;
        for (std::size_t j = 0; j < f.n_age(); ++j) {
            auto row = f.diagonal(j);
            for (std::size_t k = 0; k < row.size(); ++k) s += p.beta_h(g.center(j + k), g.center(k)) * row[k];
        }
        return p.theta * s * d * d;
    }
    const auto& i = st.reduced().i;
    for (std::size_t k = 0; k < i.size(); ++k) s += p.beta_h(0.0, g.center(k)) * i[k];
    return p.theta * s * d;
}

double beta_integral_m(const StateFields& st, const ModelParams& p, const Grid& g) {
    const double d = g.delta;
    double s = 0.0;
    for (std::size_t j = 0; j < st.i_m.n_age(); ++j) {
        auto row = st.i_m.diagonal(j);
        for (std::size_t k = 0; k < row.size(); ++k) s += p.beta_m(g.center(j + k), g.center(k)) * row[k];
    }
    return p.theta * s * d * d;
}

void require_population(double n_h, const ModelParams& p, const Grid& g) {
    double eps = epsilon_bar(p, g);
    if (n_h < 0.5 * eps)
        throw DegeneratePopulation("human population " + std::to_string(n_h) + " below half the floor " +
                                   std::to_string(eps));
}

}  // namespace

std::vector<double> force_mh(const StateFields& st, const ModelParams& p, const Grid& g) {
    double n_h = human_population(st, g);
    require_population(n_h, p, g);
    double rho = beta_integral_m(st, p, g) / n_h;
    if (st.mode() == Mode::Reduced) return {rho * st.reduced().s};
    std::vector<double> out = st.full().s;
    for (double& v : out) v *= rho;
    return out;
}

std::vector<double> force_hm(const StateFields& st, const ModelParams& p, const Grid& g) {
    double n_h = human_population(st, g);
    require_population(n_h, p, g);
    double rho = beta_integral_h(st, p, g) / n_h;
    std::vector<double> out = st.s_m;
    for (double& v : out) v *= rho;
    return out;
}

Observables observe(const StateFields& st, const ModelParams& p, const Grid& g) {
    const double d = g.delta;
    Observables o;
    o.t = st.t;
    o.n_h = human_population(st, g);
    o.n_m = mosquito_population(st, g);
    double s_h;
    if (st.mode() == Mode::Full) {
        o.total_i_h = d * d * sum(st.full().i.values());
        s_h = d * sum(st.full().s);
    } else {
        o.total_i_h = d * sum(st.reduced().i);
        s_h = st.reduced().s;
    }
    o.total_i_m = d * d * sum(st.i_m.values());
    if (o.n_h > 0.0) {
        o.foi_mh_total = beta_integral_m(st, p, g) / o.n_h * s_h;
        o.foi_hm_total = beta_integral_h(st, p, g) / o.n_h * d * sum(st.s_m);
    }
    return o;
}

StateFields step(const StateFields& st, const ModelParams& p, const Grid& g) {
    StateFields out = st;
    TransportSolver(p, g, st.mode()).step(out);
    return out;
}

SimulationResult simulate(const ModelParams& p, const Grid& g, StateFields init, double t_end,
                          std::size_t output_every, const Observer& observer) {
    if (!(t_end >= 0.0)) throw DomainError("t_end must be non-negative");
    if (output_every == 0) output_every = 1;
    TransportSolver solver(p, g, init.mode());
    auto steps = static_cast<std::size_t>(std::llround(t_end / g.delta));
    SimulationResult res;
    auto emit = [&](const StateFields& s) {
        res.series.push_back(observe(s, p, g));
        if (observer) observer(res.series.back());
    };
    emit(init);
    double t0 = init.t;
    for (std::size_t n = 1; n <= steps; ++n) {
        solver.step(init);
        init.t = t0 + static_cast<double>(n) * g.delta;
        if (n % output_every == 0 || n == steps) emit(init);
    }
    res.final_state = std::move(init);
    return res;
}

namespace {

constexpr char kMagic[8] = {'S', 'T', 'R', 'U', 'C', 'T', 'S', 'M'};
constexpr std::uint32_t kSnapshotVersion = 1;

template <class T>
void put(std::ostream& os, T v) {
    if constexpr (std::endian::native == std::endian::big) {
        unsigned char b[sizeof(T)];
        std::memcpy(b, &v, sizeof(T));
        std::reverse(b, b + sizeof(T));
        os.write(reinterpret_cast<const char*>(b), sizeof(T));
    } else {
        os.write(reinterpret_cast<const char*>(&v), sizeof(T));
    }
}

template <class T>
T get(std::istream& is) {
    unsigned char b[sizeof(T)];
    if (!is.read(reinterpret_cast<char*>(b), sizeof(T))) throw Error("snapshot: truncated file");
    if constexpr (std::endian::native == std::endian::big) std::reverse(b, b + sizeof(T));
    T v;
    std::memcpy(&v, b, sizeof(T));
    return v;
}

void put_array(std::ostream& os, std::span<const double> v) {
    put<std::uint64_t>(os, v.size());
    for (double x : v) put<double>(os, x);
}

std::vector<double> get_array(std::istream& is, std::size_t expect) {
    auto n = get<std::uint64_t>(is);
    if (n != expect) throw Error("snapshot: array length does not match the grid");
    std::vector<double> v(n);
    for (double& x : v) x = get<double>(is);
    return v;
}

// triangular fields are written row-major in (age, structure), structure <= age
void put_tri(std::ostream& os, const TriangularField& f) {
    std::vector<double> v;
    v.reserve(f.size());
    for (std::size_t i = 0; i < f.n_age(); ++i)
        for (std::size_t k = 0; k < std::min(i + 1, f.n_struct()); ++k) v.push_back(f.at(i, k));
    put_array(os, v);
}

void get_tri(std::istream& is, TriangularField& f) {
    std::vector<double> v = get_array(is, f.size());
    std::size_t p = 0;
    for (std::size_t i = 0; i < f.n_age(); ++i)
        for (std::size_t k = 0; k < std::min(i + 1, f.n_struct()); ++k) f.at(i, k) = v[p++];
}

}  // namespace

void write_snapshot(const std::filesystem::path& path, const StateFields& st, const Grid& g) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw Error("snapshot: cannot write '" + path.string() + "'");
    os.write(kMagic, sizeof kMagic);
    put<std::uint32_t>(os, kSnapshotVersion);
    put<std::uint32_t>(os, st.mode() == Mode::Full ? 0u : 1u);
    put<double>(os, st.t);
    for (double v : {g.delta, g.a_max_h, g.a_max_m, g.tau_max_h, g.tau_max_m, g.eta_max}) put<double>(os, v);
    if (st.mode() == Mode::Full) {
        put_array(os, st.full().s);
        put_tri(os, st.full().i);
        put_tri(os, st.full().r);
    } else {
        put_array(os, std::vector<double>{st.reduced().s});
        put_array(os, st.reduced().i);
        put_array(os, st.reduced().r);
    }
    put_array(os, st.s_m);
    put_tri(os, st.i_m);
    if (!os) throw Error("snapshot: write failed for '" + path.string() + "'");
}

StateFields read_snapshot(const std::filesystem::path& path, Grid* grid_out) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw Error("snapshot: cannot open '" + path.string() + "'");
    char magic[8];
    if (!is.read(magic, sizeof magic) || std::memcmp(magic, kMagic, sizeof magic) != 0)
        throw Error("snapshot: bad magic in '" + path.string() + "'");
    auto version = get<std::uint32_t>(is);
    if (version != kSnapshotVersion) throw Error("snapshot: unsupported version " + std::to_string(version));
    auto mode = get<std::uint32_t>(is) == 0 ? Mode::Full : Mode::Reduced;
    double t = get<double>(is);
    double gv[6];
    for (double& v : gv) v = get<double>(is);
    Grid g = Grid::make(gv[0], gv[1], gv[2], gv[3], gv[4], gv[5]);
    StateFields st = zero_state(g, mode);
    st.t = t;
    if (mode == Mode::Full) {
        st.full().s = get_array(is, g.n_ah);
        get_tri(is, st.full().i);
        get_tri(is, st.full().r);
    } else {
        st.reduced().s = get_array(is, 1)[0];
        st.reduced().i = get_array(is, g.n_th);
        st.reduced().r = get_array(is, g.n_eta);
    }
    st.s_m = get_array(is, g.n_am);
    get_tri(is, st.i_m);
    if (grid_out) *grid_out = g;
    return st;
}

}  // namespace structsim
