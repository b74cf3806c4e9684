#include "structsim/r0.hpp"

#include <cmath>
#include <numeric>

#include "structsim/errors.hpp"

namespace structsim {

namespace {

constexpr std::size_t kMaxStoredValues = 20'000'000;

template <class Beta, class Removal, class AgeRate>
KernelTable build_kernel(const Beta& beta, const Removal& removal, const AgeRate& age_rate, bool age_free, std::size_t n_age,
                         std::size_t n_tau, double delta, const std::vector<double>& cell_weights, double tail_weight,
                         double tail_rate) {
    KernelTable t;
    t.rows = n_age + 1;
    t.cols = n_tau;
    t.delta = delta;
    t.a_max = static_cast<double>(n_age) * delta;
    t.tail_rate = tail_rate;
    t.shared_row = age_free;
    t.xi.resize(t.rows);
    t.weight.resize(t.rows);
    t.row_integral.resize(t.rows);
    t.age_rate.resize(t.rows);
    t.marginal.assign(n_tau, 0.0);
    for (std::size_t j = 0; j < n_age; ++j) {
        t.xi[j] = (static_cast<double>(j) + 0.5) * delta;
        t.weight[j] = cell_weights[j];
        t.age_rate[j] = age_rate(t.xi[j]);
    }
    t.xi[n_age] = t.a_max;
    t.weight[n_age] = tail_weight;
    t.age_rate[n_age] = tail_rate;

    bool store = age_free || t.rows * t.cols <= kMaxStoredValues;
    if (store) t.value.resize(age_free ? n_tau : t.rows * n_tau);

    std::vector<double> row(n_tau);
    auto fill_row = [&](double xi) {
        double cum = 0.0;
        for (std::size_t k = 0; k < n_tau; ++k) {
            double kd = static_cast<double>(k);
            double tau = (kd + 0.5) * delta;
            double r = removal(xi + tau, tau);
            row[k] = beta(xi + tau, tau) * std::exp(-cum) * cell_average_decay(r * delta);
            cum += delta * r;
        }
    };
    for (std::size_t j = 0; j < t.rows; ++j) {
        if (!age_free || j == 0) {
            // the tail row is evaluated half a cell past the truncation
            fill_row(j < n_age ? t.xi[j] : t.a_max + 0.5 * delta);
            if (store) std::copy(row.begin(), row.end(), t.value.begin() + (age_free ? 0 : j * n_tau));
        }
        double s = 0.0;
        for (std::size_t k = 0; k < n_tau; ++k) {
            s += row[k];
            t.marginal[k] += t.weight[j] * row[k];
        }
        t.row_integral[j] = s * delta;
    }
    return t;
}

double tail_rate_of(const RateSpec& mu, std::size_t n, double delta) {
    return mu((static_cast<double>(n) + 0.5) * delta, 0.0);
}

}  // namespace

double cell_average_decay(double x) noexcept { return std::abs(x) > 1e-8 ? -std::expm1(-x) / x : 1.0 - 0.5 * x; }

double KernelTable::mass() const noexcept {
    double s = 0.0;
    for (std::size_t j = 0; j < rows; ++j) s += weight[j] * row_integral[j];
    return s;
}

KernelTable human_kernel(const ModelParams& p, const Grid& g, const SurvivalTable& sv) {
    auto removal = [&](double a, double s) { return p.mu_h(a, 0.0) + p.nu_h(a, s) + p.gamma_h(a, s); };
    bool age_free = !p.mu_h.depends_on_age() && !p.nu_h.depends_on_age() && !p.gamma_h.depends_on_age() &&
                    !p.beta_h.depends_on_age();
    return build_kernel(p.beta_h, removal, [&](double a) { return p.mu_h(a, 0.0); }, age_free, g.n_ah, g.n_th, g.delta, sv.cell_h, sv.tail_h,
                        tail_rate_of(p.mu_h, g.n_ah, g.delta));
}

KernelTable mosquito_kernel(const ModelParams& p, const Grid& g, const SurvivalTable& sv) {
    auto removal = [&](double a, double s) { return p.mu_m(a, 0.0) + p.nu_m(a, s); };
    bool age_free = !p.mu_m.depends_on_age() && !p.nu_m.depends_on_age() && !p.beta_m.depends_on_age();
    return build_kernel(p.beta_m, removal, [&](double a) { return p.mu_m(a, 0.0); }, age_free, g.n_am, g.n_tm, g.delta, sv.cell_m, sv.tail_m,
                        tail_rate_of(p.mu_m, g.n_am, g.delta));
}

R0Report r0_closed_form(const ModelParams& p, const Grid& g) {
    SurvivalTable sv = build_survival(p, g);
    KernelTable h = human_kernel(p, g, sv);
    KernelTable m = mosquito_kernel(p, g, sv);
    R0Report r;
    r.integral_pi_h = sv.integral_h();
    r.integral_pi_m = sv.integral_m();
    r.tail_fraction_h = sv.tail_fraction_h();
    r.population_ratio = p.lambda_m * r.integral_pi_m / (p.lambda_h * r.integral_pi_h);
    r.kernel_mass_mh = m.mass() / r.integral_pi_m;
    r.kernel_mass_hm = h.mass() / r.integral_pi_h;
    r.r0_squared_closed_form = r.population_ratio * (p.theta * p.theta * r.kernel_mass_mh) * r.kernel_mass_hm;
    r.r0 = std::sqrt(r.r0_squared_closed_form);
    return r;
}

double r0_reduced(const ModelParams& p, const Grid& g) {
    if (!p.reduced_mode_eligible()) throw EligibilityError("reduced R0 formula needs age-independent human rates");
    double mu = p.mu_h(0.0, 0.0);
    double d = g.delta;
    double human = 0.0;
    double cum = 0.0;
    for (std::size_t k = 0; k < g.n_th; ++k) {
        double kd = static_cast<double>(k);
        double tau = (kd + 0.5) * d;
        double r = mu + p.nu_h(0.0, tau) + p.gamma_h(0.0, tau);
        human += p.beta_h(0.0, tau) * std::exp(-cum) * cell_average_decay(r * d);
        cum += d * r;
    }
    human *= d;
    SurvivalTable sv = build_survival(p, g);
    double mosquito = mosquito_kernel(p, g, sv).mass();
    return p.lambda_m * mu * p.theta * p.theta / p.lambda_h * mosquito * human;
}

NextGenerationOperator::NextGenerationOperator(const ModelParams& p, const Grid& g) {
    SurvivalTable sv = build_survival(p, g);
    KernelTable h = human_kernel(p, g, sv);
    KernelTable m = mosquito_kernel(p, g, sv);
    hw_ = h.weight;
    hr_ = h.row_integral;
    mw_ = m.weight;
    mr_ = m.row_integral;
    double lh = sv.integral_h();
    to_m_ = p.lambda_m * p.theta / (p.lambda_h * lh);
    to_h_ = p.theta / lh;
}

std::vector<double> NextGenerationOperator::apply_gm(std::span<const double> b) const {
    if (b.size() != hw_.size()) throw DomainError("next-generation operator: human vector has wrong size");
    double s = 0.0;
    for (std::size_t j = 0; j < b.size(); ++j) s += hr_[j] * b[j];
    std::vector<double> out(mw_.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = to_m_ * s * mw_[i];
    return out;
}

std::vector<double> NextGenerationOperator::apply_gh(std::span<const double> c) const {
    if (c.size() != mw_.size()) throw DomainError("next-generation operator: mosquito vector has wrong size");
    double s = 0.0;
    for (std::size_t j = 0; j < c.size(); ++j) s += mr_[j] * c[j];
    std::vector<double> out(hw_.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = to_h_ * s * hw_[i];
    return out;
}

std::vector<double> NextGenerationOperator::apply_hh(std::span<const double> b) const { return apply_gh(apply_gm(b)); }

namespace {

double norm2(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

}  // namespace

PowerResult power_iterate(const std::function<std::vector<double>(std::span<const double>)>& apply,
                          std::vector<double> b, double tol, int max_iter) {
    double nb = norm2(b);
    if (!(nb > 0.0)) throw DomainError("power iteration: start vector must be non-zero");
    for (double& x : b) {
        if (!(x > 0.0)) throw DomainError("power iteration: start vector must be strictly positive");
        x /= nb;
    }
    PowerResult res;
    double prev = 0.0;
    for (int it = 1; it <= max_iter; ++it) {
        std::vector<double> y = apply(b);
        double rq = std::inner_product(b.begin(), b.end(), y.begin(), 0.0);
        if (it == 2) res.first_rayleigh = rq;
        if (it > 1 && std::abs(rq - prev) <= tol * std::abs(rq)) {
            double r = 0.0;
            for (std::size_t i = 0; i < b.size(); ++i) r += (y[i] - rq * b[i]) * (y[i] - rq * b[i]);
            res.eigenvalue = rq;
            res.iterations = it;
            res.residual = std::sqrt(r);
            res.vector = std::move(b);
            return res;
        }
        prev = rq;
        double ny = norm2(y);
        if (ny == 0.0) {
            res.eigenvalue = 0.0;
            res.iterations = it;
            res.vector = std::move(b);
            return res;
        }
        for (std::size_t i = 0; i < b.size(); ++i) b[i] = y[i] / ny;
    }
    throw Error("power iteration did not converge in " + std::to_string(max_iter) + " iterations");
}

R0Report power_iteration_r0(const ModelParams& p, const Grid& g, const PowerOptions& opts) {
    NextGenerationOperator op(p, g);
    std::size_t n = op.human_size();
    std::vector<double> start(n, 1.0);
    PowerResult pr;
    if (opts.dense) {
        if (n > 4096) throw DomainError("dense power iteration limited to 4096 human age cells");
        std::vector<double> mat(n * n);  // column-major
        std::vector<double> e(n, 0.0);
        for (std::size_t j = 0; j < n; ++j) {
            e[j] = 1.0;
            std::vector<double> col = op.apply_hh(e);
            std::copy(col.begin(), col.end(), mat.begin() + j * n);
            e[j] = 0.0;
        }
        auto matvec = [&](std::span<const double> b) {
            std::vector<double> y(n, 0.0);
            for (std::size_t j = 0; j < n; ++j)
                for (std::size_t i = 0; i < n; ++i) y[i] += mat[j * n + i] * b[j];
            return y;
        };
        pr = power_iterate(matvec, start, opts.tol, opts.max_iter);
    } else {
        pr = power_iterate([&](std::span<const double> b) { return op.apply_hh(b); }, start, opts.tol, opts.max_iter);
    }
    R0Report r = r0_closed_form(p, g);
    r.r0_squared_power_iter = pr.eigenvalue;
    r.has_power_iter = true;
    r.iterations = pr.iterations;
    r.residual = pr.residual;
    return r;
}

R0Report r0_all(const ModelParams& p, const Grid& g, const PowerOptions& opts) {
    R0Report r = power_iteration_r0(p, g, opts);
    if (p.reduced_mode_eligible()) {
        r.r0_squared_reduced = r0_reduced(p, g);
        r.has_reduced = true;
    }
    return r;
}

double r0_per_lambda_m(const ModelParams& p, const Grid& g) {
    ModelParams unit = p;
    unit.lambda_m = 1.0;
    return r0_closed_form(unit, g).r0_squared_closed_form;
}

double lambda_m_for_target_r0(const ModelParams& p, const Grid& g, double target) {
    if (target < 0.0) throw DomainError("target R0 must be non-negative");
    if (target == 0.0) return 0.0;
    double per = r0_per_lambda_m(p, g);
    if (!(per > 0.0)) throw DomainError("R0 does not depend on lambda_m (zero transmission kernel)");
    return target / per;
}

}  // namespace structsim
