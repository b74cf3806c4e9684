#include "structsim/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "structsim/errors.hpp"
#include "structsim/r0.hpp"

namespace structsim {

namespace {

double overlap_below(double x0, double x1, double thr) { return std::clamp(thr, x0, x1) - x0; }

double bump_integral(double amplitude, double center, double width, double x0, double x1) {
    double k = width * std::numbers::sqrt2;
    return 0.5 * amplitude * width * (std::erf((x1 - center) / k) - std::erf((x0 - center) / k));
}

double linear_integral(const std::vector<double>& xs, const std::vector<double>& ys, double x0, double x1) {
    auto value = [&](double x) {
        if (x <= xs.front()) return ys.front();
        if (x >= xs.back()) return ys.back();
        std::size_t i = static_cast<std::size_t>(std::upper_bound(xs.begin(), xs.end(), x) - xs.begin());
        double t = (x - xs[i - 1]) / (xs[i] - xs[i - 1]);
        return ys[i - 1] + t * (ys[i] - ys[i - 1]);
    };
    std::vector<double> pts{x0};
    for (double x : xs)
        if (x > x0 && x < x1) pts.push_back(x);
    pts.push_back(x1);
    double s = 0.0;
    for (std::size_t i = 1; i < pts.size(); ++i) s += 0.5 * (pts[i] - pts[i - 1]) * (value(pts[i]) + value(pts[i - 1]));
    return s;
}

}  // namespace

double exact_path_integral(const RateSpec& rate, double a0, double s0, double len) {
    if (len <= 0.0) return 0.0;
    return std::visit(
        [&](const auto& f) -> double {
            using T = std::decay_t<decltype(f)>;
            if constexpr (std::is_same_v<T, ConstantRate>) {
                return f.value * len;
            } else if constexpr (std::is_same_v<T, PiecewiseRate>) {
                double x0 = f.var == Variable::Age ? a0 : s0;
                double below = overlap_below(x0, x0 + len, f.threshold);
                return f.low * below + f.high * (len - below);
            } else if constexpr (std::is_same_v<T, GaussianBumpRate>) {
                double x0 = f.var == Variable::Age ? a0 : s0;
                return bump_integral(f.amplitude, f.center, f.width, x0, x0 + len);
            } else if constexpr (std::is_same_v<T, GaussianExpIndicatorRate>) {
                double lag = a0 - s0;
                if (lag <= 0.0) return 0.0;
                return std::exp(-f.decay * lag) * bump_integral(f.amplitude, f.center, f.width, s0, s0 + len);
            } else {
                double x0 = f.var == Variable::Age ? a0 : s0;
                return linear_integral(*f.x, *f.y, x0, x0 + len);
            }
        },
        rate.form());
}

namespace {

double age_path(const RateSpec& mu, double a0, double len) { return exact_path_integral(mu, a0, a0, len); }

// Survival from age 0 to a for an age-only rate.
double survival(const RateSpec& mu, double a) { return std::exp(-age_path(mu, 0.0, a)); }

// Weighted marginal over the age at infection of beta * exp(-path) for one host species, averaged over
// each tau cell with the cell's mean removal rate.
std::vector<double> kernel_marginal(const RateSpec& beta, const std::vector<const RateSpec*>& removal,
                                    const RateSpec& mu, std::size_t n_age, std::size_t n_tau, double d) {
    std::vector<double> out(n_tau, 0.0);
    auto row = [&](double xi, double w) {
        for (std::size_t k = 0; k < n_tau; ++k) {
            double node = static_cast<double>(k) * d;
            double tau = node + 0.5 * d;
            double e = age_path(mu, xi, node);
            double cell = age_path(mu, xi + node, d);
            for (const RateSpec* r : removal) {
                e += exact_path_integral(*r, xi, 0.0, node);
                cell += exact_path_integral(*r, xi + node, node, d);
            }
            out[k] += w * beta(xi + tau, tau) * std::exp(-e) * cell_average_decay(cell);
        }
    };
    double A = static_cast<double>(n_age) * d;
    for (std::size_t j = 0; j < n_age; ++j) {
        double a0 = static_cast<double>(j) * d;
        double pi0 = survival(mu, a0);
        double rate = mu(a0 + 0.5 * d, 0.0);
        double w = rate * d > 1e-8 ? pi0 * -std::expm1(-rate * d) / rate : pi0 * d;
        row((static_cast<double>(j) + 0.5) * d, w);
    }
    double tail_rate = mu(A + 0.5 * d, 0.0);
    if (tail_rate > 0.0) row(A + 0.5 * d, survival(mu, A) / tail_rate);
    return out;
}

double pi_integral(const RateSpec& mu, std::size_t n_age, double d) {
    double s = 0.0;
    for (std::size_t j = 0; j < n_age; ++j) {
        double a0 = static_cast<double>(j) * d;
        double rate = mu(a0 + 0.5 * d, 0.0);
        double pi0 = survival(mu, a0);
        s += rate * d > 1e-8 ? pi0 * -std::expm1(-rate * d) / rate : pi0 * d;
    }
    double A = static_cast<double>(n_age) * d;
    double tail_rate = mu(A + 0.5 * d, 0.0);
    if (tail_rate > 0.0) s += survival(mu, A) / tail_rate;
    return s;
}

}  // namespace

LinearizedKernels linearized_kernels(const ModelParams& p, const Grid& g) {
    LinearizedKernels k;
    k.delta = g.delta;
    for (std::size_t i = 0; i < g.n_th; ++i) k.tau_h.push_back(g.center(i));
    for (std::size_t i = 0; i < g.n_tm; ++i) k.tau_m.push_back(g.center(i));
    k.human = kernel_marginal(p.beta_h, {&p.nu_h, &p.gamma_h}, p.mu_h, g.n_ah, g.n_th, g.delta);
    k.mosquito = kernel_marginal(p.beta_m, {&p.nu_m}, p.mu_m, g.n_am, g.n_tm, g.delta);
    double lh = pi_integral(p.mu_h, g.n_ah, g.delta);
    k.prefactor = p.lambda_m * p.theta * p.theta / (p.lambda_h * lh * lh);
    return k;
}

double g_of_lambda(const LinearizedKernels& k, double lambda) {
    double h = 0.0, m = 0.0;
    for (std::size_t i = 0; i < k.human.size(); ++i) h += std::exp(-lambda * k.tau_h[i]) * k.human[i];
    for (std::size_t i = 0; i < k.mosquito.size(); ++i) m += std::exp(-lambda * k.tau_m[i]) * k.mosquito[i];
    return k.prefactor * (m * k.delta) * (h * k.delta);
}

double g_of_lambda(const ModelParams& p, const Grid& g, double lambda) {
    return g_of_lambda(linearized_kernels(p, g), lambda);
}

GrowthRate dominant_growth_rate(const ModelParams& p, const Grid& g) {
    LinearizedKernels k = linearized_kernels(p, g);
    GrowthRate r;
    double mu0 = INFINITY;
    for (std::size_t i = 0; i < g.n_ah; i += std::max<std::size_t>(1, g.n_ah / 4000))
        mu0 = std::min(mu0, p.mu_h(g.center(i), 0.0));
    for (std::size_t i = 0; i < g.n_am; ++i) mu0 = std::min(mu0, p.mu_m(g.center(i), 0.0));
    if (!(mu0 > 0.0)) throw BracketError("growth rate: mu0 must be positive");
    r.mu0 = mu0;
    r.g0 = g_of_lambda(k, 0.0);
    r.lo = -mu0 + 1e-6;
    r.hi = 50.0 * mu0 * std::max(1.0, r.g0);
    auto F = [&](double l) { return g_of_lambda(k, l) - 1.0; };
    double lo, hi;
    if (r.g0 > 1.0) {
        while (F(r.hi) > 0.0) {
            r.hi *= 2.0;
            if (++r.expansions > 200) throw BracketError("growth rate: no sign change found above 0");
        }
        lo = 0.0;
        hi = r.hi;
    } else if (r.g0 == 1.0) {
        r.lambda_star = 0.0;
        r.note = "g(0) = 1";
        return r;
    } else {
        if (F(r.lo) < 0.0) {
            r.note = "g(-mu0) < 1: no real root in (-mu0, 0)";
            return r;
        }
        lo = r.lo;
        hi = 0.0;
    }
    while (hi - lo > 1e-10) {
        double mid = 0.5 * (lo + hi);
        (F(mid) > 0.0 ? lo : hi) = mid;
        ++r.iterations;
    }
    r.lambda_star = 0.5 * (lo + hi);
    return r;
}

namespace {

// Fraction of a cell leaving through an exit with integrated rate `part` out of `total` over one step.
double exit_share(double part, double total) {
    return total > 0.0 ? -std::expm1(-total) * part / total : part;
}

}  // namespace

StateFields volterra_decoupled(const ModelParams& p, const Grid& g, const StateFields& init, double t) {
    if (!p.beta_h.is_zero() || !p.beta_m.is_zero())
        throw DomainError("volterra_decoupled needs beta_h = beta_m = 0");
    if (init.mode() != Mode::Full) throw DomainError("volterra_decoupled works on FULL-mode states");
    const double d = g.delta;
    auto N = static_cast<std::size_t>(std::llround(t / d));
    if (std::abs(static_cast<double>(N) * d - t) > 1e-9 * std::max(1.0, t))
        throw DomainError("volterra_decoupled: t must be a multiple of delta");
    const auto& h0 = init.full();
    auto c = [&](std::size_t i) { return (static_cast<double>(i) + 0.5) * d; };
    auto node = [&](std::size_t i) { return static_cast<double>(i) * d; };

    // infected humans at step n (initial-data branch only; no new infections)
    auto infected_at = [&](std::size_t n, TriangularField& out) {
        out.fill(0.0);
        for (std::size_t i = n; i < g.n_ah; ++i)
            for (std::size_t k = n; k < std::min(i + 1, g.n_th); ++k) {
                double a0 = c(i - n), s0 = c(k - n), len = node(n);
                double e = age_path(p.mu_h, a0, len) + exact_path_integral(p.nu_h, a0, s0, len) +
                           exact_path_integral(p.gamma_h, a0, s0, len);
                out.at(i, k) = h0.i.at(i - n, k - n) * std::exp(-e);
            }
    };
    auto recovered_decay = [&](double a0, double s0, double len) {
        return std::exp(-(age_path(p.mu_h, a0, len) + exact_path_integral(p.k_h, a0, s0, len)));
    };

    // flux into the recovered class, per step and age cell
    std::vector<std::vector<double>> recov(N);
    TriangularField inf(g.n_ah, g.n_th);
    for (std::size_t n = 0; n < N; ++n) {
        infected_at(n, inf);
        recov[n].assign(g.n_ah, 0.0);
        for (std::size_t i = 0; i < g.n_ah; ++i) {
            double s = 0.0;
            for (std::size_t k = 0; k < std::min(i + 1, g.n_th); ++k) {
                double gam = exact_path_integral(p.gamma_h, c(i), c(k), d);
                double all = age_path(p.mu_h, c(i), d) + exact_path_integral(p.nu_h, c(i), c(k), d) + gam;
                s += inf.at(i, k) * exit_share(gam, all);
            }
            recov[n][i] = s;
        }
    }
    auto recovered_at = [&](std::size_t n, TriangularField& out) {
        out.fill(0.0);
        for (std::size_t i = 0; i < g.n_ah; ++i)
            for (std::size_t m = 0; m < std::min(i + 1, g.n_eta); ++m) {
                if (m >= n) {
                    if (i < n) continue;
                    out.at(i, m) = h0.r.at(i - n, m - n) * recovered_decay(c(i - n), c(m - n), node(n));
                } else if (i >= m + 1) {
                    std::size_t src = n - 1 - m;
                    out.at(i, m) = recov[src][i - m - 1] * recovered_decay(node(i - m), 0.0, c(m));
                }
            }
    };

    // waning flux back to susceptibles, per step and age cell
    std::vector<std::vector<double>> wane(N);
    TriangularField rec(g.n_ah, g.n_eta);
    for (std::size_t n = 0; n < N; ++n) {
        recovered_at(n, rec);
        wane[n].assign(g.n_ah, 0.0);
        for (std::size_t i = 0; i < g.n_ah; ++i) {
            double s = 0.0;
            for (std::size_t m = 0; m < std::min(i + 1, g.n_eta); ++m) {
                double kk = exact_path_integral(p.k_h, c(i), c(m), d);
                s += rec.at(i, m) * exit_share(kk, age_path(p.mu_h, c(i), d) + kk);
            }
            wane[n][i] = s;
        }
    }

    StateFields out = zero_state(g, Mode::Full);
    out.t = init.t + node(N);
    auto& h = out.full();
    infected_at(N, h.i);
    recovered_at(N, h.r);
    for (std::size_t i = 0; i < g.n_ah; ++i) {
        double s = i >= N ? h0.s[i - N] * std::exp(-age_path(p.mu_h, c(i - N), node(N)))
                          : p.lambda_h * survival(p.mu_h, c(i));
        for (std::size_t n = (i >= N ? 0 : N - i); n < N; ++n) {
            std::size_t src = i - (N - n);
            s += d * wane[n][src] * std::exp(-age_path(p.mu_h, c(src) + 0.5 * d, c(i) - c(src) - 0.5 * d));
        }
        h.s[i] = s;
    }
    for (std::size_t i = 0; i < g.n_am; ++i)
        out.s_m[i] = i >= N ? init.s_m[i - N] * std::exp(-age_path(p.mu_m, c(i - N), node(N)))
                            : p.lambda_m * survival(p.mu_m, c(i));
    for (std::size_t i = N; i < g.n_am; ++i)
        for (std::size_t k = N; k < std::min(i + 1, g.n_tm); ++k) {
            double a0 = c(i - N), s0 = c(k - N), len = node(N);
            double e = age_path(p.mu_m, a0, len) + exact_path_integral(p.nu_m, a0, s0, len);
            out.i_m.at(i, k) = init.i_m.at(i - N, k - N) * std::exp(-e);
        }
    return out;
}

}  // namespace structsim
