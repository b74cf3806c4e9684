#include "structsim/equilibrium.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include "structsim/errors.hpp"

namespace structsim {

ReducedKernels reduced_kernels(const ModelParams& p, const Grid& g) {
    if (!p.reduced_mode_eligible()) throw EligibilityError("reduced kernels need age-independent human rates");
    ReducedKernels r;
    const double d = g.delta;
    const double mu = p.mu_h(0.0, 0.0);
    r.mu_h = mu;
    r.theta = p.theta;
    r.delta = d;
    auto nu = [&](double s) { return p.nu_h(0.0, s); };
    auto gam = [&](double s) { return p.gamma_h(0.0, s); };
    auto kh = [&](double s) { return p.k_h(0.0, s); };
    auto removal = [&](double s) { return mu + nu(s) + gam(s); };

    double cum = 0.0, ng = 0.0, rec = 0.0;
    for (std::size_t k = 0; k < g.n_th; ++k) {
        double tau = g.center(k);
        double ri = removal(tau), rr = mu + kh(tau);
        r.tau.push_back(tau);
        r.tau_weight.push_back(d);
        r.c1.push_back(std::exp(-cum) * cell_average_decay(d * ri));
        r.c1_center.push_back(std::exp(-cum - 0.5 * d * ri));
        r.nu_gamma_path.push_back(ng + 0.5 * d * (nu(tau) + gam(tau)));
        r.recovery_survival.push_back(std::exp(-rec) * cell_average_decay(d * rr));
        r.nu.push_back(nu(tau));
        r.gamma.push_back(gam(tau));
        r.beta.push_back(p.beta_h(0.0, tau));
        cum += d * ri;
        ng += d * (nu(tau) + gam(tau));
        rec += d * rr;
    }
    double T = g.tau_max_h;
    double Tp = T + 0.5 * d;
    r.tau.push_back(T);
    r.tau_weight.push_back(1.0 / removal(Tp));
    r.c1.push_back(std::exp(-cum));
    r.nu_gamma_path.push_back(ng);
    r.recovery_survival.push_back(std::exp(-rec));
    r.nu.push_back(nu(Tp));
    r.gamma.push_back(gam(Tp));
    r.beta.push_back(p.beta_h(0.0, Tp));

    double ecum = 0.0;
    for (std::size_t m = 0; m < g.n_eta; ++m) {
        double eta = g.center(m);
        double re = mu + kh(eta);
        r.eta.push_back(eta);
        r.eta_weight.push_back(d);
        r.immunity.push_back(std::exp(-ecum) * cell_average_decay(d * re));
        r.immunity_center.push_back(std::exp(-ecum - 0.5 * d * re));
        ecum += d * re;
    }
    double E = g.eta_max;
    r.eta.push_back(E);
    r.eta_weight.push_back(1.0 / (mu + kh(E + 0.5 * d)));
    r.immunity.push_back(std::exp(-ecum));

    for (std::size_t k = 0; k < r.tau.size(); ++k) {
        double w = r.tau_weight[k] * r.c1[k];
        r.int_c1 += w;
        r.int_nu_c1 += w * r.nu[k];
        r.int_gamma_c1 += w * r.gamma[k];
        r.c2 += w * r.beta[k];
    }
    r.c2 *= p.theta;
    for (std::size_t m = 0; m < r.eta.size(); ++m) r.immunity_integral += r.eta_weight[m] * r.immunity[m];
    for (std::size_t k = 0; k + 1 < r.tau.size(); ++k) r.gamma_recovery_integral += d * r.gamma[k] * r.recovery_survival[k];
    r.gamma_recovery_integral += r.gamma.back() * r.recovery_survival.back() / (mu + kh(Tp));

    r.mosquito = mosquito_kernel(p, g, build_survival(p, g));
    r.mosquito_kernel_mass = mosquito_damped_mass(r.mosquito, 0.0);
    r.age_lag_mass = mosquito_damped_lag(r.mosquito, 0.0);
    return r;
}

namespace {

// exp(-z (xi - node)) averaged over a cell against the survival inside it, relative to z = 0
double cell_damping(double mu, double z, double d) { return cell_average_decay((mu + z) * d) / cell_average_decay(mu * d); }

// mean of (xi - node) over a cell under the density exp(-c (xi - node))
double cell_lag(double c, double d) {
    double x = c * d;
    return std::abs(x) < 1e-6 ? d * (0.5 - x / 12.0) : 1.0 / c - d / std::expm1(x);
}

}  // namespace

double mosquito_damped_mass(const KernelTable& t, double z) {
    double s = 0.0;
    std::size_t last = t.rows - 1;
    for (std::size_t j = 0; j < last; ++j) {
        double node = static_cast<double>(j) * t.delta;
        s += t.weight[j] * t.row_integral[j] * std::exp(-z * node) * cell_damping(t.age_rate[j], z, t.delta);
    }
    double r = t.tail_rate;
    s += t.weight[last] * t.row_integral[last] * std::exp(-z * t.a_max) * r / (r + z);
    return s;
}

double mosquito_damped_lag(const KernelTable& t, double z) {
    double s = 0.0;
    std::size_t last = t.rows - 1;
    for (std::size_t j = 0; j < last; ++j) {
        double node = static_cast<double>(j) * t.delta;
        double mu = t.age_rate[j];
        s += t.weight[j] * t.row_integral[j] * std::exp(-z * node) * cell_damping(mu, z, t.delta) *
             (node + cell_lag(mu + z, t.delta));
    }
    double r = t.tail_rate;
    s += t.weight[last] * t.row_integral[last] * std::exp(-z * t.a_max) * r / (r + z) * (t.a_max + 1.0 / (r + z));
    return s;
}

double k_bar(const ReducedKernels& r) { return 1.0 / r.bracket_coefficient(); }

namespace {

void check_k(double k, const ReducedKernels& r) {
    double kb = k_bar(r);
    if (!(k >= 0.0) || k > kb * (1.0 + 1e-12))
        throw DomainError("K = " + std::to_string(k) + " outside [0, " + std::to_string(kb) + "]");
}

}  // namespace

double f_value(double r0, double k, const ReducedKernels& r) {
    check_k(k, r);
    double a = 1.0 + k * r.int_nu_c1 / r.mu_h;
    double m = mosquito_damped_mass(r.mosquito, r.c2 * k) / r.mosquito_kernel_mass;
    double b = 1.0 - k * r.bracket_coefficient();
    return r0 * a * m * b;
}

double dk_f(double r0, double k, const ReducedKernels& r) {
    check_k(k, r);
    double A = r.int_nu_c1 / r.mu_h;
    double B = r.bracket_coefficient();
    double a = 1.0 + k * A;
    double m = mosquito_damped_mass(r.mosquito, r.c2 * k) / r.mosquito_kernel_mass;
    double m1 = mosquito_damped_lag(r.mosquito, r.c2 * k) / r.mosquito_kernel_mass;
    double b = 1.0 - k * B;
    return r0 * (A * m * b - a * r.c2 * m1 * b - a * m * B);
}

double c_bif(const ReducedKernels& r) {
    double first = -r.c2 * r.age_lag_mass / r.mosquito_kernel_mass;
    double third = 0.0;
    for (std::size_t k = 0; k < r.tau.size(); ++k) third += r.tau_weight[k] * r.c1[k] * (r.nu[k] / r.mu_h - 1.0);
    return first - r.gamma_recovery_integral + third;
}

double c_bif_literal_reading(const ReducedKernels& r) {
    double first = -r.c2 * r.age_lag_mass / r.mosquito_kernel_mass;
    double third = 0.0;
    for (std::size_t k = 0; k + 1 < r.tau.size(); ++k) {
        double pi = std::exp(-r.mu_h * r.tau[k]);
        third += r.delta * std::exp(-pi * r.nu_gamma_path[k]) * (r.nu[k] / r.mu_h - 1.0);
    }
    return first - r.gamma_recovery_integral + third;
}

std::vector<double> solve_endemic(double r0, const ReducedKernels& r) {
    if (r0 < 0.0) throw DomainError("solve_endemic: r0 must be non-negative");
    constexpr std::size_t n = 2048;
    const double kb = k_bar(r);
    auto F = [&](double k) { return f_value(r0, std::min(k, kb), r) - 1.0; };
    std::vector<double> roots;
    double k_prev = 0.0;
    double f_prev = F(0.0);
    for (std::size_t i = 1; i < n; ++i) {
        double k = kb * static_cast<double>(i) / static_cast<double>(n - 1);
        double f = F(k);
        if (f_prev == 0.0 && k_prev > 0.0) {
            roots.push_back(k_prev);
        } else if ((f_prev < 0.0 && f > 0.0) || (f_prev > 0.0 && f < 0.0)) {
            double lo = k_prev, hi = k, flo = f_prev;
            while (hi - lo > 1e-12 * kb) {
                double mid = 0.5 * (lo + hi);
                double fm = F(mid);
                if (fm == 0.0) {
                    lo = hi = mid;
                    break;
                }
                if ((fm < 0.0) == (flo < 0.0)) {
                    lo = mid;
                    flo = fm;
                } else {
                    hi = mid;
                }
            }
            roots.push_back(0.5 * (lo + hi));
        }
        k_prev = k;
        f_prev = f;
    }
    std::sort(roots.begin(), roots.end());
    roots.erase(std::unique(roots.begin(), roots.end()), roots.end());
    return roots;
}

std::optional<FoldPoint> fold_point(const ReducedKernels& r) {
    constexpr std::size_t n = 2048;
    const double kb = k_bar(r);
    auto phi = [&](double k) { return f_value(1.0, std::min(k, kb), r); };
    std::size_t best = 0;
    double best_v = phi(0.0);
    for (std::size_t i = 1; i < n; ++i) {
        double v = phi(kb * static_cast<double>(i) / static_cast<double>(n - 1));
        if (v > best_v) {
            best_v = v;
            best = i;
        }
    }
    if (best == 0) return std::nullopt;
    double lo = kb * static_cast<double>(best - 1) / static_cast<double>(n - 1);
    double hi = kb * static_cast<double>(std::min(best + 1, n - 1)) / static_cast<double>(n - 1);
    const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
    double x1 = hi - gr * (hi - lo), x2 = lo + gr * (hi - lo);
    double f1 = phi(x1), f2 = phi(x2);
    while (hi - lo > 1e-12 * kb) {
        if (f1 < f2) {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + gr * (hi - lo);
            f2 = phi(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - gr * (hi - lo);
            f1 = phi(x1);
        }
    }
    double k = 0.5 * (lo + hi);
    double v = phi(k);
    if (v <= 1.0) return std::nullopt;
    return FoldPoint{1.0 / v, k};
}

const char* classification_name(Classification c) noexcept {
    return c == Classification::Backward ? "backward" : "forward";
}

BifurcationBranch trace_branch(const ModelParams& p, const Grid& g, double lo, double hi, std::size_t n,
                               unsigned threads) {
    if (!(lo > 0.0) || !(hi >= lo)) throw DomainError("trace_branch: lambda_m range must be positive and ordered");
    if (n == 0) throw DomainError("trace_branch: need at least one point");
    ReducedKernels rk = reduced_kernels(p, g);
    double per = r0_per_lambda_m(p, g);
    BifurcationBranch br;
    br.c_bif = c_bif(rk);
    br.k_bar = k_bar(rk);
    br.classification = br.c_bif > 0.0 ? Classification::Backward : Classification::Forward;
    br.points.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        double lam = n == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
        br.points[i].lambda_m = lam;
        br.points[i].r0 = per * lam;
    }
    auto work = [&](std::size_t begin, std::size_t stride) {
        for (std::size_t i = begin; i < n; i += stride) br.points[i].roots = solve_endemic(br.points[i].r0, rk);
    };
    threads = std::max(1u, threads);
    if (threads == 1) {
        work(0, 1);
    } else {
        std::vector<std::thread> pool;
        for (unsigned t = 0; t < threads; ++t) pool.emplace_back(work, t, threads);
        for (auto& th : pool) th.join();
    }
    if (br.classification == Classification::Backward) {
        auto first = std::find_if(br.points.begin(), br.points.end(), [](const BranchPoint& b) { return !b.roots.empty(); });
        if (first != br.points.end()) {
            if (first == br.points.begin()) {
                br.fold_r0_star = first->r0;
            } else {
                double a = std::prev(first)->lambda_m, b = first->lambda_m;
                for (int level = 0; level < 3; ++level) {
                    double step = (b - a) / 10.0;
                    for (int s = 1; s <= 10; ++s) {
                        double lam = s == 10 ? b : a + step * s;
                        if (!solve_endemic(per * lam, rk).empty()) {
                            b = lam;
                            a = lam - step;
                            break;
                        }
                    }
                }
                br.fold_r0_star = per * b;
            }
        }
    }
    return br;
}

EquilibriumState reconstruct_equilibrium(double k, const ModelParams& p, const Grid& g) {
    ReducedKernels r = reduced_kernels(p, g);
    double kb = k_bar(r);
    if (!(k > 0.0) || k > kb * (1.0 + 1e-12)) throw DomainError("reconstruct_equilibrium: K outside (0, K_bar]");
    const double d = g.delta;
    EquilibriumState eq;
    eq.k = k;
    eq.n_h_star = p.lambda_h / (r.mu_h + k * r.int_nu_c1);
    eq.s_h_star = 1.0 - k * r.bracket_coefficient();
    if (eq.s_h_star <= 0.0 && k < kb) throw DomainError("reconstruct_equilibrium: non-positive susceptible share");
    eq.rho_m = r.c2 * k;

    StateFields st = zero_state(g, Mode::Reduced);
    auto& h = st.reduced();
    h.s = eq.s_h_star * eq.n_h_star;
    for (std::size_t j = 0; j < g.n_th; ++j) h.i[j] = eq.n_h_star * k * r.c1_center[j];
    for (std::size_t m = 0; m < g.n_eta; ++m) h.r[m] = eq.n_h_star * k * r.int_gamma_c1 * r.immunity_center[m];

    SurvivalTable sv = build_survival(p, g);
    std::vector<double> pi_c = survival_at_centers(p.mu_m, sv.pi_m, d);
    for (std::size_t i = 0; i < g.n_am; ++i) st.s_m[i] = p.lambda_m * pi_c[i] * std::exp(-eq.rho_m * g.center(i));
    for (std::size_t j = 0; j < g.n_am; ++j) {
        double x = g.node(j);
        auto row = st.i_m.diagonal(j);
        double cum = 0.0;
        for (std::size_t kk = 0; kk < row.size(); ++kk) {
            double q = (static_cast<double>(kk) + 0.25) * d;
            double tau = g.center(kk);
            double path = cum + 0.5 * d * p.nu_m(x + q, q);
            row[kk] = p.lambda_m * eq.rho_m * std::exp(-eq.rho_m * x) * pi_c[j + kk] * std::exp(-path) * (j ? 1.0 : 0.5);
            cum += d * p.nu_m(x + tau, tau);
        }
    }
    eq.state = std::move(st);
    return eq;
}

StateFields endemic_blend(const ModelParams& p, const Grid& g, double w) {
    if (!(w >= 0.0 && w <= 1.0)) throw DomainError("endemic_blend: weight must lie in [0, 1]");
    ReducedKernels rk = reduced_kernels(p, g);
    auto roots = solve_endemic(r0_closed_form(p, g).r0_squared_closed_form, rk);
    if (roots.empty()) throw DomainError("endemic_blend: no endemic equilibrium at this R0");
    StateFields ee = reconstruct_equilibrium(roots.back(), p, g).state;
    StateFields st = dfe_state(p, g, Mode::Reduced);
    auto mix = [w](double a, double b) { return (1.0 - w) * a + w * b; };
    auto& h = st.reduced();
    const auto& e = ee.reduced();
    h.s = mix(h.s, e.s);
    for (std::size_t k = 0; k < h.i.size(); ++k) h.i[k] = mix(h.i[k], e.i[k]);
    for (std::size_t m = 0; m < h.r.size(); ++m) h.r[m] = mix(h.r[m], e.r[m]);
    for (std::size_t i = 0; i < st.s_m.size(); ++i) st.s_m[i] = mix(st.s_m[i], ee.s_m[i]);
    auto a = st.i_m.values();
    auto b = ee.i_m.values();
    for (std::size_t i = 0; i < a.size(); ++i) a[i] = mix(a[i], b[i]);
    return st;
}

double general_endemic_residual(const TriangularField& is, const ModelParams& p, const Grid& g) {
    if (is.n_age() != g.n_ah || is.n_struct() != g.n_th)
        throw DomainError("general_endemic_residual: field shape does not match the human grid");
    const double d = g.delta;
    const std::size_t n = g.n_ah;
    SurvivalTable sv = build_survival(p, g);
    auto mu = [&](double a) { return p.mu_h(a, 0.0); };

    std::vector<double> D(n, 0.0), G(n, 0.0), mass(n, 0.0);
    double z = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        auto row = is.diagonal(j);
        for (std::size_t k = 0; k < row.size(); ++k) {
            std::size_t i = j + k;
            double a = g.center(i), tau = g.center(k);
            D[i] += d * p.nu_h(a, tau) * row[k];
            G[i] += d * p.gamma_h(a, tau) * row[k];
            mass[i] += d * row[k];
            z += d * d * p.theta * p.beta_h(a, tau) * row[k];
        }
    }

    // conv[i] = int_0^{a_i} D(s) exp(-int_s^{a_i} mu) ds
    std::vector<double> conv(n);
    double P = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        conv[i] = P + 0.5 * d * D[i] * std::exp(-0.25 * d * mu(g.center(i)));
        P = (P + d * D[i]) * std::exp(-0.5 * d * (mu(g.center(i)) + mu(g.center(i + 1))));
    }
    double V = 0.0;
    for (double c : conv) V += d * c;
    double tail_rate = mu(g.a_max_h + 0.5 * d);
    double P_end = conv.empty() ? 0.0 : (conv.back() + 0.5 * d * D.back()) * std::exp(-0.25 * d * mu(g.center(n - 1)));
    if (tail_rate > 0.0) V += P_end / tail_rate;

    std::vector<double> bracket(n);
    for (std::size_t j = 0; j < n; ++j) bracket[j] = mass[j] + conv[j];
    for (std::size_t l = 0; l < n; ++l) {
        double y = g.node(l);
        double Gy = l == 0 ? 0.0 : 0.5 * (G[l - 1] + G[l]);
        if (Gy == 0.0) continue;
        double cum = 0.0;
        for (std::size_t m = 0; m < g.n_eta && l + m < n; ++m) {
            double q = (static_cast<double>(m) + 0.25) * d;
            double eta = g.center(m);
            bracket[l + m] += d * Gy * std::exp(-(cum + 0.5 * d * (mu(y + q) + p.k_h(y + q, q))));
            cum += d * (mu(y + eta) + p.k_h(y + eta, eta));
        }
    }

    KernelTable hk = human_kernel(p, g, sv);
    KernelTable mk = mosquito_kernel(p, g, sv);
    double m0 = mosquito_damped_mass(mk, 0.0);
    double mz = mosquito_damped_mass(mk, z);
    double r0 = r0_closed_form(p, g).r0_squared_closed_form;

    double term1 = r0 * (1.0 + V) * (1.0 + V) * mz / m0;
    double inner = 0.0;
    for (std::size_t j = 0; j < n; ++j) inner += p.theta * hk.row_integral[j] * d * bracket[j];
    double term2 = p.theta * mz * p.lambda_m * (1.0 + V) / (p.lambda_h * sv.integral_h()) * inner;
    return term1 - term2;
}

}  // namespace structsim
