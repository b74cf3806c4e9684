#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "structsim/grid.hpp"
#include "structsim/params.hpp"

namespace structsim {

// (1 - exp(-x)) / x, the mean of exp(-s) over [0, x]
double cell_average_decay(double x) noexcept;

// Kernel beta(xi + tau, tau) * exp(-int_0^tau rates(sigma + xi, sigma) dsigma) on the (xi, tau) grid,
// averaged over each tau cell with the rates frozen at the cell centre.
// Row j is the age at infection xi_j (cell centre); the extra last row stands for every xi >= a_max
// with rates frozen there. weight[j] is the integral of pi over the row's cell (tail: pi(A)/mu(A)).
struct KernelTable {
    std::size_t rows = 0;
    std::size_t cols = 0;
    double delta = 0.0;
    double a_max = 0.0;
    double tail_rate = 0.0;
    bool shared_row = false;  // every row identical: value holds a single row
    std::vector<double> xi;
    std::vector<double> weight;
    std::vector<double> age_rate;      // mortality at the row's age (tail: at a_max + delta / 2)
    std::vector<double> row_integral;  // sum_k delta * value_jk
    std::vector<double> marginal;      // sum_j weight_j value_jk
    std::vector<double> value;         // empty when too large to keep

    bool has_values() const noexcept { return !value.empty(); }
    std::span<const double> row(std::size_t j) const noexcept {
        return {value.data() + (shared_row ? 0 : j * cols), cols};
    }
    double mass() const noexcept;  // sum_j weight_j row_integral_j
};

// Human kernel with removal mu_h + nu_h + gamma_h; mosquito kernel with mu_m + nu_m.
KernelTable human_kernel(const ModelParams& params, const Grid& grid, const SurvivalTable& survival);
KernelTable mosquito_kernel(const ModelParams& params, const Grid& grid, const SurvivalTable& survival);

struct R0Report {
    double r0_squared_closed_form = 0.0;  // lambda_0, the threshold quantity reported as R0
    double r0 = 0.0;                      // spectral radius, sqrt(lambda_0)
    double r0_squared_power_iter = 0.0;
    double r0_squared_reduced = 0.0;
    bool has_power_iter = false;
    bool has_reduced = false;
    int iterations = 0;
    double residual = 0.0;
    double kernel_mass_mh = 0.0;  // double integral of K_{m->h}
    double kernel_mass_hm = 0.0;  // double integral of K_{h->m}
    double population_ratio = 0.0;
    double integral_pi_h = 0.0;
    double integral_pi_m = 0.0;
    double tail_fraction_h = 0.0;
};

R0Report r0_closed_form(const ModelParams& params, const Grid& grid);
double r0_reduced(const ModelParams& params, const Grid& grid);

struct PowerOptions {
    double tol = 1e-13;
    int max_iter = 200;
    bool dense = false;  // assemble H_h explicitly (n <= 4096) instead of applying it matrix-free
};

R0Report power_iteration_r0(const ModelParams& params, const Grid& grid, const PowerOptions& opts = {});

// Everything: closed form, power iteration and (if eligible) the reduced formula.
R0Report r0_all(const ModelParams& params, const Grid& grid, const PowerOptions& opts = {});

// R0 per unit mosquito recruitment; R0 is linear in lambda_m.
double r0_per_lambda_m(const ModelParams& params, const Grid& grid);
double lambda_m_for_target_r0(const ModelParams& params, const Grid& grid, double target);

// Discretised next-generation operators acting on cell masses of newly infected densities.
// Human vectors have n_ah + 1 entries and mosquito vectors n_am + 1 (last entry: tail beyond a_max).
class NextGenerationOperator {
public:
    NextGenerationOperator(const ModelParams& params, const Grid& grid);

    std::size_t human_size() const noexcept { return hw_.size(); }
    std::size_t mosquito_size() const noexcept { return mw_.size(); }

    std::vector<double> apply_gm(std::span<const double> human) const;     // humans -> mosquitoes
    std::vector<double> apply_gh(std::span<const double> mosquito) const;  // mosquitoes -> humans
    std::vector<double> apply_hh(std::span<const double> human) const;     // G_h G_m

    // cell masses of pi_h, the eigenvector of H_h
    const std::vector<double>& pi_h_masses() const noexcept { return hw_; }

private:
    std::vector<double> hw_, hr_, mw_, mr_;
    double to_m_ = 0.0;
    double to_h_ = 0.0;
};

struct PowerResult {
    double eigenvalue = 0.0;
    int iterations = 0;
    double residual = 0.0;
    double first_rayleigh = 0.0;
    std::vector<double> vector;
};

// Power iteration with Rayleigh quotient stopping; start must be strictly positive.
PowerResult power_iterate(const std::function<std::vector<double>(std::span<const double>)>& apply,
                          std::vector<double> start, double tol, int max_iter);

}  // namespace structsim
