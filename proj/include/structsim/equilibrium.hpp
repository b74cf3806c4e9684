#pragma once

#include <optional>
#include <vector>

#include "structsim/grid.hpp"
#include "structsim/params.hpp"
#include "structsim/r0.hpp"
#include "structsim/solver.hpp"

namespace structsim {

// Kernels of the age-free human model. Infection-age and recovery-age axes carry one extra tail
// node at tau_max (eta_max) with weight 1/rate, rates frozen past the truncation. c1, immunity and
// recovery_survival hold cell averages (rates frozen at the cell centre); the *_center vectors hold
// the values at the cell centres without the tail node.
struct ReducedKernels {
    double mu_h = 0.0;
    double theta = 0.0;
    double delta = 0.0;
    std::vector<double> tau, tau_weight, c1, nu, gamma, beta;
    std::vector<double> nu_gamma_path;  // int_0^tau (nu_h + gamma_h)
    std::vector<double> eta, eta_weight, immunity;  // immunity(eta) = exp(-int_0^eta (mu_h + k_h))
    std::vector<double> recovery_survival;          // exp(-int_0^tau (mu_h + k_h)) on the tau nodes
    std::vector<double> c1_center, immunity_center;
    double c2 = 0.0;                                // theta int beta_h c1
    double int_c1 = 0.0;
    double int_nu_c1 = 0.0;
    double int_gamma_c1 = 0.0;
    double immunity_integral = 0.0;
    double gamma_recovery_integral = 0.0;  // int gamma_h(tau) exp(-int_0^tau (mu_h + k_h))
    KernelTable mosquito;  // beta_m pi_m exp(-int nu_m) over (xi = a - tau, tau)
    double mosquito_kernel_mass = 0.0;
    double age_lag_mass = 0.0;  // int int (a - tau) beta_m pi_m exp(-int nu_m)

    double bracket_coefficient() const noexcept { return int_c1 + int_gamma_c1 * immunity_integral; }
};

ReducedKernels reduced_kernels(const ModelParams& params, const Grid& grid);

// int int beta_m pi_m exp(-int nu_m) exp(-(a - tau) z), and the same weighted by (a - tau)
double mosquito_damped_mass(const KernelTable& mosquito, double z);
double mosquito_damped_lag(const KernelTable& mosquito, double z);

double f_value(double r0, double k, const ReducedKernels& kernels);
double dk_f(double r0, double k, const ReducedKernels& kernels);
double k_bar(const ReducedKernels& kernels);
double c_bif(const ReducedKernels& kernels);
// Third term read with pi_h(tau) multiplying the exponent's integrand; integrated up to tau_max only.
double c_bif_literal_reading(const ReducedKernels& kernels);

std::vector<double> solve_endemic(double r0, const ReducedKernels& kernels);

struct FoldPoint {
    double r0_star = 0.0;
    double k_star = 0.0;
};
// Smallest R0 with a root: 1 / max_K f(1, K); none when the maximum sits at K = 0.
std::optional<FoldPoint> fold_point(const ReducedKernels& kernels);

enum class Classification { Forward, Backward };
const char* classification_name(Classification c) noexcept;

struct BranchPoint {
    double lambda_m = 0.0;
    double r0 = 0.0;
    std::vector<double> roots;
};

struct BifurcationBranch {
    std::vector<BranchPoint> points;
    Classification classification = Classification::Forward;
    std::optional<double> fold_r0_star;
    double c_bif = 0.0;
    double k_bar = 0.0;
};

BifurcationBranch trace_branch(const ModelParams& params, const Grid& grid, double lambda_m_min, double lambda_m_max,
                               std::size_t n_points, unsigned threads = 1);

struct EquilibriumState {
    StateFields state;  // REDUCED layout, absolute scale
    double k = 0.0;
    double n_h_star = 0.0;
    double s_h_star = 0.0;
    double rho_m = 0.0;  // per-capita force of infection on mosquitoes, c2 K
};

EquilibriumState reconstruct_equilibrium(double k, const ModelParams& params, const Grid& grid);

// REDUCED state (1 - weight) * DFE + weight * E, E the endemic equilibrium with the largest root at the
// params' R0. Throws DomainError when there is no endemic root.
StateFields endemic_blend(const ModelParams& params, const Grid& grid, double weight);

// Right-hand side of the general endemic condition for a candidate i_h*(a, tau) on the FULL grid.
double general_endemic_residual(const TriangularField& i_h_star, const ModelParams& params, const Grid& grid);

}  // namespace structsim
