#pragma once

#include <optional>
#include <vector>

#include "structsim/grid.hpp"
#include "structsim/params.hpp"
#include "structsim/solver.hpp"

namespace structsim {

// Exact integral of rate(a0 + s, s0 + s) for s in [0, length] (closed forms per rate kind).
double exact_path_integral(const RateSpec& rate, double a0, double s0, double length);

// Kernels of the linearised renewal system, integrated over the age at infection with pi weights.
// human[k]    = int pi_h(xi) beta_h(xi + tau_k, tau_k) exp(-int_0^tau (mu_h + nu_h + gamma_h)) dxi
// mosquito[k] = int pi_m(xi) beta_m(xi + tau_k, tau_k) exp(-int_0^tau (mu_m + nu_m)) dxi
struct LinearizedKernels {
    double delta = 0.0;
    std::vector<double> tau_h;
    std::vector<double> tau_m;
    std::vector<double> human;
    std::vector<double> mosquito;
    double prefactor = 0.0;  // lambda_m theta^2 / (lambda_h (int pi_h)^2)
};

LinearizedKernels linearized_kernels(const ModelParams& params, const Grid& grid);
double g_of_lambda(const LinearizedKernels& kernels, double lambda);
double g_of_lambda(const ModelParams& params, const Grid& grid, double lambda);

struct GrowthRate {
    std::optional<double> lambda_star;
    double g0 = 0.0;
    double mu0 = 0.0;
    double lo = 0.0;
    double hi = 0.0;
    int expansions = 0;
    int iterations = 0;
    std::string note;
};

// Real root of g(lambda) = 1, bracketed in [-mu0 + 1e-6, 50 mu0 max(1, R0)] with geometric expansion.
GrowthRate dominant_growth_rate(const ModelParams& params, const Grid& grid);

// FULL-mode state at time t from the explicit characteristic formulas; needs beta_h = beta_m = 0.
// t must be a whole number of steps; couplings are sampled once per step like the transport scheme.
StateFields volterra_decoupled(const ModelParams& params, const Grid& grid, const StateFields& init, double t);

}  // namespace structsim
