#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "structsim/params.hpp"

namespace structsim {

struct Grid {
    double delta = 0.005;
    double a_max_h = 0.0;
    double a_max_m = 0.0;
    double tau_max_h = 0.0;
    double tau_max_m = 0.0;
    double eta_max = 0.0;
    std::size_t n_ah = 0;
    std::size_t n_am = 0;
    std::size_t n_th = 0;
    std::size_t n_tm = 0;
    std::size_t n_eta = 0;

    static Grid make(double delta, double a_max_h, double a_max_m, double tau_max_h, double tau_max_m,
                     double eta_max);

    double node(std::size_t i) const noexcept { return static_cast<double>(i) * delta; }
    double center(std::size_t i) const noexcept { return (static_cast<double>(i) + 0.5) * delta; }
};

// a_max_m = tau_max_m = 1.5, tau_max_h = 0.6, eta_max = 1.0, a_max_h = 5/mu_h rounded up to a cell
Grid default_grid(const ModelParams& params, double delta = 0.005);
Grid resolve_grid(const ModelParams& params, const GridOverrides& overrides);

// Lower-triangular field over (age cell i, structure cell k), k <= i, stored by diagonal j = i - k.
class TriangularField {
public:
    TriangularField() = default;
    TriangularField(std::size_t n_age, std::size_t n_struct);

    std::size_t n_age() const noexcept { return n_age_; }
    std::size_t n_struct() const noexcept { return n_struct_; }
    std::size_t size() const noexcept { return data_.size(); }
    std::size_t row_length(std::size_t diag) const noexcept {
        return n_age_ - diag < n_struct_ ? n_age_ - diag : n_struct_;
    }

    double& at(std::size_t age, std::size_t s) noexcept { return data_[offsets_[age - s] + s]; }
    double at(std::size_t age, std::size_t s) const noexcept { return data_[offsets_[age - s] + s]; }

    std::span<double> diagonal(std::size_t j) noexcept { return {data_.data() + offsets_[j], row_length(j)}; }
    std::span<const double> diagonal(std::size_t j) const noexcept {
        return {data_.data() + offsets_[j], row_length(j)};
    }

    std::span<double> values() noexcept { return data_; }
    std::span<const double> values() const noexcept { return data_; }

    void fill(double v);
    bool same_shape(const TriangularField& other) const noexcept {
        return n_age_ == other.n_age_ && n_struct_ == other.n_struct_;
    }

private:
    std::size_t n_age_ = 0;
    std::size_t n_struct_ = 0;
    std::vector<std::size_t> offsets_;
    std::vector<double> data_;
};

struct SurvivalTable {
    std::vector<double> pi_h;    // at nodes 0..n_ah
    std::vector<double> pi_m;    // at nodes 0..n_am
    std::vector<double> cell_h;  // integral of pi_h over each age cell
    std::vector<double> cell_m;
    double tail_h = 0.0;  // integral of pi_h beyond a_max_h, rates frozen at the last cell
    double tail_m = 0.0;

    double integral_h() const noexcept;
    double integral_m() const noexcept;
    // share of the integral carried by the tail; a truncation diagnostic
    double tail_fraction_h() const noexcept { return tail_h / integral_h(); }
    double tail_fraction_m() const noexcept { return tail_m / integral_m(); }
};

SurvivalTable build_survival(const ModelParams& params, const Grid& grid);

// pi sampled at cell centres given node values and per-cell rates
std::vector<double> survival_at_centers(const RateSpec& mu, std::span<const double> nodes, double delta);

double integrate_1d(std::span<const double> values, double delta) noexcept;
double integrate_triangular(const TriangularField& field, double delta) noexcept;

// Midpoint rule for the integral of rate(a0 + s, s0 + s) over s in [0, length].
template <class F>
double path_integral(const F& rate, double a0, double s0, double length, double delta) {
    if (length <= 0.0) return 0.0;
    auto full = static_cast<std::size_t>(std::floor(length / delta * (1.0 + 1e-12)));
    double sum = 0.0;
    for (std::size_t m = 0; m < full; ++m) {
        double s = (static_cast<double>(m) + 0.5) * delta;
        sum += rate(a0 + s, s0 + s);
    }
    sum *= delta;
    double rest = length - static_cast<double>(full) * delta;
    if (rest > 1e-14 * delta) {
        double s = static_cast<double>(full) * delta + 0.5 * rest;
        sum += rest * rate(a0 + s, s0 + s);
    }
    return sum;
}

}  // namespace structsim
