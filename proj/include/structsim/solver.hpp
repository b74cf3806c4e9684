#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <variant>
#include <vector>

#include "structsim/grid.hpp"
#include "structsim/params.hpp"

namespace structsim {

enum class Mode { Full, Reduced };

const char* mode_name(Mode m) noexcept;
Mode parse_mode(std::string_view s);

// Human fields over age: s(a), i(a, tau), r(a, eta).
struct HumanFull {
    std::vector<double> s;
    TriangularField i;
    TriangularField r;
};

// Human fields integrated over age: S total, i(tau), r(eta).
struct HumanReduced {
    double s = 0.0;
    std::vector<double> i;
    std::vector<double> r;
};

struct StateFields {
    double t = 0.0;
    std::variant<HumanFull, HumanReduced> human;
    std::vector<double> s_m;
    TriangularField i_m;

    Mode mode() const noexcept { return human.index() == 0 ? Mode::Full : Mode::Reduced; }
    HumanFull& full() { return std::get<HumanFull>(human); }
    const HumanFull& full() const { return std::get<HumanFull>(human); }
    HumanReduced& reduced() { return std::get<HumanReduced>(human); }
    const HumanReduced& reduced() const { return std::get<HumanReduced>(human); }
};

struct Observables {
    double t = 0.0;
    double n_h = 0.0;
    double n_m = 0.0;
    double total_i_h = 0.0;
    double total_i_m = 0.0;
    double foi_mh_total = 0.0;
    double foi_hm_total = 0.0;
};

// Empty state of the right shape.
StateFields zero_state(const Grid& grid, Mode mode);
StateFields dfe_state(const ModelParams& params, const Grid& grid, Mode mode);
StateFields default_initial(const ModelParams& params, const Grid& grid, double infected_fraction,
                            Mode mode = Mode::Reduced);
// Age-integrated view of a FULL state.
StateFields reduce(const StateFields& full, const Grid& grid);

double human_population(const StateFields& state, const Grid& grid) noexcept;
double mosquito_population(const StateFields& state, const Grid& grid) noexcept;
Observables observe(const StateFields& state, const ModelParams& params, const Grid& grid);

// Population floor below which the human denominator is considered degenerate.
double epsilon_bar(const ModelParams& params, const Grid& grid);

// lambda_{m->h} per human age cell (REDUCED: one entry holding the age integral)
std::vector<double> force_mh(const StateFields& state, const ModelParams& params, const Grid& grid);
// lambda_{h->m} per mosquito age cell
std::vector<double> force_hm(const StateFields& state, const ModelParams& params, const Grid& grid);

class TransportSolver {
public:
    TransportSolver(const ModelParams& params, const Grid& grid, Mode mode);

    void step(StateFields& state) const;
    Mode mode() const noexcept { return mode_; }
    const Grid& grid() const noexcept { return grid_; }
    double epsilon_bar() const noexcept { return eps_bar_; }

private:
    void step_full(HumanFull& h, double rho_h) const;
    void step_reduced(HumanReduced& h, double rho_h) const;
    void step_mosquito(StateFields& st, double rho_m) const;
    double human_force_integral(const StateFields& st) const;
    double mosquito_force_integral(const StateFields& st) const;

    ModelParams params_;
    Grid grid_;
    Mode mode_;
    double eps_bar_ = 0.0;

    // full human
    std::vector<double> ds_h_, hs_h_, hi_h_, hr_h_;  // hs: second half of a step, for mass entering mid-step
    TriangularField di_h_, dr_h_, beta_h_, gamma_h_, k_h_;
    double newborn_h_ = 0.0;
    // reduced human
    double ds_red_ = 0.0, hs_red_ = 0.0, newborn_red_ = 0.0, hi_red_ = 0.0, hr_red_ = 0.0;
    std::vector<double> di_red_, dr_red_, beta_red_, gamma_red_, k_red_;
    // mosquito
    std::vector<double> ds_m_, hi_m_;
    TriangularField di_m_, beta_m_;
    double newborn_m_ = 0.0;
};

StateFields step(const StateFields& state, const ModelParams& params, const Grid& grid);

struct SimulationResult {
    std::vector<Observables> series;
    StateFields final_state;
};

using Observer = std::function<void(const Observables&)>;

SimulationResult simulate(const ModelParams& params, const Grid& grid, StateFields init, double t_end,
                          std::size_t output_every = 1, const Observer& observer = {});

void write_snapshot(const std::filesystem::path& path, const StateFields& state, const Grid& grid);
StateFields read_snapshot(const std::filesystem::path& path, Grid* grid_out = nullptr);

}  // namespace structsim
