#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "structsim/rate.hpp"

namespace structsim {

struct Grid;

enum class Arity { Age, AgeTau, AgeEta, TauOnly, EtaOnly };

struct ModelParams {
    std::string name = "custom";
    double lambda_h = 0.0;
    double lambda_m = 0.0;
    double theta = 0.0;
    RateSpec mu_h;
    RateSpec mu_m;
    RateSpec nu_h;
    RateSpec nu_m;
    RateSpec gamma_h;
    RateSpec k_h;
    RateSpec beta_h;
    RateSpec beta_m;

    // true iff mu_h, nu_h, gamma_h, k_h, beta_h ignore chronological age
    bool reduced_mode_eligible() const noexcept;
};

struct GridOverrides {
    std::optional<double> delta;
    std::optional<double> a_max_h;
    std::optional<double> a_max_m;
    std::optional<double> tau_max_h;
    std::optional<double> tau_max_m;
    std::optional<double> eta_max;
};

struct Config {
    ModelParams params;
    GridOverrides grid;
};

std::vector<std::string> preset_names();
ModelParams preset(std::string_view name);

Config parse_config(std::string_view text, const std::filesystem::path& base_dir = {});
Config load_config(const std::filesystem::path& path);
std::string to_config_text(const ModelParams& params, const GridOverrides& grid = {});

Arity arity(const RateSpec& spec, bool eta_axis) noexcept;
double eval_rate(const RateSpec& spec, double a, double second) noexcept;

struct ValidationCheck {
    std::string name;
    bool passed = false;
    std::string detail;
};

struct ValidationReport {
    std::vector<ValidationCheck> checks;
    double mu0 = 0.0;
    bool reduced_mode_eligible = false;

    bool ok() const noexcept;
    const ValidationCheck* find(std::string_view name) const noexcept;
};

ValidationReport validate(const ModelParams& params, const Grid& grid);

}  // namespace structsim
