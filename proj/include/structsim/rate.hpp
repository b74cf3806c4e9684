#pragma once

#include <memory>
#include <string>
#include <variant>
#include <vector>

namespace structsim {

// Which argument a one-dimensional rate reads.
enum class Variable { Age, Structure };

struct ConstantRate {
    double value = 0.0;
};

// low on [0, threshold], high beyond
struct PiecewiseRate {
    double threshold = 0.0;
    double low = 0.0;
    double high = 0.0;
    Variable var = Variable::Structure;
};

// amplitude/sqrt(2 pi) * exp(-((x - center)/width)^2 / 2)
struct GaussianBumpRate {
    double amplitude = 0.0;
    double center = 0.0;
    double width = 1.0;
    Variable var = Variable::Structure;
};

// zero for a <= s, otherwise gaussian bump in s times exp(-decay (a - s))
struct GaussianExpIndicatorRate {
    double amplitude = 0.0;
    double center = 0.0;
    double width = 1.0;
    double decay = 0.0;
};

struct TabulatedRate {
    std::shared_ptr<const std::vector<double>> x;
    std::shared_ptr<const std::vector<double>> y;
    std::string source;
    Variable var = Variable::Structure;
};

class RateSpec {
public:
    using Form = std::variant<ConstantRate, PiecewiseRate, GaussianBumpRate, GaussianExpIndicatorRate, TabulatedRate>;

    RateSpec() = default;
    explicit RateSpec(Form f) : form_(std::move(f)) {}

    static RateSpec constant(double c);
    static RateSpec piecewise(double threshold, double low, double high, Variable var = Variable::Structure);
    static RateSpec gauss(double amplitude, double center, double width, Variable var = Variable::Structure);
    static RateSpec gauss_exp(double amplitude, double center, double width, double decay);
    static RateSpec tabulated(std::vector<double> x, std::vector<double> y, Variable var = Variable::Structure,
                              std::string source = {});

    // a: chronological age, s: class age (tau or eta)
    double operator()(double a, double s) const noexcept;

    const Form& form() const noexcept { return form_; }
    bool depends_on_age() const noexcept;
    bool depends_on_structure() const noexcept;
    bool is_zero() const noexcept;

    // Throws DomainError on a negative, non-finite or malformed parameter.
    void check(const std::string& name) const;

    std::string describe() const;

private:
    Form form_ = ConstantRate{};
};

}  // namespace structsim
