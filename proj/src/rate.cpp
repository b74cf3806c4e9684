#include "structsim/rate.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "structsim/errors.hpp"

namespace structsim {

namespace {

const double kInvSqrt2Pi = 1.0 / std::sqrt(2.0 * std::numbers::pi);

double bump(double amplitude, double center, double width, double x) {
    double z = (x - center) / width;
    return amplitude * kInvSqrt2Pi * std::exp(-0.5 * z * z);
}

double pick(Variable v, double a, double s) { return v == Variable::Age ? a : s; }

double interpolate(const std::vector<double>& xs, const std::vector<double>& ys, double x) {
    if (x <= xs.front()) return ys.front();
    if (x >= xs.back()) return ys.back();
    auto it = std::upper_bound(xs.begin(), xs.end(), x);
    std::size_t i = static_cast<std::size_t>(it - xs.begin());
    double t = (x - xs[i - 1]) / (xs[i] - xs[i - 1]);
    return ys[i - 1] + t * (ys[i] - ys[i - 1]);
}

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

}  // namespace

RateSpec RateSpec::constant(double c) { return RateSpec(ConstantRate{c}); }

RateSpec RateSpec::piecewise(double threshold, double low, double high, Variable var) {
    return RateSpec(PiecewiseRate{threshold, low, high, var});
}

RateSpec RateSpec::gauss(double amplitude, double center, double width, Variable var) {
    return RateSpec(GaussianBumpRate{amplitude, center, width, var});
}

RateSpec RateSpec::gauss_exp(double amplitude, double center, double width, double decay) {
    return RateSpec(GaussianExpIndicatorRate{amplitude, center, width, decay});
}

RateSpec RateSpec::tabulated(std::vector<double> x, std::vector<double> y, Variable var, std::string source) {
    if (x.empty() || x.size() != y.size()) throw DomainError("table rate needs equally sized non-empty columns");
    for (std::size_t i = 1; i < x.size(); ++i)
        if (!(x[i] > x[i - 1])) throw DomainError("table rate abscissae must be strictly increasing");
    TabulatedRate t;
    t.x = std::make_shared<const std::vector<double>>(std::move(x));
    t.y = std::make_shared<const std::vector<double>>(std::move(y));
    t.source = std::move(source);
    t.var = var;
    return RateSpec(std::move(t));
}

double RateSpec::operator()(double a, double s) const noexcept {
    switch (form_.index()) {
        case 0:
            return std::get<0>(form_).value;
        case 1: {
            const auto& p = std::get<1>(form_);
            return pick(p.var, a, s) <= p.threshold ? p.low : p.high;
        }
        case 2: {
            const auto& g = std::get<2>(form_);
            return bump(g.amplitude, g.center, g.width, pick(g.var, a, s));
        }
        case 3: {
            const auto& g = std::get<3>(form_);
            if (a <= s) return 0.0;
            return bump(g.amplitude, g.center, g.width, s) * std::exp(-g.decay * (a - s));
        }
        default: {
            const auto& t = std::get<4>(form_);
            return interpolate(*t.x, *t.y, pick(t.var, a, s));
        }
    }
}

bool RateSpec::depends_on_age() const noexcept {
    return std::visit(
        [](const auto& f) -> bool {
            using T = std::decay_t<decltype(f)>;
            if constexpr (std::is_same_v<T, ConstantRate>) return false;
            else if constexpr (std::is_same_v<T, GaussianExpIndicatorRate>) return true;
            else return f.var == Variable::Age;
        },
        form_);
}

bool RateSpec::depends_on_structure() const noexcept {
    return std::visit(
        [](const auto& f) -> bool {
            using T = std::decay_t<decltype(f)>;
            if constexpr (std::is_same_v<T, ConstantRate>) return false;
            else if constexpr (std::is_same_v<T, GaussianExpIndicatorRate>) return true;
            else return f.var == Variable::Structure;
        },
        form_);
}

bool RateSpec::is_zero() const noexcept {
    return std::visit(
        [](const auto& f) -> bool {
            using T = std::decay_t<decltype(f)>;
            if constexpr (std::is_same_v<T, ConstantRate>) return f.value == 0.0;
            else if constexpr (std::is_same_v<T, PiecewiseRate>) return f.low == 0.0 && f.high == 0.0;
            else if constexpr (std::is_same_v<T, TabulatedRate>)
                return std::all_of(f.y->begin(), f.y->end(), [](double v) { return v == 0.0; });
            else return f.amplitude == 0.0;
        },
        form_);
}

void RateSpec::check(const std::string& name) const {
    auto nonneg = [&](double v, const char* what) {
        if (!std::isfinite(v)) throw DomainError(name + ": non-finite " + what);
        if (v < 0.0) throw DomainError(name + ": negative parameter " + what);
    };
    std::visit(
        [&](const auto& f) {
            using T = std::decay_t<decltype(f)>;
            if constexpr (std::is_same_v<T, ConstantRate>) {
                nonneg(f.value, "value");
            } else if constexpr (std::is_same_v<T, PiecewiseRate>) {
                nonneg(f.threshold, "threshold");
                nonneg(f.low, "low");
                nonneg(f.high, "high");
            } else if constexpr (std::is_same_v<T, GaussianBumpRate>) {
                nonneg(f.amplitude, "amplitude");
                nonneg(f.center, "center");
                nonneg(f.width, "width");
                if (f.width == 0.0) throw DomainError(name + ": width must be positive");
            } else if constexpr (std::is_same_v<T, GaussianExpIndicatorRate>) {
                nonneg(f.amplitude, "amplitude");
                nonneg(f.center, "center");
                nonneg(f.width, "width");
                nonneg(f.decay, "decay");
                if (f.width == 0.0) throw DomainError(name + ": width must be positive");
            } else {
                for (double v : *f.x) nonneg(v, "table abscissa");
                for (double v : *f.y) nonneg(v, "table value");
            }
        },
        form_);
}

std::string RateSpec::describe() const {
    return std::visit(
        [](const auto& f) -> std::string {
            using T = std::decay_t<decltype(f)>;
            if constexpr (std::is_same_v<T, ConstantRate>) {
                return "constant(" + fmt(f.value) + ")";
            } else if constexpr (std::is_same_v<T, PiecewiseRate>) {
                return "piecewise(" + fmt(f.threshold) + ", " + fmt(f.low) + ", " + fmt(f.high) + ")" +
                       (f.var == Variable::Age ? " @age" : " @structure");
            } else if constexpr (std::is_same_v<T, GaussianBumpRate>) {
                return "gauss(" + fmt(f.amplitude) + ", " + fmt(f.center) + ", " + fmt(f.width) + ")" +
                       (f.var == Variable::Age ? " @age" : " @structure");
            } else if constexpr (std::is_same_v<T, GaussianExpIndicatorRate>) {
                return "gauss_exp(" + fmt(f.amplitude) + ", " + fmt(f.center) + ", " + fmt(f.width) + ", " +
                       fmt(f.decay) + ")";
            } else {
                return "table(" + f.source + ")" + (f.var == Variable::Age ? " @age" : " @structure");
            }
        },
        form_);
}

}  // namespace structsim
