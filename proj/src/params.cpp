#include "structsim/params.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "structsim/errors.hpp"
#include "structsim/grid.hpp"

namespace structsim {

ConfigError::ConfigError(const std::string& msg, std::size_t line, std::size_t column)
    : Error(line ? "line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + msg : msg),
      line_(line),
      column_(column) {}

bool ModelParams::reduced_mode_eligible() const noexcept {
    return !mu_h.depends_on_age() && !nu_h.depends_on_age() && !gamma_h.depends_on_age() &&
           !k_h.depends_on_age() && !beta_h.depends_on_age();
}

std::vector<std::string> preset_names() { return {"forward", "backward"}; }

ModelParams preset(std::string_view name) {
    ModelParams p;
    double mu_h;
    if (name == "forward") {
        mu_h = 0.022;
        p.lambda_m = 7e6;
    } else if (name == "backward") {
        mu_h = 0.002;
        p.lambda_m = 2.5e7;
    } else {
        throw ConfigError("unknown preset '" + std::string(name) + "'");
    }
    p.name = std::string(name);
    p.lambda_h = 8.4e5;
    p.theta = 3.65e4;
    p.mu_h = RateSpec::constant(mu_h);
    p.mu_m = RateSpec::constant(20.0);
    p.nu_h = RateSpec::constant(0.1);
    p.nu_m = RateSpec::constant(25.0);
    p.gamma_h = RateSpec::piecewise(0.1, 0.0, 50.0);
    p.k_h = RateSpec::piecewise(0.1, 0.0, 40.0);
    p.beta_h = RateSpec::gauss(0.1, 0.3, 0.1);
    p.beta_m = RateSpec::gauss_exp(0.05, 0.2, 0.2, 1.0);
    return p;
}

Arity arity(const RateSpec& spec, bool eta_axis) noexcept {
    bool a = spec.depends_on_age();
    bool s = spec.depends_on_structure();
    if (a && s) return eta_axis ? Arity::AgeEta : Arity::AgeTau;
    if (s) return eta_axis ? Arity::EtaOnly : Arity::TauOnly;
    return Arity::Age;
}

double eval_rate(const RateSpec& spec, double a, double second) noexcept { return spec(a, second); }

namespace {

const std::array<const char*, 8> kRateNames = {"mu_h", "mu_m", "nu_h", "nu_m", "gamma_h", "k_h", "beta_h", "beta_m"};
const std::array<const char*, 3> kPopulationNames = {"lambda_h", "lambda_m", "theta"};
const std::array<const char*, 6> kGridNames = {"delta", "a_max_h", "a_max_m", "tau_max_h", "tau_max_m", "eta_max"};

RateSpec* rate_slot(ModelParams& p, std::string_view key) {
    if (key == "mu_h") return &p.mu_h;
    if (key == "mu_m") return &p.mu_m;
    if (key == "nu_h") return &p.nu_h;
    if (key == "nu_m") return &p.nu_m;
    if (key == "gamma_h") return &p.gamma_h;
    if (key == "k_h") return &p.k_h;
    if (key == "beta_h") return &p.beta_h;
    if (key == "beta_m") return &p.beta_m;
    return nullptr;
}

std::optional<double>* grid_slot(GridOverrides& g, std::string_view key) {
    if (key == "delta") return &g.delta;
    if (key == "a_max_h") return &g.a_max_h;
    if (key == "a_max_m") return &g.a_max_m;
    if (key == "tau_max_h") return &g.tau_max_h;
    if (key == "tau_max_m") return &g.tau_max_m;
    if (key == "eta_max") return &g.eta_max;
    return nullptr;
}

std::string_view trim(std::string_view s) {
    std::size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    std::size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

class LineParser {
public:
    LineParser(std::string_view line, std::size_t lineno) : line_(line), lineno_(lineno) {}

    [[noreturn]] void fail(const std::string& msg, std::size_t at) const { throw ConfigError(msg, lineno_, at + 1); }
    [[noreturn]] void fail(const std::string& msg) const { fail(msg, pos_); }

    void skip_ws() {
        while (pos_ < line_.size() && (line_[pos_] == ' ' || line_[pos_] == '\t' || line_[pos_] == '\r')) ++pos_;
    }
    bool eof() {
        skip_ws();
        return pos_ >= line_.size();
    }
    bool accept(char c) {
        skip_ws();
        if (pos_ < line_.size() && line_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }
    void expect(char c) {
        if (!accept(c)) fail(std::string("expected '") + c + "'");
    }
    std::string_view ident() {
        skip_ws();
        std::size_t b = pos_;
        while (pos_ < line_.size() && (std::isalnum(static_cast<unsigned char>(line_[pos_])) || line_[pos_] == '_'))
            ++pos_;
        if (b == pos_) fail("expected identifier");
        return line_.substr(b, pos_ - b);
    }
    double number() {
        skip_ws();
        std::size_t b = pos_;
        double v = 0.0;
        const char* first = line_.data() + pos_;
        const char* last = line_.data() + line_.size();
        if (pos_ < line_.size() && line_[pos_] == '+') ++first;
        auto [ptr, ec] = std::from_chars(first, last, v);
        if (ec != std::errc()) fail("expected number", b);
        pos_ = static_cast<std::size_t>(ptr - line_.data());
        if (!std::isfinite(v)) fail("non-finite number", b);
        return v;
    }
    std::string_view until(char c) {
        skip_ws();
        std::size_t b = pos_;
        std::size_t e = line_.find(c, pos_);
        if (e == std::string_view::npos) fail(std::string("expected '") + c + "'");
        pos_ = e;
        return trim(line_.substr(b, e - b));
    }
    std::size_t pos() const { return pos_; }

private:
    std::string_view line_;
    std::size_t lineno_;
    std::size_t pos_ = 0;
};

RateSpec read_table(const std::filesystem::path& path, Variable var, const std::string& shown) {
    std::ifstream in(path);
    if (!in) throw DomainError("cannot open table file '" + path.string() + "'");
    std::vector<double> xs, ys;
    std::string line;
    while (std::getline(in, line)) {
        auto hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        std::replace(line.begin(), line.end(), ',', ' ');
        std::istringstream ls(line);
        double x, y;
        if (!(ls >> x)) continue;
        if (!(ls >> y)) throw DomainError("table file '" + path.string() + "': row needs two columns");
        xs.push_back(x);
        ys.push_back(y);
    }
    return RateSpec::tabulated(std::move(xs), std::move(ys), var, shown);
}

RateSpec parse_rate(LineParser& lp, std::string_view key, const std::filesystem::path& base_dir) {
    std::size_t kind_at = lp.pos();
    std::string kind(lp.ident());
    lp.expect('(');
    std::vector<double> args;
    std::string path;
    std::vector<std::size_t> arg_pos;
    if (kind == "table") {
        path = std::string(lp.until(')'));
        if (path.empty()) lp.fail("table() needs a path");
        lp.expect(')');
    } else if (!lp.accept(')')) {
        do {
            lp.skip_ws();
            arg_pos.push_back(lp.pos());
            args.push_back(lp.number());
        } while (lp.accept(','));
        lp.expect(')');
    }
    bool age_default = key == "mu_h" || key == "mu_m";
    Variable var = age_default ? Variable::Age : Variable::Structure;
    if (lp.accept('@')) {
        std::string_view which = lp.ident();
        if (which == "age") var = Variable::Age;
        else if (which == "structure" || which == "tau" || which == "eta") var = Variable::Structure;
        else lp.fail("unknown variable selector '" + std::string(which) + "'");
        if (age_default && var != Variable::Age) lp.fail(std::string(key) + " depends on age only");
    }
    if (!lp.eof()) lp.fail("unexpected trailing text");

    auto need = [&](std::size_t n) {
        if (args.size() != n)
            lp.fail(kind + " expects " + std::to_string(n) + " arguments, got " + std::to_string(args.size()),
                    kind_at);
    };
    for (std::size_t i = 0; i < args.size(); ++i)
        if (args[i] < 0.0) lp.fail("negative parameter in " + std::string(key), arg_pos[i]);

    RateSpec spec;
    if (kind == "constant") {
        need(1);
        spec = RateSpec::constant(args[0]);
    } else if (kind == "piecewise") {
        need(3);
        spec = RateSpec::piecewise(args[0], args[1], args[2], var);
    } else if (kind == "gauss") {
        need(3);
        spec = RateSpec::gauss(args[0], args[1], args[2], var);
    } else if (kind == "gauss_exp") {
        need(4);
        spec = RateSpec::gauss_exp(args[0], args[1], args[2], args[3]);
    } else if (kind == "table") {
        std::filesystem::path p(path);
        if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
        try {
            spec = read_table(p, var, path);
        } catch (const DomainError& e) {
            lp.fail(e.what(), kind_at);
        }
    } else {
        lp.fail("unknown rate kind '" + kind + "'", kind_at);
    }
    try {
        spec.check(std::string(key));
    } catch (const DomainError& e) {
        lp.fail(e.what(), kind_at);
    }
    return spec;
}

}  // namespace

Config parse_config(std::string_view text, const std::filesystem::path& base_dir) {
    Config cfg;
    cfg.params.name = "config";
    std::string section;
    std::map<std::string, bool> seen;
    std::size_t lineno = 0;
    std::size_t start = 0;
    while (start <= text.size()) {
        std::size_t end = text.find('\n', start);
        if (end == std::string_view::npos) end = text.size();
        std::string_view raw = text.substr(start, end - start);
        start = end + 1;
        ++lineno;
        std::size_t hash = raw.find_first_of("#;");
        std::string_view line = hash == std::string_view::npos ? raw : raw.substr(0, hash);
        LineParser lp(line, lineno);
        if (lp.eof()) {
            if (end == text.size()) break;
            continue;
        }
        if (lp.accept('[')) {
            section = std::string(lp.ident());
            lp.expect(']');
            if (!lp.eof()) lp.fail("unexpected trailing text");
            if (section != "population" && section != "rates" && section != "grid")
                throw ConfigError("unknown section '" + section + "'", lineno, 1);
            continue;
        }
        lp.skip_ws();
        std::size_t key_at = lp.pos();
        std::string key(lp.ident());
        lp.expect('=');
        if (section.empty()) lp.fail("key outside of a section", key_at);
        if (seen[section + "." + key]) lp.fail("duplicate key '" + key + "'", key_at);
        seen[section + "." + key] = true;
        if (section == "population") {
            double* slot = key == "lambda_h" ? &cfg.params.lambda_h
                           : key == "lambda_m" ? &cfg.params.lambda_m
                           : key == "theta"    ? &cfg.params.theta
                                               : nullptr;
            if (!slot) lp.fail("unknown key '" + key + "' in [population]", key_at);
            lp.skip_ws();
            std::size_t at = lp.pos();
            double v = lp.number();
            if (v < 0.0) lp.fail("negative parameter " + key, at);
            if (!lp.eof()) lp.fail("unexpected trailing text");
            *slot = v;
        } else if (section == "rates") {
            RateSpec* slot = rate_slot(cfg.params, key);
            if (!slot) lp.fail("unknown key '" + key + "' in [rates]", key_at);
            *slot = parse_rate(lp, key, base_dir);
        } else {
            auto* slot = grid_slot(cfg.grid, key);
            if (!slot) lp.fail("unknown key '" + key + "' in [grid]", key_at);
            lp.skip_ws();
            std::size_t at = lp.pos();
            double v = lp.number();
            if (v < 0.0) lp.fail("negative parameter " + key, at);
            if (!lp.eof()) lp.fail("unexpected trailing text");
            *slot = v;
        }
        if (end == text.size()) break;
    }
    for (const char* k : kPopulationNames)
        if (!seen[std::string("population.") + k]) throw ConfigError(std::string("missing key '") + k + "' in [population]");
    for (const char* k : kRateNames)
        if (!seen[std::string("rates.") + k]) throw ConfigError(std::string("missing key '") + k + "' in [rates]");
    return cfg;
}

Config load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file '" + path.string() + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), path.parent_path());
}

std::string to_config_text(const ModelParams& p, const GridOverrides& grid) {
    std::ostringstream os;
    os.precision(17);
    os << "[population]\n";
    os << "lambda_h = " << p.lambda_h << "\n";
    os << "lambda_m = " << p.lambda_m << "\n";
    os << "theta = " << p.theta << "\n\n[rates]\n";
    const ModelParams& q = p;
    std::array<const RateSpec*, 8> rates = {&q.mu_h, &q.mu_m, &q.nu_h, &q.nu_m, &q.gamma_h, &q.k_h, &q.beta_h, &q.beta_m};
    for (std::size_t i = 0; i < rates.size(); ++i) os << kRateNames[i] << " = " << rates[i]->describe() << "\n";
    std::array<const std::optional<double>*, 6> g = {&grid.delta,     &grid.a_max_h,   &grid.a_max_m,
                                                     &grid.tau_max_h, &grid.tau_max_m, &grid.eta_max};
    bool any = std::any_of(g.begin(), g.end(), [](auto* v) { return v->has_value(); });
    if (any) {
        os << "\n[grid]\n";
        for (std::size_t i = 0; i < g.size(); ++i)
            if (g[i]->has_value()) os << kGridNames[i] << " = " << **g[i] << "\n";
    }
    return os.str();
}

bool ValidationReport::ok() const noexcept {
    return std::all_of(checks.begin(), checks.end(), [](const ValidationCheck& c) { return c.passed; });
}

const ValidationCheck* ValidationReport::find(std::string_view name) const noexcept {
    for (const auto& c : checks)
        if (c.name == name) return &c;
    return nullptr;
}

namespace {

// Age samples for sweeping 2-D rates: every cell when cheap, otherwise an even stride.
std::vector<double> age_samples(const Grid& g, std::size_t n) {
    std::size_t stride = std::max<std::size_t>(1, n / 4000);
    std::vector<double> out;
    for (std::size_t i = 0; i < n; i += stride) out.push_back(g.center(i));
    out.push_back(g.center(n - 1));
    return out;
}

struct Sweep {
    double min = INFINITY;
    double max = -INFINITY;
    bool finite = true;
    void add(double v) {
        if (!std::isfinite(v)) finite = false;
        min = std::min(min, v);
        max = std::max(max, v);
    }
};

Sweep sweep(const RateSpec& r, const Grid& g, std::size_t n_age, std::size_t n_struct) {
    Sweep s;
    for (double a : age_samples(g, n_age))
        for (std::size_t k = 0; k < std::max<std::size_t>(n_struct, 1); ++k) s.add(r(a, n_struct ? g.center(k) : 0.0));
    return s;
}

std::string num(double v) {
    std::ostringstream os;
    os.precision(6);
    os << v;
    return os.str();
}

// Triangle sum of beta(s + tau, tau) over s, tau >= 0 on the grid.
double omega_sum(const RateSpec& beta, const Grid& g, std::size_t n_age, std::size_t n_struct) {
    double sum = 0.0;
    for (double s : age_samples(g, n_age))
        for (std::size_t k = 0; k < n_struct; ++k) {
            double tau = g.center(k);
            sum += beta(s + tau, tau);
        }
    return sum;
}

}  // namespace

ValidationReport validate(const ModelParams& p, const Grid& g) {
    ValidationReport r;
    auto add = [&](std::string name, bool ok, std::string detail) {
        r.checks.push_back({std::move(name), ok, std::move(detail)});
    };
    add("lambda_h_positive", p.lambda_h > 0.0, "lambda_h = " + num(p.lambda_h));
    add("lambda_m_positive", p.lambda_m > 0.0, "lambda_m = " + num(p.lambda_m));
    add("theta_positive", p.theta > 0.0, "theta = " + num(p.theta));

    Sweep mh = sweep(p.mu_h, g, g.n_ah, 0);
    Sweep mm = sweep(p.mu_m, g, g.n_am, 0);
    r.mu0 = std::min(mh.min, mm.min);
    add("mu0_positive", r.mu0 > 0.0, "grid minimum of mu_h, mu_m = " + num(r.mu0));

    struct Item {
        const char* name;
        const RateSpec* rate;
        std::size_t n_age;
        std::size_t n_struct;
        bool probability;
    };
    const Item items[] = {
        {"mu_h", &p.mu_h, g.n_ah, 0, false},         {"mu_m", &p.mu_m, g.n_am, 0, false},
        {"nu_h", &p.nu_h, g.n_ah, g.n_th, false},    {"nu_m", &p.nu_m, g.n_am, g.n_tm, false},
        {"gamma_h", &p.gamma_h, g.n_ah, g.n_th, false}, {"k_h", &p.k_h, g.n_ah, g.n_eta, false},
        {"beta_h", &p.beta_h, g.n_ah, g.n_th, true}, {"beta_m", &p.beta_m, g.n_am, g.n_tm, true},
    };
    bool bounded = true;
    std::string bad;
    for (const auto& it : items) {
        Sweep s = sweep(*it.rate, g, it.n_age, it.n_struct);
        bool ok = s.finite && s.min >= 0.0 && (!it.probability || s.max <= 1.0);
        if (!ok) {
            bounded = false;
            bad += std::string(bad.empty() ? "" : ", ") + it.name;
        }
    }
    add("rates_bounded", bounded, bounded ? "all rates finite, non-negative, probabilities in [0,1]" : "out of range: " + bad);

    double oh = omega_sum(p.beta_h, g, g.n_ah, g.n_th);
    double om = omega_sum(p.beta_m, g, g.n_am, g.n_tm);
    add("transmission_support_human", oh > 0.0, "grid sum of beta_h(s+tau,tau) = " + num(oh));
    add("transmission_support_mosquito", om > 0.0, "grid sum of beta_m(s+tau,tau) = " + num(om));

    r.reduced_mode_eligible = p.reduced_mode_eligible();
    bool consistent = true;
    if (r.reduced_mode_eligible) {
        const Item human[] = {items[0], items[2], items[4], items[5], items[6]};
        for (const auto& it : human) {
            for (std::size_t k = 0; k < std::max<std::size_t>(it.n_struct, 1) && consistent; ++k) {
                double s = it.n_struct ? g.center(k) : 0.0;
                double ref = (*it.rate)(g.center(0), s);
                for (double a : age_samples(g, it.n_age))
                    if ((*it.rate)(a, s) != ref) {
                        consistent = false;
                        break;
                    }
            }
        }
    }
    add("reduced_mode_consistency", consistent,
        r.reduced_mode_eligible ? "human rates are age-independent on the grid" : "age-dependent human rates; FULL mode only");
    return r;
}

}  // namespace structsim
