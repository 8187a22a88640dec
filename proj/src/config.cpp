#include "dispersal/config.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

namespace dispersal {

namespace {

using nlohmann::json;

void only_keys(const json& obj, const std::string& where, const std::set<std::string>& allowed) {
    if (!obj.is_object()) throw ConfigError(where + ": expected an object");
    for (const auto& [key, _] : obj.items()) {
        if (!allowed.count(key)) throw ConfigError(where + ": unknown key '" + key + "'");
    }
}

double number(const json& obj, const char* key, const std::string& where) {
    const json& v = obj.at(key);
    if (!v.is_number()) throw ConfigError(where + "." + key + ": expected a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) throw ConfigError(where + "." + key + ": must be finite");
    return d;
}

int integer(const json& obj, const char* key, const std::string& where) {
    const json& v = obj.at(key);
    if (!v.is_number_integer()) throw ConfigError(where + "." + key + ": expected an integer");
    return v.get<int>();
}

double positive(const json& obj, const char* key, const std::string& where) {
    const double d = number(obj, key, where);
    if (!(d > 0.0)) throw ConfigError(where + "." + key + ": must be positive");
    return d;
}

std::vector<double> positive_list(const json& obj, const char* key, const std::string& where) {
    const json& v = obj.at(key);
    if (!v.is_array() || v.empty()) throw ConfigError(where + "." + key + ": expected a nonempty array");
    std::vector<double> out;
    for (const auto& item : v) {
        if (!item.is_number() || !(item.get<double>() > 0.0)) {
            throw ConfigError(where + "." + key + ": entries must be positive numbers");
        }
        out.push_back(item.get<double>());
    }
    return out;
}

Point point(const json& v, int dim, const std::string& where) {
    Point p{0.0, 0.0};
    if (v.is_number() && dim == 1) {
        p[0] = v.get<double>();
        return p;
    }
    if (!v.is_array() || static_cast<int>(v.size()) != dim) {
        throw ConfigError(where + ": expected " + std::to_string(dim) + " coordinates");
    }
    for (int a = 0; a < dim; ++a) {
        if (!v[static_cast<std::size_t>(a)].is_number()) throw ConfigError(where + ": coordinates must be numbers");
        p[static_cast<std::size_t>(a)] = v[static_cast<std::size_t>(a)].get<double>();
    }
    return p;
}

Interval interval(const json& v, const std::string& where) {
    if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) {
        throw ConfigError(where + ": expected [lower, upper]");
    }
    const Interval iv{v[0].get<double>(), v[1].get<double>()};
    if (!(iv.upper > iv.lower)) throw ConfigError(where + ": upper must exceed lower");
    return iv;
}

ResourceSpec parse_sigma(const json& obj, int dim) {
    const std::string where = "sigma";
    if (!obj.is_object() || !obj.contains("type") || !obj["type"].is_string()) {
        throw ConfigError("sigma: expected an object with a string 'type'");
    }
    ResourceSpec spec;
    const std::string type = obj["type"].get<std::string>();
    if (type == "constant") {
        only_keys(obj, where, {"type", "value"});
        spec.kind = ResourceSpec::Kind::constant;
        if (obj.contains("value")) spec.value = number(obj, "value", where);
    } else if (type == "bump") {
        only_keys(obj, where, {"type", "tau", "center", "radius"});
        spec.kind = ResourceSpec::Kind::bump;
        spec.tau = number(obj, "tau", where);
        spec.radius = positive(obj, "radius", where);
        if (obj.contains("center")) spec.center = point(obj["center"], dim, "sigma.center");
    } else if (type == "expression") {
        only_keys(obj, where, {"type", "expr"});
        spec.kind = ResourceSpec::Kind::expression;
        if (!obj.contains("expr") || !obj["expr"].is_string()) throw ConfigError("sigma.expr: expected a string");
        try {
            spec.expression = Expression::parse(obj["expr"].get<std::string>(), dim);
        } catch (const ExpressionError& e) {
            throw ConfigError(std::string("sigma.expr: ") + e.what());
        }
    } else {
        throw ConfigError("sigma.type: unknown resource type '" + type + "'");
    }
    return spec;
}

}  // namespace

std::string ResourceSpec::describe() const {
    std::ostringstream os;
    switch (kind) {
        case Kind::constant:
            if (value) os << "constant(" << *value << ")";
            else os << "constant(2*lambda1)";
            break;
        case Kind::bump: os << "bump(tau=" << tau << ",x0=" << center[0] << ",r=" << radius << ")"; break;
        case Kind::expression: os << expression->text(); break;
    }
    return os.str();
}

Grid ExperimentConfig::grid() const { return Grid(dim, bounds, n); }

const std::vector<std::string>& experiment_names() {
    static const std::vector<std::string> names{"eigen",      "steady",   "mismatch",  "rescaled",      "branching",
                                                "invasion",   "comparison", "sharmonic", "impossibility", "acceptance"};
    return names;
}

ExperimentConfig parse_config(const std::string& text) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        // byte offset -> line/column
        std::size_t line = 1, col = 1;
        const std::size_t stop = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
        for (std::size_t i = 0; i < stop; ++i) {
            if (text[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        throw ConfigError("config parse error at line " + std::to_string(line) + ", column " +
                          std::to_string(col) + ": " + e.what());
    }

    only_keys(root, "config", {"experiment", "s", "s_prime", "grid", "sigma", "tolerances", "output", "seed",
                               "ball", "sweep", "fit", "impossibility", "dynamics", "comparison", "acceptance"});
    ExperimentConfig cfg;
    if (!root.contains("experiment") || !root["experiment"].is_string()) {
        throw ConfigError("config: missing string key 'experiment'");
    }
    cfg.experiment = root["experiment"].get<std::string>();
    const auto& names = experiment_names();
    if (std::find(names.begin(), names.end(), cfg.experiment) == names.end()) {
        throw ConfigError("config.experiment: unknown experiment '" + cfg.experiment + "'");
    }

    if (root.contains("s")) {
        cfg.s = number(root, "s", "config");
        if (!(cfg.s > 0.0 && cfg.s <= 1.0)) throw ConfigError("config.s: must lie in (0,1]");
    }
    if (root.contains("s_prime")) {
        cfg.s_prime = number(root, "s_prime", "config");
        if (!(*cfg.s_prime > cfg.s && *cfg.s_prime < 1.0)) throw ConfigError("config.s_prime: must lie in (s,1)");
    }

    if (root.contains("grid")) {
        const json& g = root["grid"];
        only_keys(g, "grid", {"dim", "bounds", "n"});
        if (g.contains("dim")) cfg.dim = integer(g, "dim", "grid");
        if (cfg.dim != 1 && cfg.dim != 2) throw ConfigError("grid.dim: must be 1 or 2");
        if (g.contains("n")) cfg.n = integer(g, "n", "grid");
        if (cfg.n < 8) throw ConfigError("grid.n: need at least 8 nodes per axis");
        if (g.contains("bounds")) {
            const json& b = g["bounds"];
            cfg.bounds.clear();
            if (cfg.dim == 1) {
                cfg.bounds.push_back(interval(b, "grid.bounds"));
            } else {
                if (!b.is_array() || b.size() != 2) throw ConfigError("grid.bounds: expected [[x0,x1],[y0,y1]]");
                cfg.bounds.push_back(interval(b[0], "grid.bounds[0]"));
                cfg.bounds.push_back(interval(b[1], "grid.bounds[1]"));
            }
        } else if (cfg.dim == 2) {
            cfg.bounds = {{-1.0, 1.0}, {-1.0, 1.0}};
        }
        try {
            (void)cfg.grid();
        } catch (const std::invalid_argument& e) {
            throw ConfigError(std::string("grid: ") + e.what());
        }
    }

    if (root.contains("sigma")) cfg.sigma = parse_sigma(root["sigma"], cfg.dim);

    if (root.contains("tolerances")) {
        const json& t = root["tolerances"];
        only_keys(t, "tolerances", {"residual", "eigen"});
        if (t.contains("residual")) cfg.residual_tol = positive(t, "residual", "tolerances");
        if (t.contains("eigen")) cfg.eigen_tol = positive(t, "eigen", "tolerances");
    }
    if (root.contains("output")) {
        if (!root["output"].is_string()) throw ConfigError("config.output: expected a string");
        cfg.output = root["output"].get<std::string>();
    }
    if (root.contains("seed")) {
        if (!root["seed"].is_number_unsigned()) throw ConfigError("config.seed: expected a nonnegative integer");
        cfg.seed = root["seed"].get<std::uint64_t>();
    }
    if (root.contains("ball")) {
        const json& b = root["ball"];
        only_keys(b, "ball", {"center", "radius"});
        if (b.contains("center")) cfg.ball_center = point(b["center"], cfg.dim, "ball.center");
        if (b.contains("radius")) cfg.ball_radius = positive(b, "radius", "ball");
    }
    if (root.contains("sweep")) {
        const json& w = root["sweep"];
        only_keys(w, "sweep", {"levels"});
        if (w.contains("levels")) cfg.levels = integer(w, "levels", "sweep");
        if (cfg.levels < 1 || cfg.levels > 30) throw ConfigError("sweep.levels: must lie in [1,30]");
    }
    if (root.contains("fit")) {
        const json& f = root["fit"];
        only_keys(f, "fit", {"radii", "resolution"});
        if (f.contains("radii")) cfg.fit_radii = positive_list(f, "radii", "fit");
        if (f.contains("resolution")) cfg.fit_resolution = integer(f, "resolution", "fit");
    }
    if (root.contains("impossibility")) {
        const json& m = root["impossibility"];
        only_keys(m, "impossibility", {"M", "resolution"});
        if (m.contains("M")) cfg.contrasts = positive_list(m, "M", "impossibility");
        if (m.contains("resolution")) cfg.fit_resolution = integer(m, "resolution", "impossibility");
    }
    if (root.contains("dynamics")) {
        const json& d = root["dynamics"];
        only_keys(d, "dynamics", {"T"});
        if (d.contains("T")) cfg.horizon = positive(d, "T", "dynamics");
    }
    if (root.contains("comparison")) {
        const json& c = root["comparison"];
        only_keys(c, "comparison", {"pairs"});
        if (c.contains("pairs")) cfg.pairs = integer(c, "pairs", "comparison");
        if (cfg.pairs < 1) throw ConfigError("comparison.pairs: must be positive");
    }
    if (root.contains("acceptance")) {
        const json& a = root["acceptance"];
        only_keys(a, "acceptance", {"fast"});
        if (a.contains("fast")) {
            if (!a["fast"].is_boolean()) throw ConfigError("acceptance.fast: expected a boolean");
            cfg.fast = a["fast"].get<bool>();
        }
    }

    // the resource must be valid on the grid before anything runs
    if (cfg.sigma) (void)evaluate_resource(*cfg.sigma, cfg.grid(), 1.0);
    return cfg;
}

Field evaluate_resource(const ResourceSpec& spec, const Grid& grid, double lambda1) {
    Field out(static_cast<Eigen::Index>(grid.size()));
    NodeSet ball;
    if (spec.kind == ResourceSpec::Kind::bump) {
        if (spec.tau < 0.0) throw ConfigError("sigma: bump height tau must be nonnegative");
        try {
            ball = ball_nodes(grid, spec.center, spec.radius);
        } catch (const std::invalid_argument& e) {
            throw ConfigError(std::string("sigma: ") + e.what());
        }
        out = spec.tau * ball.indicator(grid.size());
    }
    for (std::size_t k = 0; k < grid.size(); ++k) {
        const Point p = grid.node(k);
        double v = out[static_cast<Eigen::Index>(k)];
        if (spec.kind == ResourceSpec::Kind::constant) v = spec.value.value_or(2.0 * lambda1);
        if (spec.kind == ResourceSpec::Kind::expression) v = (*spec.expression)(p);
        if (!(v >= 0.0) || !std::isfinite(v)) {
            std::ostringstream os;
            os << "sigma evaluates to " << v << " at node (" << p[0];
            if (grid.dim() == 2) os << ", " << p[1];
            os << "); the resource must be finite and nonnegative";
            throw ConfigError(os.str());
        }
        out[static_cast<Eigen::Index>(k)] = v;
    }
    return out;
}

}  // namespace dispersal
