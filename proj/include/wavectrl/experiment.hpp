#pragma once

#include <algorithm>
#include <array>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <numbers>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <json.hpp>

#include "wavectrl/baselines.hpp"
#include "wavectrl/errors.hpp"
#include "wavectrl/grid.hpp"
#include "wavectrl/least_squares.hpp"
#include "wavectrl/nonlinearity.hpp"
#include "wavectrl/region.hpp"

namespace wavectrl {

using json = nlohmann::json;

inline constexpr int config_schema_version = 1;

/// Named analytic profile for initial or target data.
struct Profile {
    std::string type = "zero";  ///< zero | eigenmode | bump | random_modes
    double amplitude = 0.0;
    std::array<int, 2> mode{1, 1};
    std::array<double, 2> center{0.5, 0.5};
    double width = 0.25;
    int modes = 4;
};

struct ScenarioConfig {
    int dim = 1;
    std::array<double, 2> length{1.0, 1.0};
    int nx = 200;
    int ny = 0;
    int nt = 600;
    double T = 2.5;
    ControlRegion region = ControlRegion::interval(0.8, 1.0);
    std::array<double, 2> x0{-0.1, -0.1};
};

struct SweepConfig {
    std::string parameter;     ///< dotted path into the configuration
    std::vector<json> values;
};

struct ExperimentConfig {
    std::string name = "experiment";
    ScenarioConfig scenario;
    Profile u0, u1, z0, z1;
    std::string nonlinearity = "zero";
    std::map<std::string, double> nonlinearity_params;
    std::vector<Method> methods{Method::least_squares};
    LSConfig ls;
    std::string out_dir;
    std::uint64_t seed = 1;
    std::optional<SweepConfig> sweep;
    json raw;  ///< the validated document, for hashing and sweep substitution
};

namespace detail {

/// Reads keys of one JSON object, rejecting any key that was never asked for.
class Fields {
public:
    Fields(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw ConfigError(where("") + ": expected an object");
    }

    std::string where(const std::string& key) const {
        if (path_.empty()) return key;
        return key.empty() ? path_ : path_ + "." + key;
    }

    bool has(const std::string& key) {
        seen_.insert(key);
        return j_.contains(key) && !j_.at(key).is_null();
    }

    const json& at(const std::string& key) {
        seen_.insert(key);
        if (!j_.contains(key)) throw ConfigError(where(key) + ": missing required field");
        return j_.at(key);
    }

    double number(const std::string& key, std::optional<double> fallback = std::nullopt) {
        if (!has(key)) {
            if (fallback) return *fallback;
            throw ConfigError(where(key) + ": missing required field");
        }
        const json& v = j_.at(key);
        if (!v.is_number()) throw ConfigError(where(key) + ": expected a number");
        const double d = v.get<double>();
        if (!std::isfinite(d)) throw ConfigError(where(key) + ": must be finite");
        return d;
    }

    double positive(const std::string& key, std::optional<double> fallback = std::nullopt) {
        const double d = number(key, fallback);
        if (!(d > 0.0)) throw ConfigError(where(key) + ": must be positive");
        return d;
    }

    int integer(const std::string& key, std::optional<int> fallback = std::nullopt) {
        if (!has(key)) {
            if (fallback) return *fallback;
            throw ConfigError(where(key) + ": missing required field");
        }
        const json& v = j_.at(key);
        if (!v.is_number_integer()) throw ConfigError(where(key) + ": expected an integer");
        return v.get<int>();
    }

    std::string string(const std::string& key, std::optional<std::string> fallback = std::nullopt) {
        if (!has(key)) {
            if (fallback) return *fallback;
            throw ConfigError(where(key) + ": missing required field");
        }
        const json& v = j_.at(key);
        if (!v.is_string()) throw ConfigError(where(key) + ": expected a string");
        return v.get<std::string>();
    }

    bool boolean(const std::string& key, bool fallback) {
        if (!has(key)) return fallback;
        const json& v = j_.at(key);
        if (!v.is_boolean()) throw ConfigError(where(key) + ": expected true or false");
        return v.get<bool>();
    }

    std::vector<double> numbers(const std::string& key, std::size_t n) {
        const json& v = at(key);
        if (!v.is_array() || v.size() != n)
            throw ConfigError(where(key) + ": expected an array of " + std::to_string(n) + " numbers");
        std::vector<double> out;
        for (const auto& e : v) {
            if (!e.is_number()) throw ConfigError(where(key) + ": expected numbers");
            out.push_back(e.get<double>());
        }
        return out;
    }

    void finish() const {
        for (auto it = j_.begin(); it != j_.end(); ++it)
            if (!seen_.count(it.key())) throw ConfigError(where(it.key()) + ": unknown key");
    }

private:
    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

inline Profile parse_profile(const json& j, const std::string& path, int dim) {
    Fields f(j, path);
    Profile p;
    p.type = f.string("type");
    if (p.type == "zero") {
    } else if (p.type == "eigenmode") {
        p.amplitude = f.number("amplitude");
        if (f.has("mode")) {
            const json& m = f.at("mode");
            if (!m.is_array() || static_cast<int>(m.size()) != dim)
                throw ConfigError(f.where("mode") + ": expected " + std::to_string(dim) + " integers");
            for (int a = 0; a < dim; ++a) {
                if (!m[a].is_number_integer() || m[a].get<int>() < 1)
                    throw ConfigError(f.where("mode") + ": modes must be positive integers");
                p.mode[a] = m[a].get<int>();
            }
        }
    } else if (p.type == "bump") {
        p.amplitude = f.number("amplitude");
        const auto c = f.numbers("center", dim);
        for (int a = 0; a < dim; ++a) p.center[a] = c[a];
        p.width = f.positive("width");
    } else if (p.type == "random_modes") {
        p.amplitude = f.number("amplitude");
        p.modes = f.integer("modes", 4);
        if (p.modes < 1) throw ConfigError(f.where("modes") + ": must be at least 1");
    } else {
        throw ConfigError(f.where("type") + ": unknown profile '" + p.type + "'");
    }
    f.finish();
    return p;
}

inline Side parse_side(const std::string& s, const std::string& path) {
    if (s == "left") return Side::left;
    if (s == "right") return Side::right;
    if (s == "bottom") return Side::bottom;
    if (s == "top") return Side::top;
    throw ConfigError(path + ": unknown side '" + s + "'");
}

inline ControlRegion parse_region(const json& j, const std::string& path, const ScenarioConfig& sc) {
    Fields f(j, path);
    ControlRegion r;
    if (f.has("intervals")) {
        if (sc.dim != 1) throw ConfigError(f.where("intervals") + ": only valid in 1D");
        std::vector<std::array<double, 2>> ivs;
        for (const auto& iv : f.at("intervals")) {
            if (!iv.is_array() || iv.size() != 2 || !iv[0].is_number() || !iv[1].is_number())
                throw ConfigError(f.where("intervals") + ": expected [a, b] pairs");
            ivs.push_back({iv[0].get<double>(), iv[1].get<double>()});
        }
        r = ControlRegion::intervals(ivs);
    } else if (f.has("rectangles")) {
        if (sc.dim != 2) throw ConfigError(f.where("rectangles") + ": only valid in 2D");
        std::vector<Box> boxes;
        int i = 0;
        for (const auto& b : f.at("rectangles")) {
            Fields fb(b, f.where("rectangles") + "[" + std::to_string(i++) + "]");
            const auto lo = fb.numbers("lo", 2);
            const auto hi = fb.numbers("hi", 2);
            fb.finish();
            boxes.push_back(Box{{lo[0], lo[1]}, {hi[0], hi[1]}});
        }
        r = ControlRegion::rectangles(boxes);
    } else if (f.has("sides")) {
        std::vector<Side> sides;
        for (const auto& s : f.at("sides")) {
            if (!s.is_string()) throw ConfigError(f.where("sides") + ": expected side names");
            sides.push_back(parse_side(s.get<std::string>(), f.where("sides")));
        }
        r = ControlRegion::side_strips(sc.dim, sc.length, sides, f.positive("width"));
    } else {
        throw ConfigError(f.where("") + ": one of intervals, rectangles or sides is required");
    }
    r.set_smoothing(f.boolean("smoothing", false));
    f.finish();
    return r;
}

inline ScenarioConfig parse_scenario(const json& j) {
    Fields f(j, "scenario");
    ScenarioConfig sc;
    sc.dim = f.integer("dim", 1);
    if (sc.dim != 1 && sc.dim != 2) throw ConfigError("scenario.dim: must be 1 or 2");
    const auto len = f.numbers("length", sc.dim);
    for (int a = 0; a < sc.dim; ++a) {
        if (!(len[a] > 0.0)) throw ConfigError("scenario.length: extents must be positive");
        sc.length[a] = len[a];
    }
    sc.nx = f.integer("nx");
    if (sc.dim == 2) sc.ny = f.integer("ny");
    sc.nt = f.integer("nt");
    sc.T = f.positive("T");
    const auto x0 = f.numbers("x0", sc.dim);
    for (int a = 0; a < sc.dim; ++a) sc.x0[a] = x0[a];
    sc.region = parse_region(f.at("region"), "scenario.region", sc);
    f.finish();
    try {
        const SpaceTimeGrid g = sc.dim == 1 ? SpaceTimeGrid::interval(sc.length[0], sc.nx, sc.T, sc.nt)
                                            : SpaceTimeGrid::rectangle(sc.length[0], sc.length[1], sc.nx, sc.ny,
                                                                       sc.T, sc.nt);
        (void)sc.region.indicator(g);
    } catch (const ConfigError& e) {
        throw ConfigError(std::string("scenario: ") + e.what());
    }
    try {
        (void)check_geometric_condition(sc.dim, sc.length, sc.region, sc.T, sc.x0);
    } catch (const PreconditionError& e) {
        throw ConfigError(std::string("scenario.x0: ") + e.what());
    }
    return sc;
}

inline InitStrategy parse_init(const std::string& s, const std::string& path) {
    if (s == "linear") return InitStrategy::linear;
    if (s == "linear_frozen") return InitStrategy::linear_frozen;
    throw ConfigError(path + ": unknown initialization '" + s + "'");
}

inline LSConfig parse_solver(const json& j) {
    Fields f(j, "solver");
    LSConfig c;
    c.m = f.number("m", c.m);
    c.tol = f.positive("tol", c.tol);
    c.floor_factor = f.number("floor_factor", c.floor_factor);
    c.max_iter = f.integer("max_iter", c.max_iter);
    c.scan_points = f.integer("scan_points", c.scan_points);
    c.golden_rel_width = f.positive("golden_rel_width", c.golden_rel_width);
    c.C = f.positive("C", c.C);
    c.divergence_bound = f.positive("divergence_bound", c.divergence_bound);
    c.init = parse_init(f.string("init", "linear"), "solver.init");
    if (f.has("forced_lambda")) c.forced_lambda = f.number("forced_lambda");
    const std::string pol = f.string("on_inner_failure", "accept_best");
    if (pol == "accept_best") c.on_inner_failure = InnerFailurePolicy::accept_best;
    else if (pol == "abort") c.on_inner_failure = InnerFailurePolicy::abort;
    else throw ConfigError("solver.on_inner_failure: expected accept_best or abort");
    f.finish();
    return c;
}

inline InnerSettings parse_inner(const json& j) {
    Fields f(j, "inner");
    InnerSettings s;
    if (f.has("eps_reg")) s.eps_reg = f.number("eps_reg");
    s.tol = f.positive("tol", s.tol);
    s.max_iter = f.integer("max_iter", s.max_iter);
    s.precondition = f.boolean("precondition", s.precondition);
    f.finish();
    return s;
}

/// Sets the value at a dotted path, creating intermediate objects.
inline void set_path(json& doc, const std::string& path, const json& value) {
    json* cur = &doc;
    std::size_t start = 0;
    while (true) {
        const std::size_t dot = path.find('.', start);
        const std::string key = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
        if (key.empty()) throw ConfigError("sweep.parameter: malformed path '" + path + "'");
        if (dot == std::string::npos) {
            // Objects merge into objects so one sweep point can move several coupled fields.
            if (value.is_object() && cur->contains(key) && (*cur)[key].is_object())
                (*cur)[key].merge_patch(value);
            else
                (*cur)[key] = value;
            return;
        }
        if (!cur->contains(key) || !(*cur)[key].is_object()) (*cur)[key] = json::object();
        cur = &(*cur)[key];
        start = dot + 1;
    }
}

}  // namespace detail

/// Validates and converts a configuration document. Field paths appear in every error.
inline ExperimentConfig parse_config(const json& doc) {
    detail::Fields f(doc, "");
    ExperimentConfig c;
    c.raw = doc;
    const int version = f.integer("schema_version");
    if (version != config_schema_version)
        throw ConfigError("schema_version: unsupported version " + std::to_string(version));
    c.name = f.string("name", "experiment");
    c.scenario = detail::parse_scenario(f.at("scenario"));
    if (f.has("data")) {
        detail::Fields fd(f.at("data"), "data");
        auto state = [&](const std::string& key, Profile& pos, Profile& vel) {
            if (!fd.has(key)) return;
            detail::Fields fs(fd.at(key), "data." + key);
            if (fs.has("position")) pos = detail::parse_profile(fs.at("position"), fs.where("position"), c.scenario.dim);
            if (fs.has("velocity")) vel = detail::parse_profile(fs.at("velocity"), fs.where("velocity"), c.scenario.dim);
            fs.finish();
        };
        state("initial", c.u0, c.u1);
        state("target", c.z0, c.z1);
        fd.finish();
    }
    {
        detail::Fields fn(f.at("nonlinearity"), "nonlinearity");
        c.nonlinearity = fn.string("name");
        if (fn.has("params")) {
            const json& ps = fn.at("params");
            if (!ps.is_object()) throw ConfigError("nonlinearity.params: expected an object");
            for (auto it = ps.begin(); it != ps.end(); ++it) {
                if (!it.value().is_number()) throw ConfigError("nonlinearity.params." + it.key() + ": expected a number");
                c.nonlinearity_params[it.key()] = it.value().get<double>();
            }
        }
        fn.finish();
        try {
            (void)builtin(c.nonlinearity, c.nonlinearity_params);
        } catch (const ConfigError& e) {
            throw ConfigError(std::string("nonlinearity: ") + e.what());
        }
    }
    if (f.has("methods")) {
        const json& ms = f.at("methods");
        if (!ms.is_array() || ms.empty()) throw ConfigError("methods: expected a nonempty array");
        c.methods.clear();
        for (const auto& m : ms) {
            if (!m.is_string()) throw ConfigError("methods: expected method names");
            try {
                c.methods.push_back(parse_method(m.get<std::string>()));
            } catch (const ConfigError& e) {
                throw ConfigError(std::string("methods: ") + e.what());
            }
        }
    }
    if (f.has("solver")) c.ls = detail::parse_solver(f.at("solver"));
    if (f.has("inner")) c.ls.inner = detail::parse_inner(f.at("inner"));
    try {
        c.ls.validate();
    } catch (const ConfigError& e) {
        throw ConfigError(std::string("solver: ") + e.what());
    }
    if (f.has("output")) {
        detail::Fields fo(f.at("output"), "output");
        c.out_dir = fo.string("dir", "");
        fo.finish();
    }
    if (f.has("seed")) {
        const json& s = f.at("seed");
        if (!s.is_number_unsigned()) throw ConfigError("seed: expected a nonnegative integer");
        c.seed = s.get<std::uint64_t>();
    }
    if (f.has("sweep")) {
        detail::Fields fs(f.at("sweep"), "sweep");
        SweepConfig sw;
        sw.parameter = fs.string("parameter");
        const json& vals = fs.at("values");
        if (!vals.is_array()) throw ConfigError("sweep.values: expected an array");
        for (const auto& v : vals) sw.values.push_back(v);
        fs.finish();
        c.sweep = std::move(sw);
    }
    f.finish();
    return c;
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read configuration file '" + path.string() + "'");
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("'" + path.string() + "' is not valid JSON: " + e.what());
    }
    return parse_config(doc);
}

/// FNV-1a of the canonical configuration text, output location excluded.
inline std::string config_hash(const json& raw) {
    json doc = raw;
    doc.erase("output");
    const std::string text = doc.dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << h;
    return os.str();
}

inline SpaceTimeGrid make_grid(const ScenarioConfig& s) {
    if (s.dim == 1) return SpaceTimeGrid::interval(s.length[0], s.nx, s.T, s.nt);
    return SpaceTimeGrid::rectangle(s.length[0], s.length[1], s.nx, s.ny, s.T, s.nt);
}

/// Samples a profile at the grid nodes; values on boundary nodes are zero.
inline std::vector<double> sample_profile(const Profile& p, const SpaceTimeGrid& g, std::uint64_t seed,
                                          std::uint64_t salt) {
    const double pi = std::numbers::pi;
    std::vector<double> v(g.node_count(), 0.0);
    if (p.type == "zero") return v;
    std::vector<double> coef;
    if (p.type == "random_modes") {
        std::mt19937_64 rng(seed * 0x9e3779b97f4a7c15ULL + salt);
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        const int n2 = g.dim == 2 ? p.modes : 1;
        coef.resize(static_cast<std::size_t>(p.modes) * n2);
        for (auto& c : coef) c = u(rng);
    }
    for (int i = 0; i < g.node_count(); ++i) {
        if (g.is_boundary(i)) continue;
        const double x = g.x(i);
        const double y = g.dim == 2 ? g.y(i) : 0.0;
        double val = 0.0;
        if (p.type == "eigenmode") {
            val = std::sin(p.mode[0] * pi * x / g.length[0]);
            if (g.dim == 2) val *= std::sin(p.mode[1] * pi * y / g.length[1]);
        } else if (p.type == "bump") {
            double r2 = (x - p.center[0]) * (x - p.center[0]);
            if (g.dim == 2) r2 += (y - p.center[1]) * (y - p.center[1]);
            const double r = std::sqrt(r2) / p.width;
            if (r < 1.0) {
                const double c = std::cos(0.5 * pi * r);
                val = c * c;
            }
        } else if (p.type == "random_modes") {
            const int n2 = g.dim == 2 ? p.modes : 1;
            for (int k = 1; k <= p.modes; ++k) {
                for (int l = 1; l <= n2; ++l) {
                    double s = std::sin(k * pi * x / g.length[0]) / (k * k);
                    if (g.dim == 2) s *= std::sin(l * pi * y / g.length[1]) / (l * l);
                    val += coef[static_cast<std::size_t>(k - 1) * n2 + (l - 1)] * s;
                }
            }
        }
        v[i] = p.amplitude * val;
    }
    return v;
}

inline GeometryReport geometry_report(const ExperimentConfig& c) {
    return check_geometric_condition(c.scenario.dim, c.scenario.length, c.scenario.region, c.scenario.T,
                                     c.scenario.x0);
}

inline SemilinearProblem make_problem(const ExperimentConfig& c) {
    const SpaceTimeGrid g = make_grid(c.scenario);
    StatePair u(g), z(g);
    u.position = sample_profile(c.u0, g, c.seed, 1);
    u.velocity = sample_profile(c.u1, g, c.seed, 2);
    z.position = sample_profile(c.z0, g, c.seed, 3);
    z.velocity = sample_profile(c.z1, g, c.seed, 4);
    SemilinearProblem p = SemilinearProblem::make(g, c.scenario.region, builtin(c.nonlinearity, c.nonlinearity_params),
                                                  std::move(u), std::move(z));
    p.geometric_condition = geometry_report(c).holds;
    return p;
}

// ---------------------------------------------------------------------------
// Output

/// Shortest round-trip decimal representation.
inline std::string format_number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

inline std::string format_optional(const std::optional<double>& v) { return v ? format_number(*v) : ""; }

inline json optional_json(const std::optional<double>& v) {
    if (!v || !std::isfinite(*v)) return nullptr;
    return *v;
}

inline json finite_json(double v) {
    if (!std::isfinite(v)) return nullptr;
    return v;
}

inline const std::string& iterates_header() {
    static const std::string h =
        "scenario,config_hash,method,k,E,sqrt_2E,lambda,lambda_tilde,F1_norm,Y1_norm,y_L1,M_run,initial_defect,"
        "terminal_defect,inner_defect,cg_iterations,inner_converged,increment,d_of_y,c_of_y,e_k";
    return h;
}

inline std::string iterate_row(const std::string& scenario, const std::string& hash, Method m, const IterateRecord& r) {
    std::ostringstream os;
    os << scenario << ',' << hash << ',' << to_string(m) << ',' << r.k << ',' << format_number(r.E) << ','
       << format_number(std::sqrt(2.0 * r.E)) << ',' << format_optional(r.lambda) << ','
       << format_optional(r.lambda_tilde) << ',' << format_optional(r.F1_norm) << ',' << format_optional(r.Y1_norm)
       << ',' << format_number(r.y_L1) << ',' << format_number(r.M_run) << ',' << format_number(r.initial_defect)
       << ',' << format_number(r.terminal_defect) << ',' << format_optional(r.inner_defect) << ','
       << (r.cg_iterations ? std::to_string(*r.cg_iterations) : "") << ','
       << (r.inner_converged ? (*r.inner_converged ? "1" : "0") : "") << ',' << format_optional(r.increment) << ','
       << format_number(r.diag.d_of_y) << ',' << format_optional(r.diag.c_of_y) << ',' << format_optional(r.diag.e_k);
    return os.str();
}

struct MethodOutcome {
    Method method = Method::least_squares;
    LSResult result;
    std::optional<OrderEstimate> order;
    std::optional<double> decay_C;
};

inline MethodOutcome run_method(Method m, const SemilinearProblem& p, const LSConfig& cfg) {
    MethodOutcome o;
    o.method = m;
    o.result = solve(m, p, cfg);
    try {
        o.order = estimate_order(o.result.records);
    } catch (const PreconditionError&) {
    }
    if (m == Method::least_squares) o.decay_C = smallest_decay_constant(p.g, o.result.records);
    return o;
}

inline double final_sqrt_2E(const MethodOutcome& o) { return std::sqrt(2.0 * o.result.records.back().E); }

inline int outer_iterations(const MethodOutcome& o) { return o.result.records.back().k; }

inline json geometry_json(const GeometryReport& g) {
    return {{"holds", g.holds}, {"time_ok", g.time_ok}, {"coverage_ok", g.coverage_ok}, {"T_min", g.T_min},
            {"gamma0", g.gamma0_description}};
}

inline json summary_json(const ExperimentConfig& c, const std::string& hash, const GeometryReport& geo,
                         const std::vector<MethodOutcome>& outs) {
    json methods = json::array();
    for (const auto& o : outs) {
        const auto& rec = o.result.records;
        const double s0 = std::sqrt(2.0 * rec.front().E);
        const double s1 = final_sqrt_2E(o);
        methods.push_back({{"method", to_string(o.method)},
                           {"status", to_string(o.result.status)},
                           {"iterations", outer_iterations(o)},
                           {"E_initial", finite_json(rec.front().E)},
                           {"E_final", finite_json(rec.back().E)},
                           {"sqrt_2E_final", finite_json(s1)},
                           {"reduction", s1 > 0.0 ? finite_json(s0 / s1) : json(nullptr)},
                           {"order", o.order ? json(o.order->order) : json(nullptr)},
                           {"order_fit_residual", o.order ? json(o.order->fit_residual) : json(nullptr)},
                           {"terminal_defect", finite_json(rec.back().terminal_defect)},
                           {"M_run", finite_json(rec.back().M_run)},
                           {"smallest_decay_C", optional_json(o.decay_C)},
                           {"wall_time_s", o.result.wall_time}});
    }
    return {{"schema_version", config_schema_version},
            {"scenario", c.name},
            {"config_hash", hash},
            {"nonlinearity", {{"name", c.nonlinearity}, {"params", c.nonlinearity_params}}},
            {"E_scale", outs.empty() ? json(nullptr) : finite_json(outs.front().result.E_scale)},
            {"geometry", geometry_json(geo)},
            {"methods", methods}};
}

inline void write_text(const std::filesystem::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + p.string() + "'");
    out << text;
}

inline std::string iterates_csv(const ExperimentConfig& c, const std::string& hash,
                                const std::vector<MethodOutcome>& outs) {
    std::ostringstream os;
    os << iterates_header() << '\n';
    for (const auto& o : outs)
        for (const auto& r : o.result.records) os << iterate_row(c.name, hash, o.method, r) << '\n';
    return os.str();
}

inline void print_table(std::ostream& os, const std::vector<MethodOutcome>& outs) {
    os << std::left << std::setw(16) << "method" << std::setw(14) << "status" << std::right << std::setw(6) << "iter"
       << std::setw(14) << "sqrt(2E)" << std::setw(10) << "order" << '\n';
    for (const auto& o : outs) {
        os << std::left << std::setw(16) << to_string(o.method) << std::setw(14) << to_string(o.result.status)
           << std::right << std::setw(6) << outer_iterations(o) << std::setw(14) << std::scientific
           << std::setprecision(3) << final_sqrt_2E(o) << std::setw(10);
        if (o.order)
            os << std::fixed << std::setprecision(3) << o.order->order;
        else
            os << "-";
        os << std::defaultfloat << '\n';
    }
}

// ---------------------------------------------------------------------------
// Subcommands

enum ExitCode : int { exit_ok = 0, exit_config = 1, exit_method_failure = 2 };

struct RunOptions {
    std::optional<std::filesystem::path> out_dir;
    int threads = 1;
    std::optional<std::uint64_t> seed;
    bool verbose = false;
    std::ostream* log = &std::cout;
};

inline std::filesystem::path output_dir(const ExperimentConfig& c, const RunOptions& o) {
    if (o.out_dir) return *o.out_dir;
    if (!c.out_dir.empty()) return c.out_dir;
    return std::filesystem::path("out") / c.name;
}

inline void apply_options(ExperimentConfig& c, const RunOptions& o) {
    if (o.seed) c.seed = *o.seed;
}

inline void print_records(std::ostream& os, Method m, const LSResult& r) {
    for (const auto& rec : r.records) {
        os << "  " << to_string(m) << " k=" << rec.k << " sqrt(2E)=" << std::scientific << std::setprecision(4)
           << std::sqrt(2.0 * rec.E);
        if (rec.lambda) os << " lambda=" << std::fixed << std::setprecision(6) << *rec.lambda;
        if (rec.cg_iterations) os << " cg=" << *rec.cg_iterations;
        os << std::defaultfloat << '\n';
    }
}

inline std::vector<MethodOutcome> run_methods(const ExperimentConfig& c, const std::vector<Method>& methods,
                                              const RunOptions& o) {
    const SemilinearProblem p = make_problem(c);
    std::vector<MethodOutcome> outs;
    for (Method m : methods) {
        outs.push_back(run_method(m, p, c.ls));
        if (o.verbose) print_records(*o.log, m, outs.back().result);
    }
    return outs;
}

inline void write_run_outputs(const ExperimentConfig& c, const std::filesystem::path& dir,
                              const std::vector<MethodOutcome>& outs) {
    std::filesystem::create_directories(dir);
    const std::string hash = config_hash(c.raw);
    write_text(dir / "iterates.csv", iterates_csv(c, hash, outs));
    write_text(dir / "summary.json", summary_json(c, hash, geometry_report(c), outs).dump(2) + "\n");
}

/// Runs the configured methods; 0 iff every method converged.
inline int run(ExperimentConfig c, const RunOptions& o) {
    apply_options(c, o);
    const auto outs = run_methods(c, c.methods, o);
    const auto dir = output_dir(c, o);
    write_run_outputs(c, dir, outs);
    *o.log << "scenario " << c.name << " (config " << config_hash(c.raw) << ")\n";
    print_table(*o.log, outs);
    *o.log << "outputs written to " << dir.string() << '\n';
    const bool ok = std::all_of(outs.begin(), outs.end(),
                                [](const MethodOutcome& m) { return m.result.status == Status::converged; });
    return ok ? exit_ok : exit_method_failure;
}

/// Runs every method on the scenario; 0 iff least_squares converged.
inline int compare(ExperimentConfig c, const RunOptions& o) {
    apply_options(c, o);
    const std::vector<Method> all{Method::least_squares, Method::newton_classic, Method::variant, Method::picard};
    const auto outs = run_methods(c, all, o);
    const auto dir = output_dir(c, o);
    write_run_outputs(c, dir, outs);
    std::ostringstream csv;
    csv << "method,iterations,final_sqrt_2E,status,order\n";
    for (const auto& m : outs)
        csv << to_string(m.method) << ',' << outer_iterations(m) << ',' << format_number(final_sqrt_2E(m)) << ','
            << to_string(m.result.status) << ',' << (m.order ? format_number(m.order->order) : "") << '\n';
    write_text(dir / "comparison.csv", csv.str());
    *o.log << "scenario " << c.name << " (config " << config_hash(c.raw) << ")\n";
    print_table(*o.log, outs);
    *o.log << "outputs written to " << dir.string() << '\n';
    return outs.front().result.status == Status::converged ? exit_ok : exit_method_failure;
}

/// Runs every sweep point independently and writes one summary row per (point, method).
inline int sweep(ExperimentConfig c, const RunOptions& o) {
    apply_options(c, o);
    if (!c.sweep) throw ConfigError("sweep: the configuration declares no sweep");
    if (c.sweep->values.empty()) throw ConfigError("sweep.values: the sweep list is empty");
    const std::size_t n = c.sweep->values.size();
    std::vector<ExperimentConfig> points;
    for (std::size_t i = 0; i < n; ++i) {
        json doc = c.raw;
        doc.erase("sweep");
        detail::set_path(doc, c.sweep->parameter, c.sweep->values[i]);
        ExperimentConfig pc;
        try {
            pc = parse_config(doc);
        } catch (const ConfigError& e) {
            throw ConfigError("sweep.values[" + std::to_string(i) + "]: " + e.what());
        }
        pc.seed = c.seed;
        points.push_back(std::move(pc));
    }
    std::vector<std::vector<MethodOutcome>> results(n);
    std::vector<std::string> errors(n);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < n; i = next++) {
            try {
                RunOptions quiet = o;
                quiet.verbose = false;
                results[i] = run_methods(points[i], points[i].methods, quiet);
            } catch (const std::exception& e) {
                errors[i] = e.what();
            }
        }
    };
    const int nthreads = std::max(1, std::min<int>(o.threads, static_cast<int>(n)));
    {
        std::vector<std::jthread> pool;
        for (int t = 1; t < nthreads; ++t) pool.emplace_back(worker);
        worker();
    }
    const auto dir = output_dir(c, o);
    std::filesystem::create_directories(dir);
    const std::string hash = config_hash(c.raw);
    std::ostringstream csv;
    csv << "point,parameter,value,config_hash,method,status,iterations,final_sqrt_2E,order,terminal_defect,error\n";
    bool ok = true;
    for (std::size_t i = 0; i < n; ++i) {
        const std::string value = c.sweep->values[i].dump();
        std::string quoted = "\"";
        for (char ch : value) quoted += ch == '"' ? std::string("\"\"") : std::string(1, ch);
        quoted += '"';
        if (!errors[i].empty()) {
            ok = false;
            csv << i << ',' << c.sweep->parameter << ',' << quoted << ',' << hash << ",,error,,,,,\"" << errors[i]
                << "\"\n";
            *o.log << "point " << i << " failed: " << errors[i] << '\n';
            continue;
        }
        for (const auto& m : results[i]) {
            ok = ok && m.result.status == Status::converged;
            csv << i << ',' << c.sweep->parameter << ',' << quoted << ',' << hash << ',' << to_string(m.method) << ','
                << to_string(m.result.status) << ',' << outer_iterations(m) << ',' << format_number(final_sqrt_2E(m))
                << ',' << (m.order ? format_number(m.order->order) : "") << ','
                << format_number(m.result.records.back().terminal_defect) << ",\n";
        }
        *o.log << "point " << i << " " << c.sweep->parameter << "=" << value << '\n';
        print_table(*o.log, results[i]);
    }
    write_text(dir / "sweep.csv", csv.str());
    *o.log << "outputs written to " << dir.string() << '\n';
    return ok ? exit_ok : exit_method_failure;
}

struct HypothesisReport {
    GeometryReport geometry;
    std::string H0, H2, Hs, beta;  ///< holds | fails | unknown
    std::optional<double> sampled_seminorm;
    std::optional<double> growth_witness;
    double beta_star_s = 0.0;
    std::vector<std::string> warnings;
};

/// Evaluates the hypotheses of the convergence theory for the configured scenario.
inline HypothesisReport check_hypotheses(const ExperimentConfig& c) {
    HypothesisReport r;
    r.geometry = geometry_report(c);
    r.H0 = r.geometry.holds ? "holds" : "fails";
    const Nonlinearity g = builtin(c.nonlinearity, c.nonlinearity_params);
    const double C = c.ls.C;
    r.beta_star_s = beta_star(g.s, C);
    if (g.growth) {
        const GrowthCheck gc = check_growth_H2(g, g.growth->alpha, g.growth->beta, 1e6, 20000);
        r.H2 = gc.holds ? "holds" : "fails";
        r.growth_witness = gc.witness;
        if (g.growth->beta < r.beta_star_s) {
            r.beta = "holds";
        } else {
            r.beta = "fails";
            std::ostringstream os;
            os << "growth coefficient beta=" << g.growth->beta << " is not below beta*(s)=" << r.beta_star_s
               << " for C=" << C;
            r.warnings.push_back(os.str());
        }
    } else {
        r.H2 = "unknown";
        r.beta = "unknown";
    }
    r.sampled_seminorm = holder_seminorm_sample(g, g.s, 100.0, 4000);
    if (g.seminorm)
        r.Hs = *r.sampled_seminorm <= *g.seminorm * (1.0 + 1e-9) + 1e-12 ? "holds" : "fails";
    else
        r.Hs = "unknown";
    return r;
}

inline void print_hypotheses(std::ostream& os, const ExperimentConfig& c, const HypothesisReport& r) {
    const Nonlinearity g = builtin(c.nonlinearity, c.nonlinearity_params);
    os << "scenario " << c.name << '\n';
    os << "(H0) geometric condition: " << r.H0 << "  T=" << c.scenario.T << " T_min=" << r.geometry.T_min
       << " Gamma0=" << r.geometry.gamma0_description << " coverage=" << (r.geometry.coverage_ok ? "yes" : "no")
       << '\n';
    os << "(H2) growth bound: " << r.H2;
    if (g.growth) os << "  alpha=" << g.growth->alpha << " beta=" << g.growth->beta;
    if (r.growth_witness) os << " violated at r=" << *r.growth_witness;
    os << '\n';
    os << "(Hs) Hoelder regularity of g': " << r.Hs << "  s=" << g.s;
    if (g.seminorm) os << " declared=" << *g.seminorm;
    if (r.sampled_seminorm) os << " sampled>=" << *r.sampled_seminorm;
    os << '\n';
    os << "beta < beta*(s): " << r.beta << "  beta*(s)=" << r.beta_star_s << " (C=" << c.ls.C << ")\n";
    for (const auto& w : r.warnings) os << "warning: " << w << '\n';
}

inline int check(ExperimentConfig c, const RunOptions& o) {
    apply_options(c, o);
    print_hypotheses(*o.log, c, check_hypotheses(c));
    return exit_ok;
}

}  // namespace wavectrl
