#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "wavectrl/errors.hpp"

namespace wavectrl {

/// Explicit growth bound |g'(r)| <= alpha + beta sqrt(ln(1+|r|)).
struct GrowthBound {
    double alpha = 0.0;
    double beta = 0.0;
};

/// A scalar nonlinearity g with its derivative and regularity data.
struct Nonlinearity {
    std::string name;
    std::map<std::string, double> params;
    std::function<double(double)> g;
    std::function<double(double)> dg;
    double s = 1.0;                   ///< Hoelder exponent of g'
    std::optional<double> seminorm;   ///< [g']_s when known in closed form
    std::optional<GrowthBound> growth;
    double g0 = 0.0;

    double value(double r) const { return g(r); }
    double derivative(double r) const { return dg(r); }

    /// True when g' is constant, i.e. g is affine.
    bool affine() const { return seminorm.has_value() && *seminorm == 0.0; }

    static Nonlinearity custom(std::string name, std::function<double(double)> g, std::function<double(double)> dg,
                               double s, std::optional<double> seminorm = std::nullopt,
                               std::optional<GrowthBound> growth = std::nullopt) {
        if (!(s >= 0.0 && s <= 1.0)) throw ConfigError("nonlinearity: Hoelder exponent must lie in [0,1]");
        Nonlinearity n;
        n.name = std::move(name);
        n.g = std::move(g);
        n.dg = std::move(dg);
        n.s = s;
        n.seminorm = seminorm;
        n.growth = growth;
        n.g0 = n.g(0.0);
        return n;
    }
};

namespace detail {

inline double param(const std::map<std::string, double>& p, const std::string& key, double fallback) {
    auto it = p.find(key);
    return it == p.end() ? fallback : it->second;
}

inline void require_keys(const std::string& name, const std::map<std::string, double>& p,
                         std::initializer_list<const char*> allowed) {
    for (const auto& [k, v] : p) {
        if (std::find_if(allowed.begin(), allowed.end(), [&](const char* a) { return k == a; }) == allowed.end())
            throw ConfigError("nonlinearity." + name + ": unknown parameter '" + k + "'");
        if (!std::isfinite(v)) throw ConfigError("nonlinearity." + name + ": parameter '" + k + "' must be finite");
    }
}

// g'(r) for r -> b + c r sqrt(ln(1+|r|)); the bracket behaves like sqrt|r| near 0.
inline double loglimit_slope(double r) {
    const double u = std::abs(r);
    if (u < 1e-6) return std::sqrt(u) * (1.5 - 0.625 * u);
    const double L = std::log1p(u);
    const double sL = std::sqrt(L);
    return sL + u / (2.0 * (1.0 + u) * sL);
}

}  // namespace detail

/// Builtin families: zero, linear{b}, lipschitz_sat{kappa}, loglimit{a,b,c}, cubic_sat{R}.
inline Nonlinearity builtin(const std::string& name, const std::map<std::string, double>& p = {}) {
    using detail::param;
    Nonlinearity n;
    n.name = name;
    n.params = p;
    if (name == "zero") {
        detail::require_keys(name, p, {});
        n.g = [](double) { return 0.0; };
        n.dg = [](double) { return 0.0; };
        n.s = 1.0;
        n.seminorm = 0.0;
        n.growth = GrowthBound{0.0, 0.0};
    } else if (name == "linear") {
        detail::require_keys(name, p, {"b"});
        const double b = param(p, "b", 1.0);
        n.params["b"] = b;
        n.g = [b](double r) { return b * r; };
        n.dg = [b](double) { return b; };
        n.s = 1.0;
        n.seminorm = 0.0;
        n.growth = GrowthBound{std::abs(b), 0.0};
    } else if (name == "lipschitz_sat") {
        detail::require_keys(name, p, {"kappa"});
        const double k = param(p, "kappa", 0.5);
        n.params["kappa"] = k;
        n.g = [k](double r) { return k * std::tanh(r); };
        n.dg = [k](double r) {
            const double c = std::cosh(r);
            return std::isfinite(c) ? k / (c * c) : 0.0;
        };
        n.s = 1.0;
        n.seminorm = std::abs(k) * 4.0 / (3.0 * std::sqrt(3.0));
        n.growth = GrowthBound{std::abs(k), 0.0};
    } else if (name == "loglimit") {
        detail::require_keys(name, p, {"a", "b", "c"});
        const double a = param(p, "a", 0.0);
        const double b = param(p, "b", 0.0);
        const double c = param(p, "c", 1.0);
        if (c < 0.0) throw ConfigError("nonlinearity.loglimit: c must be nonnegative");
        n.params["a"] = a;
        n.params["b"] = b;
        n.params["c"] = c;
        n.g = [a, b, c](double r) { return a + b * r + c * r * std::sqrt(std::log1p(std::abs(r))); };
        n.dg = [b, c](double r) { return b + c * detail::loglimit_slope(r); };
        // g' ~ 1.5 c sqrt|r| at the origin: Hoelder 1/2 there, no closed-form seminorm.
        n.s = c == 0.0 ? 1.0 : 0.5;
        if (c == 0.0) n.seminorm = 0.0;
        n.growth = GrowthBound{std::abs(b) + 0.5 * c, c};
    } else if (name == "cubic_sat") {
        detail::require_keys(name, p, {"R"});
        const double R = param(p, "R", 50.0);
        if (!(R > 0.0)) throw ConfigError("nonlinearity.cubic_sat: R must be positive");
        n.params["R"] = R;
        const double h = 0.2 * R;
        const double g_end = R * R * R + h * (3.0 * R * R + h * 6.0 * R * (0.5 - 1.0 / 6.0));
        const double slope_end = 3.6 * R * R;
        auto g_pos = [=](double u) {
            if (u <= R) return u * u * u;
            if (u <= 1.2 * R) {
                const double t = (u - R) / h;
                return R * R * R + h * (3.0 * R * R * t + h * 6.0 * R * (0.5 * t * t - t * t * t / 6.0));
            }
            return g_end + slope_end * (u - 1.2 * R);
        };
        auto dg_pos = [=](double u) {
            if (u <= R) return 3.0 * u * u;
            if (u <= 1.2 * R) {
                const double t = (u - R) / h;
                return 3.0 * R * R + h * 6.0 * R * (t - 0.5 * t * t);
            }
            return slope_end;
        };
        n.g = [g_pos](double r) { return r < 0.0 ? -g_pos(-r) : g_pos(r); };
        n.dg = [dg_pos](double r) { return dg_pos(std::abs(r)); };
        n.s = 1.0;
        n.seminorm = 6.0 * R;
        n.growth = GrowthBound{slope_end, 0.0};
    } else {
        throw ConfigError("nonlinearity: unknown builtin '" + name + "'");
    }
    n.g0 = n.g(0.0);
    return n;
}

/// Picard quotient (g(r) - g(0)) / r, with g'(r/2) below |r| = 1e-8.
inline double hat_g(const Nonlinearity& g, double r) {
    if (std::abs(r) < 1e-8) return g.dg(0.5 * r);
    return (g.g(r) - g.g0) / r;
}

/// Lower bound for [g']_s = sup |g'(a) - g'(b)| / |a - b|^s from pairs in [-R, R]:
/// neighbours on a uniform grid, mirrored far pairs, pairs at the origin and
/// seeded random pairs.
inline double holder_seminorm_sample(const Nonlinearity& g, double s, double R, int n_samples) {
    if (n_samples < 2) throw PreconditionError("holder_seminorm_sample: n_samples must be at least 2");
    const int n = n_samples;
    std::vector<double> r(n), d(n);
    for (int i = 0; i < n; ++i) {
        r[i] = -R + 2.0 * R * i / (n - 1);
        d[i] = g.dg(r[i]);
    }
    double best = 0.0;
    auto q = [&](double a, double da, double b, double db) {
        const double dist = std::abs(a - b);
        if (dist == 0.0) return;
        best = std::max(best, std::abs(da - db) / std::pow(dist, s));
    };
    for (int i = 0; i + 1 < n; ++i) q(r[i], d[i], r[i + 1], d[i + 1]);
    for (int i = 0; i < n / 2; ++i) q(r[i], d[i], r[n - 1 - i], d[n - 1 - i]);
    const double d0 = g.dg(0.0);
    for (double e = R; e > 1e-12; e *= 0.5) {
        q(0.0, d0, e, g.dg(e));
        q(0.0, d0, -e, g.dg(-e));
    }
    std::mt19937_64 rng(0x5eedULL);
    std::uniform_int_distribution<int> pick(0, n - 1);
    for (int t = 0; t < n; ++t) {
        const int i = pick(rng);
        const int j = pick(rng);
        q(r[i], d[i], r[j], d[j]);
    }
    return best;
}

struct GrowthCheck {
    bool holds = true;
    std::optional<double> witness;
};

/// Samples |g'| on [-R, R] (ordered by increasing |r|) against alpha + beta sqrt(ln(1+|r|)).
inline GrowthCheck check_growth_H2(const Nonlinearity& g, double alpha, double beta, double R, int n) {
    if (alpha < 0.0 || beta < 0.0) throw PreconditionError("check_growth_H2: alpha and beta must be nonnegative");
    if (n < 2) throw PreconditionError("check_growth_H2: need at least 2 samples");
    std::vector<double> mags;
    mags.reserve(2 * static_cast<std::size_t>(n) + 1);
    mags.push_back(0.0);
    for (int i = 1; i < n; ++i) mags.push_back(R * i / (n - 1));
    const double lo = std::min(1e-6, R);
    for (int i = 0; i < n; ++i) mags.push_back(lo * std::pow(R / lo, static_cast<double>(i) / (n - 1)));
    std::sort(mags.begin(), mags.end());
    for (double u : mags) {
        const double bound = alpha + beta * std::sqrt(std::log1p(u));
        for (double r : {u, -u}) {
            const double v = std::abs(g.dg(r));
            if (v > bound * (1.0 + 1e-12) + 1e-300) return {false, r};
        }
    }
    return {true, std::nullopt};
}

/// beta*(s) = sqrt(s / (2 C (2s + 1))).
inline double beta_star(double s, double C) {
    if (!(C > 0.0)) throw PreconditionError("beta_star: C must be positive");
    if (!(s >= 0.0 && s <= 1.0)) throw PreconditionError("beta_star: s must lie in [0,1]");
    return std::sqrt(s / (2.0 * C * (2.0 * s + 1.0)));
}

}  // namespace wavectrl
