#pragma once

#include <chrono>
#include <cmath>
#include <string>
#include <utility>

#include "wavectrl/errors.hpp"
#include "wavectrl/least_squares.hpp"
#include "wavectrl/linear_control.hpp"
#include "wavectrl/nonlinearity.hpp"
#include "wavectrl/norms.hpp"

namespace wavectrl {

enum class Method { picard, newton_classic, variant, least_squares };

inline const char* to_string(Method m) {
    switch (m) {
        case Method::picard: return "picard";
        case Method::newton_classic: return "newton_classic";
        case Method::variant: return "variant";
        case Method::least_squares: return "least_squares";
    }
    return "unknown";
}

inline Method parse_method(const std::string& s) {
    if (s == "picard") return Method::picard;
    if (s == "newton_classic") return Method::newton_classic;
    if (s == "variant") return Method::variant;
    if (s == "least_squares") return Method::least_squares;
    throw ConfigError("unknown method '" + s + "'");
}

/// Controlled solution of the linear system with potential hat g(xi) and source -g(0):
/// the Picard operator K.
inline ControlSolution picard_map(const SemilinearProblem& p, const SpaceTimeField& xi, const InnerSettings& inner) {
    LinearControlProblem lp = linear_problem(p, inner);
    const Nonlinearity& g = p.g;
    lp.potential = map_field(xi, [&g](double v) { return hat_g(g, v); });
    if (g.g0 != 0.0) lp.source = SpaceTimeField(p.grid, -g.g0);
    return solve_null_control(lp);
}

namespace detail {

/// Shared loop of the methods whose next iterate is a fresh minimal-norm controlled solution.
template <class Next>
LSResult fixed_point_loop(const SemilinearProblem& p, const LSConfig& cfg, Next next) {
    cfg.validate();
    p.validate();
    const auto t0 = std::chrono::steady_clock::now();
    LSResult res;
    ControlledPair pair = initialize(p, cfg.init, cfg.inner);
    double E = compute_E(p, pair);
    const double scale = residual_scale(p, pair);
    res.E_scale = 0.5 * scale * scale;
    const double threshold = stopping_threshold(cfg, E, scale);
    double M_run = 0.0;
    for (int k = 0;; ++k) {
        const auto tk = std::chrono::steady_clock::now();
        IterateRecord rec = base_record(p, pair, k, E, cfg.C, M_run);
        if (below_threshold(E, threshold)) {
            res.status = Status::converged;
            res.records.push_back(std::move(rec));
            break;
        }
        if (rec.y_L1 > cfg.divergence_bound || !std::isfinite(E)) {
            res.status = Status::diverged;
            res.records.push_back(std::move(rec));
            break;
        }
        if (k >= cfg.max_iter) {
            res.status = Status::cap_reached;
            res.records.push_back(std::move(rec));
            break;
        }
        ControlSolution s;
        try {
            s = next(pair);
        } catch (const BlowupError&) {
            res.status = Status::diverged;
            res.records.push_back(std::move(rec));
            break;
        }
        rec.inner_defect = s.defect;
        rec.cg_iterations = s.iterations;
        rec.inner_converged = s.converged;
        rec.increment = linf_L1(s.trajectory - pair.y);
        if (!s.converged && cfg.on_inner_failure == InnerFailurePolicy::abort) {
            res.status = Status::inner_failure;
            res.records.push_back(std::move(rec));
            break;
        }
        pair = pair_from(s, p.initial);
        E = compute_E(p, pair);
        rec.wall_time = seconds_since(tk);
        res.records.push_back(std::move(rec));
    }
    res.final = std::move(pair);
    res.wall_time = seconds_since(t0);
    return res;
}

}  // namespace detail

/// y_{k+1} = K(y_k), each step steering (u0, u1) to the same target with a fresh control.
inline LSResult picard_solve(const SemilinearProblem& p, const LSConfig& cfg) {
    return detail::fixed_point_loop(p, cfg, [&](const ControlledPair& pair) { return picard_map(p, pair.y, cfg.inner); });
}

/// Undamped Newton: the least-squares iteration with every step fixed to 1.
inline LSResult newton_classic_solve(const SemilinearProblem& p, LSConfig cfg) {
    cfg.forced_lambda = 1.0;
    return ls_solve(p, cfg);
}

/// y_{k+1} is the minimal-norm controlled solution of the system frozen at y_k, with
/// potential g'(y_k) and source g'(y_k) y_k - g(y_k).
inline LSResult variant_solve(const SemilinearProblem& p, const LSConfig& cfg) {
    const Nonlinearity& g = p.g;
    return detail::fixed_point_loop(p, cfg, [&](const ControlledPair& pair) {
        LinearControlProblem lp = linear_problem(p, cfg.inner);
        lp.potential = map_field(pair.y, [&g](double v) { return g.derivative(v); });
        SpaceTimeField src = map_field(pair.y, [&g](double v) { return g.derivative(v) * v - g.value(v); });
        if (l2_QT_squared(src) != 0.0) lp.source = std::move(src);
        return solve_null_control(lp);
    });
}

inline LSResult solve(Method m, const SemilinearProblem& p, const LSConfig& cfg) {
    switch (m) {
        case Method::picard: return picard_solve(p, cfg);
        case Method::newton_classic: return newton_classic_solve(p, cfg);
        case Method::variant: return variant_solve(p, cfg);
        case Method::least_squares: break;
    }
    return ls_solve(p, cfg);
}

/// |K(xi2) - K(xi1)|_{L_inf(H^1_0)} / |xi2 - xi1|_{L_inf(L^{d+1})}.
inline double contraction_ratio(const SemilinearProblem& p, const SpaceTimeField& xi1, const SpaceTimeField& xi2,
                                const InnerSettings& inner = {}) {
    xi1.require_same_shape(xi2);
    const double den = linf_Lp(xi2 - xi1, p.grid.dim + 1.0);
    if (!(den > 0.0)) throw PreconditionError("contraction_ratio: xi1 and xi2 must differ");
    const ControlSolution k1 = picard_map(p, xi1, inner);
    const ControlSolution k2 = picard_map(p, xi2, inner);
    return linf_H10(k2.trajectory - k1.trajectory) / den;
}

}  // namespace wavectrl
