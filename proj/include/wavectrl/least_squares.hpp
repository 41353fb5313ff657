#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "wavectrl/errors.hpp"
#include "wavectrl/grid.hpp"
#include "wavectrl/linear_control.hpp"
#include "wavectrl/nonlinearity.hpp"
#include "wavectrl/norms.hpp"
#include "wavectrl/region.hpp"
#include "wavectrl/residual.hpp"
#include "wavectrl/wave_solver.hpp"

namespace wavectrl {

/// Exact control of y_tt - Lap y + g(y) = chi f from `initial` to `target`.
struct SemilinearProblem {
    SpaceTimeGrid grid;
    std::vector<double> chi;
    Nonlinearity g;
    StatePair initial;
    StatePair target;
    std::optional<bool> geometric_condition;

    static SemilinearProblem make(const SpaceTimeGrid& grid, const ControlRegion& region, Nonlinearity g,
                                  StatePair initial, StatePair target) {
        SemilinearProblem p;
        p.grid = grid;
        p.chi = region.indicator(grid);
        p.g = std::move(g);
        p.initial = std::move(initial);
        p.target = std::move(target);
        return p;
    }

    void validate() const {
        if (static_cast<int>(chi.size()) != grid.node_count())
            throw PreconditionError("semilinear problem: indicator size mismatch");
        if (!(initial.grid == grid) || !(target.grid == grid))
            throw PreconditionError("semilinear problem: state shape does not match grid");
        if (!g.g || !g.dg) throw PreconditionError("semilinear problem: nonlinearity is not set");
    }
};

/// Settings of the linear control solves nested inside every method.
struct InnerSettings {
    std::optional<double> eps_reg;  ///< absent means dx^2
    double tol = 1e-8;
    int max_iter = 500;
    bool precondition = false;
};

enum class InitStrategy { linear, linear_frozen };

enum class InnerFailurePolicy { accept_best, abort };

enum class Status { converged, stagnated, cap_reached, inner_failure, diverged };

inline const char* to_string(Status s) {
    switch (s) {
        case Status::converged: return "converged";
        case Status::stagnated: return "stagnated";
        case Status::cap_reached: return "cap_reached";
        case Status::inner_failure: return "inner_failure";
        case Status::diverged: return "diverged";
    }
    return "unknown";
}

inline const char* to_string(InitStrategy s) { return s == InitStrategy::linear ? "linear" : "linear_frozen"; }

struct LSConfig {
    double m = 2.0;                   ///< line-search upper bound
    double tol = 1e-8;                ///< on sqrt(2E) relative to its initial value
    double floor_factor = 100.0;      ///< roundoff floor, in eps units of the residual scale
    int max_iter = 50;
    int scan_points = 33;
    double golden_rel_width = 1e-3;
    double C = 1.0;                   ///< diagnostic constant, never used by the solver path
    double divergence_bound = 1e6;    ///< on |y_k|_{L_inf(L^1)}
    InitStrategy init = InitStrategy::linear;
    InnerSettings inner;
    InnerFailurePolicy on_inner_failure = InnerFailurePolicy::accept_best;
    std::optional<double> forced_lambda;

    void validate() const {
        if (!(m >= 1.0)) throw ConfigError("m must be at least 1");
        if (!(tol > 0.0)) throw ConfigError("tol must be positive");
        if (!(floor_factor >= 0.0)) throw ConfigError("floor_factor must be nonnegative");
        if (max_iter < 0) throw ConfigError("max_iter must be nonnegative");
        if (scan_points < 3) throw ConfigError("scan_points must be at least 3");
        if (!(golden_rel_width > 0.0)) throw ConfigError("golden_rel_width must be positive");
        if (!(C > 0.0)) throw ConfigError("C must be positive");
        if (!(inner.tol > 0.0)) throw ConfigError("inner.tol must be positive");
        if (inner.max_iter < 0) throw ConfigError("inner.max_iter must be nonnegative");
        if (inner.eps_reg && *inner.eps_reg < 0.0) throw ConfigError("inner.eps_reg must be nonnegative");
    }
};

/// A pair (y, f) with the discrete initial and terminal states it carries.
struct ControlledPair {
    SpaceTimeField y;
    SpaceTimeField f;
    StatePair initial;
    StatePair terminal;

    ControlledPair step(double lambda, const ControlledPair& d) const {
        ControlledPair out = *this;
        out.y.axpy(-lambda, d.y);
        out.f.axpy(-lambda, d.f);
        out.initial.axpy(-lambda, d.initial);
        out.terminal.axpy(-lambda, d.terminal);
        return out;
    }
};

struct DiagnosticConstants {
    double dg_norm = 0.0;   ///< |g'(y)|_{L_inf(L^d)}
    double d_of_y = 0.0;
    std::optional<double> c_of_y;
    std::optional<double> e_k;
    std::optional<double> beta_star_s;
    std::optional<double> c_M;
    std::optional<double> d_M;
};

struct IterateRecord {
    int k = 0;
    double E = 0.0;
    double sqrt_E = 0.0;
    std::optional<double> lambda;        ///< step taken from this iterate
    std::optional<double> lambda_tilde;  ///< analytic surrogate step
    std::optional<double> F1_norm;       ///< |F^1_k|_{L2(q_T)}
    std::optional<double> Y1_norm;       ///< |(Y^1_k, Y^1_k,t)|_{L_inf(V)}
    double y_L1 = 0.0;                   ///< |y_k|_{L_inf(L^1)}
    double M_run = 0.0;
    double initial_defect = 0.0;
    double terminal_defect = 0.0;
    std::optional<double> inner_defect;
    std::optional<int> cg_iterations;
    std::optional<bool> inner_converged;
    std::optional<double> increment;     ///< |y_{k+1} - y_k|_{L_inf(L^1)} for fixed-point methods
    DiagnosticConstants diag;
    double wall_time = 0.0;
};

struct LSResult {
    std::vector<IterateRecord> records;
    ControlledPair final;
    Status status = Status::cap_reached;
    double E_scale = 0.0;    ///< half the squared magnitude of the residual terms at initialization
    double wall_time = 0.0;
};

inline double compute_E(const SpaceTimeField& y, const SpaceTimeField& f, const Nonlinearity& g,
                        const std::vector<double>& chi) {
    return 0.5 * l2_QT_squared(residual_field(y, f, g, chi));
}

inline double compute_E(const SemilinearProblem& p, const ControlledPair& pair) {
    return compute_E(pair.y, pair.f, p.g, p.chi);
}

/// L2(Q_T) norm of the sum of absolute values of the residual's terms; the size below which
/// the residual is indistinguishable from rounding.
inline double residual_scale(const SemilinearProblem& p, const ControlledPair& pair) {
    const SpaceTimeGrid& grid = p.grid;
    const int nn = grid.node_count();
    const double idt2 = 1.0 / (grid.dt * grid.dt);
    SpaceTimeField a(grid);
    SpaceTimeField ay = map_field(pair.y, [](double v) { return std::abs(v); });
    std::vector<double> lap(nn);
    for (int n = 1; n < grid.nt; ++n) {
        auto yp = ay.level(n - 1);
        auto yc = ay.level(n);
        auto yn = ay.level(n + 1);
        auto raw = pair.y.level(n);
        auto fc = pair.f.level(n);
        auto out = a.level(n);
        // lap(|y|) + 4 |y| / h^2 per axis is the stencil sum with all signs made positive.
        apply_laplacian(grid, yc, lap);
        double centre = 0.0;
        for (int ax = 0; ax < grid.dim; ++ax) centre += 4.0 / (grid.h[ax] * grid.h[ax]);
        for (int i = 0; i < nn; ++i) {
            if (grid.is_boundary(i)) continue;
            out[i] = (yn[i] + 2.0 * yc[i] + yp[i]) * idt2 + lap[i] + centre * yc[i] + std::abs(p.g.g(raw[i])) +
                     std::abs(p.chi[i] * fc[i]);
        }
    }
    return l2_QT(a);
}

inline LinearControlProblem linear_problem(const SemilinearProblem& p, const InnerSettings& inner) {
    LinearControlProblem lp;
    lp.grid = p.grid;
    lp.chi = p.chi;
    lp.initial = p.initial;
    lp.target = p.target;
    lp.eps_reg = inner.eps_reg;
    lp.tol = inner.tol;
    lp.max_iter = inner.max_iter;
    lp.precondition = inner.precondition;
    lp.geometric_condition = p.geometric_condition;
    return lp;
}

inline ControlledPair pair_from(const ControlSolution& s, const StatePair& initial) {
    return {s.trajectory, s.control, initial, s.terminal};
}

/// Starting pair: the minimal-norm controlled solution for g = 0 (`linear`), or for the
/// frozen linearization at 0, potential g'(0) and source -g(0) (`linear_frozen`).
inline ControlledPair initialize(const SemilinearProblem& p, InitStrategy init, const InnerSettings& inner,
                                 ControlSolution* report = nullptr) {
    p.validate();
    LinearControlProblem lp = linear_problem(p, inner);
    if (init == InitStrategy::linear_frozen) {
        const double a = p.g.derivative(0.0);
        const double b = -p.g.value(0.0);
        if (a != 0.0) lp.potential = SpaceTimeField(p.grid, a);
        if (b != 0.0) lp.source = SpaceTimeField(p.grid, b);
    }
    ControlSolution s = solve_null_control(lp);
    ControlledPair pair = pair_from(s, p.initial);
    if (report) *report = std::move(s);
    return pair;
}

struct DescentDirection {
    ControlledPair d;   ///< (Y^1, F^1) with zero initial state and its terminal state
    ControlSolution inner;
};

/// Minimal-norm null control of Y_tt - Lap Y + g'(y) Y = chi F + residual(y, f).
inline DescentDirection descent_direction(const SemilinearProblem& p, const ControlledPair& pair,
                                          const InnerSettings& inner) {
    LinearControlProblem lp = linear_problem(p, inner);
    lp.initial = StatePair(p.grid);
    lp.target = StatePair(p.grid);
    const Nonlinearity& g = p.g;
    lp.potential = map_field(pair.y, [&g](double v) { return g.derivative(v); });
    lp.source = residual_field(pair.y, pair.f, p.g, p.chi);
    if (l2_QT_squared(*lp.source) == 0.0) lp.source.reset();
    DescentDirection out;
    out.inner = solve_null_control(lp);
    out.d = pair_from(out.inner, StatePair(p.grid));
    return out;
}

struct LineSearchResult {
    double lambda = 0.0;
    double E = 0.0;
    bool stagnated = false;
    int evaluations = 0;
};

namespace detail {

/// Uniform scan of phi on [0, m] followed by golden-section refinement of the bracket
/// around the best scanned point. phi(0) is the reference value.
inline LineSearchResult minimize_on_segment(const std::function<double(double)>& phi, double m, int scan_points,
                                            double rel_width) {
    LineSearchResult res;
    const int n = scan_points - 1;
    std::vector<double> vals(scan_points);
    for (int i = 0; i <= n; ++i) {
        const double v = phi(m * i / n);
        vals[i] = std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
    }
    res.evaluations = scan_points;
    int j = 0;
    for (int i = 1; i <= n; ++i)
        if (vals[i] < vals[j]) j = i;
    double best_l = m * j / n;
    double best_v = vals[j];
    double a = m * std::max(j - 1, 0) / n;
    double b = m * std::min(j + 1, n) / n;
    const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = b - invphi * (b - a);
    double d = a + invphi * (b - a);
    double fc = phi(c), fd = phi(d);
    res.evaluations += 2;
    const double width = rel_width * std::max(b, m / n);
    while (b - a > width) {
        if (fc < fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - invphi * (b - a);
            fc = phi(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + invphi * (b - a);
            fd = phi(d);
        }
        ++res.evaluations;
    }
    const double gl = fc < fd ? c : d;
    const double gv = std::min(fc, fd);
    if (gv < best_v) {
        best_l = gl;
        best_v = gv;
    }
    res.lambda = best_l;
    res.E = best_v;
    res.stagnated = !(best_v < vals[0]);
    if (res.stagnated) {
        res.lambda = 0.0;
        res.E = vals[0];
    }
    return res;
}

}  // namespace detail

/// Approximate argmin over [0, m] of E((y, f) - lambda (Y^1, F^1)).
inline LineSearchResult line_search(const SemilinearProblem& p, const ControlledPair& pair,
                                    const ControlledPair& direction, const LSConfig& cfg) {
    const double E0 = compute_E(p, pair);
    if (E0 == 0.0) return {0.0, 0.0, false, 1};
    SpaceTimeField y(p.grid), f(p.grid);
    auto phi = [&](double lambda) {
        if (lambda == 0.0) return E0;
        y = pair.y;
        y.axpy(-lambda, direction.y);
        f = pair.f;
        f.axpy(-lambda, direction.f);
        return compute_E(y, f, p.g, p.chi);
    };
    return detail::minimize_on_segment(phi, cfg.m, cfg.scan_points, cfg.golden_rel_width);
}

/// The surrogate step minimizing |1 - lambda| + lambda^{1+s} c E^{s/2}.
inline double analytic_lambda(double E, double c, double s) {
    if (s == 0.0) return 1.0;
    if (!(s > 0.0 && s <= 1.0)) throw PreconditionError("analytic_lambda: s must lie in [0,1]");
    if (c < 0.0 || E < 0.0) throw PreconditionError("analytic_lambda: c and E must be nonnegative");
    const double q = std::pow(1.0 + s, 1.0 / s) * std::pow(c, 1.0 / s) * std::sqrt(E);
    return q < 1.0 ? 1.0 : 1.0 / q;
}

/// d(y), c(y), e_k and the uniform-bound constants d_M, c_M for the running bound M.
inline DiagnosticConstants diagnostic_constants(const Nonlinearity& g, const SpaceTimeField& y, double E, double C,
                                                std::optional<double> M = std::nullopt,
                                                std::optional<double> seminorm = std::nullopt) {
    if (!(C > 0.0)) throw PreconditionError("diagnostic_constants: C must be positive");
    const SpaceTimeGrid& grid = y.grid();
    const double s = g.s;
    const std::optional<double> semi = seminorm ? seminorm : g.seminorm;
    DiagnosticConstants out;
    out.dg_norm = linf_Lp(map_field(y, [&g](double v) { return g.derivative(v); }), grid.dim);
    out.d_of_y = C * std::exp(C * out.dg_norm * out.dg_norm);
    const double k = C / ((1.0 + s) * std::sqrt(2.0));
    if (semi) {
        out.c_of_y = k * *semi * std::pow(out.d_of_y, 1.0 + s);
        out.e_k = *out.c_of_y * std::pow(E, s / 2.0);
    }
    out.beta_star_s = beta_star(s, C);
    if (g.growth && M) {
        const double omega = grid.domain_measure();
        const double alpha = g.growth->alpha, beta = g.growth->beta;
        const double C3 = 2.0 * C * std::max(1.0, std::exp(2.0 * C * alpha * alpha) * omega);
        out.d_M = C3 * std::pow(1.0 + *M / omega, 2.0 * C * beta * beta);
        if (semi) out.c_M = k * *semi * std::pow(*out.d_M, 1.0 + s);
    }
    return out;
}

struct OrderEstimate {
    double order = 0.0;
    double fit_residual = 0.0;
    int points = 0;
};

/// Least-squares slope of ln sqrt(E_{k+1}) against ln sqrt(E_k) over the last `window`
/// usable values of the sequence.
inline OrderEstimate estimate_order(const std::vector<double>& E, int window = 4,
                                    double floor = 1e3 * std::numeric_limits<double>::epsilon()) {
    if (window < 3) throw PreconditionError("estimate_order: window must be at least 3");
    std::vector<double> usable;
    for (std::size_t i = 0; i < E.size(); ++i) {
        if (i > 0 && !(E[i] < E[i - 1])) throw PreconditionError("estimate_order: sequence is not strictly decreasing");
        if (E[i] > floor) usable.push_back(E[i]);
    }
    if (usable.size() < 3) throw PreconditionError("estimate_order: fewer than 3 usable values");
    const std::size_t start = usable.size() > static_cast<std::size_t>(window) ? usable.size() - window : 0;
    std::vector<double> x, z;
    for (std::size_t i = start; i + 1 < usable.size(); ++i) {
        x.push_back(0.5 * std::log(usable[i]));
        z.push_back(0.5 * std::log(usable[i + 1]));
    }
    const double n = static_cast<double>(x.size());
    double mx = 0.0, mz = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i] / n;
        mz += z[i] / n;
    }
    double sxx = 0.0, sxz = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxz += (x[i] - mx) * (z[i] - mz);
    }
    if (sxx == 0.0) throw PreconditionError("estimate_order: degenerate sequence");
    OrderEstimate out;
    out.order = sxz / sxx;
    out.points = static_cast<int>(x.size());
    double ss = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double e = z[i] - (mz + out.order * (x[i] - mx));
        ss += e * e;
    }
    out.fit_residual = std::sqrt(ss / n);
    return out;
}

inline OrderEstimate estimate_order(const std::vector<IterateRecord>& records, int window = 4) {
    std::vector<double> E;
    for (const auto& r : records) E.push_back(r.E);
    return estimate_order(E, window);
}

/// Smallest C for which sqrt(E_{k+1}) <= (|1 - lambda_k| + lambda_k^{1+s} c(y_k) E_k^{s/2}) sqrt(E_k)
/// holds on every recorded step; absent when g has no known seminorm or no C up to 1e6 works.
inline std::optional<double> smallest_decay_constant(const Nonlinearity& g, const std::vector<IterateRecord>& records,
                                                     std::optional<double> seminorm = std::nullopt) {
    const std::optional<double> semi = seminorm ? seminorm : g.seminorm;
    if (!semi) return std::nullopt;
    if (std::none_of(records.begin(), records.end(), [](const IterateRecord& r) { return r.lambda.has_value(); }))
        return std::nullopt;
    const double s = g.s;
    auto holds = [&](double C) {
        for (std::size_t i = 0; i + 1 < records.size(); ++i) {
            const IterateRecord& r = records[i];
            if (!r.lambda) continue;
            const double l = *r.lambda;
            const double d = C * std::exp(C * r.diag.dg_norm * r.diag.dg_norm);
            const double c = C / ((1.0 + s) * std::sqrt(2.0)) * *semi * std::pow(d, 1.0 + s);
            const double bound = (std::abs(1.0 - l) + std::pow(l, 1.0 + s) * c * std::pow(r.E, s / 2.0)) * r.sqrt_E;
            if (!(records[i + 1].sqrt_E <= bound)) return false;
        }
        return true;
    };
    double lo = 1e-6, hi = 1e6;
    if (holds(lo)) return lo;
    if (!holds(hi)) return std::nullopt;
    for (int it = 0; it < 200 && hi / lo > 1.0 + 1e-6; ++it) {
        const double mid = std::sqrt(lo * hi);
        (holds(mid) ? hi : lo) = mid;
    }
    return hi;
}

namespace detail {

inline double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

inline IterateRecord base_record(const SemilinearProblem& p, const ControlledPair& pair, int k, double E, double C,
                                 double& M_run) {
    IterateRecord r;
    r.k = k;
    r.E = E;
    r.sqrt_E = std::sqrt(E);
    r.y_L1 = linf_L1(pair.y);
    M_run = std::max(M_run, r.y_L1);
    r.M_run = M_run;
    r.initial_defect = v_norm(pair.initial - p.initial);
    r.terminal_defect = v_norm(pair.terminal - p.target);
    r.diag = diagnostic_constants(p.g, pair.y, E, C, M_run);
    if (r.diag.c_of_y) r.lambda_tilde = analytic_lambda(E, *r.diag.c_of_y, p.g.s);
    return r;
}

}  // namespace detail

/// True when sqrt(2E) is at or below the stopping threshold.
inline bool below_threshold(double E, double threshold) { return std::sqrt(2.0 * E) <= threshold; }

/// Stopping threshold on sqrt(2E): tol relative to the initial value, never below the
/// rounding floor of the residual evaluation.
inline double stopping_threshold(const LSConfig& cfg, double E0, double scale) {
    return std::max(cfg.tol * std::sqrt(2.0 * E0), cfg.floor_factor * std::numeric_limits<double>::epsilon() * scale);
}

/// The damped Newton iteration (y, f) <- (y, f) - lambda_k (Y^1, F^1) with lambda_k from the
/// line search over [0, m], or fixed to cfg.forced_lambda.
inline LSResult ls_solve(const SemilinearProblem& p, const LSConfig& cfg,
                         std::optional<ControlledPair> start = std::nullopt) {
    cfg.validate();
    p.validate();
    const auto t0 = std::chrono::steady_clock::now();
    LSResult res;
    ControlledPair pair = start ? *start : initialize(p, cfg.init, cfg.inner);
    double E = compute_E(p, pair);
    const double scale = residual_scale(p, pair);
    res.E_scale = 0.5 * scale * scale;
    const double threshold = stopping_threshold(cfg, E, scale);
    double M_run = 0.0;
    for (int k = 0;; ++k) {
        const auto tk = std::chrono::steady_clock::now();
        IterateRecord rec = detail::base_record(p, pair, k, E, cfg.C, M_run);
        if (below_threshold(E, threshold)) {
            res.status = Status::converged;
            rec.wall_time = detail::seconds_since(tk);
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
        DescentDirection dir;
        try {
            dir = descent_direction(p, pair, cfg.inner);
        } catch (const BlowupError&) {
            res.status = Status::inner_failure;
            res.records.push_back(std::move(rec));
            break;
        }
        rec.F1_norm = l2_qT(dir.d.f, p.chi);
        rec.Y1_norm = linf_V(dir.d.y);
        rec.inner_defect = dir.inner.defect;
        rec.cg_iterations = dir.inner.iterations;
        rec.inner_converged = dir.inner.converged;
        if (!dir.inner.converged && cfg.on_inner_failure == InnerFailurePolicy::abort) {
            res.status = Status::inner_failure;
            rec.wall_time = detail::seconds_since(tk);
            res.records.push_back(std::move(rec));
            break;
        }
        double lambda, E_new;
        if (cfg.forced_lambda) {
            lambda = *cfg.forced_lambda;
            const ControlledPair trial = pair.step(lambda, dir.d);
            E_new = compute_E(p, trial);
        } else {
            const LineSearchResult ls = line_search(p, pair, dir.d, cfg);
            if (ls.stagnated) {
                res.status = Status::stagnated;
                rec.lambda = 0.0;
                rec.wall_time = detail::seconds_since(tk);
                res.records.push_back(std::move(rec));
                break;
            }
            lambda = ls.lambda;
            E_new = ls.E;
        }
        rec.lambda = lambda;
        pair = pair.step(lambda, dir.d);
        E = E_new;
        rec.wall_time = detail::seconds_since(tk);
        res.records.push_back(std::move(rec));
    }
    res.final = std::move(pair);
    res.wall_time = detail::seconds_since(t0);
    return res;
}

}  // namespace wavectrl
