#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "wavectrl/errors.hpp"
#include "wavectrl/grid.hpp"
#include "wavectrl/norms.hpp"
#include "wavectrl/region.hpp"
#include "wavectrl/wave_solver.hpp"

namespace wavectrl {

/// Control of z_tt - Lap z + A z = chi u + B from `initial` to `target`.
struct LinearControlProblem {
    SpaceTimeGrid grid;
    std::optional<SpaceTimeField> potential;  ///< A; absent means 0
    std::optional<SpaceTimeField> source;     ///< B; absent means 0
    StatePair initial;
    StatePair target;
    std::vector<double> chi;                  ///< indicator weights of omega
    std::optional<double> eps_reg;            ///< Tikhonov weight; absent means dx^2
    double tol = 1e-8;
    int max_iter = 500;
    bool precondition = false;                ///< eigenbasis diagonal preconditioner
    std::optional<bool> geometric_condition;  ///< advisory, copied to the solution

    static LinearControlProblem null_control(const SpaceTimeGrid& grid, const ControlRegion& region) {
        LinearControlProblem p;
        p.grid = grid;
        p.initial = StatePair(grid);
        p.target = StatePair(grid);
        p.chi = region.indicator(grid);
        return p;
    }

    double regularization() const { return eps_reg.value_or(grid.h[0] * grid.h[0]); }

    const SpaceTimeField* A() const { return potential ? &*potential : nullptr; }
    const SpaceTimeField* B() const { return source ? &*source : nullptr; }

    void validate() const {
        if (regularization() < 0.0) throw ConfigError("linear control: eps_reg must be nonnegative");
        if (!(tol > 0.0)) throw ConfigError("linear control: tolerance must be positive");
        if (max_iter < 0) throw ConfigError("linear control: max_iter must be nonnegative");
        if (static_cast<int>(chi.size()) != grid.node_count())
            throw PreconditionError("linear control: indicator size mismatch");
        if (potential && !(potential->grid() == grid)) throw PreconditionError("linear control: potential shape");
        if (source && !(source->grid() == grid)) throw PreconditionError("linear control: source shape");
        if (!(initial.grid == grid) || !(target.grid == grid))
            throw PreconditionError("linear control: state shape does not match grid");
    }
};

struct ControlSolution {
    SpaceTimeField control;      ///< u, supported in omega
    SpaceTimeField trajectory;   ///< z
    StatePair terminal;          ///< (z(T), z_t(T))
    StatePair seed;              ///< adjoint terminal data sigma
    double defect = 0.0;         ///< |terminal - target|_V
    double control_norm = 0.0;   ///< |u|_{L2(q_T)}
    int iterations = 0;
    bool converged = false;
    std::vector<double> residual_history;  ///< |r_k|_V / |rhs|_V
    std::vector<double> energy_history;    ///< CG quadratic functional, nonincreasing
    double eps_reg = 0.0;
    std::optional<bool> geometric_condition;
};

/// Adjoint trajectory phi for terminal data sigma, i.e. phi_tt - Lap phi + A phi = 0
/// with (phi(T), phi_t(T)) = sigma. The control u = chi phi realizes the transpose of
/// the control-to-terminal map in the pairing int v sigma0 - z sigma1.
inline SpaceTimeField adjoint_trajectory(const SpaceTimeGrid& grid, const SpaceTimeField* A, const StatePair& sigma) {
    return solve_backward_state(grid, A, nullptr, sigma).field;
}

/// Lambda sigma: terminal state of the zero-data solve driven by chi^2 phi_sigma.
inline StatePair gramian_apply(const SpaceTimeGrid& grid, const SpaceTimeField* A, const std::vector<double>& chi,
                               const StatePair& seed) {
    if (seed.is_zero()) return StatePair(grid);
    const SpaceTimeField phi = adjoint_trajectory(grid, A, seed);
    std::vector<double> chi2(chi.size());
    for (std::size_t i = 0; i < chi.size(); ++i) chi2[i] = chi[i] * chi[i];
    const SpaceTimeField S = mask(phi, chi2);
    return solve_forward_state(grid, A, &S, StatePair(grid)).terminal;
}

/// Riesz map from terminal states to seeds: (r0, r1) -> (r1, Lap_h r0), so <r, R r> = |r|_V^2.
inline StatePair riesz(const StatePair& r) {
    StatePair out(r.grid);
    out.position = r.velocity;
    apply_laplacian(r.grid, r.position, out.velocity);
    for (int i = 0; i < r.grid.node_count(); ++i)
        if (r.grid.is_boundary(i)) out.position[i] = 0.0;
    return out;
}

/// Inverse Riesz map (sigma0, sigma1) -> (Lap_h^{-1} sigma1, sigma0); <R^{-1} s, s> = |s|_H^2 (discrete).
inline StatePair riesz_inverse(const StatePair& s) {
    StatePair out(s.grid);
    const std::vector<double> w = solve_neg_laplacian(s.grid, s.velocity);
    for (int i = 0; i < s.grid.node_count(); ++i) {
        if (s.grid.is_boundary(i)) continue;
        out.position[i] = -w[i];
        out.velocity[i] = s.position[i];
    }
    return out;
}

namespace detail {

struct CgResult {
    StatePair sigma;
    int iterations = 0;
    bool converged = false;
    std::vector<double> history;
    std::vector<double> energy;
};

// Diagonal of M = Lambda + eps R^{-1} relative to R^{-1}, on the seeds (e_k, 0) and (0, e_k)
// built from the discrete Dirichlet eigenvectors e_k. Costs two Gramian applications per mode.
struct ModalScaling {
    std::vector<double> position;
    std::vector<double> velocity;
};

inline ModalScaling modal_diagonal(const LinearControlProblem& p) {
    const SpaceTimeGrid& g = p.grid;
    const double eps = p.regularization();
    ModalScaling s{std::vector<double>(g.node_count(), 1.0), std::vector<double>(g.node_count(), 1.0)};
    std::vector<double> c(g.node_count(), 0.0);
    for (int k = 0; k < g.node_count(); ++k) {
        if (g.is_boundary(k)) continue;  // coefficient layout matches node layout
        c[k] = 1.0;
        const std::vector<double> mode = sine_synthesis(g, c);
        c[k] = 0.0;
        for (int comp = 0; comp < 2; ++comp) {
            StatePair e(g);
            (comp == 0 ? e.position : e.velocity) = mode;
            StatePair q = gramian_apply(g, p.A(), p.chi, e);
            const StatePair ri = riesz_inverse(e);
            if (eps > 0.0) q.axpy(eps, ri);
            const double d = pairing(q, e) / pairing(ri, e);
            (comp == 0 ? s.position : s.velocity)[k] = d > 0.0 && std::isfinite(d) ? d : 1.0;
        }
    }
    return s;
}

inline void scale_modes(const SpaceTimeGrid& g, std::vector<double>& u, const std::vector<double>& d) {
    std::vector<double> c = sine_coefficients(g, u);
    for (int k = 0; k < g.node_count(); ++k)
        if (!g.is_boundary(k)) c[k] /= d[k];
    u = sine_synthesis(g, c);
}

// Preconditioned CG on (Lambda + eps R^{-1}) sigma = rhs. The preconditioner is R, followed
// by the inverse modal diagonal when p.precondition is set.
inline CgResult hum_cg(const LinearControlProblem& p, const StatePair& rhs) {
    const SpaceTimeGrid& g = p.grid;
    const double eps = p.regularization();
    std::optional<ModalScaling> scaling;
    auto precondition = [&](const StatePair& r) {
        StatePair z = riesz(r);
        if (scaling) {
            scale_modes(g, z.position, scaling->position);
            scale_modes(g, z.velocity, scaling->velocity);
        }
        return z;
    };
    CgResult res;
    res.sigma = StatePair(g);
    const double rhs_norm = v_norm(rhs);
    if (rhs_norm == 0.0) {
        res.converged = true;
        return res;
    }
    if (p.precondition) scaling = modal_diagonal(p);
    StatePair r = rhs;
    StatePair z = precondition(r);
    StatePair d = z;
    double rho = pairing(r, z);
    StatePair best = res.sigma;
    // <r, R r> = |r|_V^2; with the modal scaling the residual norm is taken directly.
    auto residual_norm = [&](const StatePair& res_r, double rho_r) {
        return scaling ? v_norm(res_r) : std::sqrt(std::max(rho_r, 0.0));
    };
    double best_rel = residual_norm(r, rho) / rhs_norm;
    res.history.push_back(best_rel);
    // J(sigma) = <M sigma, sigma>/2 - <rhs, sigma> equals the M-norm error up to a constant.
    double J = 0.0;
    res.energy.push_back(J);
    if (best_rel <= p.tol) {
        res.converged = true;
        return res;
    }
    for (int k = 1; k <= p.max_iter; ++k) {
        StatePair q = gramian_apply(g, p.A(), p.chi, d);
        if (eps > 0.0) q.axpy(eps, riesz_inverse(d));
        const double curv = pairing(q, d);
        if (!(curv > 0.0) || !std::isfinite(curv)) break;
        const double alpha = rho / curv;
        res.sigma.axpy(alpha, d);
        r.axpy(-alpha, q);
        J -= 0.5 * alpha * rho;
        res.energy.push_back(J);
        z = precondition(r);
        const double rho_new = pairing(r, z);
        const double rel = residual_norm(r, rho_new) / rhs_norm;
        res.history.push_back(rel);
        res.iterations = k;
        if (!std::isfinite(rel)) throw BlowupError("hum_cg: nonfinite residual", -1);
        if (rel < best_rel) {
            best_rel = rel;
            best = res.sigma;
        }
        if (rel <= p.tol) {
            res.converged = true;
            return res;
        }
        const double beta = rho_new / rho;
        rho = rho_new;
        d *= beta;
        d.axpy(1.0, z);
    }
    res.sigma = best;
    return res;
}

}  // namespace detail

/// Free (uncontrolled) solution with the problem's potential, source and initial data.
inline WaveSolution free_solution(const LinearControlProblem& p) {
    return solve_forward_state(p.grid, p.A(), p.B(), p.initial);
}

/// Builds the control and trajectory for the adjoint seed sigma.
inline ControlSolution control_from_seed(const LinearControlProblem& p, const StatePair& sigma) {
    const SpaceTimeGrid& g = p.grid;
    ControlSolution sol;
    sol.seed = sigma;
    sol.control = mask(adjoint_trajectory(g, p.A(), sigma), p.chi);
    SpaceTimeField S = mask(sol.control, p.chi);
    if (p.source) S += *p.source;
    WaveSolution z = solve_forward_state(g, p.A(), &S, p.initial);
    z.field.require_finite("linear control trajectory");
    sol.trajectory = std::move(z.field);
    sol.terminal = std::move(z.terminal);
    sol.defect = v_norm(sol.terminal - p.target);
    sol.control_norm = l2_QT(sol.control);
    sol.eps_reg = p.regularization();
    sol.geometric_condition = p.geometric_condition;
    return sol;
}

/// HUM control of minimal L2(q_T) norm (Tikhonov-regularized) by conjugate gradient.
inline ControlSolution solve_null_control(const LinearControlProblem& p) {
    p.validate();
    const SpaceTimeGrid& g = p.grid;
    const bool trivial = !p.source && p.initial.is_zero() && p.target.is_zero();
    if (trivial) {
        ControlSolution sol;
        sol.control = SpaceTimeField(g);
        sol.trajectory = SpaceTimeField(g);
        sol.terminal = StatePair(g);
        sol.seed = StatePair(g);
        sol.converged = true;
        sol.eps_reg = p.regularization();
        sol.geometric_condition = p.geometric_condition;
        sol.residual_history = {0.0};
        return sol;
    }
    const StatePair rhs = p.target - free_solution(p).terminal;
    detail::CgResult cg = detail::hum_cg(p, rhs);
    ControlSolution sol = control_from_seed(p, cg.sigma);
    sol.iterations = cg.iterations;
    sol.converged = cg.converged;
    sol.residual_history = std::move(cg.history);
    sol.energy_history = std::move(cg.energy);
    return sol;
}

struct PerturbationGap {
    double gap_norm = 0.0;   ///< |y - z|_{L_inf(H^1_0)}
    double bound_rhs = 0.0;  ///< C |a| (|B| + |u0,u1|_V) exp(C|A+a|^2) exp(C|A|^2)
    bool converged = false;
};

/// Compares the minimal-norm null-controlled solutions for potentials A and A + a.
/// Norms of potentials are L_inf(0,T;L^d); a is measured in L_inf(0,T;L^{d+1}).
inline PerturbationGap perturbation_gap(const LinearControlProblem& base, const SpaceTimeField& a, double C) {
    LinearControlProblem pa = base;
    pa.target = StatePair(base.grid);
    SpaceTimeField A = base.potential ? *base.potential : SpaceTimeField(base.grid);
    SpaceTimeField Aa = A + a;
    LinearControlProblem pb = pa;
    pb.potential = Aa;
    const ControlSolution y = solve_null_control(pa);
    const ControlSolution z = solve_null_control(pb);
    PerturbationGap out;
    out.converged = y.converged && z.converged;
    out.gap_norm = linf_H10(y.trajectory - z.trajectory);
    const double d = base.grid.dim;
    const double nA = linf_Lp(A, d);
    const double nAa = linf_Lp(Aa, d);
    const double na = linf_Lp(a, d + 1.0);
    const double nB = base.source ? l2_QT(*base.source) : 0.0;
    out.bound_rhs = C * na * (nB + v_norm(base.initial)) * std::exp(C * nAa * nAa) * std::exp(C * nA * nA);
    return out;
}

}  // namespace wavectrl
