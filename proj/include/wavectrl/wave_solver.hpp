#pragma once

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "wavectrl/errors.hpp"
#include "wavectrl/grid.hpp"

namespace wavectrl {

/// Five-point (three-point in 1D) Dirichlet Laplacian; boundary entries of out are set to 0.
inline void apply_laplacian(const SpaceTimeGrid& g, std::span<const double> u, std::span<double> out) {
    const int nx = g.nodes_x();
    const double ix2 = 1.0 / (g.h[0] * g.h[0]);
    if (g.dim == 1) {
        out[0] = 0.0;
        out[nx - 1] = 0.0;
        for (int i = 1; i < nx - 1; ++i) out[i] = (u[i - 1] - 2.0 * u[i] + u[i + 1]) * ix2;
        return;
    }
    const int ny = g.nodes_y();
    const double iy2 = 1.0 / (g.h[1] * g.h[1]);
    for (int j = 0; j < ny; ++j) {
        for (int i = 0; i < nx; ++i) {
            const int k = j * nx + i;
            if (i == 0 || j == 0 || i == nx - 1 || j == ny - 1) {
                out[k] = 0.0;
                continue;
            }
            out[k] = (u[k - 1] - 2.0 * u[k] + u[k + 1]) * ix2 + (u[k - nx] - 2.0 * u[k] + u[k + nx]) * iy2;
        }
    }
}

inline std::vector<double> laplacian(const SpaceTimeGrid& g, std::span<const double> u) {
    std::vector<double> out(u.size());
    apply_laplacian(g, u, out);
    return out;
}

/// A trajectory together with its discrete terminal state.
struct WaveSolution {
    SpaceTimeField field;
    StatePair terminal;
};

namespace detail {

// Leapfrog for y_tt - Lap y + A y = S. Logical step n reads coefficients from and
// stores into storage level map(n); map = identity gives the forward solve,
// map(n) = nt - n the backward one.
template <class LevelMap>
WaveSolution leapfrog(const SpaceTimeGrid& g, const SpaceTimeField* A, const SpaceTimeField* S,
                      const StatePair& init, LevelMap map, const std::string& what) {
    if (A && !(A->grid() == g)) throw PreconditionError(what + ": potential shape does not match grid");
    if (S && !(S->grid() == g)) throw PreconditionError(what + ": source shape does not match grid");
    if (!(init.grid == g) || static_cast<int>(init.position.size()) != g.node_count())
        throw PreconditionError(what + ": state shape does not match grid");
    if (g.cfl_number() > SpaceTimeGrid::max_cfl * (1.0 + 1e-12))
        throw ConfigError(what + ": CFL condition violated");

    const int N = g.nt;
    const int nn = g.node_count();
    const double dt = g.dt;
    const double dt2 = dt * dt;

    WaveSolution sol{SpaceTimeField(g), StatePair(g)};
    SpaceTimeField& y = sol.field;
    std::vector<double> lap(nn);
    std::vector<bool> bnd(nn);
    for (int i = 0; i < nn; ++i) bnd[i] = g.is_boundary(i);

    // rhs(n) = Lap y^n - A^n y^n + S^n at logical step n.
    auto rhs = [&](int n, std::span<const double> yn, std::vector<double>& out) {
        apply_laplacian(g, yn, out);
        const int lvl = map(n);
        if (A) {
            auto a = A->level(lvl);
            for (int i = 0; i < nn; ++i) out[i] -= a[i] * yn[i];
        }
        if (S) {
            auto s = S->level(lvl);
            for (int i = 0; i < nn; ++i) out[i] += s[i];
        }
        for (int i = 0; i < nn; ++i)
            if (bnd[i]) out[i] = 0.0;
    };
    auto check = [&](int n) {
        for (double v : y.level(map(n)))
            if (!std::isfinite(v))
                throw BlowupError(what + ": nonfinite value at time level " + std::to_string(map(n)), map(n));
    };

    {
        auto y0 = y.level(map(0));
        for (int i = 0; i < nn; ++i) y0[i] = bnd[i] ? 0.0 : init.position[i];
        check(0);
        rhs(0, y0, lap);
        auto y1 = y.level(map(1));
        for (int i = 0; i < nn; ++i)
            y1[i] = bnd[i] ? 0.0 : y0[i] + dt * init.velocity[i] + 0.5 * dt2 * lap[i];
        check(1);
    }
    for (int n = 1; n < N; ++n) {
        auto yc = y.level(map(n));
        auto yp = y.level(map(n - 1));
        auto yn = y.level(map(n + 1));
        rhs(n, yc, lap);
        for (int i = 0; i < nn; ++i) yn[i] = bnd[i] ? 0.0 : 2.0 * yc[i] - yp[i] + dt2 * lap[i];
        check(n + 1);
    }

    auto yN = y.level(map(N));
    auto yM = y.level(map(N - 1));
    rhs(N, yN, lap);
    for (int i = 0; i < nn; ++i) {
        sol.terminal.position[i] = yN[i];
        sol.terminal.velocity[i] = bnd[i] ? 0.0 : (yN[i] - yM[i]) / dt + 0.5 * dt * lap[i];
    }
    return sol;
}

}  // namespace detail

/// Solves y_tt - Lap y + A y = S on (0,T) with y(0), y_t(0) from init.
inline WaveSolution solve_forward_state(const SpaceTimeGrid& g, const SpaceTimeField* A, const SpaceTimeField* S,
                                        const StatePair& init) {
    return detail::leapfrog(g, A, S, init, [](int n) { return n; }, "solve_forward");
}

inline SpaceTimeField solve_forward(const SpaceTimeGrid& g, const SpaceTimeField& A, const SpaceTimeField& S,
                                    const StatePair& init) {
    return solve_forward_state(g, &A, &S, init).field;
}

/// Solves phi_tt - Lap phi + A phi = S backward from (phi(T), phi_t(T)) = terminal.
/// The returned state is (phi(0), phi_t(0)).
inline WaveSolution solve_backward_state(const SpaceTimeGrid& g, const SpaceTimeField* A, const SpaceTimeField* S,
                                         const StatePair& terminal) {
    StatePair rev = terminal;
    for (double& v : rev.velocity) v = -v;
    const int N = g.nt;
    WaveSolution sol = detail::leapfrog(g, A, S, rev, [N](int n) { return N - n; }, "solve_backward");
    for (double& v : sol.terminal.velocity) v = -v;
    return sol;
}

inline SpaceTimeField solve_backward(const SpaceTimeGrid& g, const SpaceTimeField& A, const StatePair& terminal) {
    return solve_backward_state(g, &A, nullptr, terminal).field;
}

/// Discrete initial velocity implied by the first two levels of a trajectory
/// (inverse of the leapfrog start-up step for the given potential and source).
inline StatePair initial_state(const SpaceTimeField& y, const SpaceTimeField* A, const SpaceTimeField* S) {
    const SpaceTimeGrid& g = y.grid();
    const int nn = g.node_count();
    const double dt = g.dt;
    StatePair st(g);
    auto y0 = y.level(0);
    auto y1 = y.level(1);
    std::vector<double> lap(nn);
    apply_laplacian(g, y0, lap);
    for (int i = 0; i < nn; ++i) {
        if (g.is_boundary(i)) continue;
        double r = lap[i];
        if (A) r -= (*A)(0, i) * y0[i];
        if (S) r += (*S)(0, i);
        st.position[i] = y0[i];
        st.velocity[i] = (y1[i] - y0[i]) / dt - 0.5 * dt * r;
    }
    return st;
}

/// Discrete terminal state of a trajectory, matching the one reported by the solver.
inline StatePair terminal_state(const SpaceTimeField& y, const SpaceTimeField* A, const SpaceTimeField* S) {
    const SpaceTimeGrid& g = y.grid();
    const int nn = g.node_count();
    const int N = g.nt;
    const double dt = g.dt;
    StatePair st(g);
    auto yN = y.level(N);
    auto yM = y.level(N - 1);
    std::vector<double> lap(nn);
    apply_laplacian(g, yN, lap);
    for (int i = 0; i < nn; ++i) {
        if (g.is_boundary(i)) continue;
        double r = lap[i];
        if (A) r -= (*A)(N, i) * yN[i];
        if (S) r += (*S)(N, i);
        st.position[i] = yN[i];
        st.velocity[i] = (yN[i] - yM[i]) / dt + 0.5 * dt * r;
    }
    return st;
}

/// Applies fn pointwise to every value of a field.
template <class Fn>
SpaceTimeField map_field(const SpaceTimeField& y, Fn fn) {
    SpaceTimeField out(y.grid());
    const auto& src = y.values();
    auto& dst = out.values();
    for (std::size_t i = 0; i < src.size(); ++i) dst[i] = fn(src[i]);
    return out;
}

/// Multiplies every time level of f by the spatial weights chi.
inline SpaceTimeField mask(const SpaceTimeField& f, const std::vector<double>& chi) {
    SpaceTimeField out(f.grid());
    for (int n = 0; n < f.levels(); ++n) {
        auto a = f.level(n);
        auto b = out.level(n);
        for (int i = 0; i < f.nodes(); ++i) b[i] = chi[i] * a[i];
    }
    return out;
}

}  // namespace wavectrl
