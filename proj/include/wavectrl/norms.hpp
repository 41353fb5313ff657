#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <span>
#include <vector>

#include "wavectrl/grid.hpp"
#include "wavectrl/wave_solver.hpp"

namespace wavectrl {

// All space-time quadratures are trapezoidal in space and time, summed
// sequentially for determinism. State-pair norms only see interior nodes,
// where Dirichlet data live.

inline double l2_QT_squared(const SpaceTimeField& v) {
    const SpaceTimeGrid& g = v.grid();
    double total = 0.0;
    for (int n = 0; n < g.levels(); ++n) {
        auto lv = v.level(n);
        double s = 0.0;
        for (int i = 0; i < g.node_count(); ++i) s += g.space_weight(i) * lv[i] * lv[i];
        total += g.time_weight(n) * s;
    }
    return total;
}

inline double l2_QT(const SpaceTimeField& v) { return std::sqrt(l2_QT_squared(v)); }

/// L2 norm over q_T = omega x (0,T): the norm of chi * v.
inline double l2_qT(const SpaceTimeField& v, const std::vector<double>& chi) {
    const SpaceTimeGrid& g = v.grid();
    double total = 0.0;
    for (int n = 0; n < g.levels(); ++n) {
        auto lv = v.level(n);
        double s = 0.0;
        for (int i = 0; i < g.node_count(); ++i) {
            const double c = chi[i] * lv[i];
            s += g.space_weight(i) * c * c;
        }
        total += g.time_weight(n) * s;
    }
    return std::sqrt(total);
}

inline double lp_space(const SpaceTimeGrid& g, std::span<const double> u, double p) {
    double s = 0.0;
    for (int i = 0; i < g.node_count(); ++i) s += g.space_weight(i) * std::pow(std::abs(u[i]), p);
    return std::pow(s, 1.0 / p);
}

/// max over time levels of the spatial L^p norm.
inline double linf_Lp(const SpaceTimeField& v, double p) {
    double m = 0.0;
    for (int n = 0; n < v.levels(); ++n) m = std::max(m, lp_space(v.grid(), v.level(n), p));
    return m;
}

inline double linf_L1(const SpaceTimeField& v) {
    const SpaceTimeGrid& g = v.grid();
    double m = 0.0;
    for (int n = 0; n < v.levels(); ++n) {
        auto lv = v.level(n);
        double s = 0.0;
        for (int i = 0; i < g.node_count(); ++i) s += g.space_weight(i) * std::abs(lv[i]);
        m = std::max(m, s);
    }
    return m;
}

inline double max_abs(const SpaceTimeField& v) {
    double m = 0.0;
    for (double x : v.values()) m = std::max(m, std::abs(x));
    return m;
}

/// |grad u|^2 in L2, computed as <-Lap_h u, u> (equal to the sum of squared edge differences).
inline double grad_squared(const SpaceTimeGrid& g, std::span<const double> u) {
    std::vector<double> lap(u.size());
    apply_laplacian(g, u, lap);
    double s = 0.0;
    for (int i = 0; i < g.node_count(); ++i)
        if (!g.is_boundary(i)) s -= u[i] * lap[i];
    return s * g.cell_volume();
}

inline double l2_interior_squared(const SpaceTimeGrid& g, std::span<const double> u) {
    double s = 0.0;
    for (int i = 0; i < g.node_count(); ++i)
        if (!g.is_boundary(i)) s += u[i] * u[i];
    return s * g.cell_volume();
}

/// Dual pairing <(z,v),(p0,p1)> = int v p0 - z p1 between terminal states and adjoint seeds.
inline double pairing(const StatePair& state, const StatePair& seed) {
    const SpaceTimeGrid& g = state.grid;
    double s = 0.0;
    for (int i = 0; i < g.node_count(); ++i)
        if (!g.is_boundary(i)) s += state.velocity[i] * seed.position[i] - state.position[i] * seed.velocity[i];
    return s * g.cell_volume();
}

/// Table of sin(k pi i / n) for the nodes of one axis.
class SineTable {
public:
    explicit SineTable(int cells) : n_(cells), table_(static_cast<std::size_t>(cells + 1) * (cells + 1)) {
        for (int k = 1; k < n_; ++k)
            for (int i = 0; i <= n_; ++i)
                table_[static_cast<std::size_t>(k) * (n_ + 1) + i] = std::sin(std::numbers::pi * k * i / n_);
    }
    int cells() const { return n_; }
    double operator()(int k, int i) const { return table_[static_cast<std::size_t>(k) * (n_ + 1) + i]; }

private:
    int n_;
    std::vector<double> table_;
};

namespace detail {

// Sine coefficients c[k] = sum_i u[i] sin(k pi i / n), k = 1..n-1, along both axes.
inline std::vector<double> sine_coefficients(const SpaceTimeGrid& g, std::span<const double> u) {
    const int nx = g.cells[0];
    const SineTable sx(nx);
    if (g.dim == 1) {
        std::vector<double> c(nx + 1, 0.0);
        for (int k = 1; k < nx; ++k) {
            double s = 0.0;
            for (int i = 1; i < nx; ++i) s += u[i] * sx(k, i);
            c[k] = s;
        }
        return c;
    }
    const int ny = g.cells[1];
    const SineTable sy(ny);
    const int stride = nx + 1;
    std::vector<double> tmp(static_cast<std::size_t>(stride) * (ny + 1), 0.0);
    for (int j = 1; j < ny; ++j)
        for (int k = 1; k < nx; ++k) {
            double s = 0.0;
            for (int i = 1; i < nx; ++i) s += u[j * stride + i] * sx(k, i);
            tmp[j * stride + k] = s;
        }
    std::vector<double> c(tmp.size(), 0.0);
    for (int l = 1; l < ny; ++l)
        for (int k = 1; k < nx; ++k) {
            double s = 0.0;
            for (int j = 1; j < ny; ++j) s += tmp[j * stride + k] * sy(l, j);
            c[l * stride + k] = s;
        }
    return c;
}

// Inverse of sine_coefficients (up to the 2/n normalization per axis).
inline std::vector<double> sine_synthesis(const SpaceTimeGrid& g, const std::vector<double>& c) {
    const int nx = g.cells[0];
    const SineTable sx(nx);
    if (g.dim == 1) {
        std::vector<double> u(nx + 1, 0.0);
        for (int i = 1; i < nx; ++i) {
            double s = 0.0;
            for (int k = 1; k < nx; ++k) s += c[k] * sx(k, i);
            u[i] = s * 2.0 / nx;
        }
        return u;
    }
    const int ny = g.cells[1];
    const SineTable sy(ny);
    const int stride = nx + 1;
    std::vector<double> tmp(c.size(), 0.0);
    for (int l = 1; l < ny; ++l)
        for (int i = 1; i < nx; ++i) {
            double s = 0.0;
            for (int k = 1; k < nx; ++k) s += c[l * stride + k] * sx(k, i);
            tmp[l * stride + i] = s * 2.0 / nx;
        }
    std::vector<double> u(c.size(), 0.0);
    for (int j = 1; j < ny; ++j)
        for (int i = 1; i < nx; ++i) {
            double s = 0.0;
            for (int l = 1; l < ny; ++l) s += tmp[l * stride + i] * sy(l, j);
            u[j * stride + i] = s * 2.0 / ny;
        }
    return u;
}

}  // namespace detail

/// H^{-1} norm via the continuous Dirichlet eigenpairs: sum_k <v, e_k>^2 / mu_k,
/// with e_k the L2-orthonormal sines and trapezoidal inner products.
inline double h_minus1(const SpaceTimeGrid& g, std::span<const double> v) {
    const std::vector<double> c = detail::sine_coefficients(g, v);
    const double pi = std::numbers::pi;
    const double Lx = g.length[0];
    double s = 0.0;
    if (g.dim == 1) {
        const double scale = g.h[0] * std::sqrt(2.0 / Lx);
        for (int k = 1; k < g.cells[0]; ++k) {
            const double coef = scale * c[k];
            const double mu = (k * pi / Lx) * (k * pi / Lx);
            s += coef * coef / mu;
        }
        return std::sqrt(s);
    }
    const double Ly = g.length[1];
    const double scale = g.h[0] * g.h[1] * std::sqrt(2.0 / Lx) * std::sqrt(2.0 / Ly);
    const int stride = g.cells[0] + 1;
    for (int l = 1; l < g.cells[1]; ++l)
        for (int k = 1; k < g.cells[0]; ++k) {
            const double coef = scale * c[l * stride + k];
            const double mu = (k * pi / Lx) * (k * pi / Lx) + (l * pi / Ly) * (l * pi / Ly);
            s += coef * coef / mu;
        }
    return std::sqrt(s);
}

/// Solves -Lap_h u = f on interior nodes (homogeneous Dirichlet) by a discrete sine transform.
inline std::vector<double> solve_neg_laplacian(const SpaceTimeGrid& g, std::span<const double> f) {
    std::vector<double> c = detail::sine_coefficients(g, f);
    auto lam = [&](int k, int a) {
        const double s = std::sin(std::numbers::pi * k / (2.0 * g.cells[a]));
        return 4.0 / (g.h[a] * g.h[a]) * s * s;
    };
    if (g.dim == 1) {
        for (int k = 1; k < g.cells[0]; ++k) c[k] /= lam(k, 0);
    } else {
        const int stride = g.cells[0] + 1;
        for (int l = 1; l < g.cells[1]; ++l)
            for (int k = 1; k < g.cells[0]; ++k) c[l * stride + k] /= lam(k, 0) + lam(l, 1);
    }
    return detail::sine_synthesis(g, c);
}

/// V = H^1_0 x L^2 norm of a state.
inline double v_norm(const StatePair& s) {
    return std::sqrt(grad_squared(s.grid, s.position) + l2_interior_squared(s.grid, s.velocity));
}

/// H = L^2 x H^{-1} norm of a state (or adjoint seed).
inline double h_norm(const StatePair& s) {
    const double a = l2_interior_squared(s.grid, s.position);
    const double b = h_minus1(s.grid, s.velocity);
    return std::sqrt(a + b * b);
}

/// max over time levels of |grad y(t)|_{L2}.
inline double linf_H10(const SpaceTimeField& y) {
    double m = 0.0;
    for (int n = 0; n < y.levels(); ++n) m = std::max(m, grad_squared(y.grid(), y.level(n)));
    return std::sqrt(m);
}

/// max over time levels of the V-norm of (y, y_t), velocity by centered differences.
inline double linf_V(const SpaceTimeField& y) {
    const SpaceTimeGrid& g = y.grid();
    const int N = g.nt;
    std::vector<double> vel(g.node_count());
    double m = 0.0;
    for (int n = 0; n <= N; ++n) {
        const int a = std::max(0, n - 1);
        const int b = std::min(N, n + 1);
        auto ya = y.level(a);
        auto yb = y.level(b);
        for (int i = 0; i < g.node_count(); ++i) vel[i] = (yb[i] - ya[i]) / ((b - a) * g.dt);
        m = std::max(m, grad_squared(g, y.level(n)) + l2_interior_squared(g, vel));
    }
    return std::sqrt(m);
}

/// Named bundle of the field norms.
struct FieldNorms {
    double L2_QT = 0.0;
    double L2_qT = 0.0;
    double Linf_L1 = 0.0;
    double Linf_Lp = 0.0;
};

inline FieldNorms norms(const SpaceTimeField& v, const std::vector<double>& chi, double p = 2.0) {
    return {l2_QT(v), l2_qT(v, chi), linf_L1(v), linf_Lp(v, p)};
}

struct StateNorms {
    double V_norm = 0.0;
    double H_norm = 0.0;
};

inline StateNorms norms(const StatePair& s) { return {v_norm(s), h_norm(s)}; }

}  // namespace wavectrl
