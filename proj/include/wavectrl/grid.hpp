#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "wavectrl/errors.hpp"

namespace wavectrl {

/// Uniform discretization of Omega x (0,T), Omega an interval (0,L) or a
/// rectangle (0,Lx)x(0,Ly). Nodes include the Dirichlet boundary; time levels
/// are t_n = n*dt, n = 0..nt.
struct SpaceTimeGrid {
    int dim = 1;
    std::array<double, 2> length{1.0, 1.0};
    std::array<int, 2> cells{2, 0};
    double T = 1.0;
    int nt = 1;
    std::array<double, 2> h{0.5, 0.0};
    double dt = 1.0;

    static constexpr double max_cfl = 0.95;

    static SpaceTimeGrid interval(double L, int nx, double T, int nt) {
        SpaceTimeGrid g;
        g.dim = 1;
        g.length = {L, 0.0};
        g.cells = {nx, 0};
        g.T = T;
        g.nt = nt;
        g.finish();
        return g;
    }

    static SpaceTimeGrid rectangle(double Lx, double Ly, int nx, int ny, double T, int nt) {
        SpaceTimeGrid g;
        g.dim = 2;
        g.length = {Lx, Ly};
        g.cells = {nx, ny};
        g.T = T;
        g.nt = nt;
        g.finish();
        return g;
    }

    int nodes_x() const { return cells[0] + 1; }
    int nodes_y() const { return dim == 2 ? cells[1] + 1 : 1; }
    int node_count() const { return nodes_x() * nodes_y(); }
    int levels() const { return nt + 1; }
    std::size_t size() const { return static_cast<std::size_t>(node_count()) * levels(); }

    double dx() const { return h[0]; }
    double dy() const { return h[1]; }
    double cell_volume() const { return dim == 2 ? h[0] * h[1] : h[0]; }
    double domain_measure() const { return dim == 2 ? length[0] * length[1] : length[0]; }

    /// dt * sqrt(sum 1/h_i^2); the explicit scheme is stable for values <= 1.
    double cfl_number() const {
        double s = 1.0 / (h[0] * h[0]);
        if (dim == 2) s += 1.0 / (h[1] * h[1]);
        return dt * std::sqrt(s);
    }

    int ix(int node) const { return node % nodes_x(); }
    int iy(int node) const { return node / nodes_x(); }
    double x(int node) const { return ix(node) * h[0]; }
    double y(int node) const { return dim == 2 ? iy(node) * h[1] : 0.0; }

    bool is_boundary(int node) const {
        const int i = ix(node);
        if (i == 0 || i == cells[0]) return true;
        if (dim == 2) {
            const int j = iy(node);
            if (j == 0 || j == cells[1]) return true;
        }
        return false;
    }

    /// Trapezoidal weight of a spatial node.
    double space_weight(int node) const {
        double w = h[0];
        const int i = ix(node);
        if (i == 0 || i == cells[0]) w *= 0.5;
        if (dim == 2) {
            w *= h[1];
            const int j = iy(node);
            if (j == 0 || j == cells[1]) w *= 0.5;
        }
        return w;
    }

    /// Trapezoidal weight of a time level.
    double time_weight(int n) const { return (n == 0 || n == nt) ? 0.5 * dt : dt; }

    bool operator==(const SpaceTimeGrid& o) const {
        return dim == o.dim && length == o.length && cells == o.cells && T == o.T && nt == o.nt;
    }

private:
    void finish() {
        if (dim != 1 && dim != 2) throw ConfigError("grid: dimension must be 1 or 2");
        if (!(T > 0.0) || !std::isfinite(T)) throw ConfigError("grid: T must be positive");
        if (nt < 1) throw ConfigError("grid: nt must be at least 1");
        for (int a = 0; a < dim; ++a) {
            if (!(length[a] > 0.0) || !std::isfinite(length[a]))
                throw ConfigError("grid: domain extents must be positive");
            if (cells[a] < 2) throw ConfigError("grid: at least 3 nodes per axis are required");
            h[a] = length[a] / cells[a];
        }
        dt = T / nt;
        if (cfl_number() > max_cfl * (1.0 + 1e-12))
            throw ConfigError("grid: CFL condition violated (dt*sqrt(sum 1/h^2) = " +
                              std::to_string(cfl_number()) + " > 0.95)");
    }
};

/// Scalar field on all space-time nodes, stored time-outer / node-inner.
class SpaceTimeField {
public:
    SpaceTimeField() = default;
    explicit SpaceTimeField(const SpaceTimeGrid& grid, double fill = 0.0)
        : grid_(grid), values_(grid.size(), fill) {}

    const SpaceTimeGrid& grid() const { return grid_; }
    std::size_t size() const { return values_.size(); }
    int nodes() const { return grid_.node_count(); }
    int levels() const { return grid_.levels(); }

    double& operator()(int n, int node) { return values_[index(n, node)]; }
    double operator()(int n, int node) const { return values_[index(n, node)]; }

    std::span<double> level(int n) {
        return {values_.data() + static_cast<std::size_t>(n) * nodes(), static_cast<std::size_t>(nodes())};
    }
    std::span<const double> level(int n) const {
        return {values_.data() + static_cast<std::size_t>(n) * nodes(), static_cast<std::size_t>(nodes())};
    }

    std::vector<double>& values() { return values_; }
    const std::vector<double>& values() const { return values_; }

    bool same_shape(const SpaceTimeField& o) const { return grid_ == o.grid_ && size() == o.size(); }

    /// this += a * x
    SpaceTimeField& axpy(double a, const SpaceTimeField& x) {
        require_same_shape(x);
        for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += a * x.values_[i];
        return *this;
    }
    SpaceTimeField& operator*=(double a) {
        for (double& v : values_) v *= a;
        return *this;
    }
    SpaceTimeField& operator+=(const SpaceTimeField& x) { return axpy(1.0, x); }
    SpaceTimeField& operator-=(const SpaceTimeField& x) { return axpy(-1.0, x); }

    friend SpaceTimeField operator+(SpaceTimeField a, const SpaceTimeField& b) { return a += b; }
    friend SpaceTimeField operator-(SpaceTimeField a, const SpaceTimeField& b) { return a -= b; }
    friend SpaceTimeField operator*(double s, SpaceTimeField a) { return a *= s; }

    /// Throws BlowupError naming the first time level holding a NaN/Inf.
    void require_finite(const std::string& what) const {
        for (int n = 0; n < levels(); ++n)
            for (double v : level(n))
                if (!std::isfinite(v))
                    throw BlowupError(what + ": nonfinite value at time level " + std::to_string(n), n);
    }

    void require_same_shape(const SpaceTimeField& o) const {
        if (!same_shape(o)) throw PreconditionError("field shape mismatch");
    }

    /// Returns the field with time levels reversed (t -> T - t).
    SpaceTimeField time_reversed() const {
        SpaceTimeField r(grid_);
        for (int n = 0; n < levels(); ++n) {
            auto src = level(levels() - 1 - n);
            auto dst = r.level(n);
            std::copy(src.begin(), src.end(), dst.begin());
        }
        return r;
    }

private:
    std::size_t index(int n, int node) const {
        return static_cast<std::size_t>(n) * nodes() + static_cast<std::size_t>(node);
    }

    SpaceTimeGrid grid_;
    std::vector<double> values_;
};

/// A (position, velocity) snapshot y(.,t), dt y(.,t) on the spatial nodes.
struct StatePair {
    SpaceTimeGrid grid;
    std::vector<double> position;
    std::vector<double> velocity;

    StatePair() = default;
    explicit StatePair(const SpaceTimeGrid& g)
        : grid(g), position(g.node_count(), 0.0), velocity(g.node_count(), 0.0) {}

    static StatePair zero(const SpaceTimeGrid& g) { return StatePair(g); }

    StatePair& axpy(double a, const StatePair& x) {
        if (x.position.size() != position.size()) throw PreconditionError("state shape mismatch");
        for (std::size_t i = 0; i < position.size(); ++i) {
            position[i] += a * x.position[i];
            velocity[i] += a * x.velocity[i];
        }
        return *this;
    }
    StatePair& operator*=(double a) {
        for (double& v : position) v *= a;
        for (double& v : velocity) v *= a;
        return *this;
    }
    friend StatePair operator+(StatePair a, const StatePair& b) { return a.axpy(1.0, b); }
    friend StatePair operator-(StatePair a, const StatePair& b) { return a.axpy(-1.0, b); }
    friend StatePair operator*(double s, StatePair a) { return a *= s; }

    /// Zero the position on boundary nodes (homogeneous Dirichlet).
    void enforce_dirichlet() {
        for (int i = 0; i < grid.node_count(); ++i)
            if (grid.is_boundary(i)) position[i] = 0.0;
    }

    bool is_zero() const {
        for (double v : position)
            if (v != 0.0) return false;
        for (double v : velocity)
            if (v != 0.0) return false;
        return true;
    }
};

}  // namespace wavectrl
