#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "wavectrl/errors.hpp"
#include "wavectrl/grid.hpp"

namespace wavectrl {

/// Axis-aligned box [lo, hi]; the second axis is ignored in 1D.
struct Box {
    std::array<double, 2> lo{0.0, 0.0};
    std::array<double, 2> hi{0.0, 0.0};
};

enum class Side { left, right, bottom, top };

inline const char* to_string(Side s) {
    switch (s) {
        case Side::left: return "left";
        case Side::right: return "right";
        case Side::bottom: return "bottom";
        case Side::top: return "top";
    }
    return "?";
}

/// The control support omega, described as a union of axis-aligned boxes.
///
/// Neighborhoods of rectangle sides are stored as full-length strips, so the
/// geometric checker can decide coverage of Gamma0 from the boxes alone.
/// The indicator is 1 at nodes strictly inside a box and 0 elsewhere; with
/// smoothing enabled, nodes lying exactly on an interior edge get 1/2.
class ControlRegion {
public:
    ControlRegion() = default;

    static ControlRegion interval(double a, double b) { return intervals({{a, b}}); }

    static ControlRegion intervals(const std::vector<std::array<double, 2>>& ivs) {
        ControlRegion r;
        r.dim_ = 1;
        for (const auto& iv : ivs) {
            if (!(iv[1] > iv[0])) throw ConfigError("region: interval must satisfy a < b");
            Box b;
            b.lo = {iv[0], 0.0};
            b.hi = {iv[1], 0.0};
            r.boxes_.push_back(b);
        }
        if (r.boxes_.empty()) throw ConfigError("region: at least one interval is required");
        return r;
    }

    static ControlRegion rectangles(const std::vector<Box>& boxes) {
        ControlRegion r;
        r.dim_ = 2;
        for (const auto& b : boxes)
            if (!(b.hi[0] > b.lo[0]) || !(b.hi[1] > b.lo[1]))
                throw ConfigError("region: rectangle must have positive extent");
        r.boxes_ = boxes;
        if (r.boxes_.empty()) throw ConfigError("region: at least one rectangle is required");
        return r;
    }

    /// Width-wide strips along the given sides of (0,Lx)x(0,Ly) (or of (0,L) in 1D).
    static ControlRegion side_strips(int dim, std::array<double, 2> length, const std::vector<Side>& sides,
                                     double width) {
        if (!(width > 0.0)) throw ConfigError("region: strip width must be positive");
        if (sides.empty()) throw ConfigError("region: at least one side is required");
        ControlRegion r;
        r.dim_ = dim;
        for (Side s : sides) {
            Box b;
            b.lo = {0.0, 0.0};
            b.hi = {length[0], dim == 2 ? length[1] : 0.0};
            switch (s) {
                case Side::left: b.hi[0] = width; break;
                case Side::right: b.lo[0] = length[0] - width; break;
                case Side::bottom:
                    if (dim != 2) throw ConfigError("region: bottom side only exists in 2D");
                    b.hi[1] = width;
                    break;
                case Side::top:
                    if (dim != 2) throw ConfigError("region: top side only exists in 2D");
                    b.lo[1] = length[1] - width;
                    break;
            }
            r.boxes_.push_back(b);
        }
        return r;
    }

    int dim() const { return dim_; }
    const std::vector<Box>& boxes() const { return boxes_; }
    bool smoothing() const { return smoothing_; }
    ControlRegion& set_smoothing(bool on) {
        smoothing_ = on;
        return *this;
    }

    /// Per-node weights chi in [0,1]; boundary nodes are always 0.
    std::vector<double> indicator(const SpaceTimeGrid& grid) const {
        if (grid.dim != dim_) throw ConfigError("region: dimension does not match the grid");
        std::vector<double> chi(grid.node_count(), 0.0);
        bool any_full = false;
        for (int node = 0; node < grid.node_count(); ++node) {
            if (grid.is_boundary(node)) continue;
            const std::array<double, 2> p{grid.x(node), grid.y(node)};
            double w = 0.0;
            for (const Box& b : boxes_) w = std::max(w, box_weight(grid, b, p));
            chi[node] = w;
            any_full = any_full || w == 1.0;
        }
        if (!any_full) throw ConfigError("region: no interior grid node lies strictly inside omega");
        return chi;
    }

    std::string describe() const {
        std::ostringstream os;
        for (std::size_t i = 0; i < boxes_.size(); ++i) {
            const Box& b = boxes_[i];
            if (i) os << " U ";
            if (dim_ == 1)
                os << "(" << b.lo[0] << "," << b.hi[0] << ")";
            else
                os << "(" << b.lo[0] << "," << b.hi[0] << ")x(" << b.lo[1] << "," << b.hi[1] << ")";
        }
        return os.str();
    }

private:
    double box_weight(const SpaceTimeGrid& grid, const Box& b, const std::array<double, 2>& p) const {
        bool on_edge = false;
        for (int a = 0; a < dim_; ++a) {
            const double tol = 1e-9 * grid.h[a];
            if (p[a] < b.lo[a] - tol || p[a] > b.hi[a] + tol) return 0.0;
            if (std::abs(p[a] - b.lo[a]) <= tol || std::abs(p[a] - b.hi[a]) <= tol) on_edge = true;
        }
        if (!on_edge) return 1.0;
        return smoothing_ ? 0.5 : 0.0;
    }

    int dim_ = 1;
    std::vector<Box> boxes_;
    bool smoothing_ = false;
};

struct GeometryReport {
    bool holds = false;
    bool time_ok = false;
    bool coverage_ok = false;
    double T_min = 0.0;
    std::vector<Side> gamma0;
    std::string gamma0_description;
};

/// Geometric control condition: Gamma0 = {x in boundary : (x - x0).nu(x) > 0},
/// T_min = 2 max |x - x0| over the closed domain, and omega must contain a
/// full neighborhood strip of every side in Gamma0.
inline GeometryReport check_geometric_condition(int dim, std::array<double, 2> length,
                                                const ControlRegion& region, double T,
                                                std::array<double, 2> x0) {
    if (dim != 1 && dim != 2) throw PreconditionError("geometry: dimension must be 1 or 2");
    const double Lx = length[0];
    const double Ly = dim == 2 ? length[1] : 0.0;
    const bool inside_x = x0[0] >= 0.0 && x0[0] <= Lx;
    const bool inside_y = dim == 1 || (x0[1] >= 0.0 && x0[1] <= Ly);
    if (inside_x && inside_y) throw PreconditionError("geometry: x0 must lie outside the closed domain");

    GeometryReport rep;
    // Each side has constant outward normal, so (x - x0).nu has one sign along it.
    if (x0[0] > 0.0) rep.gamma0.push_back(Side::left);
    if (Lx - x0[0] > 0.0) rep.gamma0.push_back(Side::right);
    if (dim == 2) {
        if (x0[1] > 0.0) rep.gamma0.push_back(Side::bottom);
        if (Ly - x0[1] > 0.0) rep.gamma0.push_back(Side::top);
    }

    double rmax = 0.0;
    if (dim == 1) {
        rmax = std::max(std::abs(x0[0]), std::abs(Lx - x0[0]));
    } else {
        for (double cx : {0.0, Lx})
            for (double cy : {0.0, Ly}) rmax = std::max(rmax, std::hypot(cx - x0[0], cy - x0[1]));
    }
    rep.T_min = 2.0 * rmax;
    rep.time_ok = T > rep.T_min;

    const double tol = 1e-12 * std::max(Lx, Ly);
    auto covers = [&](Side s) {
        for (const Box& b : region.boxes()) {
            bool ok = false;
            switch (s) {
                case Side::left: ok = b.lo[0] <= tol && b.hi[0] > tol; break;
                case Side::right: ok = b.hi[0] >= Lx - tol && b.lo[0] < Lx - tol; break;
                case Side::bottom: ok = b.lo[1] <= tol && b.hi[1] > tol; break;
                case Side::top: ok = b.hi[1] >= Ly - tol && b.lo[1] < Ly - tol; break;
            }
            if (dim == 2 && ok) {
                if (s == Side::left || s == Side::right)
                    ok = b.lo[1] <= tol && b.hi[1] >= Ly - tol;
                else
                    ok = b.lo[0] <= tol && b.hi[0] >= Lx - tol;
            }
            if (ok) return true;
        }
        return false;
    };
    rep.coverage_ok = region.dim() == dim && !rep.gamma0.empty() &&
                      std::all_of(rep.gamma0.begin(), rep.gamma0.end(), covers);
    rep.holds = rep.time_ok && rep.coverage_ok;

    std::ostringstream os;
    os << "{";
    for (std::size_t i = 0; i < rep.gamma0.size(); ++i) {
        if (i) os << ", ";
        const Side s = rep.gamma0[i];
        if (dim == 1)
            os << "x=" << (s == Side::left ? 0.0 : Lx);
        else
            os << to_string(s);
    }
    os << "}";
    rep.gamma0_description = os.str();
    return rep;
}

inline GeometryReport check_geometric_condition(const SpaceTimeGrid& grid, const ControlRegion& region,
                                                std::array<double, 2> x0) {
    return check_geometric_condition(grid.dim, grid.length, region, grid.T, x0);
}

}  // namespace wavectrl
