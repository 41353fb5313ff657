#pragma once

#include <vector>

#include "wavectrl/errors.hpp"
#include "wavectrl/grid.hpp"
#include "wavectrl/nonlinearity.hpp"
#include "wavectrl/region.hpp"
#include "wavectrl/wave_solver.hpp"

namespace wavectrl {

/// y_tt - Lap y + g(y) - chi f with the leapfrog stencils. Only interior nodes at
/// levels 1..nt-1 carry a complete stencil; all other entries are 0.
inline SpaceTimeField residual_field(const SpaceTimeField& y, const SpaceTimeField& f, const Nonlinearity& g,
                                     const std::vector<double>& chi) {
    y.require_same_shape(f);
    const SpaceTimeGrid& grid = y.grid();
    const int nn = grid.node_count();
    if (static_cast<int>(chi.size()) != nn) throw PreconditionError("residual_field: indicator size mismatch");
    const double idt2 = 1.0 / (grid.dt * grid.dt);
    SpaceTimeField r(grid);
    std::vector<double> lap(nn);
    for (int n = 1; n < grid.nt; ++n) {
        auto yp = y.level(n - 1);
        auto yc = y.level(n);
        auto yn = y.level(n + 1);
        auto fc = f.level(n);
        auto out = r.level(n);
        apply_laplacian(grid, yc, lap);
        for (int i = 0; i < nn; ++i) {
            if (grid.is_boundary(i)) continue;
            out[i] = (yn[i] - 2.0 * yc[i] + yp[i]) * idt2 - lap[i] + g.g(yc[i]) - chi[i] * fc[i];
        }
    }
    return r;
}

inline SpaceTimeField residual_field(const SpaceTimeField& y, const SpaceTimeField& f, const Nonlinearity& g,
                                     const ControlRegion& region) {
    return residual_field(y, f, g, region.indicator(y.grid()));
}

}  // namespace wavectrl
