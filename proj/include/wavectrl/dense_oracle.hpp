#pragma once

#include <Eigen/Dense>

#include <string>
#include <utility>
#include <vector>

#include "wavectrl/errors.hpp"
#include "wavectrl/linear_control.hpp"

namespace wavectrl {

/// Explicit matrix of the control-to-terminal map on a small grid.
struct DenseControlMap {
    Eigen::MatrixXd T;                        ///< rows: interior (position, velocity); cols: controls
    std::vector<std::pair<int, int>> cols;    ///< (time level, node) of each control unknown
    Eigen::VectorXd weights;                  ///< L2(q_T) quadrature weight per control unknown
    std::vector<int> interior;                ///< interior node ids (row order)
    Eigen::MatrixXd P;                        ///< Gram matrix of the V norm on terminal rows
};

inline constexpr std::size_t dense_oracle_max_unknowns = 50000;

inline DenseControlMap assemble_control_map(const LinearControlProblem& p) {
    const SpaceTimeGrid& g = p.grid;
    if (g.size() > dense_oracle_max_unknowns)
        throw PreconditionError("dense oracle: grid has " + std::to_string(g.size()) +
                                " space-time unknowns, above the cap of 50000");
    DenseControlMap m;
    for (int i = 0; i < g.node_count(); ++i)
        if (!g.is_boundary(i)) m.interior.push_back(i);
    const int ni = static_cast<int>(m.interior.size());
    for (int n = 0; n < g.levels(); ++n)
        for (int i : m.interior)
            if (p.chi[i] > 0.0) m.cols.emplace_back(n, i);
    const int nc = static_cast<int>(m.cols.size());
    m.T.resize(2 * ni, nc);
    m.weights.resize(nc);
    SpaceTimeField S(g);
    for (int c = 0; c < nc; ++c) {
        const auto [n, i] = m.cols[c];
        S(n, i) = p.chi[i];
        const StatePair term = solve_forward_state(g, p.A(), &S, StatePair(g)).terminal;
        S(n, i) = 0.0;
        for (int r = 0; r < ni; ++r) {
            m.T(r, c) = term.position[m.interior[r]];
            m.T(ni + r, c) = term.velocity[m.interior[r]];
        }
        m.weights[c] = g.time_weight(n) * g.space_weight(i);
    }
    // |(z,v)|_V^2 = vol * (z^T (-Lap_h) z + v^T v) on interior nodes.
    m.P = Eigen::MatrixXd::Zero(2 * ni, 2 * ni);
    std::vector<double> e(g.node_count(), 0.0);
    for (int r = 0; r < ni; ++r) {
        e[m.interior[r]] = 1.0;
        const std::vector<double> lap = laplacian(g, e);
        e[m.interior[r]] = 0.0;
        for (int q = 0; q < ni; ++q) m.P(q, r) = -lap[m.interior[q]] * g.cell_volume();
        m.P(ni + r, ni + r) = g.cell_volume();
    }
    return m;
}

/// Ground-truth control by dense linear algebra: the minimizer of
/// |u|^2/2 + |Tu - t|_V^2 / (2 eps) for eps > 0, or of |u|^2 subject to Tu = t for eps = 0.
inline ControlSolution dense_oracle_control(const LinearControlProblem& p) {
    p.validate();
    const SpaceTimeGrid& g = p.grid;
    const DenseControlMap m = assemble_control_map(p);
    const int ni = static_cast<int>(m.interior.size());
    const StatePair rhs = p.target - free_solution(p).terminal;
    Eigen::VectorXd t(2 * ni);
    for (int r = 0; r < ni; ++r) {
        t[r] = rhs.position[m.interior[r]];
        t[ni + r] = rhs.velocity[m.interior[r]];
    }
    const double eps = p.regularization();
    Eigen::VectorXd u;
    if (eps > 0.0) {
        Eigen::MatrixXd K = m.T.transpose() * m.P * m.T / eps;
        K.diagonal() += m.weights;
        u = K.ldlt().solve(m.T.transpose() * m.P * t / eps);
    } else {
        const Eigen::VectorXd winv = m.weights.cwiseInverse();
        const Eigen::MatrixXd G = m.T * winv.asDiagonal() * m.T.transpose();
        const Eigen::VectorXd lam = G.completeOrthogonalDecomposition().solve(t);
        u = winv.asDiagonal() * (m.T.transpose() * lam);
    }
    SpaceTimeField control(g);
    for (std::size_t c = 0; c < m.cols.size(); ++c) control(m.cols[c].first, m.cols[c].second) = u[c];
    ControlSolution sol;
    sol.seed = StatePair(g);
    sol.control = control;
    SpaceTimeField S = mask(control, p.chi);
    if (p.source) S += *p.source;
    WaveSolution z = solve_forward_state(g, p.A(), &S, p.initial);
    sol.trajectory = std::move(z.field);
    sol.terminal = std::move(z.terminal);
    sol.defect = v_norm(sol.terminal - p.target);
    sol.control_norm = l2_QT(sol.control);
    sol.converged = true;
    sol.eps_reg = eps;
    sol.geometric_condition = p.geometric_condition;
    return sol;
}

}  // namespace wavectrl
