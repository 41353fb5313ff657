#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "wavectrl/grid.hpp"
#include "wavectrl/nonlinearity.hpp"
#include "wavectrl/norms.hpp"
#include "wavectrl/region.hpp"
#include "wavectrl/residual.hpp"
#include "wavectrl/wave_solver.hpp"

using namespace wavectrl;
using std::numbers::pi;

namespace {

StatePair sine_state(const SpaceTimeGrid& g, double pos_amp, double vel_amp) {
    StatePair s(g);
    for (int i = 0; i < g.node_count(); ++i) {
        if (g.is_boundary(i)) continue;
        const double v = std::sin(pi * g.x(i) / g.length[0]);
        s.position[i] = pos_amp * v;
        s.velocity[i] = vel_amp * v;
    }
    return s;
}

SpaceTimeField random_field(const SpaceTimeGrid& g, std::mt19937_64& rng, double amp) {
    std::uniform_real_distribution<double> u(-amp, amp);
    SpaceTimeField f(g);
    for (int n = 0; n < g.levels(); ++n)
        for (int i = 0; i < g.node_count(); ++i)
            if (!g.is_boundary(i)) f(n, i) = u(rng);
    return f;
}

StatePair random_state(const SpaceTimeGrid& g, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    StatePair s(g);
    for (int i = 0; i < g.node_count(); ++i) {
        if (g.is_boundary(i)) continue;
        s.position[i] = u(rng);
        s.velocity[i] = u(rng);
    }
    return s;
}

double eigenmode_error(int nx, int nt) {
    const auto g = SpaceTimeGrid::interval(1.0, nx, 1.0, nt);
    const SpaceTimeField zero(g);
    const auto y = solve_forward(g, zero, zero, sine_state(g, 1.0, 0.0));
    double err = 0.0;
    for (int n = 0; n < g.levels(); ++n)
        for (int i = 0; i < g.node_count(); ++i)
            err = std::max(err, std::abs(y(n, i) - std::sin(pi * g.x(i)) * std::cos(pi * n * g.dt)));
    return err;
}

double manufactured_error(int nx, int nt) {
    const auto g = SpaceTimeGrid::interval(1.0, nx, 1.0, nt);
    SpaceTimeField A(g, 1.0);
    SpaceTimeField S(g);
    for (int n = 0; n < g.levels(); ++n)
        for (int i = 0; i < g.node_count(); ++i) S(n, i) = pi * pi * std::sin(pi * g.x(i)) * std::sin(n * g.dt);
    const auto y = solve_forward(g, A, S, sine_state(g, 0.0, 1.0));
    double err = 0.0;
    for (int n = 0; n < g.levels(); ++n)
        for (int i = 0; i < g.node_count(); ++i)
            err = std::max(err, std::abs(y(n, i) - std::sin(pi * g.x(i)) * std::sin(n * g.dt)));
    return err;
}

}  // namespace

TEST(Grid, RejectsCflViolation) {
    EXPECT_THROW(SpaceTimeGrid::interval(1.0, 100, 1.0, 50), ConfigError);
    EXPECT_NO_THROW(SpaceTimeGrid::interval(1.0, 200, 2.5, 600));
}

TEST(Grid, RejectsTooFewNodesAndNonpositiveT) {
    EXPECT_THROW(SpaceTimeGrid::interval(1.0, 1, 1.0, 10), ConfigError);
    EXPECT_THROW(SpaceTimeGrid::interval(1.0, 10, -1.0, 10), ConfigError);
}

TEST(SolveForward, ZeroDataGivesZeroField) {
    const auto g = SpaceTimeGrid::interval(1.0, 20, 1.0, 40);
    const SpaceTimeField zero(g);
    const auto y = solve_forward(g, zero, zero, StatePair(g));
    EXPECT_EQ(max_abs(y), 0.0);
}

TEST(SolveForward, EigenmodeIsSecondOrder) {
    const double e1 = eigenmode_error(50, 100);
    const double e2 = eigenmode_error(100, 200);
    const double ratio = e1 / e2;
    EXPECT_GE(ratio, 3.5);
    EXPECT_LE(ratio, 4.5);
    EXPECT_LT(e2, 1e-3);
}

TEST(SolveForward, ManufacturedSolutionWithPotentialIsSecondOrder) {
    const double e1 = manufactured_error(40, 80);
    const double e2 = manufactured_error(80, 160);
    EXPECT_GE(e1 / e2, 3.5);
    EXPECT_LE(e1 / e2, 4.5);
}

TEST(SolveForward, IsLinearInData) {
    const auto g = SpaceTimeGrid::interval(1.0, 30, 1.0, 60);
    std::mt19937_64 rng(7);
    const auto A = random_field(g, rng, 2.0);
    const auto S1 = random_field(g, rng, 1.0);
    const auto S2 = random_field(g, rng, 1.0);
    const auto u = random_state(g, rng);
    const auto v = random_state(g, rng);
    const double a = 0.7, b = -1.3;
    const auto y1 = solve_forward(g, A, S1, u);
    const auto y2 = solve_forward(g, A, S2, v);
    const auto y = solve_forward(g, A, a * S1 + b * S2, a * u + b * v);
    const auto diff = y - (a * y1 + b * y2);
    EXPECT_LE(max_abs(diff), 1e-12 * std::max(1.0, max_abs(y)));
}

TEST(SolveForward, EnergyDriftBelowOnePercent) {
    const auto g = SpaceTimeGrid::interval(1.0, 200, 2.5, 600);
    StatePair init(g);
    for (int i = 0; i < g.node_count(); ++i) {
        const double x = g.x(i);
        init.position[i] = std::exp(-100.0 * (x - 0.5) * (x - 0.5)) * std::sin(pi * x);
    }
    init.enforce_dirichlet();
    const SpaceTimeField zero(g);
    const auto y = solve_forward(g, zero, zero, init);
    std::vector<double> vel(g.node_count());
    auto energy = [&](int n) {
        for (int i = 0; i < g.node_count(); ++i) vel[i] = (y(n + 1, i) - y(n - 1, i)) / (2.0 * g.dt);
        return 0.5 * (grad_squared(g, y.level(n)) + l2_interior_squared(g, vel));
    };
    const double e0 = 0.5 * grad_squared(g, init.position);
    for (int n = 1; n < g.nt; ++n) EXPECT_LE(std::abs(energy(n) - e0), 0.01 * e0) << "level " << n;
}

TEST(SolveForward, NonfiniteDataNamesTheLevel) {
    const auto g = SpaceTimeGrid::interval(1.0, 10, 1.0, 20);
    SpaceTimeField S(g);
    S(5, 4) = std::numeric_limits<double>::infinity();
    try {
        (void)solve_forward(g, SpaceTimeField(g), S, StatePair(g));
        FAIL() << "expected BlowupError";
    } catch (const BlowupError& e) {
        EXPECT_EQ(e.level(), 6);
    }
}

TEST(SolveForward, RejectsShapeMismatch) {
    const auto g = SpaceTimeGrid::interval(1.0, 10, 1.0, 20);
    const auto h = SpaceTimeGrid::interval(1.0, 12, 1.0, 20);
    EXPECT_THROW((void)solve_forward(g, SpaceTimeField(h), SpaceTimeField(g), StatePair(g)), PreconditionError);
}

TEST(SolveForward, TwoDimensionalEigenmode) {
    auto err = [](int n, int nt) {
        const auto g = SpaceTimeGrid::rectangle(1.0, 1.0, n, n, 0.5, nt);
        StatePair init(g);
        for (int i = 0; i < g.node_count(); ++i)
            init.position[i] = std::sin(pi * g.x(i)) * std::sin(pi * g.y(i));
        init.enforce_dirichlet();
        const SpaceTimeField zero(g);
        const auto y = solve_forward(g, zero, zero, init);
        double e = 0.0;
        const double w = pi * std::sqrt(2.0);
        for (int k = 0; k < g.levels(); ++k)
            for (int i = 0; i < g.node_count(); ++i)
                e = std::max(e, std::abs(y(k, i) - init.position[i] * std::cos(w * k * g.dt)));
        return e;
    };
    const double r = err(20, 20) / err(40, 40);
    EXPECT_GE(r, 3.5);
    EXPECT_LE(r, 4.5);
}

TEST(SolveBackward, ZeroTerminalGivesZero) {
    const auto g = SpaceTimeGrid::interval(1.0, 20, 1.0, 40);
    EXPECT_EQ(max_abs(solve_backward(g, SpaceTimeField(g), StatePair(g))), 0.0);
}

TEST(SolveBackward, TimeReversedEigenmode) {
    const auto g = SpaceTimeGrid::interval(1.0, 100, 1.5, 200);
    const auto phi = solve_backward(g, SpaceTimeField(g), sine_state(g, 1.0, 0.0));
    double err = 0.0;
    for (int n = 0; n < g.levels(); ++n)
        for (int i = 0; i < g.node_count(); ++i)
            err = std::max(err, std::abs(phi(n, i) - std::sin(pi * g.x(i)) * std::cos(pi * (g.T - n * g.dt))));
    EXPECT_LT(err, 1e-3);
}

TEST(SolveBackward, EqualsReversedForwardSolveExactly) {
    const auto g = SpaceTimeGrid::interval(1.0, 30, 1.2, 50);
    std::mt19937_64 rng(11);
    const auto A = random_field(g, rng, 3.0);
    const auto s = random_state(g, rng);
    const auto phi = solve_backward(g, A, s);
    StatePair flipped = s;
    for (double& v : flipped.velocity) v = -v;
    const auto ref = solve_forward(g, A.time_reversed(), SpaceTimeField(g), flipped).time_reversed();
    EXPECT_EQ(phi.values(), ref.values());
}

TEST(ResidualField, ZeroInputsGiveZero) {
    const auto g = SpaceTimeGrid::interval(1.0, 20, 1.0, 40);
    const auto chi = ControlRegion::interval(0.8, 1.0).indicator(g);
    const auto r = residual_field(SpaceTimeField(g), SpaceTimeField(g), builtin("zero"), chi);
    EXPECT_EQ(max_abs(r), 0.0);
}

TEST(ResidualField, ControlledSolveHasRoundoffResidual) {
    const auto g = SpaceTimeGrid::interval(1.0, 10, 2.5, 30);
    const auto chi = ControlRegion::interval(0.2, 0.9).indicator(g);
    std::mt19937_64 rng(3);
    const auto f = random_field(g, rng, 1.0);
    const auto y = solve_forward(g, SpaceTimeField(g), mask(f, chi), random_state(g, rng));
    const auto r = residual_field(y, f, builtin("zero"), chi);
    EXPECT_LE(max_abs(r), 1e-12);
}

TEST(ResidualField, ConsistentWithSolverForRandomData) {
    std::mt19937_64 rng(2024);
    for (int trial = 0; trial < 10; ++trial) {
        const auto g = SpaceTimeGrid::interval(1.0, 16 + trial, 2.0, 48 + 3 * trial);
        const auto chi = ControlRegion::interval(0.3, 0.8).indicator(g);
        const auto A = random_field(g, rng, 2.0);
        const auto f = random_field(g, rng, 1.0);
        const auto B = random_field(g, rng, 1.0);
        const auto y = solve_forward(g, A, mask(f, chi) + B, random_state(g, rng));
        // With g = 0, the residual of the solver output is B - A y at stencil-complete nodes.
        const auto r = residual_field(y, f, builtin("zero"), chi);
        const double scale = std::max(1.0, max_abs(y)) * (4.0 / (g.dt * g.dt) + 4.0 / (g.h[0] * g.h[0]));
        double worst = 0.0;
        for (int n = 1; n < g.nt; ++n)
            for (int i = 1; i < g.cells[0]; ++i)
                worst = std::max(worst, std::abs(r(n, i) - (B(n, i) - A(n, i) * y(n, i))));
        EXPECT_LE(worst, 64.0 * std::numeric_limits<double>::epsilon() * scale) << "trial " << trial;
    }
}

TEST(ResidualField, ConstantStateGivesNonlinearTerm) {
    const auto g = SpaceTimeGrid::interval(1.0, 20, 1.0, 40);
    const auto chi = ControlRegion::interval(0.8, 1.0).indicator(g);
    const double c = 0.7;
    SpaceTimeField y(g);
    for (int n = 0; n < g.levels(); ++n)
        for (int i = 1; i < g.cells[0]; ++i) y(n, i) = c;
    const auto nl = builtin("lipschitz_sat", {{"kappa", 1.0}});
    const auto r = residual_field(y, SpaceTimeField(g), nl, chi);
    const double expected = std::tanh(0.7);
    for (int n = 1; n < g.nt; ++n)
        for (int i = 2; i < g.cells[0] - 1; ++i) EXPECT_NEAR(r(n, i), expected, 1e-9);
}

TEST(Norms, ZeroFieldIsZero) {
    const auto g = SpaceTimeGrid::interval(1.0, 20, 1.0, 40);
    const std::vector<double> chi(g.node_count(), 1.0);
    const auto n = norms(SpaceTimeField(g), chi);
    EXPECT_EQ(n.L2_QT, 0.0);
    EXPECT_EQ(n.L2_qT, 0.0);
    EXPECT_EQ(n.Linf_L1, 0.0);
    EXPECT_EQ(n.Linf_Lp, 0.0);
    const auto s = norms(StatePair(g));
    EXPECT_EQ(s.V_norm, 0.0);
    EXPECT_EQ(s.H_norm, 0.0);
}

TEST(Norms, ConstantFieldOnUnitSquare) {
    const auto g = SpaceTimeGrid::interval(1.0, 20, 1.0, 40);
    EXPECT_NEAR(l2_QT(SpaceTimeField(g, 1.0)), 1.0, 1e-12);
    EXPECT_NEAR(linf_L1(SpaceTimeField(g, 1.0)), 1.0, 1e-12);
}

TEST(Norms, SineProfileL2AndHminus1) {
    const auto g = SpaceTimeGrid::interval(1.0, 64, 1.0, 128);
    const auto s = sine_state(g, 1.0, 1.0);
    EXPECT_NEAR(std::sqrt(l2_interior_squared(g, s.position)), 1.0 / std::sqrt(2.0), 1e-12);
    EXPECT_NEAR(h_minus1(g, s.velocity), 1.0 / (pi * std::sqrt(2.0)), 1e-12);
}

TEST(Norms, HomogeneousUnderScaling) {
    const auto g = SpaceTimeGrid::interval(1.0, 20, 1.0, 40);
    std::mt19937_64 rng(5);
    const auto f = random_field(g, rng, 1.0);
    const auto s = random_state(g, rng);
    const std::vector<double> chi = ControlRegion::interval(0.5, 1.0).indicator(g);
    const auto a = norms(f, chi);
    const auto b = norms(-3.0 * f, chi);
    EXPECT_NEAR(b.L2_QT, 3.0 * a.L2_QT, 1e-12 * b.L2_QT);
    EXPECT_NEAR(b.L2_qT, 3.0 * a.L2_qT, 1e-12 * b.L2_qT);
    EXPECT_NEAR(b.Linf_L1, 3.0 * a.Linf_L1, 1e-12 * b.Linf_L1);
    EXPECT_NEAR(v_norm(-3.0 * s), 3.0 * v_norm(s), 1e-12 * v_norm(s) * 3.0);
    EXPECT_NEAR(h_norm(-3.0 * s), 3.0 * h_norm(s), 1e-12 * h_norm(s) * 3.0);
}

TEST(Norms, DiscreteInverseLaplacianInvertsStencil) {
    for (const auto& g : {SpaceTimeGrid::interval(1.3, 24, 1.0, 40), SpaceTimeGrid::rectangle(1.0, 0.7, 12, 9, 0.3, 20)}) {
        std::mt19937_64 rng(9);
        const auto s = random_state(g, rng);
        const auto u = solve_neg_laplacian(g, s.velocity);
        const auto lap = laplacian(g, u);
        for (int i = 0; i < g.node_count(); ++i) {
            if (!g.is_boundary(i)) {
                EXPECT_NEAR(-lap[i], s.velocity[i], 1e-10);
            }
        }
    }
}

TEST(Region, IndicatorIsSharpAndSupported) {
    const auto g = SpaceTimeGrid::interval(1.0, 20, 1.0, 40);
    const auto chi = ControlRegion::interval(0.3, 0.6).indicator(g);
    for (int i = 0; i < g.node_count(); ++i) {
        const double x = g.x(i);
        if (x > 0.3 + 1e-9 && x < 0.6 - 1e-9)
            EXPECT_EQ(chi[i], 1.0);
        else
            EXPECT_EQ(chi[i], 0.0);
    }
}

TEST(Region, SmoothingOnlyTouchesEdgeNodes) {
    const auto g = SpaceTimeGrid::interval(1.0, 20, 1.0, 40);
    auto region = ControlRegion::interval(0.3, 0.6);
    region.set_smoothing(true);
    const auto chi = region.indicator(g);
    EXPECT_EQ(chi[6], 0.5);
    EXPECT_EQ(chi[7], 1.0);
    EXPECT_EQ(chi[12], 0.5);
    EXPECT_EQ(chi[13], 0.0);
}

TEST(Region, EmptyInteriorIsRejected) {
    const auto g = SpaceTimeGrid::interval(1.0, 10, 1.0, 20);
    EXPECT_THROW((void)ControlRegion::interval(0.31, 0.39).indicator(g), ConfigError);
}

TEST(Geometry, IntervalPassesWithLongHorizon) {
    const auto rep = check_geometric_condition(1, {1.0, 0.0}, ControlRegion::interval(0.8, 1.0), 2.5, {-0.1, 0.0});
    EXPECT_TRUE(rep.holds);
    EXPECT_NEAR(rep.T_min, 2.2, 1e-12);
    ASSERT_EQ(rep.gamma0.size(), 1u);
    EXPECT_EQ(rep.gamma0[0], Side::right);
}

TEST(Geometry, IntervalFailsWithShortHorizon) {
    const auto rep = check_geometric_condition(1, {1.0, 0.0}, ControlRegion::interval(0.8, 1.0), 2.0, {-0.1, 0.0});
    EXPECT_FALSE(rep.holds);
    EXPECT_TRUE(rep.coverage_ok);
    EXPECT_NEAR(rep.T_min, 2.2, 1e-12);
}

TEST(Geometry, IntervalFailsWhenRegionMissesGammaZero) {
    const auto rep = check_geometric_condition(1, {1.0, 0.0}, ControlRegion::interval(0.0, 0.2), 2.5, {-0.1, 0.0});
    EXPECT_FALSE(rep.coverage_ok);
    EXPECT_FALSE(rep.holds);
}

TEST(Geometry, SquareWithCornerObserver) {
    const double tmin = 2.0 * std::sqrt(1.2 * 1.2 + 1.2 * 1.2);
    const auto region = ControlRegion::side_strips(2, {1.0, 1.0}, {Side::right, Side::top}, 0.1);
    const auto pass = check_geometric_condition(2, {1.0, 1.0}, region, tmin + 0.01, {-0.2, -0.2});
    EXPECT_TRUE(pass.holds);
    EXPECT_NEAR(pass.T_min, tmin, 1e-12);
    ASSERT_EQ(pass.gamma0.size(), 2u);
    EXPECT_EQ(pass.gamma0[0], Side::right);
    EXPECT_EQ(pass.gamma0[1], Side::top);
    EXPECT_FALSE(check_geometric_condition(2, {1.0, 1.0}, region, tmin - 0.01, {-0.2, -0.2}).holds);
    const auto partial = ControlRegion::side_strips(2, {1.0, 1.0}, {Side::right}, 0.1);
    EXPECT_FALSE(check_geometric_condition(2, {1.0, 1.0}, partial, tmin + 1.0, {-0.2, -0.2}).holds);
}

TEST(Geometry, ObserverInsideDomainIsRejected) {
    EXPECT_THROW(check_geometric_condition(1, {1.0, 0.0}, ControlRegion::interval(0.8, 1.0), 2.5, {0.5, 0.0}),
                 PreconditionError);
}
