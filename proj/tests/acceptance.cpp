// Acceptance harness: one PASS/FAIL line per criterion, exit status 0 iff all pass.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "wavectrl/dense_oracle.hpp"
#include "wavectrl/experiment.hpp"
#include "wavectrl/wavectrl.hpp"

using namespace wavectrl;
using std::numbers::pi;
namespace fs = std::filesystem;

namespace {

const fs::path kSource = WAVECTRL_SOURCE_DIR;

struct Verdict {
    bool pass = false;
    std::string detail;
};

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.4g", v);
    return buf;
}

StatePair sine_state(const SpaceTimeGrid& g) {
    StatePair s(g);
    for (int i = 1; i < g.nodes_x() - 1; ++i) s.position[i] = std::sin(pi * g.x(i));
    return s;
}

LinearControlProblem sine_control(int nx, int nt) {
    const auto g = SpaceTimeGrid::interval(1.0, nx, 2.5, nt);
    auto p = LinearControlProblem::null_control(g, ControlRegion::interval(0.8, 1.0));
    p.initial = sine_state(g);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

SemilinearProblem preset(const std::string& name) { return make_problem(load_config(kSource / "configs" / name)); }

double eigenmode_error(int nx, int nt) {
    const auto g = SpaceTimeGrid::interval(1.0, nx, 1.0, nt);
    const SpaceTimeField zero(g);
    const auto y = solve_forward(g, zero, zero, sine_state(g));
    double err = 0.0;
    for (int n = 0; n < g.levels(); ++n)
        for (int i = 0; i < g.node_count(); ++i)
            err = std::max(err, std::abs(y(n, i) - std::sin(pi * g.x(i)) * std::cos(pi * n * g.dt)));
    return err;
}

Verdict c1() {
    const double ratio = eigenmode_error(100, 200) / eigenmode_error(200, 400);
    return {ratio >= 3.5 && ratio <= 4.5, "error ratio " + fmt(ratio)};
}

Verdict c2() {
    const auto g = SpaceTimeGrid::interval(1.0, 40, 2.5, 120);
    const auto chi = ControlRegion::interval(0.8, 1.0).indicator(g);
    SpaceTimeField A(g);
    for (int n = 0; n < g.levels(); ++n)
        for (int i = 0; i < g.node_count(); ++i) A(n, i) = 0.5 * (1.0 + std::cos(2.0 * pi * g.x(i)) * std::sin(n * g.dt));
    double worst_sym = 0.0, min_q = 1.0;
    for (int seed = 0; seed < 20; ++seed) {
        std::mt19937_64 rng(seed);
        std::normal_distribution<double> u;
        StatePair s1(g), s2(g);
        for (int i = 1; i < g.nodes_x() - 1; ++i) {
            s1.position[i] = u(rng), s1.velocity[i] = u(rng);
            s2.position[i] = u(rng), s2.velocity[i] = u(rng);
        }
        const double a = pairing(gramian_apply(g, &A, chi, s1), s2);
        const double b = pairing(gramian_apply(g, &A, chi, s2), s1);
        worst_sym = std::max(worst_sym, std::abs(a - b) / std::max(std::abs(a), std::abs(b)));
        const double q = pairing(gramian_apply(g, &A, chi, s1), s1);
        min_q = std::min(min_q, q / std::pow(l2_QT(mask(adjoint_trajectory(g, &A, s1), chi)), 2));
    }
    return {worst_sym <= 1e-10 && std::abs(min_q - 1.0) <= 1e-10,
            "max relative asymmetry " + fmt(worst_sym) + ", min <Ls,s>/|B*s|^2 " + fmt(min_q)};
}

Verdict c3() {
    double worst = 0.0;
    for (double eps : {-1.0, 0.0}) {
        auto p = sine_control(20, 60);
        if (eps >= 0.0) p.eps_reg = eps;
        p.tol = 1e-12;
        const auto cg = solve_null_control(p);
        const auto oracle = dense_oracle_control(p);
        worst = std::max(worst, l2_QT(cg.control - oracle.control) / l2_QT(oracle.control));
    }
    return {worst <= 1e-4, "relative L2 difference " + fmt(worst) + " (eps_reg = dx^2 and 0)"};
}

Verdict c4() {
    auto p = sine_control(200, 600);
    p.eps_reg = 0.0;
    p.tol = 1e-8;
    p.max_iter = 2000;
    const auto sol = solve_null_control(p);
    const double rel = sol.defect / v_norm(p.initial);
    return {rel <= 1e-6, "terminal defect / initial norm " + fmt(rel) + " after " + std::to_string(sol.iterations) +
                             " CG iterations"};
}

Verdict c5(const SemilinearProblem& p, const LSConfig& cfg) {
    ControlledPair pair = initialize(p, cfg.init, cfg.inner);
    double worst = 0.0;
    for (int k = 0; k < 3; ++k) {
        const double E = compute_E(p, pair);
        const auto d = descent_direction(p, pair, cfg.inner);
        const double lam = 1e-4;
        const double fd = (compute_E(p, pair.step(lam, d.d)) - E) / lam;
        worst = std::max(worst, std::abs(fd + 2.0 * E) / (2.0 * E));
        const auto ls = line_search(p, pair, d.d, cfg);
        pair = pair.step(ls.lambda, d.d);
    }
    return {worst <= 0.01, "max relative gap to -2E " + fmt(worst)};
}

Verdict c6(const LSResult& res) {
    const auto& r = res.records;
    bool decreasing = true;
    for (std::size_t k = 1; k < r.size(); ++k) decreasing = decreasing && r[k].E < r[k - 1].E;
    const double reduction = std::sqrt(r.front().E / r.back().E);
    double order = 0.0;
    try {
        order = estimate_order(r).order;
    } catch (const std::exception&) {
    }
    return {res.status == Status::converged && decreasing && reduction >= 1e6 && order >= 1.5,
            std::string("status ") + to_string(res.status) + ", " + std::to_string(r.size() - 1) +
                " iterations, sqrt(2E) reduction " + fmt(reduction) + ", order " + fmt(order) +
                (decreasing ? ", strictly decreasing" : ", NOT decreasing")};
}

Verdict c7(const LSResult& res) {
    std::vector<double> lambdas;
    for (const auto& r : res.records)
        if (r.lambda) lambdas.push_back(*r.lambda);
    if (lambdas.size() < 3) return {false, "fewer than 3 steps"};
    bool ok = true;
    std::string d = "final lambdas";
    for (std::size_t i = lambdas.size() - 3; i < lambdas.size(); ++i) {
        ok = ok && std::abs(1.0 - lambdas[i]) <= 0.1;
        d += " " + fmt(lambdas[i]);
    }
    return {ok, d};
}

Verdict c8() {
    const auto g = SpaceTimeGrid::interval(1.0, 200, 2.5, 600);
    StatePair u = sine_state(g);
    const auto p = SemilinearProblem::make(g, ControlRegion::interval(0.8, 1.0), builtin("linear", {{"b", 0.3}}), u,
                                           StatePair(g));
    LSConfig cfg;
    cfg.max_iter = 1;
    const auto res = ls_solve(p, cfg);
    const double after = std::sqrt(2.0 * res.records.at(1).E);
    return {after <= 10.0 * cfg.inner.tol, "sqrt(2E) after one step " + fmt(after) + " (bound " +
                                               fmt(10.0 * cfg.inner.tol) + "), lambda " +
                                               fmt(*res.records[0].lambda)};
}

Verdict c9() {
    const auto p = preset("newton_equivalence.json");
    const auto a = ls_solve(p, LSConfig{});
    const auto b = newton_classic_solve(p, LSConfig{});
    bool same = a.records.size() == b.records.size() && a.status == b.status;
    for (std::size_t k = 0; same && k < a.records.size(); ++k) {
        const auto& x = a.records[k];
        const auto& y = b.records[k];
        same = x.E == y.E && x.lambda == y.lambda && x.F1_norm == y.F1_norm && x.Y1_norm == y.Y1_norm &&
               x.y_L1 == y.y_L1 && x.terminal_defect == y.terminal_defect && x.inner_defect == y.inner_defect &&
               x.cg_iterations == y.cg_iterations;
    }
    same = same && max_abs(a.final.y - b.final.y) == 0.0 && max_abs(a.final.f - b.final.f) == 0.0;
    return {same, std::to_string(a.records.size()) + " records compared field by field"};
}

Verdict c10() {
    const auto c = load_config(kSource / "configs/strong_nonlinearity.json");
    const auto p = make_problem(c);
    const auto ls = ls_solve(p, c.ls);
    const auto pc = picard_solve(p, c.ls);
    return {ls.status == Status::converged && pc.status != Status::converged,
            std::string("least_squares ") + to_string(ls.status) + " in " + std::to_string(ls.records.size() - 1) +
                ", picard " + to_string(pc.status) + " after " + std::to_string(pc.records.size() - 1) +
                " (budget " + std::to_string(c.ls.max_iter) + ")"};
}

Verdict c11() {
    double worst = 0.0;
    std::string d;
    for (double q : {1.0, 1.5, 2.0}) {
        std::vector<double> E;
        double s = 0.5;
        for (int k = 0; k < 12 && s * s > 1e-12; ++k) {
            E.push_back(s * s);
            s = q == 1.0 ? 0.5 * s : std::pow(s, q);
        }
        const double got = estimate_order(E).order;
        worst = std::max(worst, std::abs(got - q));
        d += fmt(q) + "->" + fmt(got) + " ";
    }
    return {worst <= 0.05, d};
}

Verdict c12() {
    const auto pass = check_hypotheses(load_config(kSource / "configs/geometry_pass.json"));
    const auto fail = check_hypotheses(load_config(kSource / "configs/geometry_fail.json"));
    // Omega = (0,1), x0 = -0.1: T_min = 2 max |x - x0| = 2.2.
    const double hand = 2.0 * 1.1;
    const bool ok = pass.H0 == "holds" && fail.H0 == "fails" && std::abs(pass.geometry.T_min - hand) <= 1e-12 &&
                    std::abs(fail.geometry.T_min - hand) <= 1e-12;
    return {ok, "T=2.5: " + pass.H0 + ", T=2.0: " + fail.H0 + ", T_min " + fmt(pass.geometry.T_min)};
}

Verdict c13() {
    const auto c = load_config(kSource / "configs/lipschitz_default.json");
    const fs::path base = fs::temp_directory_path() / "wavectrl_acceptance";
    std::ostringstream sink;
    for (const char* run_name : {"a", "b"}) {
        fs::remove_all(base / run_name);
        RunOptions o;
        o.out_dir = base / run_name;
        o.log = &sink;
        run(c, o);
    }
    const std::string a = slurp(base / "a/iterates.csv");
    const std::string b = slurp(base / "b/iterates.csv");
    return {!a.empty() && a == b, std::to_string(a.size()) + " bytes, " + (a == b ? "identical" : "different")};
}

}  // namespace

int main() {
    const auto lip = load_config(kSource / "configs/lipschitz_default.json");
    const auto lip_problem = make_problem(lip);
    std::optional<LSResult> lip_result;
    auto lip_run = [&]() -> const LSResult& {
        if (!lip_result) lip_result = ls_solve(lip_problem, lip.ls);
        return *lip_result;
    };

    const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria{
        {"solver order", c1},
        {"gramian structure", c2},
        {"oracle equivalence", c3},
        {"linear controllability", c4},
        {"descent identity", [&] { return c5(lip_problem, lip.ls); }},
        {"global convergence", [&] { return c6(lip_run()); }},
        {"step tends to one", [&] { return c7(lip_run()); }},
        {"linear one-step exactness", c8},
        {"newton equivalence", c9},
        {"comparison preset", c10},
        {"order fit", c11},
        {"hypothesis checker", c12},
        {"determinism", c13},
    };
    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const auto t0 = std::chrono::steady_clock::now();
        Verdict v;
        try {
            v = criteria[i].second();
        } catch (const std::exception& e) {
            v = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        failures += !v.pass;
        std::printf("%s criterion %zu (%s): %s [%.2f s]\n", v.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(),
                    v.detail.c_str(), secs);
        std::fflush(stdout);
    }
    return failures == 0 ? 0 : 1;
}
