// Acceptance gate: eight end-to-end criteria, one PASS/FAIL line each.
// Exit code is the number of failed criteria.

#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "bfmx/exactness.hpp"
#include "bfmx/experiments.hpp"
#include "bfmx/recovery.hpp"
#include "bfmx/solver.hpp"
#include "test_support.hpp"

using namespace bfmx;

namespace {

struct Verdict {
    bool ok = true;
    std::string detail;
};

double ms_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
        .count();
}

std::string fmt(const char* f, ...) {
    char buf[512];
    va_list args;
    va_start(args, f);
    std::vsnprintf(buf, sizeof(buf), f, args);
    va_end(args);
    return buf;
}

Verdict baseline_exactness() {
    auto t0 = std::chrono::steady_clock::now();
    Network net = test::load_case("case14.m");
    ObjectiveSpec obj;
    ConditionsReport cond = audit_conditions(net, obj);
    if (!cond.structural_pass()) return {false, "structural conditions failed"};
    auto [prob, map] = build_cr(net, obj);
    SolveOutcome out = solve(prob, {});
    if (out.status != SolveStatus::Optimal)
        return {false, "solver returned " + status_name(out.status)};
    BfmSolution sol = extract_solution(out.x, map, prob.c);
    GapReport gaps = gap_report(net, sol, 1e-5);
    double ms = ms_since(t0);
    if (gaps.num_nonbinding != 0)
        return {false, fmt("%d non-binding branches at the optimum", gaps.num_nonbinding)};
    if (ms >= 1000.0) return {false, fmt("took %.0f ms, budget 1000 ms", ms)};
    return {true, fmt("conditions pass, num_nonbinding=0, max_gap=%.1e, %.0f ms",
                      gaps.max_gap, ms)};
}

Verdict negation_sweep() {
    auto t0 = std::chrono::steady_clock::now();
    Network net = test::load_case("case14.m");
    SweepReport rep = nr_sweep(net, {}, {}, {});
    double ms = ms_since(t0);

    std::string errors;
    auto row = [&](int line) -> const SweepRow& { return rep.rows[line - 1]; };
    for (int line : {14, 15}) {
        const SweepRow& r = row(line);
        if (r.num_nonbinding != 1 || r.max_gap < 1.0)
            errors += fmt("%sline %d stayed exact (num_nonbinding=%d, max_gap=%.1e), expected "
                          "one non-binding branch with gap >= 1",
                          errors.empty() ? "" : "; ", line, r.num_nonbinding, r.max_gap);
    }
    for (int line : {1, 2, 3, 4, 5, 19, 20}) {
        const SweepRow& r = row(line);
        if (r.num_nonbinding != 0)
            errors += fmt("%sline %d not exact (num_nonbinding=%d)",
                          errors.empty() ? "" : "; ", line, r.num_nonbinding);
    }
    if (ms >= 30000.0) errors += fmt("%stook %.0f ms, budget 30000 ms",
                                     errors.empty() ? "" : "; ", ms);
    if (!errors.empty()) return {false, errors};
    return {true, fmt("lines 14/15 gapped (%.2f, %.2f), lines 1-5/19/20 exact, %.0f ms",
                      row(14).max_gap, row(15).max_gap, ms)};
}

Verdict flip_300() {
    auto t0 = std::chrono::steady_clock::now();
    Network net = test::load_case("case300.m");

    int negx = 0;
    std::size_t at = 0;
    for (std::size_t k = 0; k < net.branches.size(); ++k)
        if (net.branches[k].x < 0.0) {
            ++negx;
            at = k;
        }
    if (negx != 1) return {false, fmt("expected 1 negative-reactance branch, found %d", negx)};
    if (net.branches[at].x != -0.3697)
        return {false, fmt("branch %zu has x=%.17g, expected exactly -0.3697", at + 1,
                           net.branches[at].x)};

    FlipComparison cmp = flip_experiment(net, at, {}, {});
    double ms = ms_since(t0);
    if (cmp.before.status != SolveStatus::Optimal)
        return {false, "original solve returned " + status_name(cmp.before.status)};
    if (cmp.after.status != SolveStatus::Optimal)
        return {false, "flipped solve returned " + status_name(cmp.after.status)};
    if (cmp.before.gaps.num_nonbinding < 1)
        return {false, "original optimum has no non-binding branch"};
    if (cmp.after.gaps.num_nonbinding != 0)
        return {false, fmt("flipped optimum has %d non-binding branches",
                           cmp.after.gaps.num_nonbinding)};
    if (ms >= 60000.0) return {false, fmt("took %.0f ms, budget 60000 ms", ms)};
    return {true, fmt("branch %zu x=-0.3697, original %d non-binding (gap %.2f), flipped 0, "
                      "%.0f ms",
                      at + 1, cmp.before.gaps.num_nonbinding, cmp.before.gaps.max_gap, ms)};
}

Verdict perturbation_improves() {
    std::mt19937 rng(4242);
    ObjectiveSpec obj;
    const double eps = 1e-6;
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        test::RadialInstance inst = test::random_radial(rng, 4, 10);
        std::uniform_int_distribution<int> pick(0,
                                                static_cast<int>(inst.net.branches.size()) - 1);
        int b = pick(rng);
        test::inflate_branch(inst, b, 4.0);
        PerturbationResult pr = perturb(inst.net, obj, inst.sol, b, eps);
        if (!pr.feasible) return {false, fmt("trial %d: perturbed point infeasible", trial)};
        double want = -(inst.net.branches[b].r + obj.epsilon_l) * eps;
        double err = std::abs(pr.objective_delta - want);
        worst = std::max(worst, err);
        if (err > 1e-12)
            return {false, fmt("trial %d: objective_delta off by %.2e", trial, err)};
    }
    return {true, fmt("100 trials feasible, worst objective_delta error %.1e", worst)};
}

Verdict perturbation_blocked() {
    std::mt19937 rng(555);
    ObjectiveSpec obj;
    for (int trial = 0; trial < 25; ++trial) {
        test::RadialInstance inst = test::random_radial(rng, 4, 10);
        std::uniform_int_distribution<int> pick(0,
                                                static_cast<int>(inst.net.branches.size()) - 1);
        int b = pick(rng);
        inst.net.branches[b].x = -inst.net.branches[b].x;
        test::tighten_cones(inst);
        test::inflate_branch(inst, b, 4.0);
        PerturbationResult pr = perturb(inst.net, obj, inst.sol, b, 1e-6);
        if (pr.feasible) return {false, fmt("trial %d: perturbation not blocked", trial)};
        bool qc_lower = false;
        for (const ConstraintViolation& v : pr.violated_constraints)
            if (v.family == "qc_lower") qc_lower = true;
        if (!qc_lower)
            return {false, fmt("trial %d: no reactive load lower-bound violation", trial)};
    }
    return {true, "25 trials, all blocked by a reactive load lower bound"};
}

Verdict affine_invariance() {
    std::mt19937 rng(66);
    ObjectiveSpec obj;
    double worst = 0.0;
    for (int trial = 0; trial < 50; ++trial) {
        for (bool negate : {false, true}) {
            test::RadialInstance inst = test::random_radial(rng, 4, 10);
            std::uniform_int_distribution<int> pick(
                0, static_cast<int>(inst.net.branches.size()) - 1);
            int b = pick(rng);
            if (negate) {
                inst.net.branches[b].x = -inst.net.branches[b].x;
                test::tighten_cones(inst);
            }
            test::inflate_branch(inst, b, 4.0);
            PerturbationResult pr = perturb(inst.net, obj, inst.sol, b, 1e-6);
            FeasibilityReport fr = check_feasibility(inst.net, pr.candidate, 1e-9);
            worst = std::max({worst, fr.max_balance_p, fr.max_balance_q, fr.max_voltage_drop});
        }
    }
    if (worst > 1e-12) return {false, fmt("worst affine residual %.2e exceeds 1e-12", worst)};
    return {true, fmt("worst affine residual %.1e over 100 perturbed points, both signs of x",
                      worst)};
}

Verdict solver_battery() {
    std::vector<test::BatteryInstance> battery = test::analytic_battery();
    if (battery.size() < 10)
        return {false, fmt("only %zu analytic instances", battery.size())};
    double worst_obj = 0.0, worst_res = 0.0;
    for (const test::BatteryInstance& inst : battery) {
        SolveOutcome out = solve(inst.problem, {});
        if (out.status != inst.expected)
            return {false, inst.name + ": status " + status_name(out.status) + ", expected " +
                               status_name(inst.expected)};
        if (inst.expected != SolveStatus::Optimal) continue;
        double err = std::abs(out.objective - inst.objective) /
                     std::max(1.0, std::abs(inst.objective));
        worst_obj = std::max(worst_obj, err);
        if (err > 1e-7) return {false, fmt("%s: objective off by %.2e", inst.name.c_str(), err)};
        double res = std::max({out.residuals.primal, out.residuals.dual, out.residuals.gap});
        worst_res = std::max(worst_res, res);
        if (res > 1e-9)
            return {false, fmt("%s: KKT residual %.2e exceeds 1e-9", inst.name.c_str(), res)};
    }

    std::mt19937 rng(777);
    std::uniform_real_distribution<double> coord(-3.0, 3.0);
    std::uniform_int_distribution<int> dim(2, 8);
    for (int t = 0; t < 10000; ++t) {
        std::vector<double> z(dim(rng));
        for (double& v : z) v = coord(rng);
        std::vector<double> p = project_soc(z);
        double nu = 0.0;
        for (std::size_t i = 1; i < p.size(); ++i) nu += p[i] * p[i];
        nu = std::sqrt(nu);
        if (p[0] < nu - 1e-12) return {false, fmt("projection %d left the cone", t)};
        std::vector<double> pp = project_soc(p);
        for (std::size_t i = 0; i < p.size(); ++i)
            if (std::abs(pp[i] - p[i]) > 1e-12)
                return {false, fmt("projection %d not idempotent", t)};
    }
    return {true, fmt("%zu instances (objectives to %.1e, worst KKT residual %.1e), "
                      "10000 projections verified",
                      battery.size(), worst_obj, worst_res)};
}

Verdict two_bus_oracle_match() {
    test::TwoBusCase spec;
    Network net = test::two_bus_network(spec);
    test::TwoBusOracle oracle = test::two_bus_oracle(spec);
    auto [prob, map] = build_cr(net, ObjectiveSpec{});
    SolveOutcome out = solve(prob, {});
    if (out.status != SolveStatus::Optimal)
        return {false, "solver returned " + status_name(out.status)};
    BfmSolution sol = extract_solution(out.x, map, prob.c);

    double worst = 0.0;
    auto close = [&worst](double got, double want) {
        double err = std::abs(got - want) / std::max(1.0, std::abs(want));
        worst = std::max(worst, err);
        return err <= 1e-7;
    };
    if (!close(sol.l[0], oracle.l)) return {false, fmt("l off by %.2e", worst)};
    if (!close(sol.f[0], oracle.f)) return {false, fmt("F off by %.2e", worst)};
    if (!close(sol.h[0], oracle.h)) return {false, fmt("H off by %.2e", worst)};
    if (!close(sol.v[0], oracle.v1)) return {false, fmt("v1 off by %.2e", worst)};
    if (!close(sol.v[1], oracle.v2)) return {false, fmt("v2 off by %.2e", worst)};
    if (!close(sol.pc[0], oracle.pc1)) return {false, fmt("pc1 off by %.2e", worst)};
    if (!close(sol.qc[0], oracle.qc1)) return {false, fmt("qc1 off by %.2e", worst)};
    if (!close(sol.pc[1], oracle.pc2)) return {false, fmt("pc2 off by %.2e", worst)};
    if (!close(sol.qc[1], oracle.qc2)) return {false, fmt("qc2 off by %.2e", worst)};
    if (!close(sol.pg[0], spec.pg)) return {false, fmt("pg off by %.2e", worst)};
    if (!close(sol.qg[0], spec.qg)) return {false, fmt("qg off by %.2e", worst)};
    if (!close(sol.objective, oracle.objective))
        return {false, fmt("objective off by %.2e", worst)};

    AngleRecovery rec = recover_angles(net, sol, 1e-6);
    if (!rec.recoverable) return {false, "angles not recoverable on the radial optimum"};
    std::vector<double> u = {std::sqrt(sol.v[0]), std::sqrt(sol.v[1])};
    AcResiduals ac =
        ac_residuals(net, u, rec.theta, sol.pg, sol.qg, sol.pc, sol.qc);
    if (ac.max_abs > 1e-6)
        return {false, fmt("ac residual %.2e exceeds 1e-6", ac.max_abs)};
    return {true, fmt("all variables within %.1e of the oracle, ac residual %.1e", worst,
                      ac.max_abs)};
}

}  // namespace

int main() {
    struct Criterion {
        const char* title;
        Verdict (*run)();
    };
    const Criterion criteria[] = {
        {"14-bus baseline relaxation is exact under passing conditions", baseline_exactness},
        {"reactance-negation sweep gaps lines 14/15 and keeps 1-5/19/20 exact", negation_sweep},
        {"300-bus negative-reactance branch, flip restores exactness", flip_300},
        {"perturbation on positive-x slack branches is feasible and improving", perturbation_improves},
        {"perturbation with negative x dies on reactive load lower bounds", perturbation_blocked},
        {"perturbed points keep the affine equations to 1e-12", affine_invariance},
        {"conic solver analytic battery and SOC projection", solver_battery},
        {"two-bus relaxation matches the one-dimensional oracle", two_bus_oracle_match},
    };

    int failures = 0;
    int n = 0;
    for (const Criterion& c : criteria) {
        ++n;
        Verdict v;
        try {
            v = c.run();
        } catch (const std::exception& e) {
            v = {false, std::string("exception: ") + e.what()};
        }
        if (!v.ok) ++failures;
        std::printf("%s  criterion %d: %s -- %s\n", v.ok ? "PASS" : "FAIL", n, c.title,
                    v.detail.c_str());
    }
    std::printf("%d of 8 criteria passed\n", 8 - failures);
    return failures;
}
