#include <cmath>
#include <sstream>

#include "bfmx/solver.hpp"
#include "doctest.h"
#include "test_support.hpp"

using namespace bfmx;

TEST_CASE("analytic battery solves to tolerance with clean certificates") {
    SolverSettings settings;
    auto battery = test::analytic_battery();
    REQUIRE(battery.size() >= 10);

    for (const auto& inst : battery) {
        CAPTURE(inst.name);
        auto out = solve(inst.problem, settings);
        CHECK(out.status == inst.expected);
        if (inst.expected != SolveStatus::Optimal) continue;

        const double scale = std::max(1.0, std::abs(inst.objective));
        CHECK(std::abs(out.objective - inst.objective) / scale <= 1e-7);
        CHECK(out.residuals.primal <= 1e-9);
        CHECK(out.residuals.dual <= 1e-9);
        CHECK(out.residuals.gap <= 1e-9);
        REQUIRE(out.x.size() == inst.problem.c.size());
        REQUIRE(out.s.size() == inst.problem.b.size());
        REQUIRE(out.y.size() == inst.problem.b.size());
    }
}

TEST_CASE("equilibration changes the arithmetic, not the answer") {
    SolverSettings on, off;
    off.equilibrate = false;

    for (const auto& inst : test::analytic_battery()) {
        CAPTURE(inst.name);
        auto a = solve(inst.problem, on);
        auto b = solve(inst.problem, off);
        CHECK(a.status == b.status);
        if (a.status != SolveStatus::Optimal) continue;
        for (std::size_t j = 0; j < a.x.size(); ++j)
            CHECK(a.x[j] == doctest::Approx(b.x[j]).epsilon(1e-6).scale(1.0));
    }
}

TEST_CASE("solves are deterministic") {
    SolverSettings settings;
    settings.trace = true;
    for (const auto& inst : test::analytic_battery()) {
        CAPTURE(inst.name);
        auto a = solve(inst.problem, settings);
        auto b = solve(inst.problem, settings);
        CHECK(a.status == b.status);
        CHECK(a.iterations == b.iterations);
        CHECK(a.x == b.x);
        CHECK(a.y == b.y);
        CHECK(a.s == b.s);
        REQUIRE(a.trace.size() == b.trace.size());
        for (std::size_t i = 0; i < a.trace.size(); ++i) {
            CHECK(a.trace[i].primal_res == b.trace[i].primal_res);
            CHECK(a.trace[i].dual_res == b.trace[i].dual_res);
            CHECK(a.trace[i].gap == b.trace[i].gap);
            CHECK(a.trace[i].step == b.trace[i].step);
        }
    }
}

TEST_CASE("trace is emitted only on request and serializes as CSV") {
    auto battery = test::analytic_battery();
    const auto& inst = battery.front();

    SolverSettings settings;
    auto quiet = solve(inst.problem, settings);
    CHECK(quiet.trace.empty());

    settings.trace = true;
    auto traced = solve(inst.problem, settings);
    REQUIRE(!traced.trace.empty());
    CHECK(traced.trace.size() == static_cast<std::size_t>(traced.iterations) + 1);

    std::string csv = trace_csv(traced);
    std::istringstream lines(csv);
    std::string line;
    REQUIRE(std::getline(lines, line));
    CHECK(line == "iter,primal_res,dual_res,gap,step");
    int rows = 0;
    while (std::getline(lines, line)) {
        int iter = -1;
        double pr, du, gp, st;
        REQUIRE(std::sscanf(line.c_str(), "%d,%lf,%lf,%lf,%lf", &iter, &pr, &du, &gp, &st) == 5);
        ++rows;
    }
    CHECK(rows == static_cast<int>(traced.trace.size()));
}

TEST_CASE("iteration cap reports max_iter with the best iterate") {
    auto battery = test::analytic_battery();
    SolverSettings settings;
    settings.max_iter = 2;
    auto out = solve(battery.front().problem, settings);
    CHECK(out.status == SolveStatus::MaxIter);
    CHECK(out.iterations <= 2);
    CHECK(!out.x.empty());
}

TEST_CASE("infeasibility certificates carry no optimal point claim") {
    for (const auto& inst : test::analytic_battery()) {
        if (inst.expected != SolveStatus::PrimalInfeasible &&
            inst.expected != SolveStatus::DualInfeasible)
            continue;
        CAPTURE(inst.name);
        auto out = solve(inst.problem, {});
        CHECK(out.status == inst.expected);
    }
}

TEST_CASE("backend interface names the implementation") {
    InteriorPointSolver ipm;
    CHECK(ipm.name() == "bfmx-ipm");
    auto battery = test::analytic_battery();
    auto out = ipm.solve(battery.front().problem, {});
    CHECK(out.status == SolveStatus::Optimal);
}
