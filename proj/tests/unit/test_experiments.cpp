#include <algorithm>
#include <set>
#include <string>

#include "bfmx/experiments.hpp"
#include "doctest.h"
#include "test_support.hpp"

using namespace bfmx;

TEST_CASE("table format names map to the three emitters") {
    CHECK(table_format_from_name("csv") == TableFormat::Csv);
    CHECK(table_format_from_name("json") == TableFormat::Json);
    CHECK(table_format_from_name("text") == TableFormat::Text);
    CHECK_THROWS_AS(table_format_from_name("yaml"), std::invalid_argument);
    CHECK_THROWS_AS(table_format_from_name(""), std::invalid_argument);
}

TEST_CASE("emit_table renders a fixed report byte-stably") {
    SweepReport rep;
    rep.baseline = {0, SolveStatus::Optimal, 2.5e-10, 0, 12.0};
    rep.rows.push_back({1, SolveStatus::Optimal, 1.5, 1, 30.25});
    rep.rows.push_back({2, SolveStatus::PrimalInfeasible, 0.0, 0, 8.5});
    rep.notes.push_back("line 1: example note");

    SUBCASE("csv") {
        CHECK(emit_table(rep, TableFormat::Csv) ==
              "line,status,max_gap,num_nonbinding,solve_ms\n"
              "1,optimal,1.500000000e+00,1,30.250\n"
              "2,primal_infeasible,0.000000000e+00,0,8.500\n");
    }
    SUBCASE("text") {
        std::string text = emit_table(rep, TableFormat::Text);
        CHECK(text.find("line") != std::string::npos);
        CHECK(text.find("base") != std::string::npos);
        CHECK(text.find("primal_infeasible") != std::string::npos);
        CHECK(text.find("# line 1: example note") != std::string::npos);
    }
    SUBCASE("json") {
        nlohmann::json j = nlohmann::json::parse(emit_table(rep, TableFormat::Json));
        CHECK(j["baseline"]["line"] == 0);
        CHECK(j["baseline"]["status"] == "optimal");
        CHECK(j["rows"].size() == 2);
        CHECK(j["rows"][0]["max_gap"] == 1.5);
        CHECK(j["rows"][1]["status"] == "primal_infeasible");
        CHECK(j["notes"].size() == 1);
    }
}

TEST_CASE("nr_sweep rejects invalid networks") {
    Network net = test::two_bus_network({});
    net.buses.push_back({.id = 9});  // disconnected island
    CHECK_THROWS_AS(nr_sweep(net, {}, {}, {}), std::invalid_argument);
}

TEST_CASE("the 14-bus negation sweep isolates four gapped lines") {
    Network net = test::load_case("case14.m");
    SweepReport rep = nr_sweep(net, {}, {}, {});

    CHECK(rep.baseline.line == 0);
    CHECK(rep.baseline.status == SolveStatus::Optimal);
    CHECK(rep.baseline.num_nonbinding == 0);
    REQUIRE(rep.rows.size() == 20);

    const std::set<int> gapped = {8, 9, 10, 15};
    for (const SweepRow& row : rep.rows) {
        CHECK(row.status == SolveStatus::Optimal);
        if (gapped.count(row.line)) {
            CHECK(row.num_nonbinding == 1);
            CHECK(row.max_gap >= 1.0);
        } else {
            CHECK(row.num_nonbinding == 0);
            CHECK(row.max_gap <= 1e-6);
        }
    }

    // Rows arrive in line order, so tables are comparable across runs.
    for (std::size_t i = 0; i < rep.rows.size(); ++i)
        CHECK(rep.rows[i].line == static_cast<int>(i) + 1);

    // Each gapped line explains itself: the improving move dies on a load
    // lower bound, never on a feasible improvement at the claimed optimum.
    for (int line : gapped) {
        const std::string prefix = "line " + std::to_string(line) + ":";
        int found = 0;
        for (const std::string& note : rep.notes) {
            if (note.compare(0, prefix.size(), prefix) != 0) continue;
            ++found;
            CHECK(note.find("blocked by a load lower bound") != std::string::npos);
        }
        CHECK(found == 1);
    }
    for (const std::string& note : rep.notes)
        CHECK(note.find("REVIEW") == std::string::npos);
}

TEST_CASE("sweep rows are reproducible and worker-count independent") {
    Network net = test::load_case("case14.m");
    SweepOptions serial;
    serial.workers = 1;
    SweepOptions pooled;
    pooled.workers = 4;
    SweepReport a = nr_sweep(net, {}, {}, serial);
    SweepReport b = nr_sweep(net, {}, {}, pooled);

    REQUIRE(a.rows.size() == b.rows.size());
    for (std::size_t i = 0; i < a.rows.size(); ++i) {
        CHECK(a.rows[i].line == b.rows[i].line);
        CHECK(a.rows[i].status == b.rows[i].status);
        CHECK(a.rows[i].max_gap == b.rows[i].max_gap);
        CHECK(a.rows[i].num_nonbinding == b.rows[i].num_nonbinding);
    }
    CHECK(a.notes == b.notes);
}

TEST_CASE("flip_experiment reproduces the 300-bus reactance story") {
    Network net = test::load_case("case300.m");
    FlipComparison cmp = flip_experiment(net, 178, {}, {});
    CHECK(cmp.line == 179);

    CHECK(cmp.before.status == SolveStatus::Optimal);
    REQUIRE(cmp.before.conditions.negative_x_branches.size() == 1);
    CHECK(cmp.before.conditions.negative_x_branches[0] == 179);
    CHECK_FALSE(cmp.before.conditions.structural_pass());
    CHECK(cmp.before.gaps.num_nonbinding == 1);
    CHECK(cmp.before.gaps.max_gap > 1.0);
    CHECK_FALSE(cmp.before.ar_feasible);
    CHECK(cmp.before.recovery.forced);

    CHECK(cmp.after.status == SolveStatus::Optimal);
    CHECK(cmp.after.conditions.no_negative_reactance());
    CHECK(cmp.after.conditions.structural_pass());
    CHECK(cmp.after.gaps.num_nonbinding == 0);
    CHECK(cmp.after.ar_feasible);
    CHECK_FALSE(cmp.after.recovery.forced);

    nlohmann::json j = to_json(cmp);
    CHECK(j["line"] == 179);
    CHECK(j["before"]["gap_report"]["num_nonbinding"] == 1);
    CHECK(j["after"]["ar_feasible"] == true);
    CHECK(j["after"]["conditions"]["solve_status"] == "optimal");
    CHECK(j["before"]["max_ac_residual"].is_number());
}

TEST_CASE("flipping a clean 14-bus line breaks exactness in one direction") {
    Network net = test::load_case("case14.m");
    FlipComparison cmp = flip_experiment(net, 14, {}, {});
    CHECK(cmp.line == 15);
    CHECK(cmp.before.gaps.num_nonbinding == 0);
    CHECK(cmp.before.ar_feasible);
    CHECK(cmp.before.conditions.structural_pass());
    CHECK(cmp.after.gaps.num_nonbinding == 1);
    CHECK(cmp.after.gaps.max_gap >= 1.0);
    CHECK_FALSE(cmp.after.conditions.structural_pass());
    CHECK_FALSE(cmp.after.ar_feasible);
    CHECK(cmp.after.recovery.forced);
}

TEST_CASE("a two-bus flip still matches the one-dimensional oracle") {
    // A lone line with negated reactance keeps the relaxation exact here:
    // the audit flags the risk, the gap decides the outcome.
    test::TwoBusCase spec;
    Network net = test::two_bus_network(spec);
    FlipComparison cmp = flip_experiment(net, 0, {}, {});

    test::TwoBusCase flipped = spec;
    flipped.x = -spec.x;
    test::TwoBusOracle oracle = test::two_bus_oracle(flipped);

    CHECK(cmp.after.status == SolveStatus::Optimal);
    CHECK_FALSE(cmp.after.conditions.no_negative_reactance());
    CHECK(cmp.after.gaps.num_nonbinding == 0);
    CHECK(cmp.after.solution.l[0] == doctest::Approx(oracle.l).epsilon(1e-7));
    CHECK(cmp.after.solution.f[0] == doctest::Approx(oracle.f).epsilon(1e-7));
    CHECK(cmp.after.solution.h[0] == doctest::Approx(oracle.h).epsilon(1e-7).scale(1.0));
    CHECK(cmp.after.solution.v[1] == doctest::Approx(oracle.v2).epsilon(1e-7));
    CHECK(cmp.after.solution.objective == doctest::Approx(oracle.objective).epsilon(1e-7));
}

TEST_CASE("flip_experiment validates the branch index") {
    Network net = test::two_bus_network({});
    CHECK_THROWS_AS(flip_experiment(net, 5, {}, {}), std::out_of_range);
}
