#include "bfmx/experiments.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace bfmx {

namespace {

double ms_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
        .count();
}

struct RowResult {
    SweepRow row;
    std::vector<std::string> notes;
};

RowResult run_sweep_row(const Network& base, int branch, const ObjectiveSpec& obj,
                        const SolverSettings& settings, const SweepOptions& opts) {
    RowResult out;
    out.row.line = branch + 1;
    Network net = negate_reactance(base, static_cast<std::size_t>(branch));
    auto t0 = std::chrono::steady_clock::now();
    BuildResult build = build_cr(net, obj);
    SolveOutcome sol = solve(build.problem, settings);
    out.row.solve_ms = ms_since(t0);
    out.row.status = sol.status;
    if (sol.status != SolveStatus::Optimal && sol.status != SolveStatus::MaxIter) {
        out.notes.push_back("line " + std::to_string(branch + 1) +
                            ": solver returned " + status_name(sol.status) +
                            ", gaps not evaluated");
        return out;
    }
    if (sol.status == SolveStatus::MaxIter)
        out.notes.push_back("line " + std::to_string(branch + 1) +
                            ": iteration limit hit, gaps from best iterate");
    BfmSolution point = extract_solution(sol.x, build.map, build.problem.c);
    GapReport gaps = gap_report(net, point, opts.tight_tol);
    out.row.max_gap = gaps.max_gap;
    out.row.num_nonbinding = gaps.num_nonbinding;

    if (gaps.num_nonbinding > 0) {
        // Check the improvement argument on each non-binding branch: with
        // x < 0 it must die on a load lower bound; a feasible improving
        // perturbation would mean the reported point was not optimal.
        ContradictionRecord rec = demonstrate_contradiction(net, obj, point, opts.tight_tol,
                                                            opts.contradiction_eps);
        for (const ContradictionEntry& e : rec.entries) {
            std::ostringstream note;
            note << "line " << branch + 1 << ": branch " << e.branch << " non-binding (gap "
                 << e.gap << ", x " << e.x << "): ";
            if (e.improves) {
                note << "REVIEW: feasible improving perturbation (point not optimal?)";
            } else if (!e.feasible) {
                bool load_bound = false;
                for (const ConstraintViolation& v : e.violations)
                    if (v.family == "qc_lower" || v.family == "pc_lower") load_bound = true;
                note << (load_bound
                             ? "perturbation blocked by a load lower bound"
                             : "perturbation infeasible");
            } else {
                note << "perturbation feasible but not improving";
            }
            out.notes.push_back(note.str());
        }
    }
    return out;
}

}  // namespace

SweepReport nr_sweep(const Network& net, const ObjectiveSpec& obj, const SolverSettings& settings,
                     const SweepOptions& opts) {
    auto diags = validate(net);
    for (const Diagnostic& d : diags)
        if (d.severity == Severity::Error)
            throw std::invalid_argument("nr_sweep: invalid network: " + d.message);

    SweepReport report;

    {
        auto t0 = std::chrono::steady_clock::now();
        BuildResult build = build_cr(net, obj);
        SolveOutcome sol = solve(build.problem, settings);
        report.baseline.line = 0;
        report.baseline.status = sol.status;
        report.baseline.solve_ms = ms_since(t0);
        if (sol.status == SolveStatus::Optimal || sol.status == SolveStatus::MaxIter) {
            BfmSolution point = extract_solution(sol.x, build.map, build.problem.c);
            GapReport gaps = gap_report(net, point, opts.tight_tol);
            report.baseline.max_gap = gaps.max_gap;
            report.baseline.num_nonbinding = gaps.num_nonbinding;
        }
        if (report.baseline.status != SolveStatus::Optimal)
            report.notes.push_back("baseline: solver returned " +
                                   status_name(report.baseline.status));
        else if (report.baseline.num_nonbinding != 0)
            report.notes.push_back("baseline: relaxation not exact before any modification");
    }

    std::vector<int> lines;
    for (std::size_t k = 0; k < net.branches.size(); ++k)
        if (net.branches[k].in_service) lines.push_back(static_cast<int>(k));

    std::vector<RowResult> results(lines.size());
    int workers = opts.workers > 0 ? opts.workers
                                   : static_cast<int>(std::thread::hardware_concurrency());
    workers = std::max(1, std::min<int>(workers, static_cast<int>(lines.size())));

    if (workers == 1) {
        for (std::size_t i = 0; i < lines.size(); ++i)
            results[i] = run_sweep_row(net, lines[i], obj, settings, opts);
    } else {
        std::atomic<std::size_t> next{0};
        auto worker = [&]() {
            for (;;) {
                std::size_t i = next.fetch_add(1);
                if (i >= lines.size()) return;
                results[i] = run_sweep_row(net, lines[i], obj, settings, opts);
            }
        };
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }

    for (RowResult& rr : results) {
        report.rows.push_back(rr.row);
        for (std::string& note : rr.notes) report.notes.push_back(std::move(note));
    }
    return report;
}

TableFormat table_format_from_name(const std::string& name) {
    if (name == "csv") return TableFormat::Csv;
    if (name == "json") return TableFormat::Json;
    if (name == "text") return TableFormat::Text;
    throw std::invalid_argument("unknown table format: " + name);
}

static nlohmann::json row_json(const SweepRow& r) {
    return {{"line", r.line},
            {"status", status_name(r.status)},
            {"max_gap", r.max_gap},
            {"num_nonbinding", r.num_nonbinding},
            {"solve_ms", r.solve_ms}};
}

std::string emit_table(const SweepReport& report, TableFormat format) {
    if (format == TableFormat::Json) {
        nlohmann::json j;
        j["baseline"] = row_json(report.baseline);
        j["rows"] = nlohmann::json::array();
        for (const SweepRow& r : report.rows) j["rows"].push_back(row_json(r));
        j["notes"] = report.notes;
        return j.dump(2) + "\n";
    }
    if (format == TableFormat::Csv) {
        std::string out = "line,status,max_gap,num_nonbinding,solve_ms\n";
        char line[160];
        for (const SweepRow& r : report.rows) {
            std::snprintf(line, sizeof(line), "%d,%s,%.9e,%d,%.3f\n", r.line,
                          status_name(r.status).c_str(), r.max_gap, r.num_nonbinding,
                          r.solve_ms);
            out += line;
        }
        return out;
    }
    std::string out;
    char line[180];
    std::snprintf(line, sizeof(line), "%6s  %-18s  %14s  %14s  %10s\n", "line", "status",
                  "max_gap", "nonbinding", "ms");
    out += line;
    auto fmt = [&](const SweepRow& r, const char* label) {
        std::snprintf(line, sizeof(line), "%6s  %-18s  %14.6e  %14d  %10.2f\n", label,
                      status_name(r.status).c_str(), r.max_gap, r.num_nonbinding, r.solve_ms);
        out += line;
    };
    fmt(report.baseline, "base");
    for (const SweepRow& r : report.rows) fmt(r, std::to_string(r.line).c_str());
    for (const std::string& n : report.notes) out += "# " + n + "\n";
    return out;
}

static PipelineRun run_pipeline(const Network& net, const ObjectiveSpec& obj,
                                const SolverSettings& settings, double tight_tol) {
    PipelineRun run;
    run.conditions = audit_conditions(net, obj);
    auto t0 = std::chrono::steady_clock::now();
    BuildResult build = build_cr(net, obj);
    SolveOutcome sol = solve(build.problem, settings);
    run.solve_ms = ms_since(t0);
    run.status = sol.status;
    run.residuals = sol.residuals;
    run.iterations = sol.iterations;
    run.conditions.solve_status = sol.status;
    if (sol.status != SolveStatus::Optimal && sol.status != SolveStatus::MaxIter) return run;
    run.solution = extract_solution(sol.x, build.map, build.problem.c);
    run.gaps = gap_report(net, run.solution, tight_tol);
    run.ar_feasible = check_feasibility(net, run.solution, 1e-6).ar_feasible;
    // Recovery wants an exact point; when the relaxation is not exact the
    // comparison still carries the forced result for inspection.
    run.recovery = recover_angles(net, run.solution, 1e-6, !run.ar_feasible);
    std::vector<double> u(run.solution.v.size());
    for (std::size_t i = 0; i < u.size(); ++i) u[i] = std::sqrt(std::max(0.0, run.solution.v[i]));
    run.ac = ac_residuals(net, u, run.recovery.theta, run.solution.pg, run.solution.qg,
                          run.solution.pc, run.solution.qc);
    return run;
}

FlipComparison flip_experiment(const Network& net, std::size_t branch_index,
                               const ObjectiveSpec& obj, const SolverSettings& settings,
                               double tight_tol) {
    if (branch_index >= net.branches.size())
        throw std::out_of_range("flip_experiment: branch index out of range");
    FlipComparison cmp;
    cmp.line = static_cast<int>(branch_index) + 1;
    cmp.before = run_pipeline(net, obj, settings, tight_tol);
    cmp.after = run_pipeline(negate_reactance(net, branch_index), obj, settings, tight_tol);
    return cmp;
}

nlohmann::json to_json(const SweepReport& report) {
    nlohmann::json j;
    j["baseline"] = row_json(report.baseline);
    j["rows"] = nlohmann::json::array();
    for (const SweepRow& r : report.rows) j["rows"].push_back(row_json(r));
    j["notes"] = report.notes;
    return j;
}

nlohmann::json to_json(const PipelineRun& run) {
    nlohmann::json j;
    j["conditions"] = to_json(run.conditions);
    j["status"] = status_name(run.status);
    j["iterations"] = run.iterations;
    j["solve_ms"] = run.solve_ms;
    j["residuals"] = {{"primal", run.residuals.primal},
                      {"dual", run.residuals.dual},
                      {"gap", run.residuals.gap}};
    j["objective"] = run.solution.objective;
    j["gap_report"] = to_json(run.gaps);
    j["ar_feasible"] = run.ar_feasible;
    j["recovery"] = to_json(run.recovery);
    j["max_ac_residual"] = run.ac.max_abs;
    return j;
}

nlohmann::json to_json(const FlipComparison& cmp) {
    nlohmann::json j;
    j["line"] = cmp.line;
    j["before"] = to_json(cmp.before);
    j["after"] = to_json(cmp.after);
    return j;
}

}  // namespace bfmx
