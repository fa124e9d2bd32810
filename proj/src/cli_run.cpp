#include "bfmx/cli.hpp"

#include <cmath>
#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include "bfmx/bfm.hpp"
#include "bfmx/exactness.hpp"
#include "bfmx/experiments.hpp"
#include "bfmx/network.hpp"
#include "bfmx/recovery.hpp"
#include "bfmx/solver.hpp"
#include "json.hpp"

namespace bfmx {

namespace {

std::string num(double v) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.9e", v);
    return buf;
}

void print_diags(const std::vector<Diagnostic>& diags, std::ostream& err) {
    for (const Diagnostic& d : diags)
        err << (d.severity == Severity::Error ? "error: " : "warning: ") << d.code << ": "
            << d.message << "\n";
}

SolverSettings settings_from(const RunConfig& config) {
    SolverSettings s;
    s.tol_feas = config.tol;
    s.tol_gap = config.tol;
    s.max_iter = config.max_iter;
    s.trace = config.trace;
    return s;
}

bool load_case(const RunConfig& config, Network& net, std::ostream& err) {
    try {
        ParseResult parsed = parse_matpower_file(config.case_path);
        print_diags(parsed.warnings, err);
        auto diags = validate(parsed.network);
        print_diags(diags, err);
        if (has_errors(diags)) return false;
        net = std::move(parsed.network);
        return true;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return false;
    }
}

bool format_ok(const RunConfig& config, std::ostream& err,
               bool csv_allowed) {
    if (config.format == "text" || config.format == "json") return true;
    if (config.format == "csv" && csv_allowed) return true;
    err << "error: format '" << config.format << "' not supported for " << config.command
        << "\n";
    return false;
}

void print_conditions_text(const ConditionsReport& rep, std::ostream& out) {
    auto yn = [](bool b) { return b ? "yes" : "NO"; };
    out << "connected:                " << yn(rep.connected) << "\n";
    out << "loads unbounded above:    " << yn(rep.loads_unbounded_above) << "\n";
    out << "objective convex:         " << yn(rep.objective_convex) << "\n";
    out << "strictly increasing in l: " << yn(rep.strictly_increasing_in_l) << "\n";
    out << "independent of flows:     " << yn(rep.independent_of_flows) << "\n";
    if (rep.negative_x_branches.empty()) {
        out << "negative-reactance lines: none\n";
    } else {
        out << "negative-reactance lines:";
        for (std::size_t i = 0; i < rep.negative_x_branches.size(); ++i)
            out << " " << rep.negative_x_branches[i] << " (x "
                << rep.negative_x_values[i] << ")";
        out << "\n";
    }
    out << "solve status:             "
        << (rep.solve_status ? status_name(*rep.solve_status) : "pending") << "\n";
    out << "overall:                  " << (rep.structural_pass() ? "pass" : "FAIL") << "\n";
}

int cmd_solve(const RunConfig& config, const Network& net, std::ostream& out,
              std::ostream& err) {
    if (!format_ok(config, err, true)) return 1;
    ObjectiveSpec obj{config.epsilon_l};
    BuildResult build = build_cr(net, obj);
    SolveOutcome sol = solve(build.problem, settings_from(config));
    if (config.trace) err << trace_csv(sol);

    bool solved = sol.status == SolveStatus::Optimal || sol.status == SolveStatus::MaxIter;
    if (!solved) {
        if (config.format == "json") {
            nlohmann::json j;
            j["status"] = status_name(sol.status);
            j["iterations"] = sol.iterations;
            out << j.dump(2) << "\n";
        } else {
            out << "status: " << status_name(sol.status) << " after " << sol.iterations
                << " iterations\n";
        }
        return 2;
    }

    BfmSolution point = extract_solution(sol.x, build.map, build.problem.c);
    GapReport gaps = gap_report(net, point, config.tight_tol);
    FeasibilityReport feas = check_feasibility(net, point, 1e-6);

    if (config.format == "csv") {
        out << gap_report_csv(gaps);
    } else if (config.format == "json") {
        nlohmann::json j;
        j["status"] = status_name(sol.status);
        j["iterations"] = sol.iterations;
        j["objective"] = sol.objective;
        j["residuals"] = {{"primal", sol.residuals.primal},
                          {"dual", sol.residuals.dual},
                          {"gap", sol.residuals.gap}};
        j["gap_report"] = to_json(gaps);
        j["cr_feasible"] = feas.cr_feasible;
        j["ar_feasible"] = feas.ar_feasible;
        out << j.dump(2) << "\n";
    } else {
        out << "status:       " << status_name(sol.status) << " (" << sol.iterations
            << " iterations)\n";
        out << "objective:    " << num(sol.objective) << "\n";
        out << "residuals:    primal " << num(sol.residuals.primal) << ", dual "
            << num(sol.residuals.dual) << ", gap " << num(sol.residuals.gap) << "\n";
        out << "cone gaps:    max " << num(gaps.max_gap) << ", non-binding "
            << gaps.num_nonbinding << " of " << gaps.branches.size() << " (tol "
            << gaps.tight_tol << ")\n";
        out << "feasibility:  relaxed " << (feas.cr_feasible ? "yes" : "NO") << ", exact "
            << (feas.ar_feasible ? "yes" : "no") << "\n";
    }
    return sol.status == SolveStatus::Optimal ? 0 : 2;
}

int cmd_audit(const RunConfig& config, const Network& net, std::ostream& out,
              std::ostream& err) {
    if (!format_ok(config, err, false)) return 1;
    ObjectiveSpec obj{config.epsilon_l};
    ConditionsReport rep = audit_conditions(net, obj);
    if (config.format == "json")
        out << to_json(rep).dump(2) << "\n";
    else
        print_conditions_text(rep, out);
    if (config.strict && !rep.structural_pass()) return 3;
    return 0;
}

int cmd_sweep(const RunConfig& config, const Network& net, std::ostream& out,
              std::ostream& err) {
    if (!format_ok(config, err, true)) return 1;
    ObjectiveSpec obj{config.epsilon_l};
    SweepOptions opts;
    opts.tight_tol = config.tight_tol;
    opts.workers = config.workers;
    SweepReport rep = nr_sweep(net, obj, settings_from(config), opts);
    out << emit_table(rep, table_format_from_name(config.format));
    if (rep.baseline.status != SolveStatus::Optimal) {
        err << "error: baseline solve returned " << status_name(rep.baseline.status) << "\n";
        return 2;
    }
    return 0;
}

int cmd_flip(const RunConfig& config, const Network& net, std::ostream& out,
             std::ostream& err) {
    if (!format_ok(config, err, false)) return 1;
    ObjectiveSpec obj{config.epsilon_l};
    int branch = config.branch;
    if (branch == 0) {
        ConditionsReport rep = audit_conditions(net, obj);
        if (rep.negative_x_branches.size() != 1) {
            err << "error: --branch 0 needs exactly one negative-reactance line, found "
                << rep.negative_x_branches.size() << "\n";
            return 1;
        }
        branch = rep.negative_x_branches.front();
    }
    if (branch < 1 || branch > static_cast<int>(net.branches.size())) {
        err << "error: branch " << branch << " out of range\n";
        return 1;
    }
    FlipComparison cmp =
        flip_experiment(net, static_cast<std::size_t>(branch - 1), obj, settings_from(config),
                        config.tight_tol);
    if (config.format == "json") {
        out << to_json(cmp).dump(2) << "\n";
    } else {
        const Branch& br = net.branches[static_cast<std::size_t>(branch - 1)];
        out << "line " << branch << " (" << br.from_bus << "-" << br.to_bus << "), x "
            << br.x << " -> " << -br.x << "\n";
        auto side = [&](const char* label, const PipelineRun& run) {
            out << label << "\n";
            out << "  status:          " << status_name(run.status) << " (" << run.iterations
                << " iterations)\n";
            if (run.status != SolveStatus::Optimal && run.status != SolveStatus::MaxIter)
                return;
            out << "  objective:       " << num(run.solution.objective) << "\n";
            out << "  cone gaps:       max " << num(run.gaps.max_gap) << ", non-binding "
                << run.gaps.num_nonbinding << "\n";
            out << "  exactness audit: "
                << (run.conditions.structural_pass() ? "pass" : "FAIL") << "\n";
            out << "  angle recovery:  "
                << (run.recovery.recoverable
                        ? "ok"
                        : (run.recovery.forced ? "forced (relaxation not exact)"
                                               : "mismatch above tolerance"))
                << ", max ac residual " << num(run.ac.max_abs) << "\n";
        };
        side("before:", cmp.before);
        side("after:", cmp.after);
    }
    bool ok = cmp.before.status == SolveStatus::Optimal &&
              cmp.after.status == SolveStatus::Optimal;
    return ok ? 0 : 2;
}

int cmd_recover(const RunConfig& config, const Network& net, std::ostream& out,
                std::ostream& err) {
    if (!format_ok(config, err, false)) return 1;
    ObjectiveSpec obj{config.epsilon_l};
    BuildResult build = build_cr(net, obj);
    SolveOutcome sol = solve(build.problem, settings_from(config));
    if (config.trace) err << trace_csv(sol);
    if (sol.status != SolveStatus::Optimal) {
        err << "error: solve returned " << status_name(sol.status) << "\n";
        return 2;
    }
    BfmSolution point = extract_solution(sol.x, build.map, build.problem.c);
    FeasibilityReport feas = check_feasibility(net, point, 1e-6);
    if (!feas.ar_feasible && !config.force_recovery) {
        err << "error: relaxation is not exact (max cone mismatch "
            << num(feas.max_cone_mismatch)
            << "); angles are undefined, use --force-recovery to proceed anyway\n";
        return 2;
    }
    AngleRecovery rec = recover_angles(net, point, 1e-6, config.force_recovery);
    std::vector<double> u(point.v.size());
    for (std::size_t i = 0; i < u.size(); ++i) u[i] = std::sqrt(std::max(0.0, point.v[i]));
    AcResiduals ac = ac_residuals(net, u, rec.theta, point.pg, point.qg, point.pc, point.qc);

    if (config.format == "json") {
        nlohmann::json j;
        j["status"] = status_name(sol.status);
        j["recovery"] = to_json(rec);
        j["max_ac_residual"] = ac.max_abs;
        out << j.dump(2) << "\n";
    } else {
        out << "bus     |V|          theta_rad      theta_deg\n";
        char line[96];
        for (std::size_t i = 0; i < net.buses.size(); ++i) {
            std::snprintf(line, sizeof(line), "%-7d %-12.8f %14.10f %14.8f\n",
                          net.buses[i].id, u[i], rec.theta[i],
                          rec.theta[i] * 180.0 / M_PI);
            out << line;
        }
        out << "max cycle mismatch: " << num(rec.max_mismatch) << " rad\n";
        out << "max ac residual:    " << num(ac.max_abs) << "\n";
        out << "recoverable:        " << (rec.recoverable ? "yes" : "NO")
            << (rec.forced ? " (forced)" : "") << "\n";
    }
    return 0;
}

}  // namespace

int run_cli(const RunConfig& config, std::ostream& out, std::ostream& err) {
    if (config.case_path.empty()) {
        err << "error: no case file given\n";
        return 1;
    }
    Network net;
    if (!load_case(config, net, err)) return 1;
    try {
        if (config.command == "solve") return cmd_solve(config, net, out, err);
        if (config.command == "audit") return cmd_audit(config, net, out, err);
        if (config.command == "sweep") return cmd_sweep(config, net, out, err);
        if (config.command == "flip") return cmd_flip(config, net, out, err);
        if (config.command == "recover") return cmd_recover(config, net, out, err);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    }
    err << "error: unknown command '" << config.command << "'\n";
    return 1;
}

}  // namespace bfmx
