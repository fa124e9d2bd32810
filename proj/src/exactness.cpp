#include "bfmx/exactness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace bfmx {

GapReport gap_report(const Network& net, const BfmSolution& sol, double tight_tol) {
    GapReport rep;
    rep.tight_tol = tight_tol;
    for (std::size_t k = 0; k < net.branches.size(); ++k) {
        const Branch& br = net.branches[k];
        if (!br.in_service) continue;
        int i = net.bus_index(br.from_bus);
        double fh2 = sol.f[k] * sol.f[k] + sol.h[k] * sol.h[k];
        BranchGap g;
        g.branch = static_cast<int>(k) + 1;
        g.gap = sol.l[k] * sol.v[i] - fh2;
        g.relative_gap = g.gap / std::max(1.0, fh2);
        g.binding = g.relative_gap <= tight_tol;
        rep.max_gap = std::max(rep.max_gap, g.gap);
        rep.num_nonbinding += g.binding ? 0 : 1;
        rep.branches.push_back(g);
    }
    return rep;
}

ConditionsReport audit_conditions(const Network& net, const ObjectiveSpec& obj) {
    ConditionsReport rep;
    auto diags = validate(net);
    rep.connected = std::none_of(diags.begin(), diags.end(), [](const Diagnostic& d) {
        return d.code == "disconnected" || d.code == "empty";
    });
    rep.loads_unbounded_above = true;  // loads have no upper bound in this model
    rep.objective_convex = true;       // linear in l
    rep.independent_of_flows = true;   // no F or H terms
    rep.strictly_increasing_in_l = true;
    for (std::size_t k = 0; k < net.branches.size(); ++k) {
        const Branch& br = net.branches[k];
        if (!br.in_service) continue;
        if (br.r + obj.epsilon_l <= 0.0) {
            rep.strictly_increasing_in_l = false;
            rep.nonstrict_branches.push_back(static_cast<int>(k) + 1);
        }
        if (br.x < 0.0) {
            rep.negative_x_branches.push_back(static_cast<int>(k) + 1);
            rep.negative_x_values.push_back(br.x);
        }
    }
    return rep;
}

PerturbationResult perturb(const Network& net, const ObjectiveSpec& obj, const BfmSolution& sol,
                           std::size_t branch_index, double eps, double tol) {
    if (branch_index >= net.branches.size())
        throw std::out_of_range("perturb: branch index out of range");
    const Branch& br = net.branches[branch_index];
    if (!br.in_service) throw std::invalid_argument("perturb: branch is out of service");
    if (!(eps >= 0.0) || !std::isfinite(eps))
        throw std::invalid_argument("perturb: eps must be finite and nonnegative");

    const int i = net.bus_index(br.from_bus);
    const int j = net.bus_index(br.to_bus);
    const double rp = br.r * eps / 2.0;
    const double xp = br.x * eps / 2.0;

    PerturbationResult res;
    res.candidate = sol;
    BfmSolution& cand = res.candidate;
    cand.l[branch_index] -= eps;
    cand.f[branch_index] -= rp;
    cand.h[branch_index] -= xp;
    cand.pc[i] += rp;
    cand.pc[j] += rp;
    cand.qc[i] += xp;
    cand.qc[j] += xp;
    cand.objective = losses_objective(net, obj, cand);
    res.objective_delta = cand.objective - losses_objective(net, obj, sol);

    FeasibilityReport fr = check_feasibility(net, cand, tol);
    res.feasible = fr.cr_feasible;
    res.violated_constraints = fr.violations;
    return res;
}

ContradictionRecord demonstrate_contradiction(const Network& net, const ObjectiveSpec& obj,
                                              const BfmSolution& sol, double tight_tol,
                                              double eps, double tol) {
    ContradictionRecord rec;
    GapReport gaps = gap_report(net, sol, tight_tol);
    for (const BranchGap& g : gaps.branches) {
        if (g.binding) continue;
        const std::size_t k = g.branch - 1;
        ContradictionEntry entry;
        entry.branch = g.branch;
        entry.gap = g.gap;
        entry.x = net.branches[k].x;

        // Start from a step that keeps the current square nonnegative; only
        // shrink further when the step itself overshoots the cone slack.
        // Bound violations do not shrink away: they are the finding.
        double step = std::min(eps, sol.l[k] / 2.0);
        PerturbationResult pr;
        for (int attempt = 0; attempt < 60; ++attempt) {
            pr = perturb(net, obj, sol, k, step, tol);
            bool only_cone_trouble =
                !pr.feasible &&
                std::all_of(pr.violated_constraints.begin(), pr.violated_constraints.end(),
                            [&](const ConstraintViolation& v) {
                                return (v.family == "cone" || v.family == "l_lower") &&
                                       v.index == static_cast<int>(k);
                            });
            if (!only_cone_trouble) break;
            step /= 2.0;
        }
        entry.eps_used = step;
        entry.feasible = pr.feasible;
        entry.objective_delta = pr.objective_delta;
        entry.improves = pr.feasible && pr.objective_delta < 0.0;
        entry.violations = pr.violated_constraints;
        rec.entries.push_back(entry);
    }
    return rec;
}

nlohmann::json to_json(const GapReport& rep) {
    nlohmann::json j;
    j["tight_tol"] = rep.tight_tol;
    j["max_gap"] = rep.max_gap;
    j["num_nonbinding"] = rep.num_nonbinding;
    j["branches"] = nlohmann::json::array();
    for (const BranchGap& g : rep.branches)
        j["branches"].push_back({{"branch", g.branch},
                                 {"gap", g.gap},
                                 {"relative_gap", g.relative_gap},
                                 {"binding", g.binding}});
    return j;
}

std::string gap_report_csv(const GapReport& rep) {
    std::string out = "branch,gap,relative_gap,binding\n";
    char line[128];
    for (const BranchGap& g : rep.branches) {
        std::snprintf(line, sizeof(line), "%d,%.9e,%.9e,%s\n", g.branch, g.gap, g.relative_gap,
                      g.binding ? "true" : "false");
        out += line;
    }
    return out;
}

nlohmann::json to_json(const ConditionsReport& rep) {
    nlohmann::json j;
    j["connected"] = rep.connected;
    j["loads_unbounded_above"] = rep.loads_unbounded_above;
    j["objective_convex"] = rep.objective_convex;
    j["strictly_increasing_in_l"] = rep.strictly_increasing_in_l;
    j["nonstrict_branches"] = rep.nonstrict_branches;
    j["independent_of_flows"] = rep.independent_of_flows;
    j["solve_status"] = rep.solve_status ? status_name(*rep.solve_status) : "pending";
    j["no_negative_reactance"] = rep.no_negative_reactance();
    j["negative_x_branches"] = rep.negative_x_branches;
    j["negative_x_values"] = rep.negative_x_values;
    j["structural_pass"] = rep.structural_pass();
    return j;
}

static nlohmann::json violations_json(const std::vector<ConstraintViolation>& vs) {
    nlohmann::json arr = nlohmann::json::array();
    for (const ConstraintViolation& v : vs)
        arr.push_back({{"family", v.family},
                       {"index", v.index},
                       {"amount", v.amount},
                       {"detail", v.detail}});
    return arr;
}

nlohmann::json to_json(const PerturbationResult& res) {
    nlohmann::json j;
    j["feasible"] = res.feasible;
    j["objective_delta"] = res.objective_delta;
    j["violated_constraints"] = violations_json(res.violated_constraints);
    return j;
}

nlohmann::json to_json(const ContradictionRecord& rec) {
    nlohmann::json j;
    j["entries"] = nlohmann::json::array();
    for (const ContradictionEntry& e : rec.entries)
        j["entries"].push_back({{"branch", e.branch},
                                {"gap", e.gap},
                                {"x", e.x},
                                {"eps_used", e.eps_used},
                                {"feasible", e.feasible},
                                {"improves", e.improves},
                                {"objective_delta", e.objective_delta},
                                {"violations", violations_json(e.violations)}});
    return j;
}

}  // namespace bfmx
