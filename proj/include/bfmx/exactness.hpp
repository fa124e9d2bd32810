#pragma once

#include <optional>
#include <vector>

#include "bfmx/bfm.hpp"
#include "bfmx/network.hpp"
#include "bfmx/solver.hpp"
#include "json.hpp"

namespace bfmx {

struct BranchGap {
    int branch = 0;            // 1-based position in the branch list
    double gap = 0.0;          // l * v_i - F^2 - H^2
    double relative_gap = 0.0; // gap / max(1, F^2 + H^2)
    bool binding = false;      // relative_gap <= tight_tol
};

struct GapReport {
    std::vector<BranchGap> branches;  // in-service branches, file order
    double max_gap = 0.0;
    int num_nonbinding = 0;
    double tight_tol = 1e-5;
};

GapReport gap_report(const Network& net, const BfmSolution& sol, double tight_tol = 1e-5);

// Exactness preconditions. Parts that need a solve report through
// solve_status, which stays empty ("pending") until one is recorded.
struct ConditionsReport {
    bool connected = false;            // (i) network connected
    bool loads_unbounded_above = true; // (i) model never caps load increases
    bool objective_convex = true;      // (ii) linear objective
    bool strictly_increasing_in_l = false;          // (iii)
    std::vector<int> nonstrict_branches;            // 1-based, where r + eps_l <= 0
    bool independent_of_flows = true;               // (iii) no F/H terms
    std::optional<SolveStatus> solve_status;        // (iv) set after a solve
    std::vector<int> negative_x_branches;           // (v) 1-based, in service
    std::vector<double> negative_x_values;          // aligned with the above

    bool no_negative_reactance() const { return negative_x_branches.empty(); }
    // (i)-(iii) and (v); (iv) is judged from solve_status by the caller.
    bool structural_pass() const {
        return connected && loads_unbounded_above && objective_convex &&
               strictly_increasing_in_l && independent_of_flows && no_negative_reactance();
    }
};

ConditionsReport audit_conditions(const Network& net, const ObjectiveSpec& obj);

// One application of the loss-reducing perturbation on branch (i, j):
//   l -= eps, F -= r*eps/2, H -= x*eps/2,
//   loads at both endpoints absorb r*eps/2 active and x*eps/2 reactive.
// Balance and voltage-drop equations are preserved exactly; with x < 0 the
// reactive load moves DOWN and can cross its lower bound, which is what
// breaks the argument on negative-reactance branches.
struct PerturbationResult {
    BfmSolution candidate;
    bool feasible = false;  // relaxed-model feasibility of the candidate
    std::vector<ConstraintViolation> violated_constraints;
    double objective_delta = 0.0;  // candidate minus original; -(r + eps_l)*eps
};

PerturbationResult perturb(const Network& net, const ObjectiveSpec& obj, const BfmSolution& sol,
                           std::size_t branch_index, double eps, double tol = 1e-9);

// Machine-checks the improvement argument on every non-binding branch of a
// solved relaxation: on positive-reactance branches a small perturbation
// stays feasible and lowers the objective (contradicting optimality), on
// negative-reactance branches it trips a load lower bound instead.
struct ContradictionEntry {
    int branch = 0;  // 1-based
    double gap = 0.0;
    double x = 0.0;
    double eps_used = 0.0;
    bool feasible = false;
    bool improves = false;  // feasible and objective_delta < 0
    double objective_delta = 0.0;
    std::vector<ConstraintViolation> violations;
};

struct ContradictionRecord {
    std::vector<ContradictionEntry> entries;  // one per non-binding branch
};

ContradictionRecord demonstrate_contradiction(const Network& net, const ObjectiveSpec& obj,
                                              const BfmSolution& sol, double tight_tol,
                                              double eps, double tol = 1e-9);

nlohmann::json to_json(const GapReport& rep);
nlohmann::json to_json(const ConditionsReport& rep);
nlohmann::json to_json(const PerturbationResult& res);
nlohmann::json to_json(const ContradictionRecord& rec);
std::string gap_report_csv(const GapReport& rep);

}  // namespace bfmx
