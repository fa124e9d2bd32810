#pragma once

#include <string>
#include <vector>

#include "bfmx/conic.hpp"
#include "bfmx/network.hpp"

namespace bfmx {

// Objective: sum over in-service branches of (r_ij + epsilon_l) * l_ij.
// The epsilon_l tie-break keeps the objective strictly increasing in every
// squared-current variable even on zero-resistance branches.
struct ObjectiveSpec {
    double epsilon_l = 1e-6;
};

// Column indices of every model quantity; -1 marks out-of-service elements
// that received no variable.
struct VariableMap {
    int n_vars = 0;
    std::vector<int> v;        // per bus: squared voltage magnitude
    std::vector<int> l, f, h;  // per branch: squared current, P flow, Q flow
    std::vector<int> pg, qg;   // per generator
    std::vector<int> pc, qc;   // per bus: elastic loads, bounded below by demand
};

struct BuildResult {
    ConicProblem problem;
    VariableMap map;
};

// Relaxed branch-flow problem: power balance and voltage-drop equalities,
// box bounds, and one 4-dim second-order block per in-service branch
// encoding l*v_i >= F^2 + H^2 via (l+v, 2F, 2H, l-v).
BuildResult build_cr(const Network& net, const ObjectiveSpec& obj);

struct BfmSolution {
    std::vector<double> v;        // per bus
    std::vector<double> l, f, h;  // per branch; zero when out of service
    std::vector<double> pg, qg;   // per generator
    std::vector<double> pc, qc;   // per bus
    double objective = 0.0;
};

BfmSolution extract_solution(const std::vector<double>& x, const VariableMap& map,
                             const std::vector<double>& c);

// One violated constraint, identified structurally so callers can test for
// a specific family ("qc_lower" at a given bus, ...).
struct ConstraintViolation {
    std::string family;
    int index = -1;     // bus/branch/generator index for the family
    double amount = 0;  // positive violation magnitude
    std::string detail;
};

struct FeasibilityReport {
    double max_balance_p = 0;   // active power balance residual, inf-norm
    double max_balance_q = 0;   // reactive power balance residual
    double max_voltage_drop = 0;
    double min_cone_slack = 0;  // min of l*v_i - F^2 - H^2
    double max_cone_mismatch = 0;  // max |l*v_i - F^2 - H^2| (exact-model sense)
    double max_bound_violation = 0;
    bool cr_feasible = false;  // relaxed model: cone slack >= -tol
    bool ar_feasible = false;  // exact model: |cone mismatch| <= tol as well
    std::vector<ConstraintViolation> violations;  // in the relaxed sense
};

FeasibilityReport check_feasibility(const Network& net, const BfmSolution& sol, double tol);

// Objective value of a candidate point under `obj`.
double losses_objective(const Network& net, const ObjectiveSpec& obj, const BfmSolution& sol);

}  // namespace bfmx
