#pragma once

#include <span>
#include <string>
#include <vector>

#include "bfmx/conic.hpp"

namespace bfmx {

struct SolverSettings {
    double tol_feas = 1e-9;  // required primal and dual residual, reported scale
    double tol_gap = 1e-9;   // required relative complementarity gap
    int max_iter = 200;
    bool equilibrate = true;
    int equilibrate_iters = 10;
    double static_reg = 1e-8;  // quasi-definite KKT regularization
    int refine_steps = 3;      // max iterative-refinement passes per solve
    bool trace = false;
};

enum class SolveStatus { Optimal, PrimalInfeasible, DualInfeasible, MaxIter, NumericalFailure };

std::string status_name(SolveStatus s);

struct Residuals {
    double primal = 0.0;  // ||Ax + s - b|| / (1 + ||b||)
    double dual = 0.0;    // ||A'y + c|| / (1 + ||c||)
    double gap = 0.0;     // |s.y| / (1 + |c'x| + |b'y|)
};

struct TracePoint {
    int iter = 0;
    double primal_res = 0.0, dual_res = 0.0, gap = 0.0, step = 0.0;
};

struct SolveOutcome {
    SolveStatus status = SolveStatus::NumericalFailure;
    std::vector<double> x;  // primal, original variable order and scale
    std::vector<double> y;  // dual multipliers, one per row
    std::vector<double> s;  // cone slacks, one per row
    double objective = 0.0;
    int iterations = 0;
    Residuals residuals;  // recomputed on the unscaled data
    std::vector<TracePoint> trace;
};

// Abstract backend so an external solver can be swapped in for
// cross-checks; implementations consume the same problem document.
class SolverBackend {
  public:
    virtual ~SolverBackend() = default;
    virtual SolveOutcome solve(const ConicProblem& problem, const SolverSettings& settings) = 0;
    virtual std::string name() const = 0;
};

// Homogeneous self-dual primal-dual interior-point method with
// Nesterov-Todd scaling and a Mehrotra predictor-corrector. KKT systems
// are solved by sparse LDL' with a fixed fill-reducing ordering, static
// regularization and iterative refinement against the unregularized
// system, so runs are deterministic for identical inputs.
class InteriorPointSolver final : public SolverBackend {
  public:
    SolveOutcome solve(const ConicProblem& problem, const SolverSettings& settings) override;
    std::string name() const override { return "bfmx-ipm"; }
};

SolveOutcome solve(const ConicProblem& problem, const SolverSettings& settings = {});

// Euclidean projection onto the second-order cone {(t, u) : t >= ||u||}.
std::vector<double> project_soc(std::span<const double> z);

// "iter,primal_res,dual_res,gap,step" rows, one per iteration.
std::string trace_csv(const SolveOutcome& outcome);

}  // namespace bfmx
