#pragma once

#include <string>
#include <vector>

#include "bfmx/exactness.hpp"
#include "bfmx/recovery.hpp"
#include "bfmx/solver.hpp"
#include "json.hpp"

namespace bfmx {

struct SweepRow {
    int line = 0;  // 1-based branch position; 0 marks the unmodified baseline
    SolveStatus status = SolveStatus::NumericalFailure;
    double max_gap = 0.0;
    int num_nonbinding = 0;
    double solve_ms = 0.0;
};

struct SweepOptions {
    double tight_tol = 1e-5;
    int workers = 0;  // 0: hardware concurrency
    // Large against interior-point bound slack (~1e-7), small against real
    // cone gaps (>= 1e-1): bound blocking is detected, feasibility is not
    // destroyed by the probe itself.
    double contradiction_eps = 1e-3;
};

struct SweepReport {
    SweepRow baseline;
    std::vector<SweepRow> rows;       // one per in-service branch, file order
    std::vector<std::string> notes;   // mechanism checks and anomalies
};

// Reactance-negation sweep: for every in-service branch, solve the
// relaxation with that branch's x negated and report the gap profile.
// Rows are computed by a worker pool but always emitted in line order;
// per-row solver failures are recorded in the row, not raised.
SweepReport nr_sweep(const Network& net, const ObjectiveSpec& obj,
                     const SolverSettings& settings, const SweepOptions& opts = {});

enum class TableFormat { Csv, Json, Text };
TableFormat table_format_from_name(const std::string& name);

// Deterministic, byte-stable rendering of the same rows. The CSV carries
// exactly one row per swept line: "line,status,max_gap,num_nonbinding,solve_ms".
std::string emit_table(const SweepReport& report, TableFormat format);

// One full audit-solve-recover pass over a network.
struct PipelineRun {
    ConditionsReport conditions;
    SolveStatus status = SolveStatus::NumericalFailure;
    Residuals residuals;
    int iterations = 0;
    double solve_ms = 0.0;
    BfmSolution solution;
    GapReport gaps;
    bool ar_feasible = false;
    AngleRecovery recovery;
    AcResiduals ac;
};

struct FlipComparison {
    int line = 0;  // 1-based flipped branch
    PipelineRun before;
    PipelineRun after;
};

// Before/after comparison of negating one branch reactance (used on cases
// that ship with a negative-reactance branch: flipping restores x > 0).
FlipComparison flip_experiment(const Network& net, std::size_t branch_index,
                               const ObjectiveSpec& obj, const SolverSettings& settings,
                               double tight_tol = 1e-5);

nlohmann::json to_json(const SweepReport& report);
nlohmann::json to_json(const PipelineRun& run);
nlohmann::json to_json(const FlipComparison& cmp);

}  // namespace bfmx
