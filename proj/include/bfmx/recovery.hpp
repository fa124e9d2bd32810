#pragma once

#include <Eigen/Dense>
#include <vector>

#include "bfmx/bfm.hpp"
#include "bfmx/network.hpp"
#include "json.hpp"

namespace bfmx {

// Bus admittance from series branch impedances of in-service branches.
struct AdmittanceMatrix {
    Eigen::MatrixXd g;  // real part
    Eigen::MatrixXd b;  // imaginary part
};

AdmittanceMatrix build_admittance(const Network& net);

// Wrap into (-pi, pi].
double wrap_angle(double a);

struct AngleRecovery {
    std::vector<double> theta;  // per bus, slack at zero
    std::vector<double> beta;   // per branch: implied angle difference, NaN when out of service
    struct Mismatch {
        int branch = 0;  // 1-based
        double mismatch = 0.0;
    };
    std::vector<Mismatch> mismatches;  // non-tree branches and their cycle error
    double max_mismatch = 0.0;
    bool recoverable = false;
    bool forced = false;
};

// Angles from beta_ij = atan2(x F - r H, v_i - r F - x H), propagated over a
// breadth-first spanning tree from the slack; every non-tree branch reports
// how far the cycle closure misses. Requires an exact-model-feasible point
// unless `force` is set.
AngleRecovery recover_angles(const Network& net, const BfmSolution& sol, double tol = 1e-6,
                             bool force = false);

struct AcResiduals {
    std::vector<double> dp;  // per bus active mismatch
    std::vector<double> dq;  // per bus reactive mismatch
    double max_abs = 0.0;
};

// Bus-injection mismatch of (U, theta) against the polar power flow
// equations with the given generation and load.
AcResiduals ac_residuals(const Network& net, const std::vector<double>& u,
                         const std::vector<double>& theta, const std::vector<double>& pg,
                         const std::vector<double>& qg, const std::vector<double>& pc,
                         const std::vector<double>& qc);

nlohmann::json to_json(const AngleRecovery& rec);

}  // namespace bfmx
