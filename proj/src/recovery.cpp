#include "bfmx/recovery.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <queue>
#include <stdexcept>

namespace bfmx {

AdmittanceMatrix build_admittance(const Network& net) {
    const int nb = static_cast<int>(net.buses.size());
    AdmittanceMatrix y;
    y.g = Eigen::MatrixXd::Zero(nb, nb);
    y.b = Eigen::MatrixXd::Zero(nb, nb);
    for (std::size_t k = 0; k < net.branches.size(); ++k) {
        const Branch& br = net.branches[k];
        if (!br.in_service) continue;
        double den = br.r * br.r + br.x * br.x;
        if (den == 0.0)
            throw std::invalid_argument("build_admittance: zero-impedance branch " +
                                        std::to_string(k + 1));
        double gs = br.r / den, bs = -br.x / den;
        int i = net.bus_index(br.from_bus), j = net.bus_index(br.to_bus);
        y.g(i, j) -= gs;
        y.g(j, i) -= gs;
        y.b(i, j) -= bs;
        y.b(j, i) -= bs;
        y.g(i, i) += gs;
        y.g(j, j) += gs;
        y.b(i, i) += bs;
        y.b(j, j) += bs;
    }
    return y;
}

double wrap_angle(double a) {
    const double pi = std::numbers::pi;
    double w = std::fmod(a, 2.0 * pi);
    if (w <= -pi) w += 2.0 * pi;
    if (w > pi) w -= 2.0 * pi;
    return w;
}

AngleRecovery recover_angles(const Network& net, const BfmSolution& sol, double tol, bool force) {
    FeasibilityReport feas = check_feasibility(net, sol, tol);
    if (!feas.ar_feasible && !force)
        throw std::invalid_argument(
            "recover_angles: solution is not exact-model feasible at tol (gap or residual too "
            "large); pass force to override");

    const int nb = static_cast<int>(net.buses.size());
    const int nl = static_cast<int>(net.branches.size());
    AngleRecovery rec;
    rec.forced = force && !feas.ar_feasible;
    rec.theta.assign(nb, 0.0);
    rec.beta.assign(nl, std::numeric_limits<double>::quiet_NaN());

    for (int k = 0; k < nl; ++k) {
        const Branch& br = net.branches[k];
        if (!br.in_service) continue;
        int i = net.bus_index(br.from_bus);
        rec.beta[k] = std::atan2(br.x * sol.f[k] - br.r * sol.h[k],
                                 sol.v[i] - br.r * sol.f[k] - br.x * sol.h[k]);
    }

    // Branch-indexed adjacency in file order gives a deterministic tree.
    std::vector<std::vector<int>> incident(nb);
    for (int k = 0; k < nl; ++k) {
        if (!net.branches[k].in_service) continue;
        incident[net.bus_index(net.branches[k].from_bus)].push_back(k);
        incident[net.bus_index(net.branches[k].to_bus)].push_back(k);
    }
    int root = net.slack_index();
    if (root < 0) root = 0;
    std::vector<char> visited(nb, 0);
    std::vector<char> in_tree(nl, 0);
    std::queue<int> q;
    q.push(root);
    visited[root] = 1;
    while (!q.empty()) {
        int u = q.front();
        q.pop();
        for (int k : incident[u]) {
            int i = net.bus_index(net.branches[k].from_bus);
            int j = net.bus_index(net.branches[k].to_bus);
            int w = i == u ? j : i;
            if (visited[w]) continue;
            visited[w] = 1;
            in_tree[k] = 1;
            // theta_i - theta_j = beta along orientation i -> j
            rec.theta[w] = w == j ? rec.theta[u] - rec.beta[k] : rec.theta[u] + rec.beta[k];
            q.push(w);
        }
    }

    for (int k = 0; k < nl; ++k) {
        if (!net.branches[k].in_service || in_tree[k]) continue;
        int i = net.bus_index(net.branches[k].from_bus);
        int j = net.bus_index(net.branches[k].to_bus);
        double miss = std::abs(wrap_angle(rec.theta[i] - rec.theta[j] - rec.beta[k]));
        rec.mismatches.push_back({k + 1, miss});
        rec.max_mismatch = std::max(rec.max_mismatch, miss);
    }
    rec.recoverable = rec.max_mismatch <= tol && !rec.forced;
    return rec;
}

AcResiduals ac_residuals(const Network& net, const std::vector<double>& u,
                         const std::vector<double>& theta, const std::vector<double>& pg,
                         const std::vector<double>& qg, const std::vector<double>& pc,
                         const std::vector<double>& qc) {
    const int nb = static_cast<int>(net.buses.size());
    if (static_cast<int>(u.size()) != nb || static_cast<int>(theta.size()) != nb ||
        pg.size() != net.generators.size() || qg.size() != net.generators.size() ||
        static_cast<int>(pc.size()) != nb || static_cast<int>(qc.size()) != nb)
        throw std::invalid_argument("ac_residuals: dimension mismatch");

    AdmittanceMatrix y = build_admittance(net);
    AcResiduals res;
    res.dp.assign(nb, 0.0);
    res.dq.assign(nb, 0.0);
    for (int i = 0; i < nb; ++i) {
        double pinj = -pc[i], qinj = -qc[i];
        for (std::size_t k = 0; k < net.generators.size(); ++k)
            if (net.generators[k].in_service &&
                net.bus_index(net.generators[k].bus) == i) {
                pinj += pg[k];
                qinj += qg[k];
            }
        double pflow = 0.0, qflow = 0.0;
        for (int j = 0; j < nb; ++j) {
            if (y.g(i, j) == 0.0 && y.b(i, j) == 0.0) continue;
            double dth = theta[i] - theta[j];
            double ct = std::cos(dth), st = std::sin(dth);
            pflow += u[j] * (y.g(i, j) * ct + y.b(i, j) * st);
            qflow += u[j] * (y.g(i, j) * st - y.b(i, j) * ct);
        }
        res.dp[i] = pinj - u[i] * pflow;
        res.dq[i] = qinj - u[i] * qflow;
        res.max_abs = std::max({res.max_abs, std::abs(res.dp[i]), std::abs(res.dq[i])});
    }
    return res;
}

nlohmann::json to_json(const AngleRecovery& rec) {
    nlohmann::json j;
    j["recoverable"] = rec.recoverable;
    j["forced"] = rec.forced;
    j["max_mismatch"] = rec.max_mismatch;
    j["theta"] = rec.theta;
    nlohmann::json betas = nlohmann::json::array();
    for (double b : rec.beta) {
        if (std::isnan(b)) betas.push_back(nullptr);
        else betas.push_back(b);
    }
    j["beta"] = betas;
    j["mismatches"] = nlohmann::json::array();
    for (const auto& m : rec.mismatches)
        j["mismatches"].push_back({{"branch", m.branch}, {"mismatch", m.mismatch}});
    return j;
}

}  // namespace bfmx
