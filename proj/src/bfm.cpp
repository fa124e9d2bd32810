#include "bfmx/bfm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace bfmx {

BuildResult build_cr(const Network& net, const ObjectiveSpec& obj) {
    auto diags = validate(net);
    for (const Diagnostic& d : diags)
        if (d.severity == Severity::Error)
            throw std::invalid_argument("build_cr: invalid network: " + d.message);

    const int nb = static_cast<int>(net.buses.size());
    const int nl = static_cast<int>(net.branches.size());
    const int ng = static_cast<int>(net.generators.size());

    BuildResult out;
    VariableMap& map = out.map;
    map.v.assign(nb, -1);
    map.l.assign(nl, -1);
    map.f.assign(nl, -1);
    map.h.assign(nl, -1);
    map.pg.assign(ng, -1);
    map.qg.assign(ng, -1);
    map.pc.assign(nb, -1);
    map.qc.assign(nb, -1);

    int idx = 0;
    for (int i = 0; i < nb; ++i) map.v[i] = idx++;
    for (int k = 0; k < nl; ++k)
        if (net.branches[k].in_service) map.l[k] = idx++;
    for (int k = 0; k < nl; ++k)
        if (net.branches[k].in_service) map.f[k] = idx++;
    for (int k = 0; k < nl; ++k)
        if (net.branches[k].in_service) map.h[k] = idx++;
    for (int k = 0; k < ng; ++k)
        if (net.generators[k].in_service) map.pg[k] = idx++;
    for (int k = 0; k < ng; ++k)
        if (net.generators[k].in_service) map.qg[k] = idx++;
    for (int i = 0; i < nb; ++i) map.pc[i] = idx++;
    for (int i = 0; i < nb; ++i) map.qc[i] = idx++;
    map.n_vars = idx;

    ConicProblem& prob = out.problem;
    prob.c.assign(map.n_vars, 0.0);
    for (int k = 0; k < nl; ++k)
        if (map.l[k] >= 0) prob.c[map.l[k]] = net.branches[k].r + obj.epsilon_l;

    int row = 0;
    auto add_row = [&prob, &row](double rhs) {
        prob.b.push_back(rhs);
        return row++;
    };

    // Zero cone: active balance per bus, reactive balance per bus, voltage
    // drop per in-service branch.
    for (int i = 0; i < nb; ++i) {
        int r = add_row(0.0);
        for (int k = 0; k < nl; ++k) {
            const Branch& br = net.branches[k];
            if (!br.in_service) continue;
            if (net.bus_index(br.from_bus) == i) prob.A.add(r, map.f[k], 1.0);
            if (net.bus_index(br.to_bus) == i) {
                prob.A.add(r, map.f[k], -1.0);
                prob.A.add(r, map.l[k], br.r);
            }
        }
        for (int k = 0; k < ng; ++k)
            if (map.pg[k] >= 0 && net.bus_index(net.generators[k].bus) == i)
                prob.A.add(r, map.pg[k], -1.0);
        prob.A.add(r, map.pc[i], 1.0);
    }
    for (int i = 0; i < nb; ++i) {
        int r = add_row(0.0);
        for (int k = 0; k < nl; ++k) {
            const Branch& br = net.branches[k];
            if (!br.in_service) continue;
            if (net.bus_index(br.from_bus) == i) prob.A.add(r, map.h[k], 1.0);
            if (net.bus_index(br.to_bus) == i) {
                prob.A.add(r, map.h[k], -1.0);
                prob.A.add(r, map.l[k], br.x);
            }
        }
        for (int k = 0; k < ng; ++k)
            if (map.qg[k] >= 0 && net.bus_index(net.generators[k].bus) == i)
                prob.A.add(r, map.qg[k], -1.0);
        prob.A.add(r, map.qc[i], 1.0);
    }
    int n_vdrop = 0;
    for (int k = 0; k < nl; ++k) {
        const Branch& br = net.branches[k];
        if (!br.in_service) continue;
        int r = add_row(0.0);
        ++n_vdrop;
        prob.A.add(r, map.v[net.bus_index(br.to_bus)], 1.0);
        prob.A.add(r, map.v[net.bus_index(br.from_bus)], -1.0);
        prob.A.add(r, map.f[k], 2.0 * br.r);
        prob.A.add(r, map.h[k], 2.0 * br.x);
        prob.A.add(r, map.l[k], -(br.r * br.r + br.x * br.x));
    }
    prob.cones.push_back({ConeKind::Zero, 2 * nb + n_vdrop});

    // Nonnegative cone: box bounds written as  a'x <= rhs.
    int n_ineq = 0;
    auto add_bound = [&](int var, double coef, double rhs) {
        int r = add_row(rhs);
        prob.A.add(r, var, coef);
        ++n_ineq;
    };
    for (int i = 0; i < nb; ++i) {
        add_bound(map.v[i], -1.0, -net.buses[i].v_min);
        add_bound(map.v[i], 1.0, net.buses[i].v_max);
    }
    for (int k = 0; k < ng; ++k) {
        if (map.pg[k] < 0) continue;
        const Generator& g = net.generators[k];
        add_bound(map.pg[k], -1.0, -g.p_min);
        add_bound(map.pg[k], 1.0, g.p_max);
        add_bound(map.qg[k], -1.0, -g.q_min);
        add_bound(map.qg[k], 1.0, g.q_max);
    }
    for (int k = 0; k < nl; ++k) {
        if (map.l[k] < 0) continue;
        add_bound(map.l[k], -1.0, 0.0);
        if (net.branches[k].i_max) add_bound(map.l[k], 1.0, *net.branches[k].i_max);
    }
    for (int i = 0; i < nb; ++i) {
        add_bound(map.pc[i], -1.0, -net.buses[i].demand_p);
        add_bound(map.qc[i], -1.0, -net.buses[i].demand_q);
    }
    prob.cones.push_back({ConeKind::Nonnegative, n_ineq});

    // One second-order block per in-service branch:
    //   (l + v_i, 2F, 2H, l - v_i) in SOC4  <=>  l v_i >= F^2 + H^2, l + v_i >= 0.
    for (int k = 0; k < nl; ++k) {
        if (map.l[k] < 0) continue;
        const int vi = map.v[net.bus_index(net.branches[k].from_bus)];
        int r0 = add_row(0.0);
        prob.A.add(r0, map.l[k], -1.0);
        prob.A.add(r0, vi, -1.0);
        int r1 = add_row(0.0);
        prob.A.add(r1, map.f[k], -2.0);
        int r2 = add_row(0.0);
        prob.A.add(r2, map.h[k], -2.0);
        int r3 = add_row(0.0);
        prob.A.add(r3, map.l[k], -1.0);
        prob.A.add(r3, vi, 1.0);
        prob.cones.push_back({ConeKind::SecondOrder, 4});
    }

    prob.A.rows = row;
    prob.A.cols = map.n_vars;
    prob.validate();
    return out;
}

BfmSolution extract_solution(const std::vector<double>& x, const VariableMap& map,
                             const std::vector<double>& c) {
    if (static_cast<int>(x.size()) != map.n_vars || x.size() != c.size())
        throw std::invalid_argument("extract_solution: dimension mismatch");
    BfmSolution sol;
    auto get = [&x](int idx) { return idx >= 0 ? x[idx] : 0.0; };
    sol.v.reserve(map.v.size());
    for (int idx : map.v) sol.v.push_back(get(idx));
    for (int idx : map.l) sol.l.push_back(get(idx));
    for (int idx : map.f) sol.f.push_back(get(idx));
    for (int idx : map.h) sol.h.push_back(get(idx));
    for (int idx : map.pg) sol.pg.push_back(get(idx));
    for (int idx : map.qg) sol.qg.push_back(get(idx));
    for (int idx : map.pc) sol.pc.push_back(get(idx));
    for (int idx : map.qc) sol.qc.push_back(get(idx));
    sol.objective = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) sol.objective += c[j] * x[j];
    return sol;
}

double losses_objective(const Network& net, const ObjectiveSpec& obj, const BfmSolution& sol) {
    double total = 0.0;
    for (std::size_t k = 0; k < net.branches.size(); ++k)
        if (net.branches[k].in_service) total += (net.branches[k].r + obj.epsilon_l) * sol.l[k];
    return total;
}

FeasibilityReport check_feasibility(const Network& net, const BfmSolution& sol, double tol) {
    const int nb = static_cast<int>(net.buses.size());
    const int nl = static_cast<int>(net.branches.size());
    const int ng = static_cast<int>(net.generators.size());
    if (static_cast<int>(sol.v.size()) != nb || static_cast<int>(sol.l.size()) != nl ||
        static_cast<int>(sol.f.size()) != nl || static_cast<int>(sol.h.size()) != nl ||
        static_cast<int>(sol.pg.size()) != ng || static_cast<int>(sol.qg.size()) != ng ||
        static_cast<int>(sol.pc.size()) != nb || static_cast<int>(sol.qc.size()) != nb)
        throw std::invalid_argument("check_feasibility: solution does not match network shape");

    FeasibilityReport rep;
    rep.min_cone_slack = std::numeric_limits<double>::infinity();
    auto violate = [&rep](const std::string& family, int index, double amount,
                          const std::string& detail) {
        rep.violations.push_back({family, index, amount, detail});
    };
    auto bound = [&](double value, double lo, double hi, const std::string& fam_lo,
                     const std::string& fam_hi, int index, const std::string& what) {
        if (value < lo - tol)
            violate(fam_lo, index, lo - value, what + " below lower bound");
        if (value > hi + tol)
            violate(fam_hi, index, value - hi, what + " above upper bound");
        rep.max_bound_violation =
            std::max({rep.max_bound_violation, lo - value, value - hi, 0.0});
    };

    for (int i = 0; i < nb; ++i) {
        const Bus& bus = net.buses[i];
        double dp = sol.pc[i], dq = sol.qc[i];
        for (int k = 0; k < nl; ++k) {
            const Branch& br = net.branches[k];
            if (!br.in_service) continue;
            if (net.bus_index(br.from_bus) == i) {
                dp += sol.f[k];
                dq += sol.h[k];
            }
            if (net.bus_index(br.to_bus) == i) {
                dp -= sol.f[k] - br.r * sol.l[k];
                dq -= sol.h[k] - br.x * sol.l[k];
            }
        }
        for (int k = 0; k < ng; ++k)
            if (net.generators[k].in_service && net.bus_index(net.generators[k].bus) == i) {
                dp -= sol.pg[k];
                dq -= sol.qg[k];
            }
        rep.max_balance_p = std::max(rep.max_balance_p, std::abs(dp));
        rep.max_balance_q = std::max(rep.max_balance_q, std::abs(dq));
        if (std::abs(dp) > tol)
            violate("balance_p", i, std::abs(dp), "active power balance at bus " +
                                                      std::to_string(bus.id));
        if (std::abs(dq) > tol)
            violate("balance_q", i, std::abs(dq), "reactive power balance at bus " +
                                                      std::to_string(bus.id));
        bound(sol.v[i], bus.v_min, bus.v_max, "v_lower", "v_upper", i,
              "squared voltage at bus " + std::to_string(bus.id));
        double inf = std::numeric_limits<double>::infinity();
        bound(sol.pc[i], bus.demand_p, inf, "pc_lower", "pc_upper", i,
              "active load at bus " + std::to_string(bus.id));
        bound(sol.qc[i], bus.demand_q, inf, "qc_lower", "qc_upper", i,
              "reactive load at bus " + std::to_string(bus.id));
    }

    for (int k = 0; k < nl; ++k) {
        const Branch& br = net.branches[k];
        if (!br.in_service) continue;
        int i = net.bus_index(br.from_bus), j = net.bus_index(br.to_bus);
        double drop = sol.v[j] - sol.v[i] + 2.0 * (br.r * sol.f[k] + br.x * sol.h[k]) -
                      (br.r * br.r + br.x * br.x) * sol.l[k];
        rep.max_voltage_drop = std::max(rep.max_voltage_drop, std::abs(drop));
        if (std::abs(drop) > tol)
            violate("voltage_drop", k, std::abs(drop),
                    "voltage drop on branch " + std::to_string(k + 1));
        double slack = sol.l[k] * sol.v[i] - sol.f[k] * sol.f[k] - sol.h[k] * sol.h[k];
        rep.min_cone_slack = std::min(rep.min_cone_slack, slack);
        rep.max_cone_mismatch = std::max(rep.max_cone_mismatch, std::abs(slack));
        if (slack < -tol)
            violate("cone", k, -slack, "current cone on branch " + std::to_string(k + 1));
        double inf = std::numeric_limits<double>::infinity();
        bound(sol.l[k], 0.0, br.i_max ? *br.i_max : inf, "l_lower", "l_upper", k,
              "squared current on branch " + std::to_string(k + 1));
    }

    for (int k = 0; k < ng; ++k) {
        const Generator& g = net.generators[k];
        if (!g.in_service) continue;
        bound(sol.pg[k], g.p_min, g.p_max, "pg_lower", "pg_upper", k,
              "active output of generator " + std::to_string(k + 1));
        bound(sol.qg[k], g.q_min, g.q_max, "qg_lower", "qg_upper", k,
              "reactive output of generator " + std::to_string(k + 1));
    }

    if (std::isinf(rep.min_cone_slack)) rep.min_cone_slack = 0.0;
    rep.cr_feasible = rep.max_balance_p <= tol && rep.max_balance_q <= tol &&
                      rep.max_voltage_drop <= tol && rep.min_cone_slack >= -tol &&
                      rep.max_bound_violation <= tol;
    rep.ar_feasible = rep.cr_feasible && rep.max_cone_mismatch <= tol;
    return rep;
}

}  // namespace bfmx
