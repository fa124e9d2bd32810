#include "bfmx/solver.hpp"

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

namespace bfmx {

std::string status_name(SolveStatus s) {
    switch (s) {
        case SolveStatus::Optimal: return "optimal";
        case SolveStatus::PrimalInfeasible: return "primal_infeasible";
        case SolveStatus::DualInfeasible: return "dual_infeasible";
        case SolveStatus::MaxIter: return "max_iter";
        case SolveStatus::NumericalFailure: return "numerical_failure";
    }
    return "unknown";
}

std::vector<double> project_soc(std::span<const double> z) {
    if (z.empty()) return {};
    double t = z[0];
    double un = 0.0;
    for (std::size_t i = 1; i < z.size(); ++i) un += z[i] * z[i];
    un = std::sqrt(un);
    std::vector<double> out(z.begin(), z.end());
    if (t >= un) return out;  // already inside
    if (t <= -un) return std::vector<double>(z.size(), 0.0);  // against the polar cone
    double coef = (t + un) / 2.0;
    out[0] = coef;
    for (std::size_t i = 1; i < z.size(); ++i) out[i] = coef * z[i] / un;
    return out;
}

std::string trace_csv(const SolveOutcome& outcome) {
    std::string out = "iter,primal_res,dual_res,gap,step\n";
    char line[160];
    for (const TracePoint& t : outcome.trace) {
        std::snprintf(line, sizeof(line), "%d,%.6e,%.6e,%.6e,%.6e\n", t.iter, t.primal_res,
                      t.dual_res, t.gap, t.step);
        out += line;
    }
    return out;
}

namespace {

using Vec = Eigen::VectorXd;
using SpMat = Eigen::SparseMatrix<double>;
using Trip = Eigen::Triplet<double>;

constexpr double kStepMax = 0.999;
constexpr double kStepMin = 1e-8;
constexpr double kGammaStep = 0.99;
constexpr double kSigmaMin = 1e-4;
constexpr double kSigmaMax = 0.999;

struct ConeLayout {
    int n_lp = 0;
    std::vector<int> soc_start;  // offsets within the cone section
    std::vector<int> soc_dim;
    int m = 0;
    int degree() const { return n_lp + static_cast<int>(soc_dim.size()); }
};

struct SocScaling {
    double eta = 1.0, eta2 = 1.0;
    double w0 = 1.0;  // scaling point (w0, w1) with w0^2 - ||w1||^2 = 1
    Vec w1;
};

struct Scalings {
    Vec lp_w2;  // s ./ z on the nonnegative block
    std::vector<SocScaling> soc;
    Vec lambda;  // scaled point W z = W^{-1} s
};

// out = scale * M(sign*wbar) u with M(w) = [w0 w1'; w1 I + w1 w1'/(1+w0)].
// M(J wbar) is the inverse of M(wbar) for unit hyperbolic wbar.
void soc_scale_apply(const SocScaling& sc, double sign_w1, double scale,
                     const Eigen::Ref<const Vec>& u, Eigen::Ref<Vec> out) {
    const int d = static_cast<int>(u.size());
    double q = sign_w1 * sc.w1.dot(u.tail(d - 1));
    out[0] = scale * (sc.w0 * u[0] + q);
    out.tail(d - 1) = scale * (u.tail(d - 1) + (u[0] + q / (1.0 + sc.w0)) * sign_w1 * sc.w1);
}

bool update_scalings(const ConeLayout& lay, const Vec& s, const Vec& z, Scalings& sc) {
    for (int i = 0; i < lay.n_lp; ++i) {
        if (s[i] <= 0.0 || z[i] <= 0.0) return false;
        sc.lp_w2[i] = s[i] / z[i];
        sc.lambda[i] = std::sqrt(s[i] * z[i]);
    }
    for (std::size_t k = 0; k < lay.soc_dim.size(); ++k) {
        const int off = lay.soc_start[k], d = lay.soc_dim[k];
        auto sk = s.segment(off, d);
        auto zk = z.segment(off, d);
        double sres = sk[0] * sk[0] - sk.tail(d - 1).squaredNorm();
        double zres = zk[0] * zk[0] - zk.tail(d - 1).squaredNorm();
        if (sk[0] <= 0.0 || zk[0] <= 0.0 || sres <= 0.0 || zres <= 0.0) return false;
        double snorm = std::sqrt(sres), znorm = std::sqrt(zres);
        Vec sbar = sk / snorm, zbar = zk / znorm;
        double gamma = std::sqrt((1.0 + sbar.dot(zbar)) / 2.0);
        SocScaling& w = sc.soc[k];
        w.w0 = (sbar[0] + zbar[0]) / (2.0 * gamma);
        w.w1 = (sbar.tail(d - 1) - zbar.tail(d - 1)) / (2.0 * gamma);
        w.eta2 = snorm / znorm;
        w.eta = std::sqrt(w.eta2);
        soc_scale_apply(w, 1.0, w.eta, zk, sc.lambda.segment(off, d));
    }
    return true;
}

// out = W u
void apply_w(const ConeLayout& lay, const Scalings& sc, const Vec& u, Vec& out) {
    out.resize(lay.m);
    for (int i = 0; i < lay.n_lp; ++i) out[i] = std::sqrt(sc.lp_w2[i]) * u[i];
    for (std::size_t k = 0; k < lay.soc_dim.size(); ++k) {
        const int off = lay.soc_start[k], d = lay.soc_dim[k];
        soc_scale_apply(sc.soc[k], 1.0, sc.soc[k].eta, u.segment(off, d), out.segment(off, d));
    }
}

// out = W^2 u; for a second-order block W^2 = eta^2 (2 wbar wbar' - J).
void apply_w2(const ConeLayout& lay, const Scalings& sc, const Vec& u, Vec& out) {
    out.resize(lay.m);
    for (int i = 0; i < lay.n_lp; ++i) out[i] = sc.lp_w2[i] * u[i];
    for (std::size_t k = 0; k < lay.soc_dim.size(); ++k) {
        const int off = lay.soc_start[k], d = lay.soc_dim[k];
        const SocScaling& w = sc.soc[k];
        auto uk = u.segment(off, d);
        double dot = w.w0 * uk[0] + w.w1.dot(uk.tail(d - 1));
        out[off] = w.eta2 * (2.0 * w.w0 * dot - uk[0]);
        out.segment(off + 1, d - 1) = w.eta2 * (2.0 * dot * w.w1 + uk.tail(d - 1));
    }
}

// out = W^{-1} u; M(J wbar) inverts M(wbar) for unit hyperbolic wbar.
void apply_winv(const ConeLayout& lay, const Scalings& sc, const Vec& u, Vec& out) {
    out.resize(lay.m);
    for (int i = 0; i < lay.n_lp; ++i) out[i] = u[i] / std::sqrt(sc.lp_w2[i]);
    for (std::size_t k = 0; k < lay.soc_dim.size(); ++k) {
        const int off = lay.soc_start[k], d = lay.soc_dim[k];
        soc_scale_apply(sc.soc[k], -1.0, 1.0 / sc.soc[k].eta, u.segment(off, d),
                        out.segment(off, d));
    }
}

// Jordan product per block.
void conic_product(const ConeLayout& lay, const Vec& u, const Vec& v, Vec& out) {
    out.resize(lay.m);
    for (int i = 0; i < lay.n_lp; ++i) out[i] = u[i] * v[i];
    for (std::size_t k = 0; k < lay.soc_dim.size(); ++k) {
        const int off = lay.soc_start[k], d = lay.soc_dim[k];
        auto uk = u.segment(off, d);
        auto vk = v.segment(off, d);
        double head = uk.dot(vk);
        out.segment(off + 1, d - 1) = uk[0] * vk.tail(d - 1) + vk[0] * uk.tail(d - 1);
        out[off] = head;
    }
}

// Solve lam o out = w per block.
void conic_division(const ConeLayout& lay, const Vec& lam, const Vec& w, Vec& out) {
    out.resize(lay.m);
    for (int i = 0; i < lay.n_lp; ++i) out[i] = w[i] / lam[i];
    for (std::size_t k = 0; k < lay.soc_dim.size(); ++k) {
        const int off = lay.soc_start[k], d = lay.soc_dim[k];
        auto lk = lam.segment(off, d);
        auto wk = w.segment(off, d);
        double rho = lk[0] * lk[0] - lk.tail(d - 1).squaredNorm();
        double v0 = (lk[0] * wk[0] - lk.tail(d - 1).dot(wk.tail(d - 1))) / rho;
        out.segment(off + 1, d - 1) = (wk.tail(d - 1) - v0 * lk.tail(d - 1)) / lk[0];
        out[off] = v0;
    }
}

Vec cone_identity(const ConeLayout& lay) {
    Vec e = Vec::Zero(lay.m);
    for (int i = 0; i < lay.n_lp; ++i) e[i] = 1.0;
    for (std::size_t k = 0; k < lay.soc_dim.size(); ++k) e[lay.soc_start[k]] = 1.0;
    return e;
}

// Shift r into the cone interior: r + (1 + alpha) e with alpha the worst violation.
Vec bring_to_cone(const ConeLayout& lay, const Vec& r) {
    double alpha = -0.99;
    for (int i = 0; i < lay.n_lp; ++i)
        if (r[i] <= 0.0 && -r[i] > alpha) alpha = -r[i];
    for (std::size_t k = 0; k < lay.soc_dim.size(); ++k) {
        const int off = lay.soc_start[k], d = lay.soc_dim[k];
        double res = r.segment(off + 1, d - 1).norm() - r[off];
        if (res > alpha) alpha = res;
    }
    return r + (1.0 + alpha) * cone_identity(lay);
}

// Largest alpha with lambda + alpha*d in the cone for both scaled directions,
// bounded also by the tau and kappa ratios.
double line_search(const ConeLayout& lay, const Vec& lambda, const Vec& ds, const Vec& dz,
                   double tau, double dtau, double kap, double dkap) {
    double alpha = 2.0;
    if (dtau < 0.0) alpha = std::min(alpha, -tau / dtau);
    if (dkap < 0.0) alpha = std::min(alpha, -kap / dkap);
    for (int i = 0; i < lay.n_lp; ++i) {
        if (ds[i] < 0.0) alpha = std::min(alpha, -lambda[i] / ds[i]);
        if (dz[i] < 0.0) alpha = std::min(alpha, -lambda[i] / dz[i]);
    }
    for (std::size_t k = 0; k < lay.soc_dim.size(); ++k) {
        const int off = lay.soc_start[k], d = lay.soc_dim[k];
        auto lk = lambda.segment(off, d);
        double lknorm2 = lk[0] * lk[0] - lk.tail(d - 1).squaredNorm();
        if (lknorm2 <= 0.0) return kStepMin;
        double lknorm = std::sqrt(lknorm2);
        Vec lkbar = lk / lknorm;
        for (const Vec* dir : {&ds, &dz}) {
            auto dk = dir->segment(off, d);
            double bar_d = lkbar[0] * dk[0] - lkbar.tail(d - 1).dot(dk.tail(d - 1));
            double factor = (bar_d + dk[0]) / (lkbar[0] + 1.0);
            double rho0 = bar_d / lknorm;
            double rho1 = (dk.tail(d - 1) - factor * lkbar.tail(d - 1)).norm() / lknorm;
            if (rho1 > rho0) alpha = std::min(alpha, 1.0 / (rho1 - rho0));
        }
    }
    return std::clamp(alpha, kStepMin, kStepMax);
}

// KKT matrix [reg*I A' G'; A -reg*I 0; G 0 -W^2-reg*I], sparse LDL' with a
// fixed AMD ordering. Refinement corrects against the unregularized operator.
// The Newton system [0 A' G'; A 0 0; G 0 -W^2] is factored in the scaled
// dual variable u = W dz, which turns the cone block into exactly -I:
//   [regI A' Gh'; A -regI 0; Gh 0 -I-regI]   with  Gh = W^{-1} G.
// Quasidefiniteness then keeps every pivot's sign fixed regardless of how
// close the iterate sits to the cone boundary, where the plain -W^2 form
// loses its factorization. The ill-conditioning moves into the Gh entries,
// and iterative refinement against the exact operator absorbs it.
struct KktSolver {
    int n = 0, p = 0, m = 0;
    double reg = 1e-8;
    int refine_steps = 3;
    const SpMat* A = nullptr;
    const SpMat* G = nullptr;
    SpMat At, Gt;
    const ConeLayout* lay = nullptr;
    std::vector<Trip> statics;
    // Column pattern of G per LP row / per SOC block; a W^{-1} block mixes
    // its rows, so a SOC block emits the dense union of its rows' columns.
    std::vector<std::vector<std::pair<int, double>>> lp_cols;
    struct SocBlock {
        std::vector<int> cols;
        Eigen::MatrixXd gvals;  // d x |cols|, original G entries
    };
    std::vector<SocBlock> soc_blocks;
    SpMat K;
    Eigen::SimplicialLDLT<SpMat, Eigen::Lower, Eigen::AMDOrdering<int>> ldlt;
    bool analyzed = false;

    void init(const SpMat& a, const SpMat& g, const ConeLayout& layout, double regularization,
              int refine) {
        A = &a;
        G = &g;
        lay = &layout;
        reg = regularization;
        refine_steps = refine;
        n = static_cast<int>(a.cols());
        p = static_cast<int>(a.rows());
        m = static_cast<int>(g.rows());
        At = a.transpose();
        Gt = g.transpose();
        statics.clear();
        for (int j = 0; j < n; ++j) statics.emplace_back(j, j, reg);
        for (int j = 0; j < A->outerSize(); ++j)
            for (SpMat::InnerIterator it(*A, j); it; ++it) {
                statics.emplace_back(n + static_cast<int>(it.row()), j, it.value());
                statics.emplace_back(j, n + static_cast<int>(it.row()), it.value());
            }
        for (int i = 0; i < p; ++i) statics.emplace_back(n + i, n + i, -reg);
        for (int i = 0; i < m; ++i)
            statics.emplace_back(n + p + i, n + p + i, -(1.0 + reg));

        // Column j of Gt is row j of G; it.row() is the variable index.
        lp_cols.assign(lay->n_lp, {});
        for (int i = 0; i < lay->n_lp; ++i)
            for (SpMat::InnerIterator it(Gt, i); it; ++it)
                lp_cols[i].emplace_back(static_cast<int>(it.row()), it.value());
        soc_blocks.clear();
        for (std::size_t k = 0; k < lay->soc_dim.size(); ++k) {
            const int off = lay->soc_start[k], d = lay->soc_dim[k];
            SocBlock blk;
            for (int a = 0; a < d; ++a)
                for (SpMat::InnerIterator it(Gt, off + a); it; ++it)
                    blk.cols.push_back(static_cast<int>(it.row()));
            std::sort(blk.cols.begin(), blk.cols.end());
            blk.cols.erase(std::unique(blk.cols.begin(), blk.cols.end()), blk.cols.end());
            blk.gvals = Eigen::MatrixXd::Zero(d, static_cast<long>(blk.cols.size()));
            for (int a = 0; a < d; ++a)
                for (SpMat::InnerIterator it(Gt, off + a); it; ++it) {
                    auto pos = std::lower_bound(blk.cols.begin(), blk.cols.end(),
                                                static_cast<int>(it.row()));
                    blk.gvals(a, pos - blk.cols.begin()) = it.value();
                }
            soc_blocks.push_back(std::move(blk));
        }
        K.resize(n + p + m, n + p + m);
    }

    bool factor(const Scalings& sc) {
        std::vector<Trip> trips = statics;
        const int base = n + p;
        for (int i = 0; i < lay->n_lp; ++i) {
            const double scale = 1.0 / std::sqrt(sc.lp_w2[i]);
            if (!std::isfinite(scale)) return false;
            for (auto [col, val] : lp_cols[i]) {
                trips.emplace_back(base + i, col, scale * val);
                trips.emplace_back(col, base + i, scale * val);
            }
        }
        for (std::size_t k = 0; k < soc_blocks.size(); ++k) {
            const SocBlock& blk = soc_blocks[k];
            const int off = base + lay->soc_start[k], d = lay->soc_dim[k];
            const SocScaling& w = sc.soc[k];
            Vec tc(d);
            for (std::size_t cidx = 0; cidx < blk.cols.size(); ++cidx) {
                soc_scale_apply(w, -1.0, 1.0 / w.eta, blk.gvals.col(static_cast<long>(cidx)),
                                tc);
                if (!tc.allFinite()) return false;
                for (int a = 0; a < d; ++a) {
                    trips.emplace_back(off + a, blk.cols[cidx], tc[a]);
                    trips.emplace_back(blk.cols[cidx], off + a, tc[a]);
                }
            }
        }
        K.setFromTriplets(trips.begin(), trips.end());
        if (!analyzed) {
            ldlt.analyzePattern(K);
            analyzed = true;
        }
        ldlt.factorize(K);
        return ldlt.info() == Eigen::Success;
    }

    // One pass through the transformed factorization, in and out of the
    // original dual variable dz = W^{-1} u.
    Vec solve_once(const Scalings& sc, const Vec& rhs) const {
        Vec tr = rhs;
        Vec wz(m);
        if (m > 0) {
            apply_winv(*lay, sc, rhs.tail(m), wz);
            tr.tail(m) = wz;
        }
        Vec sol = ldlt.solve(tr);
        if (m > 0) {
            apply_winv(*lay, sc, sol.tail(m), wz);
            sol.tail(m) = wz;
        }
        return sol;
    }

    // Exact original-space operator (no regularization), refinement target.
    Vec apply_unregularized(const Scalings& sc, const Vec& u) const {
        Vec out(n + p + m);
        Vec w2uz;
        apply_w2(*lay, sc, u.tail(m), w2uz);
        out.head(n) = At * u.segment(n, p) + Gt * u.tail(m);
        out.segment(n, p) = (*A) * u.head(n);
        out.tail(m) = (*G) * u.head(n) - w2uz;
        return out;
    }

    // Refinement runs in the original metric: the transformed solve is
    // exact in its own metric, but a W-sized factor off in the cone rows,
    // which is exactly what the primal residual sees.
    Vec solve(const Scalings& sc, const Vec& rhs) const {
        Vec sol = solve_once(sc, rhs);
        const double rhs_scale = 1.0 + rhs.lpNorm<Eigen::Infinity>();
        Vec res = rhs - apply_unregularized(sc, sol);
        for (int pass = 0; pass < refine_steps; ++pass) {
            double rn = res.lpNorm<Eigen::Infinity>();
            if (rn <= 1e-14 * rhs_scale) break;
            Vec cand = sol + solve_once(sc, res);
            Vec res2 = rhs - apply_unregularized(sc, cand);
            if (res2.lpNorm<Eigen::Infinity>() >= rn) break;
            sol = cand;
            res = res2;
        }
        return sol;
    }
};

struct Iterate {
    Vec x, y, z, s;
    double tau = 1.0, kap = 1.0;
};

}  // namespace

SolveOutcome InteriorPointSolver::solve(const ConicProblem& problem,
                                        const SolverSettings& settings) {
    problem.validate();
    const int n = problem.num_vars();

    // Rows split into the equality section (zero cones, original order) and
    // the cone section (all nonnegative rows first, then second-order blocks).
    ConeLayout lay;
    int p = 0;
    for (const ConeSpec& cs : problem.cones) {
        if (cs.kind == ConeKind::Zero) p += cs.dim;
        else if (cs.kind == ConeKind::Nonnegative) lay.n_lp += cs.dim;
    }
    int soc_off = lay.n_lp;
    for (const ConeSpec& cs : problem.cones)
        if (cs.kind == ConeKind::SecondOrder) {
            lay.soc_start.push_back(soc_off);
            lay.soc_dim.push_back(cs.dim);
            soc_off += cs.dim;
        }
    lay.m = soc_off;
    const int m = lay.m;

    std::vector<std::pair<bool, int>> row_map(problem.num_rows());  // (cone section?, position)
    {
        int eq_pos = 0, lp_pos = 0, soc_pos = lay.n_lp, orig = 0;
        for (const ConeSpec& cs : problem.cones)
            for (int i = 0; i < cs.dim; ++i, ++orig) {
                if (cs.kind == ConeKind::Zero) row_map[orig] = {false, eq_pos++};
                else if (cs.kind == ConeKind::Nonnegative) row_map[orig] = {true, lp_pos++};
                else row_map[orig] = {true, soc_pos++};
            }
    }

    std::vector<Trip> ta, tg;
    for (std::size_t k = 0; k < problem.A.val.size(); ++k) {
        auto [cone_sec, pos] = row_map[problem.A.row[k]];
        if (cone_sec) tg.emplace_back(pos, problem.A.col[k], problem.A.val[k]);
        else ta.emplace_back(pos, problem.A.col[k], problem.A.val[k]);
    }
    SpMat A(p, n), G(m, n);
    A.setFromTriplets(ta.begin(), ta.end());
    G.setFromTriplets(tg.begin(), tg.end());
    Vec beq = Vec::Zero(p), h = Vec::Zero(m);
    for (int r = 0; r < problem.num_rows(); ++r) {
        auto [cone_sec, pos] = row_map[r];
        (cone_sec ? h : beq)[pos] = problem.b[r];
    }
    Vec c(n);
    for (int j = 0; j < n; ++j) c[j] = problem.c[j];

    // Ruiz equilibration. Rows of one second-order block share one factor so
    // the scaled block stays the same cone.
    Vec dr_eq = Vec::Ones(p), dr_cone = Vec::Ones(m), dcol = Vec::Ones(n);
    if (settings.equilibrate) {
        for (int pass = 0; pass < settings.equilibrate_iters; ++pass) {
            Vec rme = Vec::Zero(p), rmc = Vec::Zero(m), cm = Vec::Zero(n);
            for (int j = 0; j < A.outerSize(); ++j)
                for (SpMat::InnerIterator it(A, j); it; ++it) {
                    double a = std::abs(it.value());
                    rme[it.row()] = std::max(rme[it.row()], a);
                    cm[j] = std::max(cm[j], a);
                }
            for (int j = 0; j < G.outerSize(); ++j)
                for (SpMat::InnerIterator it(G, j); it; ++it) {
                    double a = std::abs(it.value());
                    rmc[it.row()] = std::max(rmc[it.row()], a);
                    cm[j] = std::max(cm[j], a);
                }
            for (std::size_t k = 0; k < lay.soc_dim.size(); ++k) {
                double mx = 0.0;
                for (int i = 0; i < lay.soc_dim[k]; ++i)
                    mx = std::max(mx, rmc[lay.soc_start[k] + i]);
                for (int i = 0; i < lay.soc_dim[k]; ++i) rmc[lay.soc_start[k] + i] = mx;
            }
            auto scale_of = [](double mx) { return mx > 0.0 ? 1.0 / std::sqrt(mx) : 1.0; };
            Vec se = rme.unaryExpr(scale_of);
            Vec scn = rmc.unaryExpr(scale_of);
            Vec scv = cm.unaryExpr(scale_of);
            for (int j = 0; j < A.outerSize(); ++j)
                for (SpMat::InnerIterator it(A, j); it; ++it)
                    it.valueRef() *= se[it.row()] * scv[j];
            for (int j = 0; j < G.outerSize(); ++j)
                for (SpMat::InnerIterator it(G, j); it; ++it)
                    it.valueRef() *= scn[it.row()] * scv[j];
            dr_eq = dr_eq.cwiseProduct(se);
            dr_cone = dr_cone.cwiseProduct(scn);
            dcol = dcol.cwiseProduct(scv);
        }
        beq = beq.cwiseProduct(dr_eq);
        h = h.cwiseProduct(dr_cone);
        c = c.cwiseProduct(dcol);
    }

    const double resx0 = std::max(1.0, c.norm());
    const double resy0 = std::max(1.0, beq.norm());
    const double resz0 = std::max(1.0, h.norm());

    std::vector<TracePoint> trace;

    // Reported residuals are recomputed on the original, unscaled data.
    auto unscaled_report = [&](const std::vector<double>& xu, const std::vector<double>& yu,
                               const std::vector<double>& su) {
        Residuals res;
        const int mr = problem.num_rows();
        std::vector<double> ax(mr, 0.0), aty(n, 0.0);
        for (std::size_t k = 0; k < problem.A.val.size(); ++k) {
            ax[problem.A.row[k]] += problem.A.val[k] * xu[problem.A.col[k]];
            aty[problem.A.col[k]] += problem.A.val[k] * yu[problem.A.row[k]];
        }
        double pn = 0.0, dn = 0.0, bn = 0.0, cn = 0.0, sy = 0.0, cx = 0.0, by = 0.0;
        for (int r = 0; r < mr; ++r) {
            double v = ax[r] + su[r] - problem.b[r];
            pn += v * v;
            bn += problem.b[r] * problem.b[r];
            sy += su[r] * yu[r];
            by += problem.b[r] * yu[r];
        }
        for (int j = 0; j < n; ++j) {
            double v = aty[j] + problem.c[j];
            dn += v * v;
            cn += problem.c[j] * problem.c[j];
            cx += problem.c[j] * xu[j];
        }
        res.primal = std::sqrt(pn) / (1.0 + std::sqrt(bn));
        res.dual = std::sqrt(dn) / (1.0 + std::sqrt(cn));
        res.gap = std::abs(sy) / (1.0 + std::abs(cx) + std::abs(by));
        return res;
    };

    auto make_outcome = [&](SolveStatus status, const Iterate& it, int iters) {
        SolveOutcome out;
        out.status = status;
        out.iterations = iters;
        out.trace = trace;
        const int mr = problem.num_rows();
        out.x.assign(n, 0.0);
        out.y.assign(mr, 0.0);
        out.s.assign(mr, 0.0);
        const bool ray =
            status == SolveStatus::PrimalInfeasible || status == SolveStatus::DualInfeasible;
        const double t = ray ? 1.0 : it.tau;
        for (int j = 0; j < n; ++j) out.x[j] = dcol[j] * it.x[j] / t;
        for (int r = 0; r < mr; ++r) {
            auto [cone_sec, pos] = row_map[r];
            if (cone_sec) {
                out.y[r] = dr_cone[pos] * it.z[pos] / t;
                out.s[r] = it.s[pos] / dr_cone[pos] / t;
            } else {
                out.y[r] = dr_eq[pos] * it.y[pos] / t;
            }
        }
        if (status == SolveStatus::PrimalInfeasible) {
            // Farkas certificate normalized to b'y = -1; x and s carry no meaning.
            double by = 0.0;
            for (int r = 0; r < mr; ++r) by += problem.b[r] * out.y[r];
            std::fill(out.x.begin(), out.x.end(), 0.0);
            std::fill(out.s.begin(), out.s.end(), 0.0);
            if (by < 0.0)
                for (double& v : out.y) v /= -by;
        } else if (status == SolveStatus::DualInfeasible) {
            // Unboundedness ray normalized to c'x = -1.
            double cx = 0.0;
            for (int j = 0; j < n; ++j) cx += problem.c[j] * out.x[j];
            std::fill(out.y.begin(), out.y.end(), 0.0);
            if (cx < 0.0) {
                for (double& v : out.x) v /= -cx;
                for (double& v : out.s) v /= -cx;
            }
        }
        out.objective = 0.0;
        for (int j = 0; j < n; ++j) out.objective += problem.c[j] * out.x[j];
        out.residuals = unscaled_report(out.x, out.y, out.s);
        return out;
    };

    // Residuals of the tau-normalized iterate on the original data; these,
    // not the scaled internal ones, decide optimality and go in the trace.
    auto report_current = [&](const Iterate& it) {
        const int mr = problem.num_rows();
        std::vector<double> xu(n), yu(mr, 0.0), su(mr, 0.0);
        for (int j = 0; j < n; ++j) xu[j] = dcol[j] * it.x[j] / it.tau;
        for (int r = 0; r < mr; ++r) {
            auto [cone_sec, pos] = row_map[r];
            if (cone_sec) {
                yu[r] = dr_cone[pos] * it.z[pos] / it.tau;
                su[r] = it.s[pos] / dr_cone[pos] / it.tau;
            } else {
                yu[r] = dr_eq[pos] * it.y[pos] / it.tau;
            }
        }
        return unscaled_report(xu, yu, su);
    };

    KktSolver kkt;
    kkt.init(A, G, lay, settings.static_reg, settings.refine_steps);

    Scalings sc;
    sc.lp_w2 = Vec::Ones(lay.n_lp);
    sc.soc.resize(lay.soc_dim.size());
    for (std::size_t k = 0; k < lay.soc_dim.size(); ++k)
        sc.soc[k].w1 = Vec::Zero(lay.soc_dim[k] - 1);
    sc.lambda = Vec::Zero(m);

    Iterate cur;
    cur.x = Vec::Zero(n);
    cur.y = Vec::Zero(p);
    cur.z = Vec::Zero(m);
    cur.s = Vec::Zero(m);
    if (!kkt.factor(sc)) return make_outcome(SolveStatus::NumericalFailure, cur, 0);
    {
        // Initial point from two least-squares solves, shifted into the cone.
        Vec rhs = Vec::Zero(n + p + m);
        rhs.segment(n, p) = beq;
        rhs.tail(m) = h;
        Vec sol = kkt.solve(sc, rhs);
        cur.x = sol.head(n);
        if (m > 0) cur.s = bring_to_cone(lay, Vec(-sol.tail(m)));
        rhs.setZero();
        rhs.head(n) = -c;
        Vec sol2 = kkt.solve(sc, rhs);
        cur.y = sol2.segment(n, p);
        if (m > 0) cur.z = bring_to_cone(lay, Vec(sol2.tail(m)));
    }

    Iterate best = cur;
    double best_merit = std::numeric_limits<double>::infinity();
    int best_iters = 0;

    const double cert_tol = std::max(settings.tol_feas, 1e-10);
    const Vec e = cone_identity(lay);
    const double mu_den = lay.degree() + 1;
    int tiny_steps = 0;
    double last_step = 0.0;

    for (int iter = 0;; ++iter) {
        // Residuals of the homogeneous embedding:
        //   rx = -A'y - G'z - c*tau      ry = A x - b*tau
        //   rz = s + G x - h*tau         rt = kap + c'x + b'y + h'z
        Vec aty = kkt.At * cur.y;
        Vec gtz = kkt.Gt * cur.z;
        Vec ax = A * cur.x;
        Vec gx = G * cur.x;
        Vec rx = -aty - gtz - c * cur.tau;
        Vec ry = ax - beq * cur.tau;
        Vec rz = cur.s + gx - h * cur.tau;
        const double cx = c.dot(cur.x), by = beq.dot(cur.y), hz = h.dot(cur.z);
        const double rt = cur.kap + cx + by + hz;

        const double gap = cur.s.dot(cur.z);
        const double mu = (gap + cur.kap * cur.tau) / mu_den;

        const Residuals rep = report_current(cur);
        if (settings.trace) trace.push_back({iter, rep.primal, rep.dual, rep.gap, last_step});

        if (!std::isfinite(rep.primal) || !std::isfinite(rep.dual) || !std::isfinite(gap))
            return make_outcome(SolveStatus::NumericalFailure, best, best_iters);

        double merit = std::max({rep.primal, rep.dual, rep.gap});
        if (merit < best_merit) {
            best_merit = merit;
            best = cur;
            best_iters = iter;
        }

        if (rep.primal <= settings.tol_feas && rep.dual <= settings.tol_feas &&
            rep.gap <= settings.tol_gap)
            return make_outcome(SolveStatus::Optimal, cur, iter);

        if (by + hz < 0.0) {
            double pinfres = (aty + gtz).norm() / resx0 / (-(by + hz));
            if (pinfres <= cert_tol && cur.tau < cur.kap)
                return make_outcome(SolveStatus::PrimalInfeasible, cur, iter);
        }
        if (cx < 0.0) {
            double dinfres =
                std::max(ax.norm() / resy0, (gx + cur.s).norm() / resz0) / (-cx);
            if (dinfres <= cert_tol && cur.tau < cur.kap)
                return make_outcome(SolveStatus::DualInfeasible, cur, iter);
        }

        if (iter == settings.max_iter) return make_outcome(SolveStatus::MaxIter, best, best_iters);

        if (m > 0 && !update_scalings(lay, cur.s, cur.z, sc))
            return make_outcome(SolveStatus::NumericalFailure, best, best_iters);
        if (!kkt.factor(sc)) return make_outcome(SolveStatus::NumericalFailure, best, best_iters);

        Vec rhs1 = Vec::Zero(n + p + m);
        rhs1.head(n) = -c;
        rhs1.segment(n, p) = beq;
        rhs1.tail(m) = h;
        Vec d1 = kkt.solve(sc, rhs1);
        const double dtau_denom =
            cur.kap / cur.tau - c.dot(d1.head(n)) - beq.dot(d1.segment(n, p)) - h.dot(d1.tail(m));
        if (!std::isfinite(dtau_denom) || dtau_denom == 0.0)
            return make_outcome(SolveStatus::NumericalFailure, best, best_iters);

        // Predictor (affine) direction.
        Vec rhs2 = Vec::Zero(n + p + m);
        rhs2.head(n) = rx;
        rhs2.segment(n, p) = -ry;
        rhs2.tail(m) = cur.s - rz;
        Vec d2 = kkt.solve(sc, rhs2);
        const double dtau_aff = (rt - cur.kap + c.dot(d2.head(n)) + beq.dot(d2.segment(n, p)) +
                                 h.dot(d2.tail(m))) /
                                dtau_denom;
        Vec dx_aff = d2.head(n) + dtau_aff * d1.head(n);
        Vec dz_aff = d2.tail(m) + dtau_aff * d1.tail(m);
        Vec dz_aff_sc;
        apply_w(lay, sc, dz_aff, dz_aff_sc);
        // ds from the cone-row equation G dx - h dtau + ds = -rz keeps the
        // primal residual at working precision; the algebraically equal
        // -s - W^2 dz picks up the W^2 evaluation error near the boundary.
        Vec ds_aff = -rz - G * dx_aff + h * dtau_aff;
        Vec ds_aff_sc;
        apply_winv(lay, sc, ds_aff, ds_aff_sc);
        const double dkap_aff = -cur.kap - cur.kap / cur.tau * dtau_aff;
        const double alpha_aff = line_search(lay, sc.lambda, ds_aff_sc, dz_aff_sc, cur.tau,
                                             dtau_aff, cur.kap, dkap_aff);
        const double sigma =
            std::clamp((1.0 - alpha_aff) * (1.0 - alpha_aff) * (1.0 - alpha_aff), kSigmaMin,
                       kSigmaMax);

        // Combined centering + corrector direction.
        Vec lam2, cross;
        conic_product(lay, sc.lambda, sc.lambda, lam2);
        conic_product(lay, ds_aff_sc, dz_aff_sc, cross);
        Vec bs = -lam2 - cross + sigma * mu * e;
        const double bkap = cur.kap * cur.tau + dkap_aff * dtau_aff - sigma * mu;
        Vec lam_div, w_lam_div;
        conic_division(lay, sc.lambda, bs, lam_div);
        apply_w(lay, sc, lam_div, w_lam_div);
        Vec rhs3 = Vec::Zero(n + p + m);
        rhs3.head(n) = (1.0 - sigma) * rx;
        rhs3.segment(n, p) = -(1.0 - sigma) * ry;
        rhs3.tail(m) = -(1.0 - sigma) * rz - w_lam_div;
        Vec d3 = kkt.solve(sc, rhs3);
        const double dtau = ((1.0 - sigma) * rt - bkap / cur.tau + c.dot(d3.head(n)) +
                             beq.dot(d3.segment(n, p)) + h.dot(d3.tail(m))) /
                            dtau_denom;
        Vec dx = d3.head(n) + dtau * d1.head(n);
        Vec dy = d3.segment(n, p) + dtau * d1.segment(n, p);
        Vec dz = d3.tail(m) + dtau * d1.tail(m);
        const double dkap = -(bkap + cur.kap * dtau) / cur.tau;

        Vec wdz;
        apply_w(lay, sc, dz, wdz);
        Vec ds = -(1.0 - sigma) * rz - G * dx + h * dtau;
        Vec ds_sc;
        apply_winv(lay, sc, ds, ds_sc);
        double alpha =
            line_search(lay, sc.lambda, ds_sc, wdz, cur.tau, dtau, cur.kap, dkap) * kGammaStep;
        last_step = alpha;
        if (alpha <= kStepMin) {
            if (++tiny_steps >= 2)
                return make_outcome(SolveStatus::NumericalFailure, best, best_iters);
        } else {
            tiny_steps = 0;
        }

        cur.x += alpha * dx;
        cur.y += alpha * dy;
        cur.z += alpha * dz;
        cur.s += alpha * ds;
        cur.tau += alpha * dtau;
        cur.kap += alpha * dkap;
        if (cur.tau <= 0.0 || cur.kap <= 0.0)
            return make_outcome(SolveStatus::NumericalFailure, best, best_iters);
    }
}

SolveOutcome solve(const ConicProblem& problem, const SolverSettings& settings) {
    InteriorPointSolver s;
    return s.solve(problem, settings);
}

}  // namespace bfmx
