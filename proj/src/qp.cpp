#include "oef/qp.hpp"

#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace oef {

namespace {

constexpr double kEqRhoFactor = 1e3;
constexpr double kRuizIterations = 10;
constexpr double kSqrt2 = 1.4142135623730951;

double clamp_scaling(double s) { return std::clamp(s, 1e-4, 1e4); }

/// Real roots of a*g^3 + b*g + c = 0 (depressed cubic, a > 0).
int depressed_cubic_roots(double a, double b, double c, double roots[3]) {
    const double p = b / a;
    const double q = c / a;
    const double disc = q * q / 4.0 + p * p * p / 27.0;
    if (disc > 0.0) {
        const double s = std::sqrt(disc);
        roots[0] = std::cbrt(-q / 2.0 + s) + std::cbrt(-q / 2.0 - s);
        return 1;
    }
    if (p == 0.0) {  // disc <= 0 and p == 0 forces q == 0
        roots[0] = 0.0;
        return 1;
    }
    const double m = 2.0 * std::sqrt(-p / 3.0);
    const double arg = std::clamp(3.0 * q / (p * m), -1.0, 1.0);
    const double phi = std::acos(arg) / 3.0;
    roots[0] = m * std::cos(phi);
    roots[1] = m * std::cos(phi - 2.0 * M_PI / 3.0);
    roots[2] = m * std::cos(phi - 4.0 * M_PI / 3.0);
    return 3;
}

}  // namespace

ConvexBlockProblem ConvexBlockProblem::make(int n) {
    ConvexBlockProblem p;
    p.num_vars = n;
    p.quadratic.resize(n, n);
    p.linear = Vector::Zero(n);
    p.eq.resize(0, n);
    p.eq_rhs = Vector::Zero(0);
    p.ineq.resize(0, n);
    p.ineq_rhs = Vector::Zero(0);
    p.lower = Vector::Constant(n, -kInf);
    p.upper = Vector::Constant(n, kInf);
    return p;
}

double ConvexBlockProblem::objective_value(const Vector& x) const {
    return 0.5 * x.dot(quadratic * x) + linear.dot(x) + constant;
}

double ConvexBlockProblem::max_violation(const Vector& x) const {
    double v = 0.0;
    if (eq.rows() > 0) v = std::max(v, (eq * x - eq_rhs).cwiseAbs().maxCoeff());
    if (ineq.rows() > 0) v = std::max(v, (ineq * x - ineq_rhs).maxCoeff());
    for (int j = 0; j < num_vars; ++j) {
        if (std::isfinite(lower[j])) v = std::max(v, lower[j] - x[j]);
        if (std::isfinite(upper[j])) v = std::max(v, x[j] - upper[j]);
    }
    for (const auto& pc : parabolas) {
        const double g = x[pc.flow];
        const double dpi = x[pc.pressure_from] - x[pc.pressure_to];
        v = std::max(v, g * g - pc.weymouth * dpi);
    }
    return v;
}

void ConvexBlockProblem::add_diagonal_regularization(double t) {
    SparseMatrix id(num_vars, num_vars);
    id.setIdentity();
    quadratic = quadratic + SparseMatrix(t * id);
    strictly_convex = true;
}

std::string to_string(SolveStatus s) {
    switch (s) {
        case SolveStatus::Optimal: return "optimal";
        case SolveStatus::MaxIter: return "max-iter";
        case SolveStatus::InfeasibleDetected: return "infeasible-detected";
    }
    return "unknown";
}

std::pair<double, double> project_parabola(double g0, double t0, double weymouth) {
    if (weymouth <= 0.0) throw std::invalid_argument("project_parabola: weymouth must be positive");
    const double w = weymouth;
    if (g0 * g0 <= w * t0) return {g0, t0};
    // Stationarity of (g-g0)^2 + (g^2/W - t0)^2 over the boundary t = g^2/W:
    // 2 g^3 + (W^2 - 2 W t0) g - W^2 g0 = 0.
    double roots[3];
    const int nroots = depressed_cubic_roots(2.0, w * w - 2.0 * w * t0, -w * w * g0, roots);
    double best_g = 0.0, best_d = kInf;
    for (int i = 0; i < nroots; ++i) {
        double g = roots[i];
        // Newton refinement of the stationarity cubic.
        for (int it = 0; it < 3; ++it) {
            const double f = 2.0 * g * g * g + (w * w - 2.0 * w * t0) * g - w * w * g0;
            const double df = 6.0 * g * g + (w * w - 2.0 * w * t0);
            if (df == 0.0) break;
            g -= f / df;
        }
        const double t = g * g / w;
        const double d = (g - g0) * (g - g0) + (t - t0) * (t - t0);
        if (d < best_d) {
            best_d = d;
            best_g = g;
        }
    }
    return {best_g, best_g * best_g / w};
}

// ---------------------------------------------------------------------------
// BlockSolver implementation
// ---------------------------------------------------------------------------

struct BlockSolver::Impl {
    ConvexBlockProblem prob;   // original, unscaled
    QpSettings cfg;

    int n = 0;                 // variables
    int m = 0;                 // stacked constraint rows
    int me = 0, mi = 0, npar = 0;

    // Scaled data (Ruiz equilibration): Ms = E*M*D, Qs = c*D*Q*D, qs = c*D*q.
    SparseMatrix Ms, MsT, Qs;
    Vector qs;
    Vector D, E;
    double cost_scale = 1.0;

    Vector lo, hi;             // scaled interval bounds per row
    std::vector<double> par_w; // scaled W per parabola group
    Vector rho_vec;            // per-row penalty (scaled space)
    double rho_base = 0.1;

    Eigen::SimplicialLDLT<SparseMatrix> kkt;

    // Iterates (scaled space)
    Vector x, z, y;
    Vector y_prev_check;
    int infeas_streak = 0;

    // Scratch
    Vector rhs, xt, zt, zcand, dv;

    void setup();
    void equilibrate(const SparseMatrix& M, const Vector& l, const Vector& u);
    void build_rho_and_factor();
    void project(Vector& v) const;
    SolveReport run();
    bool try_polish(SolveReport& rep, double cur_merit);
    bool infeasibility_certificate() const;
    double support_value(const Vector& dy) const;

    Vector unscale_x(const Vector& xs) const { return D.cwiseProduct(xs); }
    Vector unscale_y(const Vector& ys) const { return E.cwiseProduct(ys) / cost_scale; }
};

void BlockSolver::Impl::setup() {
    n = prob.num_vars;
    me = static_cast<int>(prob.eq.rows());
    mi = static_cast<int>(prob.ineq.rows());
    npar = static_cast<int>(prob.parabolas.size());
    m = me + mi + n + 3 * npar;

    std::vector<Triplet> trips;
    trips.reserve(prob.eq.nonZeros() + prob.ineq.nonZeros() + n + 3 * npar);
    for (int k = 0; k < prob.eq.outerSize(); ++k)
        for (SparseMatrix::InnerIterator it(prob.eq, k); it; ++it)
            trips.emplace_back(static_cast<int>(it.row()), static_cast<int>(it.col()), it.value());
    for (int k = 0; k < prob.ineq.outerSize(); ++k)
        for (SparseMatrix::InnerIterator it(prob.ineq, k); it; ++it)
            trips.emplace_back(me + static_cast<int>(it.row()), static_cast<int>(it.col()), it.value());
    for (int j = 0; j < n; ++j) trips.emplace_back(me + mi + j, j, 1.0);
    for (int p = 0; p < npar; ++p) {
        const auto& pc = prob.parabolas[p];
        const int r = me + mi + n + 3 * p;
        trips.emplace_back(r + 0, pc.flow, 1.0);
        trips.emplace_back(r + 1, pc.pressure_from, 1.0);
        trips.emplace_back(r + 2, pc.pressure_to, 1.0);
    }
    SparseMatrix M(m, n);
    M.setFromTriplets(trips.begin(), trips.end());

    Vector l(m), u(m);
    for (int i = 0; i < me; ++i) { l[i] = prob.eq_rhs[i]; u[i] = prob.eq_rhs[i]; }
    for (int i = 0; i < mi; ++i) { l[me + i] = -kInf; u[me + i] = prob.ineq_rhs[i]; }
    for (int j = 0; j < n; ++j) { l[me + mi + j] = prob.lower[j]; u[me + mi + j] = prob.upper[j]; }
    for (int p = 0; p < npar; ++p) {
        const int r = me + mi + n + 3 * p;
        for (int k = 0; k < 3; ++k) { l[r + k] = -kInf; u[r + k] = kInf; }
    }

    equilibrate(M, l, u);

    rho_base = cfg.rho;
    x = Vector::Zero(n);
    z = Vector::Zero(m);
    y = Vector::Zero(m);
    y_prev_check = Vector::Zero(m);
    rhs.resize(n); xt.resize(n); zt.resize(m); zcand.resize(m); dv.resize(n);
    build_rho_and_factor();
}

void BlockSolver::Impl::equilibrate(const SparseMatrix& M, const Vector& l, const Vector& u) {
    D = Vector::Ones(n);
    E = Vector::Ones(m);
    cost_scale = 1.0;

    SparseMatrix Mw = M;
    SparseMatrix Qw = prob.quadratic;
    Vector qw = prob.linear;

    for (int pass = 0; pass < kRuizIterations; ++pass) {
        Vector colmax = Vector::Zero(n);
        for (int k = 0; k < Mw.outerSize(); ++k)
            for (SparseMatrix::InnerIterator it(Mw, k); it; ++it)
                colmax[it.col()] = std::max(colmax[it.col()], std::abs(it.value()));
        for (int k = 0; k < Qw.outerSize(); ++k)
            for (SparseMatrix::InnerIterator it(Qw, k); it; ++it)
                colmax[it.col()] = std::max(colmax[it.col()], std::abs(it.value()));
        Vector rowmax = Vector::Zero(m);
        for (int k = 0; k < Mw.outerSize(); ++k)
            for (SparseMatrix::InnerIterator it(Mw, k); it; ++it)
                rowmax[it.row()] = std::max(rowmax[it.row()], std::abs(it.value()));

        Vector d(n), e(m);
        for (int j = 0; j < n; ++j) d[j] = colmax[j] > 1e-12 ? clamp_scaling(1.0 / std::sqrt(colmax[j])) : 1.0;
        for (int i = 0; i < m; ++i) e[i] = rowmax[i] > 1e-12 ? clamp_scaling(1.0 / std::sqrt(rowmax[i])) : 1.0;

        Mw = e.asDiagonal() * Mw * d.asDiagonal();
        Qw = SparseMatrix(d.asDiagonal() * Qw * d.asDiagonal());
        qw = d.cwiseProduct(qw);
        D = D.cwiseProduct(d);
        E = E.cwiseProduct(e);

        // Cost scaling keeps the objective on the same footing as the rows.
        Vector qcol = Vector::Zero(n);
        for (int k = 0; k < Qw.outerSize(); ++k)
            for (SparseMatrix::InnerIterator it(Qw, k); it; ++it)
                qcol[it.col()] = std::max(qcol[it.col()], std::abs(it.value()));
        const double qnorm = qw.size() > 0 ? qw.cwiseAbs().maxCoeff() : 0.0;
        const double denom = std::max(qcol.size() > 0 ? qcol.mean() : 0.0, qnorm);
        if (denom > 1e-12) {
            const double g = clamp_scaling(1.0 / denom);
            Qw *= g;
            qw *= g;
            cost_scale *= g;
        }
    }

    // The two pressure rows of a parabola group must share a scale so the
    // rotated projection stays a parabola.
    for (int p = 0; p < npar; ++p) {
        const int r1 = me + mi + n + 3 * p + 1;
        const int r2 = me + mi + n + 3 * p + 2;
        const double target = std::min(E[r1], E[r2]);
        E[r1] = target;
        E[r2] = target;
    }
    // Rebuild scaled data from the final D, E, cost_scale (also applies the
    // parabola row adjustment above uniformly).
    Ms = E.asDiagonal() * M * D.asDiagonal();
    Qs = SparseMatrix(D.asDiagonal() * prob.quadratic * D.asDiagonal());
    Qs *= cost_scale;
    qs = cost_scale * D.cwiseProduct(prob.linear);
    MsT = Ms.transpose();

    lo.resize(m);
    hi.resize(m);
    for (int i = 0; i < m; ++i) {
        lo[i] = std::isfinite(l[i]) ? E[i] * l[i] : l[i];
        hi[i] = std::isfinite(u[i]) ? E[i] * u[i] : u[i];
    }
    par_w.resize(npar);
    for (int p = 0; p < npar; ++p) {
        const int rg = me + mi + n + 3 * p;
        const double eg = E[rg], ep = E[rg + 1];
        par_w[p] = prob.parabolas[p].weymouth * eg * eg / ep;
    }
}

void BlockSolver::Impl::build_rho_and_factor() {
    rho_vec.resize(m);
    for (int i = 0; i < m; ++i) {
        const bool is_eq = std::isfinite(lo[i]) && std::isfinite(hi[i]) && lo[i] == hi[i];
        rho_vec[i] = is_eq ? rho_base * kEqRhoFactor : rho_base;
    }
    SparseMatrix id(n, n);
    id.setIdentity();
    SparseMatrix K = Qs + SparseMatrix(cfg.sigma * id) + SparseMatrix(MsT * rho_vec.asDiagonal() * Ms);
    kkt.compute(K);
    if (kkt.info() != Eigen::Success)
        throw std::runtime_error("BlockSolver: KKT factorization failed");
}

void BlockSolver::Impl::project(Vector& v) const {
    for (int i = 0; i < me + mi + n; ++i) v[i] = std::clamp(v[i], lo[i], hi[i]);
    for (int p = 0; p < npar; ++p) {
        const int r = me + mi + n + 3 * p;
        const double zg = v[r], z1 = v[r + 1], z2 = v[r + 2];
        const double s = (z1 + z2) / kSqrt2;
        const double t = (z1 - z2) / kSqrt2;
        const auto [pg, pt] = project_parabola(zg, t, kSqrt2 * par_w[p]);
        v[r] = pg;
        v[r + 1] = (s + pt) / kSqrt2;
        v[r + 2] = (s - pt) / kSqrt2;
    }
}

double BlockSolver::Impl::support_value(const Vector& dy) const {
    double total = 0.0;
    for (int i = 0; i < me + mi + n; ++i) {
        const double v = dy[i];
        if (v > 0.0) {
            if (!std::isfinite(hi[i])) return kInf;
            total += v * hi[i] / E[i];
        } else if (v < 0.0) {
            if (!std::isfinite(lo[i])) return kInf;
            total += v * lo[i] / E[i];
        }
    }
    const double eps = cfg.infeasibility_tolerance;
    for (int p = 0; p < npar; ++p) {
        const int r = me + mi + n + 3 * p;
        const double ag = dy[r], a1 = dy[r + 1], a2 = dy[r + 2];
        const double as = (a1 + a2) / kSqrt2;
        const double b = (a1 - a2) / kSqrt2;
        if (std::abs(as) > eps) return kInf;
        if (b > eps) return kInf;
        if (b >= -eps) {
            if (std::abs(ag) > eps) return kInf;
            continue;
        }
        total += -ag * ag * (kSqrt2 * prob.parabolas[p].weymouth) / (4.0 * b);
    }
    return total;
}

bool BlockSolver::Impl::infeasibility_certificate() const {
    Vector dy_s = y - y_prev_check;
    Vector dy = unscale_y(dy_s);
    const double norm = dy.cwiseAbs().maxCoeff();
    if (!(norm > 1e-12 * std::max(1.0, unscale_y(y).cwiseAbs().maxCoeff()))) return false;
    dy /= norm;
    // M' dy = D^{-1} Ms' (dy_scaled_back) / 1 — rebuild in scaled space.
    Vector dy_scaled = cost_scale * dy.cwiseQuotient(E);
    Vector mt = MsT * dy_scaled;
    const double stat = (mt.cwiseQuotient(D) / cost_scale).cwiseAbs().maxCoeff();
    const double eps = cfg.infeasibility_tolerance;
    if (stat > eps * std::max(1.0, dy.cwiseAbs().maxCoeff())) return false;
    const double sup = support_value(dy);
    return sup <= -eps;
}

SolveReport BlockSolver::Impl::run() {
    SolveReport rep;
    const double tol = cfg.tolerance;
    int iter = 0;
    double r_prim = kInf, r_dual = kInf;
    infeas_streak = 0;
    y_prev_check = y;

    while (iter < cfg.max_iterations) {
        // x-step
        rhs.noalias() = cfg.sigma * x - qs;
        rhs.noalias() += MsT * (rho_vec.cwiseProduct(z) - y);
        xt = kkt.solve(rhs);
        zt.noalias() = Ms * xt;

        // relaxed z/y-steps
        x = cfg.alpha * xt + (1.0 - cfg.alpha) * x;
        zcand = cfg.alpha * zt + (1.0 - cfg.alpha) * z;
        Vector z_old_mix = zcand;  // alpha*Ms*xt + (1-alpha)*z
        zcand += y.cwiseQuotient(rho_vec);
        project(zcand);
        y += rho_vec.cwiseProduct(z_old_mix - zcand);
        z = zcand;
        ++iter;

        if (iter % cfg.check_interval != 0 && iter != cfg.max_iterations) continue;

        // Unscaled residuals
        zt.noalias() = Ms * x;
        r_prim = ((zt - z).cwiseQuotient(E)).cwiseAbs().maxCoeff();
        dv.noalias() = Qs * x + qs + MsT * y;
        r_dual = (dv.cwiseQuotient(D)).cwiseAbs().maxCoeff() / cost_scale;

        if (r_prim <= tol && r_dual <= tol) {
            rep.status = SolveStatus::Optimal;
            break;
        }

        if (r_prim > 10.0 * tol && infeasibility_certificate()) {
            if (++infeas_streak >= 3) {
                rep.status = SolveStatus::InfeasibleDetected;
                rep.iterations = iter;
                rep.solution = unscale_x(x);
                rep.objective = prob.objective_value(rep.solution);
                rep.primal_residual = prob.max_violation(rep.solution);
                rep.dual_residual = r_dual;
                return rep;
            }
        } else {
            infeas_streak = 0;
        }
        y_prev_check = y;

        if (cfg.adaptive_rho && iter % (cfg.check_interval * 4) == 0) {
            const double mx = std::max({(zt.cwiseQuotient(E)).cwiseAbs().maxCoeff(),
                                        (z.cwiseQuotient(E)).cwiseAbs().maxCoeff(), 1e-10});
            Vector qx = Qs * x;
            const double md = std::max({(qx.cwiseQuotient(D)).cwiseAbs().maxCoeff() / cost_scale,
                                        (qs.cwiseQuotient(D)).cwiseAbs().maxCoeff() / cost_scale,
                                        ((MsT * y).cwiseQuotient(D)).cwiseAbs().maxCoeff() / cost_scale,
                                        1e-10});
            const double ratio = std::sqrt((r_prim / mx) / std::max(r_dual / md, 1e-16));
            if (ratio > 5.0 || ratio < 0.2) {
                rho_base = std::clamp(rho_base * ratio, 1e-6, 1e6);
                build_rho_and_factor();
            }
        }
    }

    rep.iterations = iter;
    rep.solution = unscale_x(x);
    if (rep.status != SolveStatus::Optimal && r_prim <= tol && r_dual <= tol)
        rep.status = SolveStatus::Optimal;
    rep.primal_residual = prob.max_violation(rep.solution);
    rep.dual_residual = r_dual;

    if (cfg.polish && rep.status == SolveStatus::Optimal) {
        const double merit = std::max(rep.primal_residual, r_dual);
        if (try_polish(rep, merit)) rep.polished = true;
    }
    rep.objective = prob.objective_value(rep.solution);
    if (rep.status == SolveStatus::Optimal && rep.primal_residual > tol)
        rep.status = SolveStatus::MaxIter;
    return rep;
}

bool BlockSolver::Impl::try_polish(SolveReport& rep, double cur_merit) {
    const Vector xu = rep.solution;
    const Vector yu = unscale_y(y);
    const Vector zu = z.cwiseQuotient(E);
    const double y_big = 1e-8 * std::max(1.0, yu.cwiseAbs().maxCoeff());
    const double act_eps = std::max(1e-7, 10.0 * rep.primal_residual);

    struct ActiveRow { int src_row; double rhs; bool parab; int group; };
    std::vector<ActiveRow> act;
    for (int i = 0; i < me; ++i) act.push_back({i, prob.eq_rhs[i], false, -1});
    for (int i = 0; i < mi; ++i) {
        const int r = me + i;
        const double bound = prob.ineq_rhs[i];
        if (bound - zu[r] <= act_eps * std::max(1.0, std::abs(bound)) || yu[r] > y_big)
            act.push_back({r, bound, false, -1});
    }
    for (int j = 0; j < n; ++j) {
        const int r = me + mi + j;
        if (std::isfinite(prob.lower[j]) &&
            (zu[r] - prob.lower[j] <= act_eps * std::max(1.0, std::abs(prob.lower[j])) || yu[r] < -y_big)) {
            act.push_back({r, prob.lower[j], false, -1});
        } else if (std::isfinite(prob.upper[j]) &&
                   (prob.upper[j] - zu[r] <= act_eps * std::max(1.0, std::abs(prob.upper[j])) || yu[r] > y_big)) {
            act.push_back({r, prob.upper[j], false, -1});
        }
    }
    for (int p = 0; p < npar; ++p) {
        const auto& pc = prob.parabolas[p];
        const double g = xu[pc.flow];
        const double dpi = xu[pc.pressure_from] - xu[pc.pressure_to];
        const double h = g * g - pc.weymouth * dpi;
        if (h >= -act_eps * std::max(1.0, g * g)) act.push_back({-1, g * g, true, p});
    }

    const int k = static_cast<int>(act.size());
    if (k == 0) return false;

    // KKT system [Q + dI, A'; A, -dI] with tangent rows for active parabolas.
    const double delta = 1e-9;
    std::vector<Triplet> trips;
    for (int c = 0; c < prob.quadratic.outerSize(); ++c)
        for (SparseMatrix::InnerIterator it(prob.quadratic, c); it; ++it)
            trips.emplace_back(static_cast<int>(it.row()), static_cast<int>(it.col()), it.value());
    for (int j = 0; j < n; ++j) trips.emplace_back(j, j, delta);
    auto add_row = [&](int arow, int col, double val) {
        trips.emplace_back(n + arow, col, val);
        trips.emplace_back(col, n + arow, val);
    };
    Vector brhs(n + k);
    brhs.head(n) = -prob.linear;
    const Eigen::SparseMatrix<double, Eigen::RowMajor> eq_rows(prob.eq);
    const Eigen::SparseMatrix<double, Eigen::RowMajor> ineq_rows(prob.ineq);
    for (int a = 0; a < k; ++a) {
        const auto& ar = act[a];
        if (ar.parab) {
            const auto& pc = prob.parabolas[ar.group];
            const double g = xu[pc.flow];
            add_row(a, pc.flow, 2.0 * g);
            add_row(a, pc.pressure_from, -pc.weymouth);
            add_row(a, pc.pressure_to, pc.weymouth);
            brhs[n + a] = g * g;
        } else if (ar.src_row < me) {
            for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(eq_rows, ar.src_row); it; ++it)
                add_row(a, static_cast<int>(it.col()), it.value());
            brhs[n + a] = ar.rhs;
        } else if (ar.src_row < me + mi) {
            for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(ineq_rows, ar.src_row - me); it; ++it)
                add_row(a, static_cast<int>(it.col()), it.value());
            brhs[n + a] = ar.rhs;
        } else {
            add_row(a, ar.src_row - me - mi, 1.0);
            brhs[n + a] = ar.rhs;
        }
        trips.emplace_back(n + a, n + a, -delta);
    }
    SparseMatrix K(n + k, n + k);
    K.setFromTriplets(trips.begin(), trips.end());
    Eigen::SparseLU<SparseMatrix> lu;
    lu.compute(K);
    if (lu.info() != Eigen::Success) return false;
    Vector sol = lu.solve(brhs);

    // Two refinement passes against the unregularized system.
    for (int pass = 0; pass < 2; ++pass) {
        Vector resid = brhs - K * sol;
        // remove the deliberate regularization from the residual
        resid.head(n) += delta * sol.head(n);
        resid.tail(k) -= delta * sol.tail(k);
        sol += lu.solve(resid);
    }

    Vector x_pol = sol.head(n);
    if (!x_pol.allFinite()) return false;

    // Reconstruct stacked multipliers for the dual-residual check.
    Vector y_pol = Vector::Zero(m);
    for (int a = 0; a < k; ++a) {
        const auto& ar = act[a];
        const double nu = sol[n + a];
        if (ar.parab) {
            const auto& pc = prob.parabolas[ar.group];
            const int r = me + mi + n + 3 * ar.group;
            y_pol[r] += nu * 2.0 * xu[pc.flow];
            y_pol[r + 1] += -nu * pc.weymouth;
            y_pol[r + 2] += nu * pc.weymouth;
        } else {
            y_pol[ar.src_row] += nu;
        }
    }
    Vector dual = prob.quadratic * x_pol + prob.linear;
    dual += prob.eq.transpose() * y_pol.head(me);
    if (mi > 0) dual += prob.ineq.transpose() * y_pol.segment(me, mi);
    dual += y_pol.segment(me + mi, n);
    for (int p = 0; p < npar; ++p) {
        const int r = me + mi + n + 3 * p;
        const auto& pc = prob.parabolas[p];
        dual[pc.flow] += y_pol[r];
        dual[pc.pressure_from] += y_pol[r + 1];
        dual[pc.pressure_to] += y_pol[r + 2];
    }
    const double viol = prob.max_violation(x_pol);
    const double dres = dual.cwiseAbs().maxCoeff();
    const double merit = std::max(viol, dres);
    if (merit > cur_merit && !(viol <= cfg.tolerance && dres <= cfg.tolerance)) return false;

    rep.solution = x_pol;
    rep.primal_residual = viol;
    rep.dual_residual = dres;
    // Update warm-start state so later solves resume from the polished point.
    x = x_pol.cwiseQuotient(D);
    z = Ms * x;
    project(z);
    y = cost_scale * y_pol.cwiseQuotient(E);
    return true;
}

BlockSolver::BlockSolver(ConvexBlockProblem problem, QpSettings settings)
    : impl_(std::make_unique<Impl>()) {
    if (!problem.strictly_convex)
        throw std::invalid_argument("BlockSolver: problem lacks a strict-convexity certificate");
    if (problem.linear.size() != problem.num_vars)
        throw std::invalid_argument("BlockSolver: linear term dimension mismatch");
    impl_->prob = std::move(problem);
    impl_->cfg = settings;
    impl_->setup();
}

BlockSolver::~BlockSolver() = default;
BlockSolver::BlockSolver(BlockSolver&&) noexcept = default;
BlockSolver& BlockSolver::operator=(BlockSolver&&) noexcept = default;

void BlockSolver::set_linear_term(const Vector& linear, double constant) {
    if (linear.size() != impl_->n) throw std::invalid_argument("set_linear_term: dimension mismatch");
    impl_->prob.linear = linear;
    impl_->prob.constant = constant;
    impl_->qs = impl_->cost_scale * impl_->D.cwiseProduct(linear);
}

void BlockSolver::warm_start(const Vector& x0) {
    impl_->x = x0.cwiseQuotient(impl_->D);
    impl_->z = impl_->Ms * impl_->x;
    impl_->project(impl_->z);
    impl_->y.setZero();
}

SolveReport BlockSolver::solve() { return impl_->run(); }

const ConvexBlockProblem& BlockSolver::problem() const { return impl_->prob; }

SolveReport solve_block(const ConvexBlockProblem& p, const QpSettings& settings) {
    BlockSolver solver(p, settings);
    return solver.solve();
}

}  // namespace oef
