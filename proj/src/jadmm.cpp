#include "oef/jadmm.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <condition_variable>
#include <mutex>
#include <ostream>
#include <stdexcept>
#include <thread>

namespace oef {

namespace {

double box_midpoint(double lo, double hi) {
    if (std::isfinite(lo) && std::isfinite(hi)) return 0.5 * (lo + hi);
    double v = 0.0;
    if (std::isfinite(lo)) v = std::max(v, lo);
    if (std::isfinite(hi)) v = std::min(v, hi);
    return v;
}

/// Persistent pool executing index-addressed tasks with a completion
/// barrier. Tasks write disjoint slots, so results are schedule-independent.
class WorkerPool {
  public:
    explicit WorkerPool(int workers) {
        for (int i = 0; i < workers; ++i)
            threads_.emplace_back([this] { worker_loop(); });
    }
    ~WorkerPool() {
        {
            std::unique_lock lock(mu_);
            stop_ = true;
        }
        cv_.notify_all();
        for (auto& t : threads_) t.join();
    }

    void run_tasks(int count, const std::function<void(int)>& fn) {
        {
            std::unique_lock lock(mu_);
            fn_ = &fn;
            next_ = 0;
            remaining_ = count;
            total_ = count;
            ++generation_;
        }
        cv_.notify_all();
        std::unique_lock lock(mu_);
        done_cv_.wait(lock, [this] { return remaining_ == 0; });
        fn_ = nullptr;
    }

  private:
    void worker_loop() {
        std::uint64_t seen = 0;
        while (true) {
            std::unique_lock lock(mu_);
            cv_.wait(lock, [&] { return stop_ || generation_ != seen; });
            if (stop_) return;
            seen = generation_;
            while (next_ < total_) {
                const int idx = next_++;
                const auto* fn = fn_;
                lock.unlock();
                (*fn)(idx);
                lock.lock();
                if (--remaining_ == 0) done_cv_.notify_all();
            }
        }
    }

    std::vector<std::thread> threads_;
    std::mutex mu_;
    std::condition_variable cv_, done_cv_;
    const std::function<void(int)>* fn_ = nullptr;
    int next_ = 0, total_ = 0, remaining_ = 0;
    std::uint64_t generation_ = 0;
    bool stop_ = false;
};

}  // namespace

void JadmmConfig::validate(int num_blocks) const {
    if (d <= 0.0) throw std::invalid_argument("jadmm: penalty parameter d must be positive");
    if (!(gamma > 0.0 && gamma < 2.0))
        throw std::invalid_argument("jadmm: damping parameter gamma must lie in (0, 2)");
    if (p_factor <= 1.0) throw std::invalid_argument("jadmm: p_factor must exceed 1");
    if (eps_primal <= 0.0 || eps_dual <= 0.0)
        throw std::invalid_argument("jadmm: stop thresholds must be positive");
    if (max_iterations < 1) throw std::invalid_argument("jadmm: max_iterations must be >= 1");
    if (!eps_r.empty()) {
        if (static_cast<int>(eps_r.size()) != num_blocks)
            throw std::invalid_argument("jadmm: eps_r must have one entry per block");
        double sum = 0.0;
        for (double e : eps_r) {
            if (e <= 0.0) throw std::invalid_argument("jadmm: eps_r entries must be positive");
            sum += e;
        }
        if (sum >= 2.0 - gamma)
            throw std::invalid_argument("jadmm: sum of eps_r must stay below 2 - gamma");
    }
}

double JadmmConfig::subproblem_tolerance() const {
    if (subproblem.tolerance > 0.0) return subproblem.tolerance;
    return std::max(1e-9, 0.01 * std::min(eps_primal, eps_dual));
}

void ResidualTrace::write_csv(std::ostream& out) const {
    const size_t blocks = rows.empty() ? 0 : rows.front().dual_sq.size();
    out << "k,primal_sq";
    for (size_t r = 0; r < blocks; ++r) out << ",dual_sq_block_" << (r + 1);
    out << ",elapsed_ms\n";
    char buf[32];
    auto emit = [&](double v) {
        std::snprintf(buf, sizeof(buf), "%.17g", v);
        out << buf;
    };
    for (const auto& row : rows) {
        out << row.k << ',';
        emit(row.primal_sq);
        for (double v : row.dual_sq) {
            out << ',';
            emit(v);
        }
        out << ',';
        emit(row.elapsed_ms);
        out << '\n';
    }
}

std::string to_string(JadmmStatus s) {
    switch (s) {
        case JadmmStatus::Converged: return "converged";
        case JadmmStatus::MaxIter: return "max-iter";
        case JadmmStatus::BlockInfeasible: return "block-infeasible";
        case JadmmStatus::BudgetExceeded: return "budget-exceeded";
    }
    return "unknown";
}

std::vector<SparseMatrix> proximal_matrices(const CompactForm& cf, const JadmmConfig& cfg) {
    cfg.validate(cf.num_blocks());
    const int n_blocks = cf.num_blocks();
    const double sigma = 1e-8 * cfg.d;
    std::vector<SparseMatrix> out;
    out.reserve(n_blocks);
    for (int r = 0; r < n_blocks; ++r) {
        double factor;
        if (!cfg.eps_r.empty())
            factor = std::max(0.0, 1.0 / cfg.eps_r[r] - 1.0);
        else
            factor = static_cast<double>(n_blocks) / (2.0 - cfg.gamma) - 1.0;
        const auto& A = cf.blocks[r].coupling;
        SparseMatrix P = SparseMatrix(A.transpose() * A) * (cfg.p_factor * cfg.d * factor);
        SparseMatrix id(cf.blocks[r].problem.num_vars, cf.blocks[r].problem.num_vars);
        id.setIdentity();
        P = P + SparseMatrix(sigma * id);
        out.push_back(std::move(P));
    }
    return out;
}

namespace {

// Shared expansion of the augmented + proximal objective for block r:
//   q_eff = q_r + d * A_r' v - P x0,   v = sum_{j != r} A_j xbar^j - c - lambda/d
//   const_eff = const_r + (d/2) v'v + (1/2) x0' P x0
void expand_block_objective(int r, const CompactForm& cf, const JadmmConfig& cfg,
                            const SparseMatrix& proximal, const std::vector<Vector>& frozen_x,
                            const Vector& multiplier, const Vector& x0, Vector& q_eff,
                            double& const_eff) {
    const auto& block = cf.blocks[r];
    Vector v = -cf.rhs - multiplier / cfg.d;
    for (int j = 0; j < cf.num_blocks(); ++j) {
        if (j == r) continue;
        v += cf.blocks[j].coupling * frozen_x[j];
    }
    q_eff = block.problem.linear + cfg.d * (block.coupling.transpose() * v) - proximal * x0;
    const_eff = block.problem.constant + 0.5 * cfg.d * v.squaredNorm() + 0.5 * x0.dot(proximal * x0);
}

}  // namespace

ConvexBlockProblem block_subproblem(int r, const IterateState& state, const CompactForm& cf,
                                    const JadmmConfig& cfg, const SparseMatrix& proximal) {
    const auto& block = cf.blocks[r];
    ConvexBlockProblem p = block.problem;
    p.quadratic = p.quadratic +
                  SparseMatrix(cfg.d * SparseMatrix(block.coupling.transpose() * block.coupling)) +
                  proximal;
    Vector q_eff;
    double const_eff = 0.0;
    expand_block_objective(r, cf, cfg, proximal, state.block_x, state.multiplier, state.block_x[r],
                           q_eff, const_eff);
    p.linear = q_eff;
    p.constant = const_eff;
    p.strictly_convex = true;
    return p;
}

Vector multiplier_update(const IterateState& state, const CompactForm& cf, const JadmmConfig& cfg,
                         const std::vector<Vector>& fresh_x) {
    Vector residual = -cf.rhs;
    for (int j = 0; j < cf.num_blocks(); ++j) residual += cf.blocks[j].coupling * fresh_x[j];
    return state.multiplier - cfg.gamma * cfg.d * residual;
}

StopCheck check_stop(const CompactForm& cf, const JadmmConfig& cfg,
                     const std::vector<Vector>& fresh_x, const std::vector<Vector>& prev_x) {
    StopCheck out;
    Vector residual = -cf.rhs;
    for (int j = 0; j < cf.num_blocks(); ++j) residual += cf.blocks[j].coupling * fresh_x[j];
    out.primal_sq = residual.squaredNorm();
    out.dual_sq.resize(cf.num_blocks());
    double worst = 0.0;
    for (int j = 0; j < cf.num_blocks(); ++j) {
        out.dual_sq[j] = cfg.d * (fresh_x[j] - prev_x[j]).squaredNorm();
        worst = std::max(worst, out.dual_sq[j]);
    }
    out.stop = out.primal_sq <= cfg.eps_primal && worst <= cfg.eps_dual;
    return out;
}

JadmmResult run_jadmm(const CompactForm& cf, const JadmmConfig& cfg,
                      const std::function<bool()>& budget) {
    const int n_blocks = cf.num_blocks();
    cfg.validate(n_blocks);

    JadmmResult res;
    const auto t0 = std::chrono::steady_clock::now();
    auto elapsed_ms = [&] {
        return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
            .count();
    };

    QpSettings sub = cfg.subproblem;
    sub.tolerance = cfg.subproblem_tolerance();

    // Initialization: box midpoints and a zero multiplier.
    IterateState state;
    state.multiplier = Vector::Zero(cf.num_rows);
    for (const auto& block : cf.blocks) {
        Vector x0(block.problem.num_vars);
        for (int j = 0; j < block.problem.num_vars; ++j)
            x0[j] = box_midpoint(block.problem.lower[j], block.problem.upper[j]);
        state.block_x.push_back(std::move(x0));
    }

    // Decoupled blocks need no ADMM machinery: one regularized solve each.
    if (cf.num_rows == 0) {
        std::vector<Vector> fresh(n_blocks);
        for (int r = 0; r < n_blocks; ++r) {
            ConvexBlockProblem p = cf.blocks[r].problem;
            p.add_diagonal_regularization(1e-8 * cfg.d);
            BlockSolver solver(std::move(p), sub);
            solver.warm_start(state.block_x[r]);
            SolveReport rep = solver.solve();
            if (rep.status == SolveStatus::InfeasibleDetected) {
                res.status = JadmmStatus::BlockInfeasible;
                res.failed_block = cf.blocks[r].name;
                return res;
            }
            fresh[r] = rep.solution;
        }
        StopCheck sc = check_stop(cf, cfg, fresh, state.block_x);
        state.block_x = fresh;
        state.iteration = 1;
        res.state = std::move(state);
        res.trace.rows.push_back({1, sc.primal_sq, sc.dual_sq, elapsed_ms()});
        res.status = JadmmStatus::Converged;
        res.iterations = 1;
        for (int r = 0; r < n_blocks; ++r)
            res.objective += cf.blocks[r].problem.objective_value(res.state.block_x[r]);
        return res;
    }

    const std::vector<SparseMatrix> proximal = proximal_matrices(cf, cfg);

    // Per-block solvers carry the constant quadratic part; only the linear
    // term changes between iterations.
    std::vector<BlockSolver> solvers;
    solvers.reserve(n_blocks);
    for (int r = 0; r < n_blocks; ++r) {
        ConvexBlockProblem p = cf.blocks[r].problem;
        p.quadratic = p.quadratic +
                      SparseMatrix(cfg.d * SparseMatrix(cf.blocks[r].coupling.transpose() *
                                                        cf.blocks[r].coupling)) +
                      proximal[r];
        p.strictly_convex = true;
        solvers.emplace_back(std::move(p), sub);
        solvers.back().warm_start(state.block_x[r]);
    }

    int pool_threads = cfg.threads > 0 ? cfg.threads
                                       : static_cast<int>(std::thread::hardware_concurrency());
    pool_threads = std::clamp(pool_threads, 1, n_blocks);
    const bool parallel = cfg.mode == IterationMode::Jacobi && pool_threads > 1;
    std::unique_ptr<WorkerPool> pool;
    if (parallel) pool = std::make_unique<WorkerPool>(pool_threads);

    std::vector<Vector> fresh(n_blocks);
    std::atomic<int> infeasible_block{-1};

    auto solve_one = [&](int r, const std::vector<Vector>& frozen) {
        Vector q_eff;
        double const_eff = 0.0;
        expand_block_objective(r, cf, cfg, proximal[r], frozen, state.multiplier, state.block_x[r],
                               q_eff, const_eff);
        solvers[r].set_linear_term(q_eff, const_eff);
        SolveReport rep = solvers[r].solve();
        if (rep.status == SolveStatus::InfeasibleDetected) {
            infeasible_block.store(r);
            fresh[r] = state.block_x[r];
            return;
        }
        fresh[r] = rep.solution;
    };

    res.status = JadmmStatus::MaxIter;
    for (int k = 0; k < cfg.max_iterations; ++k) {
        if (budget && budget()) {
            res.status = JadmmStatus::BudgetExceeded;
            break;
        }
        if (cfg.mode == IterationMode::Jacobi) {
            if (parallel)
                pool->run_tasks(n_blocks, [&](int r) { solve_one(r, state.block_x); });
            else
                for (int r = 0; r < n_blocks; ++r) solve_one(r, state.block_x);
        } else {
            // Gauss-Seidel sweep: each block sees the freshest iterates.
            std::vector<Vector> working = state.block_x;
            for (int r = 0; r < n_blocks; ++r) {
                solve_one(r, working);
                working[r] = fresh[r];
            }
        }
        if (int bad = infeasible_block.load(); bad >= 0) {
            res.status = JadmmStatus::BlockInfeasible;
            res.failed_block = cf.blocks[bad].name;
            res.iterations = k;
            break;
        }

        state.multiplier = multiplier_update(state, cf, cfg, fresh);
        StopCheck sc = check_stop(cf, cfg, fresh, state.block_x);
        state.block_x = fresh;
        state.iteration = k + 1;
        res.trace.rows.push_back({k + 1, sc.primal_sq, sc.dual_sq, elapsed_ms()});
        if (sc.stop) {
            res.status = JadmmStatus::Converged;
            break;
        }
    }
    res.iterations = state.iteration;
    res.state = std::move(state);
    for (int r = 0; r < n_blocks; ++r)
        res.objective += cf.blocks[r].problem.objective_value(res.state.block_x[r]);
    return res;
}

}  // namespace oef
