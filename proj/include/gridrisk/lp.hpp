#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "gridrisk/errors.hpp"

namespace gridrisk::lp {

constexpr double kInf = std::numeric_limits<double>::infinity();

// min c'x  s.t.  row_lo <= A x <= row_hi,  lo <= x <= hi.
// Equality rows have row_lo == row_hi.
struct Problem {
    int num_vars = 0;
    Eigen::VectorXd cost;
    Eigen::VectorXd lo, hi;

    std::vector<Eigen::VectorXd> row_coeffs;
    std::vector<double> row_lo, row_hi;

    explicit Problem(int n)
        : num_vars(n),
          cost(Eigen::VectorXd::Zero(n)),
          lo(Eigen::VectorXd::Zero(n)),
          hi(Eigen::VectorXd::Constant(n, kInf)) {}

    void add_row(Eigen::VectorXd a, double rlo, double rhi) {
        row_coeffs.push_back(std::move(a));
        row_lo.push_back(rlo);
        row_hi.push_back(rhi);
    }
    int num_rows() const { return static_cast<int>(row_coeffs.size()); }
};

enum class Status { Optimal, Infeasible, Unbounded, IterLimit };

struct Result {
    Status status = Status::IterLimit;
    Eigen::VectorXd x;             // structural variables
    Eigen::VectorXd row_activity;  // A x at the solution
    double objective = 0.0;
    int iterations = 0;
};

struct Options {
    double feas_tol = 1e-8;
    double cost_tol_rel = 1e-10;  // reduced-cost tolerance per unit of max |c|
    double pivot_tol = 1e-9;
    int refactor_every = 64;
    int max_iterations = 0;  // 0 -> automatic from problem size
};

// Revised simplex for bounded variables, two phases, dense algebra.
//
// Internally the problem is  [A | -I] z = 0  with z = (x, r): each row gets a
// logical variable r_i bounded by the row range, so every constraint is an
// equality and every variable is boxed. The basis inverse is kept as a dense
// LU factorization plus a product-form eta file, refactored periodically.
class Simplex {
public:
    Result solve(const Problem& p, const Options& opt = {}) {
        p_ = &p;
        opt_ = opt;
        n_ = p.num_vars;
        m_ = p.num_rows();
        total_ = n_ + m_;
        if (opt_.max_iterations <= 0) opt_.max_iterations = 20000 + 200 * total_;
        cost_scale_ = 1.0;
        for (int j = 0; j < n_; ++j) cost_scale_ = std::max(cost_scale_, std::abs(p.cost[j]));
        dtol_ = opt_.cost_tol_rel * cost_scale_ + 1e-11;

        A_ = Eigen::MatrixXd::Zero(m_, n_);
        for (int i = 0; i < m_; ++i) A_.row(i) = p.row_coeffs[i].transpose();

        value_.assign(total_, 0.0);
        state_.assign(total_, AtLower);
        for (int j = 0; j < total_; ++j) {
            const double l = lower(j), h = upper(j);
            if (std::isfinite(l) && std::isfinite(h)) {
                state_[j] = (std::abs(l) <= std::abs(h)) ? AtLower : AtUpper;
            } else if (std::isfinite(l)) {
                state_[j] = AtLower;
            } else if (std::isfinite(h)) {
                state_[j] = AtUpper;
            } else {
                state_[j] = Free;
            }
            value_[j] = nonbasic_value(j);
        }

        basic_.resize(m_);
        in_basis_.assign(total_, -1);
        for (int i = 0; i < m_; ++i) {
            basic_[i] = n_ + i;
            state_[n_ + i] = Basic;
            in_basis_[n_ + i] = i;
        }
        refactorize();

        Result res;
        res.iterations = 0;

        // Phase 1: drive bound violations of basic variables to zero.
        const RunOutcome ph1 = run(true, res.iterations);
        if (ph1 == RunOutcome::IterLimit) return finish(res, Status::IterLimit);
        if (total_infeasibility() > 1e-7 * (1.0 + rhs_scale())) {
            return finish(res, Status::Infeasible);
        }
        // Phase 2: optimize the true objective.
        const RunOutcome ph2 = run(false, res.iterations);
        if (ph2 == RunOutcome::IterLimit) return finish(res, Status::IterLimit);
        if (ph2 == RunOutcome::Unbounded) return finish(res, Status::Unbounded);
        return finish(res, Status::Optimal);
    }

private:
    enum VarState : unsigned char { Basic, AtLower, AtUpper, Free };
    enum class RunOutcome { Converged, Unbounded, IterLimit };

    double lower(int j) const { return j < n_ ? p_->lo[j] : p_->row_lo[j - n_]; }
    double upper(int j) const { return j < n_ ? p_->hi[j] : p_->row_hi[j - n_]; }
    double true_cost(int j) const { return j < n_ ? p_->cost[j] : 0.0; }

    double nonbasic_value(int j) const {
        switch (state_[j]) {
            case AtLower: return lower(j);
            case AtUpper: return upper(j);
            default: return 0.0;
        }
    }

    // Column j of [A | -I].
    Eigen::VectorXd column(int j) const {
        if (j < n_) return A_.col(j);
        Eigen::VectorXd e = Eigen::VectorXd::Zero(m_);
        e[j - n_] = -1.0;
        return e;
    }

    double rhs_scale() const {
        double s = 0.0;
        for (int i = 0; i < m_; ++i) {
            if (std::isfinite(p_->row_lo[i])) s = std::max(s, std::abs(p_->row_lo[i]));
            if (std::isfinite(p_->row_hi[i])) s = std::max(s, std::abs(p_->row_hi[i]));
        }
        return std::min(s, 1e4);
    }

    // ---- factorization handling -------------------------------------------

    struct Eta {
        int pivot_row;
        Eigen::VectorXd col;  // FTRAN'd entering column at creation time
    };

    void refactorize() {
        if (m_ > 0) {
            Eigen::MatrixXd B(m_, m_);
            for (int i = 0; i < m_; ++i) B.col(i) = column(basic_[i]);
            lu_.compute(B);
        }
        etas_.clear();
        recompute_basics();
    }

    void recompute_basics() {
        Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m_);
        for (int j = 0; j < total_; ++j) {
            if (state_[j] == Basic) continue;
            const double v = nonbasic_value(j);
            value_[j] = v;
            if (v == 0.0) continue;
            if (j < n_) rhs -= A_.col(j) * v;
            else rhs[j - n_] += v;  // logical column is -e_i
        }
        const Eigen::VectorXd xb = ftran(rhs);
        for (int i = 0; i < m_; ++i) value_[basic_[i]] = xb[i];
    }

    Eigen::VectorXd ftran(const Eigen::VectorXd& b) const {
        Eigen::VectorXd y = m_ > 0 ? lu_.solve(b) : b;
        for (const Eta& e : etas_) {
            const double piv = y[e.pivot_row] / e.col[e.pivot_row];
            if (piv != 0.0) y -= piv * e.col;
            y[e.pivot_row] = piv;
        }
        return y;
    }

    Eigen::VectorXd btran(const Eigen::VectorXd& c) const {
        Eigen::VectorXd y = c;
        for (auto it = etas_.rbegin(); it != etas_.rend(); ++it) {
            const Eta& e = *it;
            // y' = E^{-T} y: only the pivot entry changes.
            double dot = 0.0;
            for (int i = 0; i < m_; ++i)
                if (i != e.pivot_row) dot += e.col[i] * y[i];
            y[e.pivot_row] = (y[e.pivot_row] - dot) / e.col[e.pivot_row];
        }
        return m_ > 0 ? lu_.transpose().solve(y).eval() : y;
    }

    // ---- infeasibility bookkeeping ----------------------------------------

    double infeas_of(int idx) const {
        const double v = value_[idx], l = lower(idx), h = upper(idx);
        if (v < l - opt_.feas_tol) return l - v;
        if (v > h + opt_.feas_tol) return v - h;
        return 0.0;
    }

    double total_infeasibility() const {
        double s = 0.0;
        for (int i = 0; i < m_; ++i) s += infeas_of(basic_[i]);
        return s;
    }

    // ---- main loop --------------------------------------------------------

    RunOutcome run(bool phase1, int& iter_counter) {
        int degen_streak = 0;
        bool bland = false;
        const int bland_trigger = 100 + 2 * total_;

        while (true) {
            if (iter_counter >= opt_.max_iterations) return RunOutcome::IterLimit;

            if (phase1 && total_infeasibility() <= opt_.feas_tol * (1.0 + rhs_scale())) {
                if (!etas_.empty()) refactorize();
                if (total_infeasibility() <= 1e-7 * (1.0 + rhs_scale())) return RunOutcome::Converged;
            }

            // Pricing vector y = B^{-T} c_B.
            Eigen::VectorXd cb(m_);
            for (int i = 0; i < m_; ++i) {
                if (phase1) {
                    const double v = value_[basic_[i]];
                    const double l = lower(basic_[i]), h = upper(basic_[i]);
                    if (v < l - opt_.feas_tol) cb[i] = -1.0;
                    else if (v > h + opt_.feas_tol) cb[i] = 1.0;
                    else cb[i] = 0.0;
                } else {
                    cb[i] = true_cost(basic_[i]);
                }
            }
            const Eigen::VectorXd y = m_ > 0 ? btran(cb) : cb;
            Eigen::VectorXd w;  // y' A, reduced-cost helper for structurals
            if (m_ > 0) w = A_.transpose() * y;
            else w = Eigen::VectorXd::Zero(n_);

            const double tol = phase1 ? 1e-9 : dtol_;
            int entering = -1;
            double best = tol;
            int direction = 0;
            for (int j = 0; j < total_; ++j) {
                if (state_[j] == Basic) continue;
                const double cj = phase1 ? 0.0 : true_cost(j);
                const double d = j < n_ ? cj - w[j] : cj + y[j - n_];
                int dir = 0;
                if (state_[j] == AtLower && d < -tol) dir = +1;
                else if (state_[j] == AtUpper && d > tol) dir = -1;
                else if (state_[j] == Free && std::abs(d) > tol) dir = d < 0 ? +1 : -1;
                if (dir == 0) continue;
                if (bland) { entering = j; direction = dir; break; }
                if (std::abs(d) > best) { best = std::abs(d); entering = j; direction = dir; }
            }

            if (entering < 0) {
                // Clean copy before declaring convergence.
                if (!etas_.empty()) { refactorize(); continue; }
                return RunOutcome::Converged;
            }

            const Eigen::VectorXd alpha = ftran(column(entering));

            // Ratio test: how far can the entering variable move before either
            // it hits its own opposite bound or some basic variable hits one.
            double limit = kInf;
            int leave_pos = -1;      // position in basis, -1 = bound flip
            double leave_to = 0.0;   // bound value the leaver stops at
            bool leave_at_upper = false;
            const double span = upper(entering) - lower(entering);
            if (std::isfinite(span)) limit = span;

            for (int i = 0; i < m_; ++i) {
                const double a = alpha[i];
                if (std::abs(a) < opt_.pivot_tol) continue;
                const int b = basic_[i];
                const double rate = -direction * a;  // d value_[b] / d step
                const double v = value_[b];
                const double l = lower(b), h = upper(b);
                double cand = kInf;
                double target = 0.0;
                bool target_upper = false;
                if (phase1 && v < l - opt_.feas_tol) {
                    // Infeasible below: blocks only when rising to its lower bound.
                    if (rate > 0) { cand = (l - v) / rate; target = l; target_upper = false; }
                } else if (phase1 && v > h + opt_.feas_tol) {
                    if (rate < 0) { cand = (h - v) / rate; target = h; target_upper = true; }
                } else {
                    if (rate > 0 && std::isfinite(h)) { cand = (h - v) / rate; target = h; target_upper = true; }
                    else if (rate < 0 && std::isfinite(l)) { cand = (l - v) / rate; target = l; target_upper = false; }
                }
                if (cand == kInf) continue;
                cand = std::max(cand, 0.0);
                bool better = cand < limit - 1e-10;
                if (!better && cand <= limit + 1e-10) {
                    if (leave_pos < 0) better = true;
                    else if (bland) better = basic_[i] < basic_[leave_pos];
                    else better = std::abs(a) > std::abs(alpha[leave_pos]);
                }
                if (better) {
                    limit = std::min(limit, cand);
                    leave_pos = i;
                    leave_to = target;
                    leave_at_upper = target_upper;
                }
            }

            if (!std::isfinite(limit)) {
                if (!etas_.empty()) { refactorize(); continue; }
                return phase1 ? RunOutcome::Converged : RunOutcome::Unbounded;
            }

            ++iter_counter;
            if (limit <= 1e-12) {
                if (++degen_streak > bland_trigger) bland = true;
            } else {
                degen_streak = 0;
                bland = false;
            }

            // Move the entering variable and update basic values.
            const double step = limit;
            for (int i = 0; i < m_; ++i) {
                if (std::abs(alpha[i]) < 1e-14) continue;
                value_[basic_[i]] -= direction * step * alpha[i];
            }
            value_[entering] = nonbasic_value(entering) + direction * step;

            if (leave_pos < 0) {
                // Bound flip, basis unchanged.
                state_[entering] = direction > 0 ? AtUpper : AtLower;
                value_[entering] = nonbasic_value(entering);
                continue;
            }

            const int leaving = basic_[leave_pos];
            if (std::abs(alpha[leave_pos]) < 1e-11) {
                refactorize();
                continue;  // retry with a clean factorization
            }
            value_[leaving] = leave_to;
            state_[leaving] = leave_at_upper ? AtUpper : AtLower;
            in_basis_[leaving] = -1;
            basic_[leave_pos] = entering;
            state_[entering] = Basic;
            in_basis_[entering] = leave_pos;
            etas_.push_back({leave_pos, alpha});
            if (static_cast<int>(etas_.size()) >= opt_.refactor_every) refactorize();
        }
    }

    Result finish(Result& res, Status st) {
        refactorize();
        res.status = st;
        res.x.resize(n_);
        for (int j = 0; j < n_; ++j) res.x[j] = value_[j];
        res.row_activity = A_ * res.x;
        res.objective = p_->cost.dot(res.x);
        return res;
    }

    const Problem* p_ = nullptr;
    Options opt_;
    int n_ = 0, m_ = 0, total_ = 0;
    double cost_scale_ = 1.0, dtol_ = 1e-9;

    Eigen::MatrixXd A_;
    std::vector<double> value_;
    std::vector<unsigned char> state_;
    std::vector<int> basic_, in_basis_;
    Eigen::PartialPivLU<Eigen::MatrixXd> lu_;
    std::vector<Eta> etas_;
};

inline Result solve(const Problem& p, const Options& opt = {}) {
    Simplex s;
    return s.solve(p, opt);
}

}  // namespace gridrisk::lp
