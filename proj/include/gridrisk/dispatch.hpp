#pragma once

#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <vector>

#include "gridrisk/case_io.hpp"
#include "gridrisk/dc.hpp"
#include "gridrisk/lp.hpp"
#include "gridrisk/model.hpp"

namespace gridrisk {

struct DispatchSolution {
    double load_factor = 1.0;
    Eigen::VectorXd p_gen;     // MW per generator
    Eigen::VectorXd p_served;  // MW per load
    Eigen::VectorXd angles;    // radians per bus position (ascending bus id)
    Eigen::VectorXd flows;     // MW per in-service branch, case order
    std::vector<int> flow_branch_rows;  // case branch index per flow entry
    double objective = 0.0;    // $ value of the dispatch cost objective
    double shed_total = 0.0;   // MW of unserved demand
    // (monitored, outaged) case branch index pairs enforced during solving.
    std::vector<std::pair<int, int>> security_constraints_active;

    double served_total() const { return p_served.sum(); }
};

// A post-contingency flow row: flow_i + h * flow_j bounded by i's short-term
// rating. Branch indices refer to the case branch table.
struct SecurityRow {
    int monitored = 0;
    int outaged = 0;
    double h = 0.0;
};

struct SecurityViolation {
    int outaged = 0;
    int monitored = 0;
    double predicted_flow = 0.0;  // MW
    double limit = 0.0;           // MW (short-term rating of the monitored branch)
    double margin = 0.0;          // MW beyond the limit
};

struct SecurityReport {
    std::vector<SecurityViolation> violations;
    std::vector<int> islanding_branches;  // bridges, excluded from the n-1 set
};

struct DispatchOptions {
    int max_cycles = 10;        // security-constraint generation rounds
    double flow_tol_pu = 1e-4;  // violation tolerance, per-unit on mva_base
    // Dense outage-factor matrix below this branch count, lazy columns above.
    int dense_lodf_limit = 512;
};

namespace detail {

// Caches one sensitivity row per branch; rows are lazily computed, and the
// cache lives for the duration of one topology.
class PtdfRowCache {
public:
    explicit PtdfRowCache(const DcSystem& sys) : sys_(sys), rows_(sys.num_branches()) {}

    const Eigen::VectorXd& row(int l) {
        if (!rows_[l]) rows_[l] = ptdf_row(sys_, l);
        return *rows_[l];
    }

private:
    const DcSystem& sys_;
    std::vector<std::optional<Eigen::VectorXd>> rows_;
};

// Maps case branch index -> active branch position, or -1.
inline std::vector<int> active_position_map(const GridCase& gc, const DcSystem& sys) {
    std::vector<int> pos(gc.branches.size(), -1);
    for (int l = 0; l < sys.num_branches(); ++l) pos[sys.branch_rows[l]] = l;
    return pos;
}

}  // namespace detail

// Minimum-cost dispatch: min c_g'P_g - c_d'P_d subject to power balance,
// generator and demand bounds, branch flow limits, and any caller-supplied
// post-contingency rows. Demand may always fall to zero, so the program is
// feasible by construction. Flow limits are enforced by row generation:
// solve, verify against an exact network solution, add the violated rows,
// repeat.
inline DispatchSolution solve_dcopf(const GridCase& gc,
                                    const std::vector<SecurityRow>& extra = {},
                                    const DispatchOptions& opt = {}) {
    const DcSystem sys = build_dc_system(gc);
    detail::PtdfRowCache ptdf(sys);
    const std::vector<int> branch_pos = detail::active_position_map(gc, sys);

    const int ng = static_cast<int>(gc.generators.size());
    const int nl = static_cast<int>(gc.loads.size());
    const int n = sys.num_buses();

    lp::Problem prob(ng + nl);
    for (int g = 0; g < ng; ++g) {
        prob.cost[g] = gc.generators[g].marginal_cost;
        prob.lo[g] = 0.0;
        prob.hi[g] = gc.generators[g].p_max;
    }
    for (int d = 0; d < nl; ++d) {
        prob.cost[ng + d] = -gc.loads[d].shed_cost;
        prob.lo[ng + d] = 0.0;
        prob.hi[ng + d] = gc.effective_load(gc.loads[d]);
    }

    // Power balance: sum of generation equals sum of served demand.
    {
        Eigen::VectorXd a(ng + nl);
        a.head(ng).setOnes();
        a.tail(nl).setConstant(-1.0);
        prob.add_row(a, 0.0, 0.0);
    }

    // A flow row expressed over the decision variables via bus sensitivities.
    auto flow_row = [&](const Eigen::VectorXd& w) {
        Eigen::VectorXd a = Eigen::VectorXd::Zero(ng + nl);
        for (int g = 0; g < ng; ++g) a[g] = w[sys.bus_at.at(gc.generators[g].bus)];
        for (int d = 0; d < nl; ++d) a[ng + d] = -w[sys.bus_at.at(gc.loads[d].bus)];
        return a;
    };

    for (const SecurityRow& s : extra) {
        const int i = branch_pos[s.monitored], j = branch_pos[s.outaged];
        if (i < 0 || j < 0) {
            throw DomainError("security row references an out-of-service branch");
        }
        const Eigen::VectorXd w = ptdf.row(i) + s.h * ptdf.row(j);
        const double lim = gc.branches[s.monitored].rating_short;
        prob.add_row(flow_row(w), -lim, lim);
    }

    const double tol_mw = opt.flow_tol_pu * gc.mva_base;
    std::set<int> limited;  // active branch positions with a flow row added
    lp::Result lpres;
    Eigen::VectorXd inj;
    FlowState state;
    // Every pass adds at least one new row, so this terminates within m rounds.
    for (int round = 0;; ++round) {
        lpres = lp::solve(prob);
        if (lpres.status != lp::Status::Optimal) {
            throw SolverError("dispatch program ended " +
                              std::string(lpres.status == lp::Status::IterLimit
                                              ? "at the iteration limit"
                                              : "without an optimum") +
                              " after " + std::to_string(lpres.iterations) + " iterations");
        }
        inj = Eigen::VectorXd::Zero(n);
        for (int g = 0; g < ng; ++g) inj[sys.bus_at.at(gc.generators[g].bus)] += lpres.x[g];
        for (int d = 0; d < nl; ++d) inj[sys.bus_at.at(gc.loads[d].bus)] -= lpres.x[ng + d];
        inj.array() -= inj.sum() / n;  // remove balance-row float residue
        state = solve_dc_flow(sys, inj);

        std::vector<int> newly;
        for (int l = 0; l < sys.num_branches(); ++l) {
            if (limited.count(l)) continue;
            const double lim = gc.branches[sys.branch_rows[l]].rating_long;
            if (std::abs(state.flows[l]) > lim + tol_mw) newly.push_back(l);
        }
        if (newly.empty()) break;
        if (round > sys.num_branches()) {
            throw SolverError("flow-limit row generation failed to settle");
        }
        for (int l : newly) {
            const double lim = gc.branches[sys.branch_rows[l]].rating_long;
            prob.add_row(flow_row(ptdf.row(l)), -lim, lim);
            limited.insert(l);
        }
    }

    DispatchSolution sol;
    sol.load_factor = gc.load_factor;
    sol.p_gen = lpres.x.head(ng);
    sol.p_served = lpres.x.tail(nl);
    sol.angles = state.angles;
    sol.flows = state.flows;
    sol.flow_branch_rows = sys.branch_rows;
    sol.objective = lpres.objective;
    sol.shed_total = 0.0;
    for (int d = 0; d < nl; ++d) sol.shed_total += gc.effective_load(gc.loads[d]) - sol.p_served[d];
    for (const SecurityRow& s : extra) {
        sol.security_constraints_active.push_back({s.monitored, s.outaged});
    }
    return sol;
}

// Evaluates every single non-bridge outage against short-term ratings using
// outage distribution factors. Bridges cannot be secured by flow constraints
// and are listed separately.
inline SecurityReport check_security(const GridCase& gc, const DispatchSolution& sol,
                                     const DispatchOptions& opt = {}) {
    const DcSystem sys = build_dc_system(gc);
    const int m = sys.num_branches();
    const std::vector<char> bridges = detail::active_branch_bridges(gc, sys);
    const double tol_mw = opt.flow_tol_pu * gc.mva_base;

    SecurityReport rep;
    const bool dense = m <= opt.dense_lodf_limit;
    LodfMatrix lodf;
    if (dense) lodf = compute_lodf(gc, sys);

    for (int j = 0; j < m; ++j) {
        if (bridges[j]) {
            rep.islanding_branches.push_back(sys.branch_rows[j]);
            continue;
        }
        Eigen::VectorXd col;
        if (dense) col = lodf.h.col(j);
        else col = lodf_column(sys, j, false);
        for (int i = 0; i < m; ++i) {
            if (i == j) continue;
            const double predicted = sol.flows[i] + col[i] * sol.flows[j];
            const double lim = gc.branches[sys.branch_rows[i]].rating_short;
            if (std::abs(predicted) > lim + tol_mw) {
                rep.violations.push_back({sys.branch_rows[j], sys.branch_rows[i], predicted,
                                          lim, std::abs(predicted) - lim});
            }
        }
    }
    return rep;
}

// Decomposed security-constrained dispatch: alternate between the dispatch
// program and the contingency screen, folding every violated (monitored,
// outaged) pair into the program as a short-term-rating row, until the
// screen comes back clean.
inline DispatchSolution solve_scdcopf(const GridCase& gc, const DispatchOptions& opt = {},
                                      int* cycles_used = nullptr) {
    const DcSystem sys = build_dc_system(gc);
    const std::vector<int> branch_pos = detail::active_position_map(gc, sys);
    const int m = sys.num_branches();
    const bool dense = m <= opt.dense_lodf_limit;
    LodfMatrix lodf;
    if (dense) lodf = compute_lodf(gc, sys);

    std::vector<SecurityRow> rows;
    std::set<std::pair<int, int>> seen;
    for (int cycle = 1; cycle <= opt.max_cycles; ++cycle) {
        DispatchSolution sol = solve_dcopf(gc, rows, opt);
        const SecurityReport rep = check_security(gc, sol, opt);
        if (rep.violations.empty()) {
            if (cycles_used) *cycles_used = cycle;
            return sol;
        }
        std::map<int, Eigen::VectorXd> cols;  // outaged position -> factors
        for (const SecurityViolation& v : rep.violations) {
            if (!seen.insert({v.monitored, v.outaged}).second) {
                throw SolverError("security row (" + std::to_string(v.monitored) + ", " +
                                  std::to_string(v.outaged) +
                                  ") violated again after being enforced; solver tolerances "
                                  "are inconsistent");
            }
            const int j = branch_pos[v.outaged];
            double h;
            if (dense) {
                h = lodf.h(branch_pos[v.monitored], j);
            } else {
                auto it = cols.find(j);
                if (it == cols.end()) it = cols.emplace(j, lodf_column(sys, j, false)).first;
                h = it->second[branch_pos[v.monitored]];
            }
            rows.push_back({v.monitored, v.outaged, h});
        }
    }
    throw ConvergenceError("security constraint generation still unsettled after " +
                           std::to_string(opt.max_cycles) + " cycles");
}

// Operating points below the anchor level, produced by uniform scaling of
// the anchor solution. Exact under the linear network model; no new
// optimization happens here.
inline DispatchSolution proportional_dispatch(const DispatchSolution& reference,
                                              double target_level) {
    if (!(target_level > 0) || target_level > reference.load_factor) {
        throw DomainError("proportional dispatch only scales downward from its anchor");
    }
    const double k = target_level / reference.load_factor;
    DispatchSolution out = reference;
    out.load_factor = target_level;
    out.p_gen *= k;
    out.p_served *= k;
    out.angles *= k;
    out.flows *= k;
    out.objective *= k;
    out.shed_total *= k;
    return out;
}

// Tabular text form of a dispatch (documented in docs/dispatch_format.md).
inline std::string serialize_dispatch(const GridCase& gc, const DispatchSolution& sol) {
    using detail::format_number;
    std::ostringstream out;
    out << "dispatch\t" << gc.name << "\n";
    out << "load_factor\t" << format_number(sol.load_factor) << "\n";
    out << "objective\t" << format_number(sol.objective) << "\n";
    out << "shed_total\t" << format_number(sol.shed_total) << "\n";
    for (size_t g = 0; g < gc.generators.size(); ++g) {
        out << "gen\t" << g + 1 << "\t" << gc.generators[g].bus << "\t"
            << format_number(sol.p_gen[g]) << "\n";
    }
    for (size_t d = 0; d < gc.loads.size(); ++d) {
        out << "load\t" << d + 1 << "\t" << gc.loads[d].bus << "\t"
            << format_number(sol.p_served[d]) << "\t"
            << format_number(sol.load_factor * gc.loads[d].p_nominal) << "\n";
    }
    for (size_t k = 0; k < sol.flow_branch_rows.size(); ++k) {
        const Branch& b = gc.branches[sol.flow_branch_rows[k]];
        out << "branch\t" << sol.flow_branch_rows[k] + 1 << "\t" << b.from_bus << "\t"
            << b.to_bus << "\t" << format_number(sol.flows[k]) << "\n";
    }
    for (const auto& [i, j] : sol.security_constraints_active) {
        out << "security\t" << i + 1 << "\t" << j + 1 << "\n";
    }
    return out.str();
}

}  // namespace gridrisk
