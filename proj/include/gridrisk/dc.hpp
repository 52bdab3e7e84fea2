#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <algorithm>
#include <cmath>
#include <memory>
#include <vector>

#include "gridrisk/errors.hpp"
#include "gridrisk/graph.hpp"
#include "gridrisk/model.hpp"

namespace gridrisk {

// Linearized network model over a bus subset and a branch activity mask.
// Built once per topology; the factorization of the reduced susceptance
// matrix is cached inside and reused by every solve. Immutable after
// construction (move-only because of the cached factorization).
struct DcSystem {
    double mva_base = 100.0;

    std::vector<int> bus_ids;   // position -> bus id, ascending
    std::unordered_map<int, int> bus_at;  // bus id -> position

    std::vector<int> branch_rows;  // active-branch position -> case branch index
    std::vector<int> from_pos, to_pos;     // per active branch
    Eigen::VectorXd branch_susceptance;    // 1/x per active branch, p.u.

    int reference_bus = 0;  // bus id
    int ref_pos = 0;        // position within bus_ids

    Eigen::SparseMatrix<double> incidence;  // m x n, +1 at from, -1 at to
    Eigen::SparseMatrix<double> b_rr;       // (n-1) x (n-1), reference removed

    std::unique_ptr<Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>>> factor;
    bool factor_ok = false;

    int num_buses() const { return static_cast<int>(bus_ids.size()); }
    int num_branches() const { return static_cast<int>(branch_rows.size()); }

    // Position within the reduced system (reference row/column deleted).
    int reduced_pos(int pos) const { return pos < ref_pos ? pos : pos - 1; }

    // Solves B_rr y = rhs for a reduced vector, with residual verification.
    // Disconnected networks surface here (singular B_rr), not at build time.
    Eigen::VectorXd reduced_solve(const Eigen::VectorXd& rhs) const {
        if (!factor_ok) {
            throw TopologyError(
                "susceptance system is singular; the network is disconnected, "
                "split it by islands first");
        }
        Eigen::VectorXd y = factor->solve(rhs);
        const double res = (b_rr * y - rhs).norm();
        if (!(res <= 1e-7 * (1.0 + rhs.norm()))) {
            throw TopologyError(
                "susceptance system is singular; the network is disconnected, "
                "split it by islands first");
        }
        return y;
    }

    // Expands a reduced vector to full bus positions with 0 at the reference.
    Eigen::VectorXd expand(const Eigen::VectorXd& reduced) const {
        Eigen::VectorXd full(num_buses());
        for (int p = 0; p < num_buses(); ++p) {
            full[p] = p == ref_pos ? 0.0 : reduced[reduced_pos(p)];
        }
        return full;
    }

    // Per-branch response (p.u. flow change) to the bus angles `theta`.
    Eigen::VectorXd branch_response(const Eigen::VectorXd& theta) const {
        Eigen::VectorXd f(num_branches());
        for (int l = 0; l < num_branches(); ++l) {
            f[l] = branch_susceptance[l] * (theta[from_pos[l]] - theta[to_pos[l]]);
        }
        return f;
    }
};

struct FlowState {
    Eigen::VectorXd angles;  // radians per bus position, reference at 0
    Eigen::VectorXd flows;   // MW per active branch position
};

// Assembles the DC system. `bus_subset` (bus ids) and `branch_active`
// (per case-branch flag) restrict the network; by default every bus and
// every in-service branch participates. The reference bus is the lowest-id
// generator bus in the largest included component (largest by bus count,
// ties to the one with the smallest bus id), falling back to the lowest-id
// bus when no generator is present.
inline DcSystem build_dc_system(const GridCase& gc,
                                const std::vector<int>* bus_subset = nullptr,
                                const std::vector<char>* branch_active = nullptr) {
    DcSystem sys;
    sys.mva_base = gc.mva_base;

    if (bus_subset) {
        sys.bus_ids = *bus_subset;
        std::sort(sys.bus_ids.begin(), sys.bus_ids.end());
    } else {
        sys.bus_ids.reserve(gc.buses.size());
        for (const auto& b : gc.buses) sys.bus_ids.push_back(b.id);
        std::sort(sys.bus_ids.begin(), sys.bus_ids.end());
    }
    for (int p = 0; p < static_cast<int>(sys.bus_ids.size()); ++p) {
        sys.bus_at.emplace(sys.bus_ids[p], p);
    }
    const int n = sys.num_buses();
    if (n == 0) throw TopologyError("empty bus set");

    for (size_t e = 0; e < gc.branches.size(); ++e) {
        const Branch& b = gc.branches[e];
        const bool on = branch_active ? static_cast<bool>((*branch_active)[e]) : b.in_service;
        if (!on) continue;
        const auto fi = sys.bus_at.find(b.from_bus);
        const auto ti = sys.bus_at.find(b.to_bus);
        if (fi == sys.bus_at.end() || ti == sys.bus_at.end()) continue;
        sys.branch_rows.push_back(static_cast<int>(e));
        sys.from_pos.push_back(fi->second);
        sys.to_pos.push_back(ti->second);
    }
    const int m = sys.num_branches();
    sys.branch_susceptance.resize(m);
    for (int l = 0; l < m; ++l) {
        sys.branch_susceptance[l] = 1.0 / gc.branches[sys.branch_rows[l]].reactance;
    }

    // Reference selection over the included subgraph.
    {
        std::vector<int> comp(n, -1);
        std::vector<std::vector<int>> adj(n);
        for (int l = 0; l < m; ++l) {
            adj[sys.from_pos[l]].push_back(sys.to_pos[l]);
            adj[sys.to_pos[l]].push_back(sys.from_pos[l]);
        }
        int ncomp = 0;
        std::vector<int> stack;
        for (int s = 0; s < n; ++s) {
            if (comp[s] >= 0) continue;
            comp[s] = ncomp;
            stack.push_back(s);
            while (!stack.empty()) {
                int u = stack.back();
                stack.pop_back();
                for (int v : adj[u]) {
                    if (comp[v] < 0) {
                        comp[v] = ncomp;
                        stack.push_back(v);
                    }
                }
            }
            ++ncomp;
        }
        std::vector<int> size(ncomp, 0);
        for (int p = 0; p < n; ++p) ++size[comp[p]];
        int best = 0;
        for (int c = 1; c < ncomp; ++c) {
            if (size[c] > size[best]) best = c;
        }
        std::vector<char> has_gen(n, 0);
        for (const auto& g : gc.generators) {
            const auto it = sys.bus_at.find(g.bus);
            if (it != sys.bus_at.end()) has_gen[it->second] = 1;
        }
        int ref = -1;
        for (int p = 0; p < n; ++p) {
            if (comp[p] == best && has_gen[p]) {
                ref = p;
                break;
            }
        }
        if (ref < 0) {
            for (int p = 0; p < n; ++p) {
                if (comp[p] == best) {
                    ref = p;
                    break;
                }
            }
        }
        sys.ref_pos = ref;
        sys.reference_bus = sys.bus_ids[ref];
    }

    // Incidence and reduced susceptance matrix.
    std::vector<Eigen::Triplet<double>> ti, tb;
    ti.reserve(2 * m);
    tb.reserve(4 * m);
    for (int l = 0; l < m; ++l) {
        ti.emplace_back(l, sys.from_pos[l], 1.0);
        ti.emplace_back(l, sys.to_pos[l], -1.0);
        const double s = sys.branch_susceptance[l];
        const int f = sys.from_pos[l], t = sys.to_pos[l];
        if (f != sys.ref_pos && t != sys.ref_pos) {
            tb.emplace_back(sys.reduced_pos(f), sys.reduced_pos(t), -s);
            tb.emplace_back(sys.reduced_pos(t), sys.reduced_pos(f), -s);
        }
        if (f != sys.ref_pos) tb.emplace_back(sys.reduced_pos(f), sys.reduced_pos(f), s);
        if (t != sys.ref_pos) tb.emplace_back(sys.reduced_pos(t), sys.reduced_pos(t), s);
    }
    sys.incidence.resize(m, n);
    sys.incidence.setFromTriplets(ti.begin(), ti.end());
    sys.b_rr.resize(n - 1, n - 1);
    sys.b_rr.setFromTriplets(tb.begin(), tb.end());

    sys.factor = std::make_unique<Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>>>();
    if (n > 1) {
        sys.factor->compute(sys.b_rr);
        sys.factor_ok = sys.factor->info() == Eigen::Success;
    }
    return sys;
}

// Angles and branch flows for the given bus injections (MW, by bus position
// within the system). Requires a connected system and balanced injections.
inline FlowState solve_dc_flow(const DcSystem& sys, const Eigen::VectorXd& injections_mw) {
    const int n = sys.num_buses();
    if (injections_mw.size() != n) throw DomainError("injection vector size mismatch");
    if (std::abs(injections_mw.sum()) > 1e-6) {
        throw DomainError("injections do not balance: net " +
                          std::to_string(injections_mw.sum()) + " MW");
    }
    FlowState st;
    if (n == 1) {
        st.angles = Eigen::VectorXd::Zero(1);
        st.flows.resize(0);
        return st;
    }
    Eigen::VectorXd p_red(n - 1);
    for (int b = 0; b < n; ++b) {
        if (b == sys.ref_pos) continue;
        p_red[sys.reduced_pos(b)] = injections_mw[b] / sys.mva_base;
    }
    const Eigen::VectorXd theta_red = sys.reduced_solve(p_red);
    st.angles = sys.expand(theta_red);
    st.flows = sys.branch_response(st.angles) * sys.mva_base;
    return st;
}

// Sensitivity of every branch flow to 1 MW injected at `pos` and withdrawn
// at the reference bus (dimensionless). One reduced solve.
inline Eigen::VectorXd ptdf_column(const DcSystem& sys, int pos) {
    const int n = sys.num_buses();
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n - 1);
    if (pos != sys.ref_pos) rhs[sys.reduced_pos(pos)] = 1.0;
    return sys.branch_response(sys.expand(sys.reduced_solve(rhs)));
}

// Sensitivity of every branch flow to a 1 MW transfer from the from-bus to
// the to-bus of active branch `l`. One reduced solve.
inline Eigen::VectorXd ptdf_transfer_column(const DcSystem& sys, int l) {
    const int n = sys.num_buses();
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n - 1);
    const int f = sys.from_pos[l], t = sys.to_pos[l];
    if (f != sys.ref_pos) rhs[sys.reduced_pos(f)] += 1.0;
    if (t != sys.ref_pos) rhs[sys.reduced_pos(t)] -= 1.0;
    return sys.branch_response(sys.expand(sys.reduced_solve(rhs)));
}

// Sensitivity of active branch `l`'s flow to injections at every bus
// (reference column zero). One reduced solve, used to build flow-limit rows
// without materializing the full matrix.
inline Eigen::VectorXd ptdf_row(const DcSystem& sys, int l) {
    const int n = sys.num_buses();
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n - 1);
    const double s = sys.branch_susceptance[l];
    const int f = sys.from_pos[l], t = sys.to_pos[l];
    if (f != sys.ref_pos) rhs[sys.reduced_pos(f)] += s;
    if (t != sys.ref_pos) rhs[sys.reduced_pos(t)] -= s;
    const Eigen::VectorXd y = sys.reduced_solve(rhs);
    Eigen::VectorXd row(n);
    for (int b = 0; b < n; ++b) row[b] = b == sys.ref_pos ? 0.0 : y[sys.reduced_pos(b)];
    return row;
}

// Full branch x bus sensitivity matrix; columns are ptdf_column results.
inline Eigen::MatrixXd compute_ptdf(const DcSystem& sys) {
    Eigen::MatrixXd ptdf(sys.num_branches(), sys.num_buses());
    for (int b = 0; b < sys.num_buses(); ++b) ptdf.col(b) = ptdf_column(sys, b);
    return ptdf;
}

struct LodfMatrix {
    // h(i, j): fraction of branch j's pre-outage flow appearing on branch i
    // after j's outage. Columns flagged in islanding_flags are bridges and
    // hold NaN, never usable numbers. h(j, j) = -1 for non-bridges.
    Eigen::MatrixXd h;
    std::vector<char> islanding_flags;  // per active branch position
};

namespace detail {

constexpr double kBridgeDenominatorTol = 1e-6;

inline void fill_lodf_column(const DcSystem& sys, int j, const Eigen::VectorXd& phi,
                             bool graph_bridge, Eigen::VectorXd& out, bool& islanding) {
    const double denom = 1.0 - phi[j];
    const bool numeric_bridge = std::abs(denom) <= kBridgeDenominatorTol;
    if (numeric_bridge != graph_bridge) {
        throw SolverError("bridge detection mismatch on branch position " + std::to_string(j) +
                          ": numeric denominator " + std::to_string(denom) +
                          " disagrees with graph analysis");
    }
    islanding = numeric_bridge;
    if (numeric_bridge) {
        out.setConstant(std::numeric_limits<double>::quiet_NaN());
        return;
    }
    out = phi / denom;
    out[j] = -1.0;
}

inline std::vector<char> active_branch_bridges(const GridCase& gc, const DcSystem& sys) {
    std::vector<char> active(gc.branches.size(), 0);
    for (int l = 0; l < sys.num_branches(); ++l) active[sys.branch_rows[l]] = 1;
    const std::vector<char> bridge = find_bridge_branches(gc, &active);
    std::vector<char> out(sys.num_branches());
    for (int l = 0; l < sys.num_branches(); ++l) out[l] = bridge[sys.branch_rows[l]];
    return out;
}

}  // namespace detail

// One column of the outage distribution factors (for big systems where the
// full matrix is not worth materializing). `graph_bridge` is the structural
// bridge flag for that branch, cross-checked against the numeric test.
inline Eigen::VectorXd lodf_column(const DcSystem& sys, int j, bool graph_bridge,
                                   bool* islanding = nullptr) {
    Eigen::VectorXd col(sys.num_branches());
    bool flag = false;
    detail::fill_lodf_column(sys, j, ptdf_transfer_column(sys, j), graph_bridge, col, flag);
    if (islanding) *islanding = flag;
    return col;
}

// Dense factors for every branch pair. The case is needed for the structural
// bridge cross-check.
inline LodfMatrix compute_lodf(const GridCase& gc, const DcSystem& sys) {
    const int m = sys.num_branches();
    const std::vector<char> bridges = detail::active_branch_bridges(gc, sys);
    LodfMatrix res;
    res.h.resize(m, m);
    res.islanding_flags.assign(m, 0);
    Eigen::VectorXd col(m);
    for (int j = 0; j < m; ++j) {
        bool flag = false;
        detail::fill_lodf_column(sys, j, ptdf_transfer_column(sys, j), bridges[j], col, flag);
        res.h.col(j) = col;
        res.islanding_flags[j] = flag;
    }
    return res;
}

}  // namespace gridrisk
