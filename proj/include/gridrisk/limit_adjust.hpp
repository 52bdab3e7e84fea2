#pragma once

#include "gridrisk/dc.hpp"
#include "gridrisk/model.hpp"

namespace gridrisk {

// Raises branch ratings until the network, dispatched at a stressed load
// level, keeps a margin over its worst single-outage flow. Datasets tuned
// for AC studies often have thermal limits the linear model cannot honor;
// this makes them workable without ever loosening a limit downward.
//
// The stressed operating point is the case's own generation profile scaled
// to cover the stressed demand (capacity-proportional when the profile is
// all zero). Each branch's long-term rating becomes
//     max(rating_long, margin * worst |flow| over no-outage and every
//                      single non-bridge outage)
// and its short-term rating grows by the same ratio.
inline GridCase adjust_limits_for_feasibility(const GridCase& gc, double stress_factor = 1.10,
                                              double margin = 1.05) {
    if (!(stress_factor > 0) || !(margin > 0)) {
        throw DomainError("stress factor and margin must be positive");
    }
    const GridCase stressed = scale_load(gc, stress_factor / gc.load_factor);
    const DcSystem sys = build_dc_system(stressed);
    const int m = sys.num_branches();

    double profile = 0.0;
    for (const Generator& g : gc.generators) profile += g.p_base;
    const double demand = stressed.total_effective_load();

    Eigen::VectorXd inj = Eigen::VectorXd::Zero(sys.num_buses());
    for (const Generator& g : gc.generators) {
        const double share = profile > 0 ? g.p_base / profile : g.p_max / stressed.total_gen_capacity();
        inj[sys.bus_at.at(g.bus)] += share * demand;
    }
    for (const LoadPoint& d : stressed.loads) {
        inj[sys.bus_at.at(d.bus)] -= stressed.effective_load(d);
    }
    inj.array() -= inj.sum() / inj.size();

    const FlowState base = solve_dc_flow(sys, inj);
    Eigen::VectorXd worst = base.flows.cwiseAbs();

    const std::vector<char> bridges = detail::active_branch_bridges(gc, sys);
    for (int j = 0; j < m; ++j) {
        if (bridges[j]) continue;
        const Eigen::VectorXd h = lodf_column(sys, j, false);
        for (int i = 0; i < m; ++i) {
            if (i == j) continue;
            worst[i] = std::max(worst[i], std::abs(base.flows[i] + h[i] * base.flows[j]));
        }
    }

    GridCase out = gc;
    for (int l = 0; l < m; ++l) {
        Branch& b = out.branches[sys.branch_rows[l]];
        const double grown = std::max(b.rating_long, margin * worst[l]);
        b.rating_short *= grown / b.rating_long;
        b.rating_long = grown;
    }
    return out;
}

}  // namespace gridrisk
