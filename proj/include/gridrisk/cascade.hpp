#pragma once

#include <set>
#include <vector>

#include "gridrisk/dc.hpp"
#include "gridrisk/dispatch.hpp"
#include "gridrisk/graph.hpp"
#include "gridrisk/lp.hpp"
#include "gridrisk/model.hpp"

namespace gridrisk {

enum class TripRating { Short, Long };
enum class RebalancePolicy { MinShed, ProRata };

struct CascadeConfig {
    double overload_tolerance = 1e-4;  // relative slack over the trip rating
    TripRating trip_threshold = TripRating::Short;
    int max_tiers = 200;
    double gen_ramp_limit = -1.0;  // MW a unit may move up per tier; < 0 = unlimited
    RebalancePolicy rebalance = RebalancePolicy::MinShed;
};

struct CascadeTier {
    int tier = 0;               // 1-based pass number
    std::vector<int> tripped;   // case branch indices tripped at the end of the pass
    int islands = 0;            // island count the pass operated on
    double shed_mw = 0.0;       // served-load drop during the pass
    double served_mw = 0.0;     // total served load after the pass
};

struct CascadeResult {
    double blackout_mw = 0.0;  // baseline served minus final served
    std::vector<std::pair<int, int>> trip_sequence;  // (tier, case branch index)
    int final_islands = 0;
    int tiers = 0;  // passes that tripped at least one branch
    double final_served_mw = 0.0;
    double final_generation_mw = 0.0;
    std::vector<CascadeTier> tier_log;
};

// Raised when the tier loop outlives its cap; carries what had happened so far.
struct NonterminatingCascade : ConvergenceError {
    explicit NonterminatingCascade(int cap, CascadeResult r)
        : ConvergenceError("cascade still tripping after " + std::to_string(cap) + " tiers"),
          partial(std::move(r)) {}
    CascadeResult partial;
};

namespace detail {

// Minimum-shed rebalance of one island. Serving load outweighs everything;
// a tiny per-MW charge on generator movement keeps units where they are when
// several redispatches serve equally much. Ramp limits cap upward movement
// only; downward a unit can always back off or trip, which keeps the program
// feasible in every island.
inline void rebalance_min_shed(const std::vector<int>& gens, const std::vector<int>& loads,
                               const GridCase& gc, double ramp, std::vector<double>& g_cur,
                               std::vector<double>& d_cur) {
    const int ng = static_cast<int>(gens.size());
    const int nl = static_cast<int>(loads.size());
    lp::Problem prob(2 * ng + nl);  // P_g, movement u_g, P_d
    for (int k = 0; k < ng; ++k) {
        prob.lo[k] = 0.0;
        prob.hi[k] = gc.generators[gens[k]].p_max;
        if (ramp >= 0) prob.hi[k] = std::min(prob.hi[k], g_cur[gens[k]] + ramp);
        prob.cost[ng + k] = 1e-6;
        prob.lo[ng + k] = 0.0;
        prob.hi[ng + k] = lp::kInf;
    }
    for (int k = 0; k < nl; ++k) {
        prob.cost[2 * ng + k] = -1.0;
        prob.lo[2 * ng + k] = 0.0;
        prob.hi[2 * ng + k] = d_cur[loads[k]];
    }
    Eigen::VectorXd bal = Eigen::VectorXd::Zero(2 * ng + nl);
    bal.head(ng).setOnes();
    bal.tail(nl).setConstant(-1.0);
    prob.add_row(bal, 0.0, 0.0);
    for (int k = 0; k < ng; ++k) {
        Eigen::VectorXd a = Eigen::VectorXd::Zero(2 * ng + nl);
        a[k] = 1.0;
        a[ng + k] = -1.0;
        prob.add_row(a, -lp::kInf, g_cur[gens[k]]);  // P_g - u <= current
        a[ng + k] = 1.0;
        prob.add_row(a, g_cur[gens[k]], lp::kInf);  // P_g + u >= current
    }
    const lp::Result res = lp::solve(prob);
    if (res.status != lp::Status::Optimal) {
        throw SolverError("island rebalance did not reach an optimum");
    }
    for (int k = 0; k < ng; ++k) g_cur[gens[k]] = res.x[k];
    for (int k = 0; k < nl; ++k) d_cur[loads[k]] = res.x[2 * ng + k];
}

// Pro-rata rebalance: every load keeps the same served fraction, and the gap
// on the generation side is closed proportionally to headroom (shortage) or
// to current output (surplus).
inline void rebalance_pro_rata(const std::vector<int>& gens, const std::vector<int>& loads,
                               const GridCase& gc, double ramp, std::vector<double>& g_cur,
                               std::vector<double>& d_cur) {
    double cap = 0.0, cur = 0.0, want = 0.0;
    for (int g : gens) {
        double ub = gc.generators[g].p_max;
        if (ramp >= 0) ub = std::min(ub, g_cur[g] + ramp);
        g_cur[g] = std::min(g_cur[g], ub);
        cap += ub;
        cur += g_cur[g];
    }
    for (int d : loads) want += d_cur[d];
    const double served = std::min(want, cap);
    if (want > 0) {
        const double frac = served / want;
        for (int d : loads) d_cur[d] *= frac;
    }
    if (cur < served) {
        double head = 0.0;
        for (int g : gens) {
            double ub = gc.generators[g].p_max;
            if (ramp >= 0) ub = std::min(ub, g_cur[g] + ramp);
            head += ub - g_cur[g];
        }
        const double k = (served - cur) / head;
        for (int g : gens) {
            double ub = gc.generators[g].p_max;
            if (ramp >= 0) ub = std::min(ub, g_cur[g] + ramp);
            g_cur[g] += k * (ub - g_cur[g]);
        }
    } else if (cur > served) {
        const double k = cur > 0 ? served / cur : 0.0;
        for (int g : gens) g_cur[g] *= k;
    }
}

}  // namespace detail

// Plays one contingency forward to quiescence: remove the named branches,
// rebalance each island, recompute flows, trip everything past its rating,
// and repeat until a pass trips nothing. All overloads within a pass trip
// together, so the outcome does not depend on relay timing assumptions.
inline CascadeResult simulate_cascade(const GridCase& gc, const DispatchSolution& dispatch,
                                      const std::vector<int>& contingency,
                                      const CascadeConfig& cfg = {}) {
    if (cfg.max_tiers < 1) throw DomainError("max_tiers must be at least 1");
    if (cfg.overload_tolerance < 0) throw DomainError("overload tolerance must be >= 0");

    std::vector<char> active(gc.branches.size(), 0);
    for (size_t b = 0; b < gc.branches.size(); ++b) active[b] = gc.branches[b].in_service;
    for (int b : contingency) {
        if (b < 0 || b >= static_cast<int>(gc.branches.size())) {
            throw DomainError("contingency names branch " + std::to_string(b) +
                              " outside the case");
        }
        if (!active[b]) {
            throw DomainError("contingency branch " + std::to_string(b) +
                              " is not in service");
        }
        active[b] = 0;
    }

    std::vector<double> g_cur(gc.generators.size()), d_cur(gc.loads.size());
    for (size_t g = 0; g < g_cur.size(); ++g) g_cur[g] = dispatch.p_gen[g];
    for (size_t d = 0; d < d_cur.size(); ++d) d_cur[d] = dispatch.p_served[d];
    const double baseline = dispatch.served_total();
    double served = baseline;

    // Element lookup by bus position, fixed for the whole simulation.
    std::vector<std::vector<int>> gens_at(gc.buses.size()), loads_at(gc.buses.size());
    for (size_t g = 0; g < gc.generators.size(); ++g) {
        gens_at[gc.bus_index(gc.generators[g].bus)].push_back(static_cast<int>(g));
    }
    for (size_t d = 0; d < gc.loads.size(); ++d) {
        loads_at[gc.bus_index(gc.loads[d].bus)].push_back(static_cast<int>(d));
    }

    CascadeResult res;
    for (int pass = 1;; ++pass) {
        const std::vector<std::vector<int>> islands = find_islands(gc, &active);

        double pass_served = 0.0;
        std::vector<int> trips;
        for (const std::vector<int>& island : islands) {
            std::vector<int> gens, loads;
            for (int pos : island) {
                gens.insert(gens.end(), gens_at[pos].begin(), gens_at[pos].end());
                loads.insert(loads.end(), loads_at[pos].begin(), loads_at[pos].end());
            }
            if (gens.empty() || loads.empty()) {
                for (int g : gens) g_cur[g] = 0.0;
                for (int d : loads) d_cur[d] = 0.0;
            } else if (cfg.rebalance == RebalancePolicy::MinShed) {
                detail::rebalance_min_shed(gens, loads, gc, cfg.gen_ramp_limit, g_cur, d_cur);
            } else {
                detail::rebalance_pro_rata(gens, loads, gc, cfg.gen_ramp_limit, g_cur, d_cur);
            }
            for (int d : loads) pass_served += d_cur[d];

            if (island.size() < 2) continue;
            std::vector<int> ids(island.size());
            for (size_t k = 0; k < island.size(); ++k) ids[k] = gc.buses[island[k]].id;
            const DcSystem sys = build_dc_system(gc, &ids, &active);
            if (sys.num_branches() == 0) continue;
            Eigen::VectorXd inj = Eigen::VectorXd::Zero(sys.num_buses());
            for (int g : gens) inj[sys.bus_at.at(gc.generators[g].bus)] += g_cur[g];
            for (int d : loads) inj[sys.bus_at.at(gc.loads[d].bus)] -= d_cur[d];
            inj.array() -= inj.sum() / inj.size();
            const FlowState state = solve_dc_flow(sys, inj);
            for (int l = 0; l < sys.num_branches(); ++l) {
                const Branch& br = gc.branches[sys.branch_rows[l]];
                const double rating =
                    cfg.trip_threshold == TripRating::Short ? br.rating_short : br.rating_long;
                if (std::abs(state.flows[l]) > (1.0 + cfg.overload_tolerance) * rating) {
                    trips.push_back(sys.branch_rows[l]);
                }
            }
        }

        std::sort(trips.begin(), trips.end());
        res.tier_log.push_back({pass, trips, static_cast<int>(islands.size()),
                                served - pass_served, pass_served});
        served = pass_served;

        if (trips.empty()) {
            res.final_islands = static_cast<int>(islands.size());
            break;
        }
        res.tiers = pass;
        for (int b : trips) {
            active[b] = 0;
            res.trip_sequence.push_back({pass, b});
        }
        if (pass > cfg.max_tiers) {
            res.blackout_mw = std::max(0.0, baseline - served);
            res.final_islands = static_cast<int>(islands.size());
            res.final_served_mw = served;
            for (double g : g_cur) res.final_generation_mw += g;
            throw NonterminatingCascade(cfg.max_tiers, res);
        }
    }
    res.blackout_mw = std::max(0.0, baseline - served);
    res.final_served_mw = served;
    for (double g : g_cur) res.final_generation_mw += g;
    return res;
}

}  // namespace gridrisk
