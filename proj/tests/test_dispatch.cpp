#include <catch2/catch_amalgamated.hpp>

#include <set>

#include "cases.hpp"
#include "gridrisk/dispatch.hpp"
#include "gridrisk/limit_adjust.hpp"

using namespace gridrisk;

namespace {

// Two buses joined by a pair of identical branches; used for the parallel
// outage prediction example.
GridCase parallel_pair(double load = 180, double rate_long = 95, double rate_short = 100) {
    GridCase gc;
    gc.name = "parallel";
    gc.buses = {{1, 3, 1, 138}, {2, 1, 1, 138}};
    for (int k = 0; k < 2; ++k) {
        gc.branches.push_back({1, 2, 0.0, 0.1, 0.0, rate_long, 0.0, rate_short, 0, 0, true, 1.0});
    }
    gc.generators.push_back({1, 0.0, 300, 10});
    gc.loads.push_back({2, load, 1e4});
    validate(gc);
    return gc;
}

// Brute-force n-1 audit: re-solve the network with each non-bridge branch
// removed, holding the dispatch injections fixed, and check every surviving
// flow against its short-term rating.
double worst_post_contingency_excess(const GridCase& gc, const DispatchSolution& sol) {
    const DcSystem sys = build_dc_system(gc);
    const auto bridges = detail::active_branch_bridges(gc, sys);
    Eigen::VectorXd inj = Eigen::VectorXd::Zero(sys.num_buses());
    for (size_t g = 0; g < gc.generators.size(); ++g) {
        inj[sys.bus_at.at(gc.generators[g].bus)] += sol.p_gen[g];
    }
    for (size_t d = 0; d < gc.loads.size(); ++d) {
        inj[sys.bus_at.at(gc.loads[d].bus)] -= sol.p_served[d];
    }
    inj.array() -= inj.sum() / inj.size();

    double worst = -1e30;
    for (int j = 0; j < sys.num_branches(); ++j) {
        if (bridges[j]) continue;
        std::vector<char> active(gc.branches.size(), 0);
        for (int l = 0; l < sys.num_branches(); ++l) active[sys.branch_rows[l]] = l != j;
        const DcSystem red = build_dc_system(gc, nullptr, &active);
        const Eigen::VectorXd flows = solve_dc_flow(red, inj).flows;
        for (int k = 0; k < red.num_branches(); ++k) {
            const double lim = gc.branches[red.branch_rows[k]].rating_short;
            worst = std::max(worst, (std::abs(flows[k]) - lim) / gc.mva_base);
        }
    }
    return worst;  // p.u.; <= tolerance means the dispatch is n-1 secure
}

}  // namespace

TEST_CASE("unconstrained minimum serves the whole load") {
    const GridCase gc = testcases::two_bus();
    const DispatchSolution sol = solve_dcopf(gc);
    CHECK(sol.p_gen[0] == Catch::Approx(100.0));
    CHECK(sol.p_served[0] == Catch::Approx(100.0));
    CHECK(sol.shed_total == Catch::Approx(0.0).margin(1e-9));
    // 100 MW at $10 minus the served-load credit at the shed price.
    CHECK(sol.objective == Catch::Approx(100.0 * 10.0 - 100.0 * 1e4));
    CHECK(sol.p_gen.sum() == Catch::Approx(sol.p_served.sum()).margin(1e-6));
}

TEST_CASE("a binding flow limit forces exactly the reachable demand") {
    const GridCase gc = testcases::two_bus(100, 0.1, 200, 10, 60, 72);
    const DispatchSolution sol = solve_dcopf(gc);
    CHECK(sol.p_served[0] == Catch::Approx(60.0));
    CHECK(sol.shed_total == Catch::Approx(40.0));
    CHECK(std::abs(sol.flows[0]) <= 60.0 + 0.011);
}

TEST_CASE("demand beyond capacity sheds the difference") {
    const GridCase gc = testcases::two_bus(300, 0.1, 200, 10, 1000, 1200);
    const DispatchSolution sol = solve_dcopf(gc);
    CHECK(sol.p_served[0] == Catch::Approx(200.0));
    CHECK(sol.shed_total == Catch::Approx(100.0));
}

TEST_CASE("the 73-bus system carries 119% load without shedding") {
    const GridCase gc = scale_load(testcases::load_rts96(), 1.19);
    const DispatchSolution sol = solve_dcopf(gc);
    CHECK(sol.shed_total == Catch::Approx(0.0).margin(1e-6));
    CHECK(sol.p_gen.sum() == Catch::Approx(8550.0 * 1.19).margin(1e-5));
    // Flow state is consistent with the angles it was derived from.
    const DcSystem sys = build_dc_system(gc);
    const Eigen::VectorXd again = sys.branch_response(sol.angles) * gc.mva_base;
    CHECK((again - sol.flows).lpNorm<Eigen::Infinity>() < 1e-9);
}

TEST_CASE("a flowless dispatch raises no contingency flags") {
    // Generator and load on the same bus: nothing moves on the wire.
    GridCase gc = testcases::two_bus();
    gc.generators[0].bus = 2;
    validate(gc);
    const DispatchSolution sol = solve_dcopf(gc);
    CHECK(sol.flows.lpNorm<Eigen::Infinity>() < 1e-9);
    const SecurityReport rep = check_security(gc, sol);
    CHECK(rep.violations.empty());
}

TEST_CASE("parallel pair: losing either branch doubles the survivor") {
    const GridCase gc = parallel_pair();
    const DispatchSolution sol = solve_dcopf(gc);
    CHECK(sol.flows[0] == Catch::Approx(90.0));
    CHECK(sol.flows[1] == Catch::Approx(90.0));
    const SecurityReport rep = check_security(gc, sol);
    REQUIRE(rep.violations.size() == 2);
    for (const auto& v : rep.violations) {
        CHECK(v.predicted_flow == Catch::Approx(180.0));
        CHECK(v.limit == Catch::Approx(100.0));
        CHECK(v.margin == Catch::Approx(80.0));
    }
}

TEST_CASE("contingency screen agrees with brute-force re-solves") {
    const GridCase gc = testcases::load_rts96();
    const DispatchSolution sol = solve_dcopf(gc);
    const SecurityReport rep = check_security(gc, sol);

    // Re-solve every non-bridge outage with the dispatch injections and list
    // the overloaded (outaged, monitored) pairs independently.
    const DcSystem sys = build_dc_system(gc);
    const auto bridges = detail::active_branch_bridges(gc, sys);
    Eigen::VectorXd inj = Eigen::VectorXd::Zero(sys.num_buses());
    for (size_t g = 0; g < gc.generators.size(); ++g) {
        inj[sys.bus_at.at(gc.generators[g].bus)] += sol.p_gen[g];
    }
    for (size_t d = 0; d < gc.loads.size(); ++d) {
        inj[sys.bus_at.at(gc.loads[d].bus)] -= sol.p_served[d];
    }
    inj.array() -= inj.sum() / inj.size();

    std::set<std::pair<int, int>> oracle;
    const double tol_mw = 1e-4 * gc.mva_base;
    for (int j = 0; j < sys.num_branches(); ++j) {
        if (bridges[j]) continue;
        std::vector<char> active(gc.branches.size(), 0);
        for (int l = 0; l < sys.num_branches(); ++l) active[sys.branch_rows[l]] = l != j;
        const DcSystem red = build_dc_system(gc, nullptr, &active);
        const Eigen::VectorXd flows = solve_dc_flow(red, inj).flows;
        for (int k = 0; k < red.num_branches(); ++k) {
            const double lim = gc.branches[red.branch_rows[k]].rating_short;
            if (std::abs(flows[k]) > lim + tol_mw) {
                oracle.insert({sys.branch_rows[j], red.branch_rows[k]});
            }
        }
    }

    std::set<std::pair<int, int>> screened;
    for (const auto& v : rep.violations) screened.insert({v.outaged, v.monitored});
    INFO("screen found " << screened.size() << " pairs, oracle " << oracle.size());
    CHECK(screened == oracle);

    // Bridges are reported on the islanding side, never as violations.
    REQUIRE(rep.islanding_branches.size() == 2);
}

TEST_CASE("an already-secure dispatch is a fixed point of the security loop") {
    const GridCase gc = testcases::two_bus();
    int cycles = 0;
    const DispatchSolution sol = solve_scdcopf(gc, {}, &cycles);
    CHECK(cycles == 1);
    CHECK(sol.security_constraints_active.empty());
    CHECK(sol.p_served[0] == Catch::Approx(100.0));
}

TEST_CASE("security loop settles the 73-bus system without shedding") {
    for (double level : {1.0, 1.19}) {
        const GridCase gc = scale_load(testcases::load_rts96(), level);
        int cycles = 0;
        const DispatchSolution sol = solve_scdcopf(gc, {}, &cycles);
        INFO("level " << level << ": " << cycles << " cycles, "
                      << sol.security_constraints_active.size() << " rows");
        CHECK(cycles <= 5);
        CHECK(sol.shed_total == Catch::Approx(0.0).margin(1e-6));
        CHECK(check_security(gc, sol).violations.empty());
        CHECK(worst_post_contingency_excess(gc, sol) <= 1e-4);

        // Constraining the program can only raise the optimal cost.
        const DispatchSolution plain = solve_dcopf(gc);
        CHECK(sol.objective >= plain.objective - 1e-6);
    }
}

TEST_CASE("proportional scaling is exact and downward only") {
    const GridCase anchor_case = scale_load(testcases::load_rts96(), 1.19);
    const DispatchSolution anchor = solve_scdcopf(anchor_case);

    const DispatchSolution same = proportional_dispatch(anchor, anchor.load_factor);
    CHECK((same.flows - anchor.flows).lpNorm<Eigen::Infinity>() == 0.0);

    const DispatchSolution half = proportional_dispatch(anchor, 0.595);
    const double k = 0.595 / 1.19;
    for (int l = 0; l < anchor.flows.size(); ++l) {
        CHECK(half.flows[l] == Catch::Approx(k * anchor.flows[l]).margin(1e-12));
    }
    CHECK(half.p_gen.sum() == Catch::Approx(k * anchor.p_gen.sum()));
    CHECK(half.served_total() == Catch::Approx(k * anchor.served_total()));

    CHECK_THROWS_AS(proportional_dispatch(anchor, 1.3), DomainError);
    CHECK_THROWS_AS(proportional_dispatch(anchor, 0.0), DomainError);
}

TEST_CASE("limit adjustment tracks the worst single-outage flow") {
    // Parallel pair at 180 MW of demand: each branch sees 90 pre-outage and
    // 180 when its twin drops, so the binding flow per branch is 180.
    GridCase gc = parallel_pair(180.0 / 1.1, 300, 360);
    gc.generators[0].p_base = 180;
    SECTION("ample ratings are left alone") {
        const GridCase adj = adjust_limits_for_feasibility(gc);
        CHECK(adj.branches[0].rating_long == Catch::Approx(300.0));
        CHECK(adj.branches[0].rating_short == Catch::Approx(360.0));
    }
    SECTION("tight ratings grow to margin times the worst flow") {
        gc.branches[0].rating_long = 100;
        gc.branches[0].rating_short = 120;
        gc.branches[1].rating_long = 100;
        gc.branches[1].rating_short = 120;
        const GridCase adj = adjust_limits_for_feasibility(gc);
        for (int l = 0; l < 2; ++l) {
            CHECK(adj.branches[l].rating_long == Catch::Approx(1.05 * 180.0));
            // Short-term rating keeps its 1.2x headroom over long-term.
            CHECK(adj.branches[l].rating_short == Catch::Approx(1.2 * 1.05 * 180.0));
        }
    }
}

TEST_CASE("limit adjustment never lowers a rating") {
    const GridCase gc = testcases::load_rts96();
    const GridCase adj = adjust_limits_for_feasibility(gc);
    for (size_t l = 0; l < gc.branches.size(); ++l) {
        CHECK(adj.branches[l].rating_long >= gc.branches[l].rating_long);
        CHECK(adj.branches[l].rating_short >= gc.branches[l].rating_short);
    }
    // The adjusted case still clears the stressed security-constrained solve.
    const DispatchSolution sol = solve_scdcopf(scale_load(adj, 1.10));
    CHECK(sol.shed_total == Catch::Approx(0.0).margin(1e-6));
}

TEST_CASE("dispatch serialization covers every element once") {
    const GridCase gc = testcases::two_bus();
    const DispatchSolution sol = solve_dcopf(gc);
    const std::string text = serialize_dispatch(gc, sol);
    CHECK(text.find("dispatch\ttwobus") == 0);
    CHECK(text.find("gen\t1\t1\t100") != std::string::npos);
    CHECK(text.find("load\t1\t2\t100\t100") != std::string::npos);
    CHECK(text.find("shed_total\t0\n") != std::string::npos);
    // Serialization is deterministic.
    CHECK(serialize_dispatch(gc, sol) == text);
}
