#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "gridrisk/sweep.hpp"

using namespace gridrisk;

namespace {

std::vector<double> parse_bins(const std::string& spec) {
    std::vector<double> out;
    std::istringstream ss(spec);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        size_t pos = 0;
        double v = 0.0;
        try {
            v = std::stod(tok, &pos);
        } catch (const std::exception&) {
            pos = 0;
        }
        if (pos != tok.size()) throw DomainError("bad bin edge '" + tok + "'");
        out.push_back(v);
    }
    return out;
}

// Branch arguments use the 1-based row numbers of the case branch table, the
// same numbering the dispatch listing prints.
std::vector<int> parse_branches(const std::string& spec) {
    std::vector<int> out;
    for (int lv : parse_level_spec(spec)) out.push_back(lv - 1);
    return out;
}

DispatchPolicy parse_policy(const std::string& name) {
    if (name == "scdcopf") return DispatchPolicy::Scdcopf;
    if (name == "proportional") return DispatchPolicy::Proportional;
    throw DomainError("unknown dispatch policy '" + name + "'");
}

void write_output(const std::string& out_path, const std::string& text) {
    if (out_path.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream f(out_path, std::ios::binary);
    if (!f) throw DomainError("cannot write '" + out_path + "'");
    f << text;
}

struct CommonArgs {
    std::string case_path;
    int level = 100;
    std::string policy = "scdcopf";
    int anchor = 0;
    std::string bins = "0,0.05,0.25,0.5,1";
    std::string out;
    long long iterations = 100000;
    uint64_t seed = 1;
    int workers = 1;
    bool singles = false;
    CascadeConfig cascade;
    std::string rebalance = "min_shed";
    std::string trip = "short";

    CascadeConfig cascade_config() const {
        CascadeConfig c = cascade;
        if (rebalance == "min_shed") c.rebalance = RebalancePolicy::MinShed;
        else if (rebalance == "pro_rata") c.rebalance = RebalancePolicy::ProRata;
        else throw DomainError("unknown rebalance policy '" + rebalance + "'");
        if (trip == "short") c.trip_threshold = TripRating::Short;
        else if (trip == "long") c.trip_threshold = TripRating::Long;
        else throw DomainError("unknown trip rating '" + trip + "'");
        return c;
    }

    GridCase load_scaled() const {
        const GridCase base = load_case_file(case_path);
        return scale_load(base, level / 100.0 / base.load_factor);
    }

    // Operating point for one-level commands under the selected policy.
    DispatchSolution dispatch_at_level(const GridCase& level_case) const {
        if (parse_policy(policy) == DispatchPolicy::Scdcopf) return solve_scdcopf(level_case);
        if (anchor < level) throw DomainError("proportional policy needs --anchor >= --level");
        const GridCase base = load_case_file(case_path);
        const GridCase anchor_case = scale_load(base, anchor / 100.0 / base.load_factor);
        return proportional_dispatch(solve_scdcopf(anchor_case), level / 100.0);
    }
};

void add_case_options(CLI::App* sub, CommonArgs& a) {
    sub->add_option("--case", a.case_path, "MATPOWER-style case file")->required();
    sub->add_option("--level", a.level, "load level, percent of nominal");
}

void add_policy_options(CLI::App* sub, CommonArgs& a) {
    sub->add_option("--policy", a.policy, "dispatch policy: scdcopf or proportional");
    sub->add_option("--anchor", a.anchor, "anchor level for the proportional policy");
}

void add_cascade_options(CLI::App* sub, CommonArgs& a) {
    sub->add_option("--tolerance", a.cascade.overload_tolerance,
                    "relative overload slack before a trip");
    sub->add_option("--max-tiers", a.cascade.max_tiers, "cascade pass limit");
    sub->add_option("--ramp", a.cascade.gen_ramp_limit,
                    "MW a generator may move up per tier, < 0 for unlimited");
    sub->add_option("--rebalance", a.rebalance, "island rebalance: min_shed or pro_rata");
    sub->add_option("--trip", a.trip, "trip rating: short or long");
}

void add_risk_options(CLI::App* sub, CommonArgs& a) {
    sub->add_option("--iterations", a.iterations, "Monte Carlo draws per level");
    sub->add_option("--seed", a.seed, "master seed");
    sub->add_option("--workers", a.workers, "worker threads within a level");
    sub->add_option("--bins", a.bins, "blackout-size bin edges, fractions of served load");
    sub->add_flag("--singles", a.singles, "simulate single-branch draws instead of scoring 0");
}

int run_dispatch(const CommonArgs& a) {
    const GridCase level_case = a.load_scaled();
    const DispatchSolution sol = solve_scdcopf(level_case);
    write_output(a.out, serialize_dispatch(level_case, sol));
    return 0;
}

int run_cascade(const CommonArgs& a, const std::string& branches) {
    const GridCase level_case = a.load_scaled();
    const DispatchSolution sol = a.dispatch_at_level(level_case);
    const CascadeResult res =
        simulate_cascade(level_case, sol, parse_branches(branches), a.cascade_config());
    std::ostringstream out;
    using detail::format_number;
    out << "case\t" << level_case.name << "\n";
    out << "level\t" << a.level << "\n";
    out << "blackout_mw\t" << format_number(res.blackout_mw) << "\n";
    out << "tiers\t" << res.tiers << "\n";
    out << "final_islands\t" << res.final_islands << "\n";
    out << "final_served_mw\t" << format_number(res.final_served_mw) << "\n";
    for (const auto& [tier, branch] : res.trip_sequence)
        out << "trip\t" << tier << "\t" << (branch + 1) << "\n";
    write_output(a.out, out.str());
    return 0;
}

int run_mc(const CommonArgs& a) {
    const GridCase level_case = a.load_scaled();
    const DispatchSolution sol = a.dispatch_at_level(level_case);
    const OutageModel model = build_outage_model(level_case);
    RiskConfig cfg;
    cfg.simulate_single_outages = a.singles;
    cfg.cascade = a.cascade_config();
    cfg.workers = a.workers;
    const RiskEstimate est = run_monte_carlo(level_case, sol, model, a.iterations,
                                             level_seed(a.seed, a.level), parse_bins(a.bins), cfg);
    std::ostringstream out;
    out << risk_csv_header() << "\n";
    append_risk_csv(out, a.level, est);
    write_output(a.out, out.str());
    return 0;
}

int run_oracle(const CommonArgs& a, int max_k, bool product_only) {
    const GridCase level_case = a.load_scaled();
    const DispatchSolution sol = a.dispatch_at_level(level_case);
    const OutageModel model = build_outage_model(level_case);
    RiskConfig cfg;
    cfg.simulate_single_outages = a.singles;
    cfg.cascade = a.cascade_config();
    cfg.probability_form =
        product_only ? ProbabilityForm::ProductOnly : ProbabilityForm::Full;
    const RiskEstimate est = exhaustive_risk(level_case, sol, model, max_k, parse_bins(a.bins), cfg);
    std::ostringstream out;
    out << risk_csv_header() << "\n";
    append_risk_csv(out, a.level, est);
    out << "# unenumerated_mass," << detail::format_number(est.unenumerated_mass) << "\n";
    write_output(a.out, out.str());
    return 0;
}

int run_sweep_cmd(const CommonArgs& a, const std::string& levels) {
    ExperimentConfig cfg;
    cfg.case_path = a.case_path;
    cfg.load_levels = parse_level_spec(levels);
    cfg.policy = parse_policy(a.policy);
    cfg.anchor_level = a.anchor;
    cfg.n_iterations = a.iterations;
    cfg.master_seed = a.seed;
    cfg.bins = parse_bins(a.bins);
    cfg.workers = a.workers;
    cfg.cascade = a.cascade_config();
    cfg.simulate_single_outages = a.singles;
    cfg.out_dir = a.out;
    cfg.on_level_complete = [](const LevelResult& lr) {
        std::fprintf(stderr, "level %d%%: risk %.6g MW, shed %.6g MW%s\n", lr.level,
                     lr.risk.expected_blackout_mw, lr.shed_total_mw,
                     lr.resumed ? " (resumed)" : "");
    };
    const SweepResult result = run_sweep(cfg);
    if (!a.out.empty()) {
        write_output((std::filesystem::path(a.out) / "plot_risk.csv").string(),
                     emit_plot_data(result));
        std::cout << "wrote " << result.per_level.size() << " levels to " << a.out << "\n";
    } else {
        std::cout << emit_plot_data(result);
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Blackout risk estimation for DC transmission grid models"};
    app.require_subcommand(1);

    CommonArgs args;
    std::string levels, branches;
    int max_k = 3;
    bool product_only = false;
    std::function<int()> action;

    auto* dispatch = app.add_subcommand("dispatch", "solve one security-constrained dispatch");
    add_case_options(dispatch, args);
    dispatch->add_option("--out", args.out, "output file (default stdout)");
    dispatch->callback([&] { action = [&] { return run_dispatch(args); }; });

    auto* cascade = app.add_subcommand("cascade", "simulate one multi-branch contingency");
    add_case_options(cascade, args);
    add_policy_options(cascade, args);
    add_cascade_options(cascade, args);
    cascade->add_option("--branches", branches, "initiating branch rows, 1-based, e.g. 12,48")
        ->required();
    cascade->add_option("--out", args.out, "output file (default stdout)");
    cascade->callback([&] { action = [&] { return run_cascade(args, branches); }; });

    auto* mc = app.add_subcommand("mc", "Monte Carlo risk estimate at one load level");
    add_case_options(mc, args);
    add_policy_options(mc, args);
    add_cascade_options(mc, args);
    add_risk_options(mc, args);
    mc->add_option("--out", args.out, "output file (default stdout)");
    mc->callback([&] { action = [&] { return run_mc(args); }; });

    auto* oracle = app.add_subcommand("oracle", "exhaustive low-order risk enumeration");
    add_case_options(oracle, args);
    add_policy_options(oracle, args);
    add_cascade_options(oracle, args);
    add_risk_options(oracle, args);
    oracle->add_option("--max-k", max_k, "deepest contingency order to enumerate");
    oracle->add_flag("--product-only", product_only,
                     "weight by outage product only, no in-service factors");
    oracle->add_option("--out", args.out, "output file (default stdout)");
    oracle->callback([&] { action = [&] { return run_oracle(args, max_k, product_only); }; });

    auto* sweep = app.add_subcommand("sweep", "risk sweep over a range of load levels");
    sweep->add_option("--case", args.case_path, "MATPOWER-style case file")->required();
    sweep->add_option("--levels", levels, "load levels: N, A:B or comma list")->required();
    add_policy_options(sweep, args);
    add_cascade_options(sweep, args);
    add_risk_options(sweep, args);
    sweep->add_option("--out", args.out, "output directory (default: print plot table)");
    sweep->callback([&] { action = [&] { return run_sweep_cmd(args, levels); }; });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        return action();
    } catch (const NonterminatingCascade& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    } catch (const RiskCascadeError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    } catch (const SolverError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const ConvergenceError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
