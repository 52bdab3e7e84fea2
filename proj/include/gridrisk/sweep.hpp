#pragma once

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "gridrisk/case_io.hpp"
#include "gridrisk/cascade.hpp"
#include "gridrisk/dispatch.hpp"
#include "gridrisk/errors.hpp"
#include "gridrisk/model.hpp"
#include "gridrisk/risk.hpp"

// Load-level sweep driver: for each requested level, scale the case, dispatch
// under the chosen policy, estimate blackout risk, and persist the results so
// an interrupted sweep can resume where it stopped.

namespace gridrisk {

constexpr const char* kToolVersion = "0.1.0";

enum class DispatchPolicy { Scdcopf, Proportional };

struct ExperimentConfig {
    std::string case_path;
    std::vector<int> load_levels;  // percent of nominal load, strictly increasing
    DispatchPolicy policy = DispatchPolicy::Scdcopf;
    // Proportional policy: the level whose security-constrained solution is
    // scaled down to every requested level. Must be >= the highest level.
    int anchor_level = 0;
    long long n_iterations = 100000;  // Monte Carlo draws per level
    uint64_t master_seed = 1;
    std::vector<double> bins = {0.0, 0.05, 0.25, 0.5, 1.0};
    int workers = 1;
    CascadeConfig cascade;
    bool simulate_single_outages = false;
    // Output directory for risk.csv, dispatch_summary.csv and manifest.json.
    // Empty keeps the sweep in memory only.
    std::string out_dir;
    // Invoked after each level, including levels reloaded from disk.
    std::function<void(const struct LevelResult&)> on_level_complete;
};

struct LevelResult {
    int level = 0;
    // Reloaded from an earlier run's output files; dispatch vectors are empty
    // and the risk numbers carry CSV text precision.
    bool resumed = false;
    DispatchSolution dispatch;
    double objective = 0.0;
    double shed_total_mw = 0.0;
    double served_mw = 0.0;
    double wall_seconds = 0.0;
    RiskEstimate risk;
};

struct SweepResult {
    std::vector<LevelResult> per_level;  // one entry per requested level, in order
    std::vector<double> smoothed_total_risk_mw;             // rolling mean across levels
    std::vector<std::vector<double>> smoothed_bin_risk_mw;  // [bin][level]
};

// Dispatch failure at one level. Output files for the levels that finished
// before it are left intact.
struct SweepError : ConvergenceError {
    SweepError(int level_, const std::string& what)
        : ConvergenceError("load level " + std::to_string(level_) + "%: " + what),
          level(level_) {}
    int level = 0;
};

// Accepts "100", "50,75,100" or an inclusive range "50:119".
inline std::vector<int> parse_level_spec(const std::string& spec) {
    auto to_int = [](const std::string& tok) {
        size_t pos = 0;
        int v = 0;
        try {
            v = std::stoi(tok, &pos);
        } catch (const std::exception&) {
            throw DomainError("load level '" + tok + "' is not an integer percent");
        }
        while (pos < tok.size() && std::isspace(static_cast<unsigned char>(tok[pos]))) ++pos;
        if (pos != tok.size())
            throw DomainError("load level '" + tok + "' is not an integer percent");
        return v;
    };
    if (spec.empty()) throw DomainError("empty load level list");
    std::vector<int> out;
    if (auto colon = spec.find(':'); colon != std::string::npos) {
        if (spec.find(',') != std::string::npos || spec.find(':', colon + 1) != std::string::npos)
            throw DomainError("level range must be a single A:B pair");
        const int lo = to_int(spec.substr(0, colon));
        const int hi = to_int(spec.substr(colon + 1));
        if (lo > hi) throw DomainError("level range is reversed");
        for (int v = lo; v <= hi; ++v) out.push_back(v);
        return out;
    }
    std::istringstream ss(spec);
    std::string tok;
    while (std::getline(ss, tok, ',')) out.push_back(to_int(tok));
    if (out.empty()) throw DomainError("empty load level list");
    return out;
}

// Stream seed for one level, derived so that every level of a sweep draws
// from an independent sequence while the manifest only records master_seed.
inline uint64_t level_seed(uint64_t master_seed, int level) {
    return RngStream(master_seed, static_cast<uint64_t>(level)).next_u64();
}

namespace detail {

inline uint64_t fnv1a64(std::string_view s) {
    uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

inline std::string json_escape(std::string_view s) {
    std::string out;
    for (char c : s) {
        if (c == '"' || c == '\\') {
            out += '\\';
            out += c;
        } else if (static_cast<unsigned char>(c) < 0x20) {
            char buf[8];
            std::snprintf(buf, sizeof(buf), "\\u%04x", c);
            out += buf;
        } else {
            out += c;
        }
    }
    return out;
}

inline void validate_config(const ExperimentConfig& cfg) {
    if (cfg.case_path.empty()) throw DomainError("experiment needs a case path");
    if (cfg.load_levels.empty()) throw DomainError("experiment needs at least one load level");
    for (size_t i = 0; i < cfg.load_levels.size(); ++i) {
        const int lv = cfg.load_levels[i];
        if (lv < 1 || lv > 200)
            throw DomainError("load level " + std::to_string(lv) + " outside (0, 200]");
        if (i > 0 && cfg.load_levels[i] <= cfg.load_levels[i - 1])
            throw DomainError("load levels must be strictly increasing");
    }
    if (cfg.policy == DispatchPolicy::Proportional) {
        if (cfg.anchor_level < 1 || cfg.anchor_level > 200)
            throw DomainError("anchor level outside (0, 200]");
        if (cfg.anchor_level < cfg.load_levels.back())
            throw DomainError("anchor level must cover every requested level");
    }
    if (cfg.n_iterations < 1) throw DomainError("iteration count must be at least 1");
    if (cfg.workers < 1) throw DomainError("worker count must be at least 1");
    require_bins(cfg.bins);
}

// The manifest pins everything the output numbers depend on (case, levels,
// policy, seed, bins, cascade settings). Worker count and output paths are
// execution detail and stay out so they cannot perturb the bytes.
inline std::string manifest_body(const ExperimentConfig& cfg, const std::string& hash_hex) {
    std::ostringstream out;
    out << "{\n";
    out << "  \"tool\": \"gridrisk\",\n";
    out << "  \"version\": \"" << kToolVersion << "\",\n";
    out << "  \"config_hash\": \"" << hash_hex << "\",\n";
    out << "  \"case_path\": \"" << json_escape(cfg.case_path) << "\",\n";
    out << "  \"levels\": [";
    for (size_t i = 0; i < cfg.load_levels.size(); ++i)
        out << (i ? ", " : "") << cfg.load_levels[i];
    out << "],\n";
    out << "  \"policy\": \""
        << (cfg.policy == DispatchPolicy::Scdcopf ? "scdcopf" : "proportional") << "\",\n";
    out << "  \"anchor_level\": " << cfg.anchor_level << ",\n";
    out << "  \"n_iterations\": " << cfg.n_iterations << ",\n";
    out << "  \"master_seed\": " << cfg.master_seed << ",\n";
    out << "  \"bins\": [";
    for (size_t i = 0; i < cfg.bins.size(); ++i)
        out << (i ? ", " : "") << format_number(cfg.bins[i]);
    out << "],\n";
    out << "  \"simulate_single_outages\": "
        << (cfg.simulate_single_outages ? "true" : "false") << ",\n";
    out << "  \"cascade\": {\n";
    out << "    \"overload_tolerance\": " << format_number(cfg.cascade.overload_tolerance)
        << ",\n";
    out << "    \"trip_threshold\": \""
        << (cfg.cascade.trip_threshold == TripRating::Short ? "short" : "long") << "\",\n";
    out << "    \"max_tiers\": " << cfg.cascade.max_tiers << ",\n";
    out << "    \"gen_ramp_limit\": " << format_number(cfg.cascade.gen_ramp_limit) << ",\n";
    out << "    \"rebalance\": \""
        << (cfg.cascade.rebalance == RebalancePolicy::MinShed ? "min_shed" : "pro_rata")
        << "\"\n";
    out << "  }\n";
    out << "}\n";
    return out.str();
}

inline std::string manifest_text(const ExperimentConfig& cfg) {
    char hex[32];
    std::snprintf(hex, sizeof(hex), "%016llx",
                  static_cast<unsigned long long>(fnv1a64(manifest_body(cfg, ""))));
    return manifest_body(cfg, hex);
}

inline std::string dispatch_summary_header() { return "level,objective,shed_total_mw,served_mw"; }

inline std::string read_text_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) return {};
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_text_file(const std::filesystem::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    if (!out) throw DomainError("cannot write '" + p.string() + "'");
    out << text;
    if (!out) throw DomainError("short write to '" + p.string() + "'");
}

inline std::vector<std::string> split_lines(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!line.empty()) out.push_back(line);
    }
    return out;
}

inline std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream in(line);
    while (std::getline(in, field, ',')) out.push_back(field);
    return out;
}

inline double csv_number(const std::string& field) {
    size_t pos = 0;
    const double v = std::stod(field, &pos);
    if (pos != field.size()) throw DomainError("bad numeric field '" + field + "'");
    return v;
}

// Rows of a finished level as they appeared on disk. Raw lines are kept so a
// rewrite after pruning partial rows reproduces the original bytes.
struct PriorLevel {
    std::vector<std::string> risk_lines;
    std::string dispatch_line;
};

// Total standard error from the per-bin rows: each draw lands in at most one
// bin, so the bins' sums of squares add, and those are recoverable from the
// per-bin standard errors.
inline double stderr_from_bins(const RiskEstimate& est) {
    const auto n = static_cast<double>(est.n_iterations);
    if (est.n_iterations < 2) return 0.0;
    double sum = 0.0, sumsq = 0.0;
    for (size_t j = 0; j < est.bin_risk_mw.size(); ++j) {
        const double bsum = est.bin_risk_mw[j] * n;
        const double bvar = est.bin_stderr_mw[j] * est.bin_stderr_mw[j] * n;
        sum += bsum;
        sumsq += bvar * (n - 1.0) + bsum * bsum / n;
    }
    return stderr_of(sum, sumsq, est.n_iterations);
}

}  // namespace detail

// Smoothed per-bin and total risk series, window 3 across levels, matching
// the plot tables emit_plot_data produces.
inline void compute_smoothed_risk(SweepResult& result) {
    result.smoothed_total_risk_mw.clear();
    result.smoothed_bin_risk_mw.clear();
    if (result.per_level.empty()) return;
    std::vector<double> totals;
    for (const auto& lr : result.per_level) totals.push_back(lr.risk.expected_blackout_mw);
    result.smoothed_total_risk_mw = rolling_average(totals);
    const size_t nbins = result.per_level.front().risk.bin_risk_mw.size();
    for (size_t j = 0; j < nbins; ++j) {
        std::vector<double> series;
        for (const auto& lr : result.per_level) series.push_back(lr.risk.bin_risk_mw[j]);
        result.smoothed_bin_risk_mw.push_back(rolling_average(series));
    }
}

inline SweepResult run_sweep(const ExperimentConfig& cfg) {
    namespace fs = std::filesystem;
    detail::validate_config(cfg);

    const GridCase base = load_case_file(cfg.case_path);
    const OutageModel model = build_outage_model(base);

    RiskConfig risk_cfg;
    risk_cfg.simulate_single_outages = cfg.simulate_single_outages;
    risk_cfg.cascade = cfg.cascade;
    risk_cfg.workers = cfg.workers;

    // The proportional policy solves its anchor once; every level is a pure
    // scaling of that solution.
    DispatchSolution anchor;
    if (cfg.policy == DispatchPolicy::Proportional) {
        const GridCase anchor_case =
            scale_load(base, cfg.anchor_level / 100.0 / base.load_factor);
        try {
            anchor = solve_scdcopf(anchor_case);
        } catch (const SolverError& e) {
            throw SweepError(cfg.anchor_level, e.what());
        } catch (const ConvergenceError& e) {
            throw SweepError(cfg.anchor_level, e.what());
        }
    }

    // Output bookkeeping. A manifest byte-match means the directory holds
    // rows produced by this exact configuration, so finished levels can be
    // trusted and skipped.
    const bool persist = !cfg.out_dir.empty();
    fs::path risk_path, summary_path;
    std::map<int, detail::PriorLevel> prior;
    if (persist) {
        const fs::path dir(cfg.out_dir);
        fs::create_directories(dir);
        risk_path = dir / "risk.csv";
        summary_path = dir / "dispatch_summary.csv";
        const fs::path manifest_path = dir / "manifest.json";
        const std::string manifest = detail::manifest_text(cfg);
        const bool same_config = detail::read_text_file(manifest_path) == manifest;
        if (same_config) {
            const size_t nbins = cfg.bins.size() - 1;
            std::map<int, detail::PriorLevel> rows;
            auto risk_lines = detail::split_lines(detail::read_text_file(risk_path));
            auto summary_lines = detail::split_lines(detail::read_text_file(summary_path));
            const bool headers_ok =
                !risk_lines.empty() && risk_lines.front() == risk_csv_header() &&
                !summary_lines.empty() && summary_lines.front() == detail::dispatch_summary_header();
            if (headers_ok) {
                try {
                    for (size_t i = 1; i < risk_lines.size(); ++i) {
                        const int lv = static_cast<int>(
                            detail::csv_number(detail::split_csv(risk_lines[i]).at(0)));
                        rows[lv].risk_lines.push_back(risk_lines[i]);
                    }
                    for (size_t i = 1; i < summary_lines.size(); ++i) {
                        const int lv = static_cast<int>(
                            detail::csv_number(detail::split_csv(summary_lines[i])[0]));
                        if (rows[lv].dispatch_line.empty()) rows[lv].dispatch_line = summary_lines[i];
                    }
                } catch (const std::exception&) {
                    rows.clear();
                }
                for (auto& [lv, pl] : rows) {
                    const bool requested = std::binary_search(cfg.load_levels.begin(),
                                                              cfg.load_levels.end(), lv);
                    if (requested && pl.risk_lines.size() == nbins && !pl.dispatch_line.empty())
                        prior.emplace(lv, std::move(pl));
                }
            }
        } else {
            detail::write_text_file(manifest_path, manifest);
        }
        // Rewrite both tables from the trusted rows. When nothing was lost
        // this reproduces the previous bytes; otherwise it drops partial or
        // stale rows before new results are appended.
        std::string risk_text = risk_csv_header() + "\n";
        std::string summary_text = detail::dispatch_summary_header() + "\n";
        for (const auto& [lv, pl] : prior) {
            for (const auto& line : pl.risk_lines) risk_text += line + "\n";
            summary_text += pl.dispatch_line + "\n";
        }
        detail::write_text_file(risk_path, risk_text);
        detail::write_text_file(summary_path, summary_text);
    }

    SweepResult result;
    for (const int level : cfg.load_levels) {
        LevelResult lr;
        lr.level = level;
        const auto it = prior.find(level);
        if (it != prior.end()) {
            lr.resumed = true;
            lr.risk.bin_edges = cfg.bins;
            for (const auto& line : it->second.risk_lines) {
                const auto f = detail::split_csv(line);
                if (f.size() != 8) throw DomainError("malformed row in risk.csv: " + line);
                lr.risk.bin_risk_mw.push_back(detail::csv_number(f[3]));
                lr.risk.bin_event_counts.push_back(
                    static_cast<long long>(detail::csv_number(f[4])));
                lr.risk.bin_stderr_mw.push_back(detail::csv_number(f[5]));
                lr.risk.n_iterations = static_cast<long long>(detail::csv_number(f[6]));
                lr.risk.seed = static_cast<uint64_t>(std::stoull(f[7]));
                lr.risk.expected_blackout_mw += detail::csv_number(f[3]);
            }
            lr.risk.standard_error_mw = detail::stderr_from_bins(lr.risk);
            const auto f = detail::split_csv(it->second.dispatch_line);
            if (f.size() != 4)
                throw DomainError("malformed row in dispatch_summary.csv: " +
                                  it->second.dispatch_line);
            lr.objective = detail::csv_number(f[1]);
            lr.shed_total_mw = detail::csv_number(f[2]);
            lr.served_mw = detail::csv_number(f[3]);
        } else {
            const auto t0 = std::chrono::steady_clock::now();
            const GridCase level_case = scale_load(base, level / 100.0 / base.load_factor);
            if (cfg.policy == DispatchPolicy::Scdcopf) {
                try {
                    lr.dispatch = solve_scdcopf(level_case);
                } catch (const SolverError& e) {
                    throw SweepError(level, e.what());
                } catch (const ConvergenceError& e) {
                    throw SweepError(level, e.what());
                }
            } else {
                lr.dispatch = proportional_dispatch(anchor, level / 100.0);
            }
            lr.objective = lr.dispatch.objective;
            lr.shed_total_mw = lr.dispatch.shed_total;
            lr.served_mw = lr.dispatch.served_total();
            lr.risk = run_monte_carlo(level_case, lr.dispatch, model, cfg.n_iterations,
                                      level_seed(cfg.master_seed, level), cfg.bins, risk_cfg);
            lr.wall_seconds =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            if (persist) {
                std::ostringstream risk_rows;
                append_risk_csv(risk_rows, level, lr.risk);
                std::ofstream rf(risk_path, std::ios::binary | std::ios::app);
                rf << risk_rows.str() << std::flush;
                std::ofstream sf(summary_path, std::ios::binary | std::ios::app);
                sf << level << ',' << detail::format_number(lr.objective) << ','
                   << detail::format_number(lr.shed_total_mw) << ','
                   << detail::format_number(lr.served_mw) << '\n'
                   << std::flush;
                if (!rf || !sf) throw DomainError("cannot append results in '" + cfg.out_dir + "'");
            }
        }
        result.per_level.push_back(std::move(lr));
        if (cfg.on_level_complete) cfg.on_level_complete(result.per_level.back());
    }

    compute_smoothed_risk(result);
    return result;
}

// Plot-ready long-form table: one row per (level, blackout-size bin) holding
// the smoothed risk series behind a risk-vs-load-level figure.
inline std::string emit_plot_data(const SweepResult& result) {
    if (result.per_level.empty()) throw DomainError("empty sweep result");
    using detail::format_number;
    std::ostringstream out;
    out << "level,bin_low,bin_high,smoothed_risk_mw\n";
    const auto& edges = result.per_level.front().risk.bin_edges;
    for (size_t i = 0; i < result.per_level.size(); ++i) {
        for (size_t j = 0; j + 1 < edges.size(); ++j) {
            out << result.per_level[i].level << ',' << format_number(edges[j]) << ','
                << format_number(edges[j + 1]) << ','
                << format_number(result.smoothed_bin_risk_mw[j][i]) << '\n';
        }
    }
    return out.str();
}

}  // namespace gridrisk
