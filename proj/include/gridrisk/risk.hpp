#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <mutex>
#include <ostream>
#include <thread>
#include <vector>

#include "gridrisk/cascade.hpp"
#include "gridrisk/case_io.hpp"
#include "gridrisk/dispatch.hpp"
#include "gridrisk/model.hpp"
#include "gridrisk/rng.hpp"

namespace gridrisk {

// Blackouts below a microwatt-scale floor are solver residue, not events.
constexpr double kNegligibleBlackoutMw = 1e-6;

struct Contingency {
    std::vector<int> branch_ids;
    double probability = 0.0;  // filled by enumeration, not by sampling
};

// Hourly failure probability per branch, p = lambda / 8760, treating each
// outage as lasting one hour.
struct OutageModel {
    std::vector<double> p_fail;      // per case branch; 0 for out-of-service
    std::vector<int> sample_order;   // in-service branch indices, ascending
};

inline OutageModel build_outage_model(const GridCase& gc) {
    OutageModel model;
    model.p_fail.resize(gc.branches.size(), 0.0);
    for (size_t b = 0; b < gc.branches.size(); ++b) {
        const Branch& br = gc.branches[b];
        if (!br.in_service) continue;
        if (br.outage_rate > 8760.0) {
            throw DomainError("branch " + std::to_string(b + 1) + " outage rate " +
                              detail::format_number(br.outage_rate) +
                              "/year implies a failure probability above 1");
        }
        model.p_fail[b] = br.outage_rate / 8760.0;
        model.sample_order.push_back(static_cast<int>(b));
    }
    return model;
}

// One independent Bernoulli draw per in-service branch. The stream must be
// positioned at (master seed, iteration), which makes the draw for iteration
// k identical no matter which worker runs it.
inline Contingency sample_contingency(const OutageModel& model, RngStream& rng) {
    Contingency c;
    for (int b : model.sample_order) {
        if (rng.next_double() < model.p_fail[b]) c.branch_ids.push_back(b);
    }
    return c;
}

enum class ProbabilityForm {
    Full,         // product of p over outaged and (1-p) over surviving branches
    ProductOnly,  // outage factors alone, the usual rare-event shortcut
};

struct RiskConfig {
    // Single-branch draws score zero without simulation by default, relying
    // on the dispatch being n-1 secure.
    bool simulate_single_outages = false;
    CascadeConfig cascade;
    ProbabilityForm probability_form = ProbabilityForm::Full;
    int block_size = 4096;  // iterations per aggregation block
    int workers = 1;
};

struct RiskEstimate {
    long long n_iterations = 0;
    uint64_t seed = 0;
    double expected_blackout_mw = 0.0;
    double standard_error_mw = 0.0;
    std::vector<double> bin_edges;       // fractions of served load, 0 .. 1
    std::vector<double> bin_risk_mw;     // per bin, sums exactly to the total
    std::vector<long long> bin_event_counts;
    std::vector<double> bin_stderr_mw;
    double unenumerated_mass = 0.0;  // exhaustive runs: Pr(deeper outages)
};

// Raised when a sampled or enumerated contingency fails to quiesce.
struct RiskCascadeError : ConvergenceError {
    RiskCascadeError(const Contingency& c, const NonterminatingCascade& inner)
        : ConvergenceError(std::string(inner.what()) + " (contingency:" + label(c) + ")"),
          contingency(c) {}
    Contingency contingency;

private:
    static std::string label(const Contingency& c) {
        std::string s;
        for (int b : c.branch_ids) s += " " + std::to_string(b + 1);
        return s;
    }
};

namespace detail {

inline void require_bins(const std::vector<double>& edges) {
    if (edges.size() < 2 || edges.front() != 0.0 || edges.back() != 1.0) {
        throw DomainError("bin edges must run from 0 to 1");
    }
    for (size_t k = 1; k < edges.size(); ++k) {
        if (!(edges[k] > edges[k - 1])) throw DomainError("bin edges must strictly increase");
    }
}

// Bin index for a positive blackout fraction; bin j covers (e_j, e_{j+1}].
inline int bin_of(double frac, const std::vector<double>& edges) {
    int j = static_cast<int>(std::lower_bound(edges.begin() + 1, edges.end(), frac) -
                             edges.begin()) -
            1;
    return std::min(j, static_cast<int>(edges.size()) - 2);
}

struct BinAccumulator {
    std::vector<double> sum, sumsq;
    std::vector<long long> count;

    explicit BinAccumulator(size_t bins) : sum(bins, 0.0), sumsq(bins, 0.0), count(bins, 0) {}

    void add(double blackout_mw, double baseline, const std::vector<double>& edges) {
        const int j = bin_of(blackout_mw / baseline, edges);
        sum[j] += blackout_mw;
        sumsq[j] += blackout_mw * blackout_mw;
        count[j] += 1;
    }

    void fold(const BinAccumulator& other) {
        for (size_t j = 0; j < sum.size(); ++j) {
            sum[j] += other.sum[j];
            sumsq[j] += other.sumsq[j];
            count[j] += other.count[j];
        }
    }
};

// Sample standard error of a mean over n draws given their sum and sum of
// squares; zero-variance and single-draw cases report 0.
inline double stderr_of(double sum, double sumsq, long long n) {
    if (n < 2) return 0.0;
    const double var = (sumsq - sum * sum / static_cast<double>(n)) / static_cast<double>(n - 1);
    return var > 0 ? std::sqrt(var / static_cast<double>(n)) : 0.0;
}

}  // namespace detail

// Monte Carlo risk estimate: n independent hourly draws, cascades simulated
// only for multi-branch outages. Aggregation runs over fixed-size blocks
// folded in block order, so the estimate is a pure function of (seed, n)
// whatever the worker count.
inline RiskEstimate run_monte_carlo(const GridCase& gc, const DispatchSolution& dispatch,
                                    const OutageModel& model, long long n_iterations,
                                    uint64_t master_seed, const std::vector<double>& bin_edges,
                                    const RiskConfig& cfg = {}) {
    if (n_iterations < 1) throw DomainError("iteration count must be at least 1");
    if (cfg.block_size < 1) throw DomainError("block size must be at least 1");
    detail::require_bins(bin_edges);
    const double baseline = dispatch.served_total();
    if (!(baseline > 0)) throw DomainError("dispatch serves no load; risk is undefined");

    const size_t nbins = bin_edges.size() - 1;
    const long long nblocks = (n_iterations + cfg.block_size - 1) / cfg.block_size;
    std::vector<detail::BinAccumulator> partials(nblocks, detail::BinAccumulator(nbins));

    std::atomic<long long> cursor{0};
    std::mutex fail_mutex;
    std::exception_ptr failure;

    auto run_block = [&](long long block) {
        detail::BinAccumulator& acc = partials[block];
        const long long begin = block * cfg.block_size;
        const long long end = std::min(n_iterations, begin + cfg.block_size);
        for (long long i = begin; i < end; ++i) {
            RngStream rng(master_seed, static_cast<uint64_t>(i));
            const Contingency c = sample_contingency(model, rng);
            const size_t k = c.branch_ids.size();
            if (k == 0 || (k == 1 && !cfg.simulate_single_outages)) continue;
            double blackout;
            try {
                blackout = simulate_cascade(gc, dispatch, c.branch_ids, cfg.cascade).blackout_mw;
            } catch (const NonterminatingCascade& e) {
                throw RiskCascadeError(c, e);
            }
            if (blackout < kNegligibleBlackoutMw) continue;
            acc.add(blackout, baseline, bin_edges);
        }
    };

    auto worker_loop = [&] {
        for (;;) {
            const long long block = cursor.fetch_add(1);
            if (block >= nblocks) return;
            try {
                run_block(block);
            } catch (...) {
                std::lock_guard<std::mutex> lock(fail_mutex);
                if (!failure) failure = std::current_exception();
                return;
            }
        }
    };

    if (cfg.workers <= 1) {
        worker_loop();
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < cfg.workers; ++w) pool.emplace_back(worker_loop);
        for (std::thread& t : pool) t.join();
    }
    if (failure) std::rethrow_exception(failure);

    detail::BinAccumulator total(nbins);
    for (const auto& p : partials) total.fold(p);

    RiskEstimate est;
    est.n_iterations = n_iterations;
    est.seed = master_seed;
    est.bin_edges = bin_edges;
    est.bin_risk_mw.resize(nbins);
    est.bin_stderr_mw.resize(nbins);
    est.bin_event_counts = total.count;
    double sum = 0.0, sumsq = 0.0;
    for (size_t j = 0; j < nbins; ++j) {
        est.bin_risk_mw[j] = total.sum[j] / static_cast<double>(n_iterations);
        est.bin_stderr_mw[j] = detail::stderr_of(total.sum[j], total.sumsq[j], n_iterations);
        est.expected_blackout_mw += est.bin_risk_mw[j];
        sum += total.sum[j];
        sumsq += total.sumsq[j];
    }
    est.standard_error_mw = detail::stderr_of(sum, sumsq, n_iterations);
    return est;
}

// Exact truncated risk: every contingency of size 0..max_k, weighted by its
// probability. Doubles as the brute-force oracle for small networks.
inline RiskEstimate exhaustive_risk(const GridCase& gc, const DispatchSolution& dispatch,
                                    const OutageModel& model, int max_k,
                                    const std::vector<double>& bin_edges,
                                    const RiskConfig& cfg = {}) {
    if (max_k < 0) throw DomainError("max_k must be nonnegative");
    detail::require_bins(bin_edges);
    const double baseline = dispatch.served_total();
    if (!(baseline > 0)) throw DomainError("dispatch serves no load; risk is undefined");

    const int m = static_cast<int>(model.sample_order.size());
    const int depth = std::min(max_k, m);
    double total_subsets = 0.0;
    {
        double c = 1.0;
        for (int k = 0;; ++k) {
            total_subsets += c;
            if (k == depth) break;
            c = c * (m - k) / (k + 1);
        }
        if (total_subsets > 1e7) {
            throw SizeError("enumeration of " + detail::format_number(total_subsets) +
                            " contingencies exceeds the 1e7 guard");
        }
    }

    const size_t nbins = bin_edges.size() - 1;
    RiskEstimate est;
    est.seed = 0;
    est.n_iterations = 0;
    est.bin_edges = bin_edges;
    est.bin_risk_mw.assign(nbins, 0.0);
    est.bin_stderr_mw.assign(nbins, 0.0);
    est.bin_event_counts.assign(nbins, 0);

    double enumerated_mass = 0.0;
    std::vector<int> pick;
    Contingency c;
    auto visit = [&](const std::vector<int>& idx) {
        c.branch_ids.clear();
        for (int t : idx) c.branch_ids.push_back(model.sample_order[t]);
        double p_full = 1.0, p_out = 1.0;
        size_t next = 0;
        for (int t = 0; t < m; ++t) {
            const double p = model.p_fail[model.sample_order[t]];
            if (next < idx.size() && idx[next] == t) {
                p_full *= p;
                p_out *= p;
                ++next;
            } else {
                p_full *= 1.0 - p;
            }
        }
        enumerated_mass += p_full;
        c.probability = cfg.probability_form == ProbabilityForm::Full ? p_full : p_out;

        const size_t k = c.branch_ids.size();
        if (c.probability == 0.0) return;
        if (k == 0 || (k == 1 && !cfg.simulate_single_outages)) return;
        double blackout;
        try {
            blackout = simulate_cascade(gc, dispatch, c.branch_ids, cfg.cascade).blackout_mw;
        } catch (const NonterminatingCascade& e) {
            throw RiskCascadeError(c, e);
        }
        if (blackout < kNegligibleBlackoutMw) return;
        const int j = detail::bin_of(blackout / baseline, bin_edges);
        est.bin_risk_mw[j] += c.probability * blackout;
        est.bin_event_counts[j] += 1;
    };

    // Lexicographic subsets of each size k = 0 .. depth.
    for (int k = 0; k <= depth; ++k) {
        pick.assign(k, 0);
        for (int t = 0; t < k; ++t) pick[t] = t;
        for (;;) {
            visit(pick);
            if (k == 0) break;
            int t = k - 1;
            while (t >= 0 && pick[t] == m - k + t) --t;
            if (t < 0) break;
            ++pick[t];
            for (int u = t + 1; u < k; ++u) pick[u] = pick[u - 1] + 1;
        }
    }

    for (size_t j = 0; j < nbins; ++j) est.expected_blackout_mw += est.bin_risk_mw[j];
    est.unenumerated_mass = std::max(0.0, 1.0 - enumerated_mass);
    return est;
}

// Three-level smoothing across consecutive integer load levels; endpoints
// average whatever part of the window exists.
inline std::vector<double> rolling_average(const std::vector<double>& series, int window = 3) {
    if (window < 1 || window % 2 == 0) throw DomainError("window must be odd and positive");
    const int half = window / 2;
    const int n = static_cast<int>(series.size());
    std::vector<double> out(n);
    for (int i = 0; i < n; ++i) {
        const int lo = std::max(0, i - half), hi = std::min(n - 1, i + half);
        double s = 0.0;
        for (int j = lo; j <= hi; ++j) s += series[j];
        out[i] = s / (hi - lo + 1);
    }
    return out;
}

inline std::string risk_csv_header() {
    return "level,bin_low,bin_high,risk_mw,events,stderr_mw,n_iterations,seed";
}

// One CSV row per bin for a given load level.
inline void append_risk_csv(std::ostream& os, double level, const RiskEstimate& est) {
    using detail::format_number;
    for (size_t j = 0; j + 1 < est.bin_edges.size(); ++j) {
        os << format_number(level) << ',' << format_number(est.bin_edges[j]) << ','
           << format_number(est.bin_edges[j + 1]) << ',' << format_number(est.bin_risk_mw[j])
           << ',' << est.bin_event_counts[j] << ',' << format_number(est.bin_stderr_mw[j]) << ','
           << est.n_iterations << ',' << est.seed << '\n';
    }
}

}  // namespace gridrisk
