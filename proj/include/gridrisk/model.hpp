#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <unordered_map>
#include <vector>

#include "gridrisk/errors.hpp"

namespace gridrisk {

// Ratings of 0 in a case file mean "unlimited"; internally that becomes this.
constexpr double kUnlimitedRating = 1e9;

struct Bus {
    int id = 0;
    int bus_type = 1;  // 1 PQ, 2 PV, 3 reference; informational only
    int area = 1;
    double base_kv = 0.0;
};

struct Branch {
    int from_bus = 0;
    int to_bus = 0;
    double resistance = 0.0;  // parsed for fidelity, unused by DC analysis
    double reactance = 0.0;   // p.u. on system base
    double charging = 0.0;    // total line charging b, unused by DC analysis
    double rating_long = kUnlimitedRating;   // MW continuous
    double rating_mid = 0.0;                 // MW, informational (rate B)
    double rating_short = kUnlimitedRating;  // MW emergency
    double ratio = 0.0;       // transformer tap, unused by DC analysis
    double angle_shift = 0.0; // degrees, unused by DC analysis
    bool in_service = true;
    double outage_rate = 1.0;  // outages/year
};

struct Generator {
    int bus = 0;
    double p_base = 0.0;       // MW setpoint from the case file
    double p_max = 0.0;        // MW
    double marginal_cost = 0.0;  // $/MWh
};

struct LoadPoint {
    int bus = 0;
    double p_nominal = 0.0;   // MW at load_factor 1.0
    double shed_cost = 1e4;   // $/MWh penalty for unserved demand
};

struct GridCase {
    std::string name = "case";
    double mva_base = 100.0;
    double load_factor = 1.0;
    std::vector<Bus> buses;
    std::vector<Branch> branches;
    std::vector<Generator> generators;
    std::vector<LoadPoint> loads;

    // Bus id -> position in buses; rebuilt by reindex(), required before use.
    std::unordered_map<int, int> bus_pos;

    void reindex() {
        bus_pos.clear();
        bus_pos.reserve(buses.size());
        for (int i = 0; i < static_cast<int>(buses.size()); ++i) {
            bus_pos.emplace(buses[i].id, i);
        }
    }

    int bus_index(int id) const {
        auto it = bus_pos.find(id);
        if (it == bus_pos.end()) {
            throw ValidationError("unknown bus id " + std::to_string(id));
        }
        return it->second;
    }

    double effective_load(const LoadPoint& l) const { return load_factor * l.p_nominal; }

    double total_nominal_load() const {
        double s = 0.0;
        for (const auto& l : loads) s += l.p_nominal;
        return s;
    }
    double total_effective_load() const { return load_factor * total_nominal_load(); }
    double total_gen_capacity() const {
        double s = 0.0;
        for (const auto& g : generators) s += g.p_max;
        return s;
    }
};

// Checks every structural invariant; throws ValidationError naming the first
// offending element. Also rebuilds the bus index.
inline void validate(GridCase& gc) {
    if (gc.buses.empty()) throw ValidationError("case has no buses");
    if (gc.mva_base <= 0) throw ValidationError("mva_base must be positive");
    gc.reindex();
    if (gc.bus_pos.size() != gc.buses.size()) {
        throw ValidationError("duplicate bus id in case '" + gc.name + "'");
    }

    auto require_bus = [&](int id, const std::string& what) {
        if (!gc.bus_pos.count(id)) {
            throw ValidationError(what + " references unknown bus " + std::to_string(id));
        }
    };

    for (size_t i = 0; i < gc.branches.size(); ++i) {
        const Branch& b = gc.branches[i];
        const std::string tag = "branch " + std::to_string(i + 1) + " (" +
                                std::to_string(b.from_bus) + "-" + std::to_string(b.to_bus) + ")";
        require_bus(b.from_bus, tag);
        require_bus(b.to_bus, tag);
        if (b.from_bus == b.to_bus) throw ValidationError(tag + ": self loop");
        if (!(b.reactance > 0)) throw ValidationError(tag + ": reactance must be > 0");
        if (!(b.rating_long > 0)) throw ValidationError(tag + ": rating_long must be > 0");
        if (b.rating_short < b.rating_long) {
            throw ValidationError(tag + ": rating_short below rating_long");
        }
        if (b.outage_rate < 0) throw ValidationError(tag + ": negative outage rate");
    }

    double max_cost = -std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < gc.generators.size(); ++i) {
        const Generator& g = gc.generators[i];
        const std::string tag = "generator " + std::to_string(i + 1);
        require_bus(g.bus, tag);
        if (g.p_max < 0) throw ValidationError(tag + ": negative p_max");
        if (!std::isfinite(g.marginal_cost)) throw ValidationError(tag + ": non-finite cost");
        max_cost = std::max(max_cost, g.marginal_cost);
    }

    for (size_t i = 0; i < gc.loads.size(); ++i) {
        const LoadPoint& l = gc.loads[i];
        const std::string tag = "load " + std::to_string(i + 1);
        require_bus(l.bus, tag);
        if (l.p_nominal < 0) throw ValidationError(tag + ": negative demand");
        if (!gc.generators.empty() && l.shed_cost <= max_cost) {
            throw ValidationError(tag + ": shed_cost must exceed every generator cost");
        }
    }

    if (!gc.generators.empty() && !(gc.total_gen_capacity() > 0)) {
        throw ValidationError("total generation capacity is zero");
    }
    if (gc.loads.empty() || !(gc.total_nominal_load() > 0)) {
        throw ValidationError("case has no demand");
    }
}

// Load factors compose multiplicatively: scaling by a then b equals scaling
// by a*b. Generators and branch data are untouched.
inline GridCase scale_load(const GridCase& gc, double factor) {
    if (!(factor > 0)) throw DomainError("load factor must be positive");
    GridCase out = gc;
    out.load_factor = gc.load_factor * factor;
    return out;
}

}  // namespace gridrisk
