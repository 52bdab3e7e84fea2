#pragma once

#include <algorithm>
#include <vector>

#include "gridrisk/model.hpp"

namespace gridrisk {

namespace detail {

// Adjacency over a chosen subset of branches; vertices are bus positions.
struct BusGraph {
    int n = 0;
    // per vertex: (neighbor position, branch index into the case)
    std::vector<std::vector<std::pair<int, int>>> adj;

    BusGraph(const GridCase& gc, const std::vector<char>* active) : n(static_cast<int>(gc.buses.size())), adj(n) {
        for (size_t e = 0; e < gc.branches.size(); ++e) {
            const Branch& b = gc.branches[e];
            const bool on = active ? static_cast<bool>((*active)[e]) : b.in_service;
            if (!on) continue;
            const int u = gc.bus_index(b.from_bus), v = gc.bus_index(b.to_bus);
            adj[u].push_back({v, static_cast<int>(e)});
            adj[v].push_back({u, static_cast<int>(e)});
        }
    }
};

}  // namespace detail

// Connected components under in-service branches (or an explicit per-branch
// activity mask). Each component is a sorted list of bus positions; the
// components are ordered by their smallest member, so output is deterministic.
inline std::vector<std::vector<int>> find_islands(const GridCase& gc,
                                                  const std::vector<char>* active = nullptr) {
    const detail::BusGraph g(gc, active);
    std::vector<int> comp(g.n, -1);
    std::vector<std::vector<int>> out;
    std::vector<int> stack;
    for (int s = 0; s < g.n; ++s) {
        if (comp[s] >= 0) continue;
        const int c = static_cast<int>(out.size());
        out.emplace_back();
        comp[s] = c;
        stack.push_back(s);
        while (!stack.empty()) {
            const int u = stack.back();
            stack.pop_back();
            out[c].push_back(u);
            for (const auto& [v, e] : g.adj[u]) {
                if (comp[v] < 0) {
                    comp[v] = c;
                    stack.push_back(v);
                }
            }
        }
        std::sort(out[c].begin(), out[c].end());
    }
    return out;
}

// Per-branch flag: true when removing that single branch disconnects its
// component. Parallel branches are handled by tracking the tree edge by
// branch index, not by parent vertex. Inactive branches are flagged false.
inline std::vector<char> find_bridge_branches(const GridCase& gc,
                                              const std::vector<char>* active = nullptr) {
    const detail::BusGraph g(gc, active);
    std::vector<char> bridge(gc.branches.size(), 0);
    std::vector<int> disc(g.n, -1), low(g.n, 0);
    int timer = 0;

    // Iterative DFS; (vertex, incoming branch, next adjacency slot).
    struct Frame {
        int u, in_edge;
        size_t next;
    };
    std::vector<Frame> stack;
    for (int s = 0; s < g.n; ++s) {
        if (disc[s] >= 0) continue;
        stack.push_back({s, -1, 0});
        disc[s] = low[s] = timer++;
        while (!stack.empty()) {
            Frame& f = stack.back();
            if (f.next < g.adj[f.u].size()) {
                const auto [v, e] = g.adj[f.u][f.next++];
                if (e == f.in_edge) continue;
                if (disc[v] < 0) {
                    disc[v] = low[v] = timer++;
                    stack.push_back({v, e, 0});
                } else {
                    low[f.u] = std::min(low[f.u], disc[v]);
                }
            } else {
                const Frame done = f;
                stack.pop_back();
                if (!stack.empty()) {
                    Frame& p = stack.back();
                    low[p.u] = std::min(low[p.u], low[done.u]);
                    if (low[done.u] > disc[p.u]) bridge[done.in_edge] = 1;
                }
            }
        }
    }
    return bridge;
}

}  // namespace gridrisk
