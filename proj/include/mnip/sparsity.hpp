#pragma once

// Exact r-subdivided cliques as subgraphs, and clique-size profiles of graph
// collections.

#include "mnip/error.hpp"
#include "mnip/relcore.hpp"

#include <algorithm>
#include <atomic>
#include <map>
#include <mutex>
#include <optional>
#include <thread>
#include <vector>

namespace mnip {

/// Embedding of K_n^r: branch vertices and, for every pair i < j, a route of
/// r + 2 vertices from branch[i] to branch[j].
struct SubdivisionWitness {
    std::size_t n = 0;
    std::size_t r = 0;
    std::vector<Element> branch;
    std::map<std::pair<std::size_t, std::size_t>, std::vector<Element>> routes;

    bool operator==(const SubdivisionWitness&) const = default;
};

namespace detail {

class SubdivisionSearch {
public:
    SubdivisionSearch(const Graph& g, std::size_t n, std::size_t r, Budget budget)
        : g_(g), n_(n), r_(r), counter_(budget, "subdivided clique search"), used_(g.size(), 0) {
        w_.n = n;
        w_.r = r;
    }

    std::optional<SubdivisionWitness> run() {
        if (n_ == 0)
            return w_;
        if (place(0))
            return w_;
        return std::nullopt;
    }

private:
    bool place(std::size_t i) {
        if (i == n_)
            return true;
        Element first = w_.branch.empty() ? 0 : w_.branch.back() + 1;
        for (Element v = first; v < g_.size(); ++v) {
            if (used_[v] || g_.degree(v) + 1 < n_)
                continue;
            counter_.tick();
            used_[v] = 1;
            w_.branch.push_back(v);
            if (connect(i, 0))
                return true;
            w_.branch.pop_back();
            used_[v] = 0;
        }
        return false;
    }

    // Routes branch i to branches j, j+1, ..., i-1, then places the next branch.
    bool connect(std::size_t i, std::size_t j) {
        if (j == i)
            return place(i + 1);
        Element from = w_.branch[j], to = w_.branch[i];
        if (r_ == 0) {
            if (!g_.adjacent(from, to))
                return false;
            w_.routes[{j, i}] = {from, to};
            if (connect(i, j + 1))
                return true;
            w_.routes.erase({j, i});
            return false;
        }
        auto dist = distances_to(to);
        std::vector<Element> route{from};
        if (extend(i, j, route, dist))
            return true;
        return false;
    }

    bool extend(std::size_t i, std::size_t j, std::vector<Element>& route, const std::vector<std::size_t>& dist) {
        std::size_t length = r_ + 1;
        Element at = route.back();
        std::size_t steps = route.size() - 1;
        Element to = w_.branch[i];
        if (steps + 1 == length) {
            if (!g_.adjacent(at, to))
                return false;
            route.push_back(to);
            w_.routes[{j, i}] = route;
            if (connect(i, j + 1))
                return true;
            w_.routes.erase({j, i});
            route.pop_back();
            return false;
        }
        for (Element u : g_.neighbors(at)) {
            if (used_[u] || dist[u] > length - steps - 1)
                continue;
            counter_.tick();
            used_[u] = 1;
            route.push_back(u);
            if (extend(i, j, route, dist))
                return true;
            route.pop_back();
            used_[u] = 0;
        }
        return false;
    }

    // Breadth-first distances to `target` through unused vertices.
    std::vector<std::size_t> distances_to(Element target) const {
        std::vector<std::size_t> dist(g_.size(), SIZE_MAX);
        std::vector<Element> queue{target};
        dist[target] = 0;
        for (std::size_t head = 0; head < queue.size(); ++head) {
            Element u = queue[head];
            for (Element w : g_.neighbors(u))
                if (!used_[w] && dist[w] == SIZE_MAX) {
                    dist[w] = dist[u] + 1;
                    queue.push_back(w);
                }
        }
        return dist;
    }

    const Graph& g_;
    std::size_t n_, r_;
    NodeCounter counter_;
    std::vector<char> used_;
    SubdivisionWitness w_;
};

} // namespace detail

/// Exhaustive search for K_n^r as a subgraph, every route of length exactly
/// r + 1. Throws BudgetExceeded when the budget runs out.
inline std::optional<SubdivisionWitness> find_subdivided_clique(const Graph& g, std::size_t n, std::size_t r,
                                                                Budget budget = {}) {
    return detail::SubdivisionSearch(g, n, r, budget).run();
}

inline bool verify_witness(const Graph& g, std::size_t n, std::size_t r, const SubdivisionWitness& w) {
    if (w.n != n || w.r != r || w.branch.size() != n || w.routes.size() != n * (n - (n > 0 ? 1 : 0)) / 2)
        return false;
    std::vector<int> seen(g.size(), 0);
    for (Element b : w.branch) {
        if (b >= g.size() || seen[b]++)
            return false;
    }
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            auto it = w.routes.find({i, j});
            if (it == w.routes.end())
                return false;
            const auto& route = it->second;
            if (route.size() != r + 2 || route.front() != w.branch[i] || route.back() != w.branch[j])
                return false;
            for (std::size_t k = 0; k + 1 < route.size(); ++k)
                if (route[k] >= g.size() || route[k + 1] >= g.size() || !g.adjacent(route[k], route[k + 1]))
                    return false;
            for (std::size_t k = 1; k + 1 < route.size(); ++k)
                if (seen[route[k]]++)
                    return false;
        }
    return true;
}

struct ProfileEntry {
    std::size_t r = 0;
    std::size_t n = 0;       // largest clique size with a witness found
    bool complete = true;    // false when some search hit the budget
};

/// For each r ≤ r_max, the largest n such that some graph contains K_n^r.
/// Graphs are searched on up to `jobs` threads.
inline std::vector<ProfileEntry> nd_profile(const std::vector<Graph>& graphs, std::size_t r_max, Budget budget = {},
                                            std::size_t jobs = 1) {
    std::vector<ProfileEntry> out;
    for (std::size_t r = 0; r <= r_max; ++r) {
        ProfileEntry entry{r, 0, true};
        std::mutex lock;
        auto work = [&](std::size_t gi) {
            const Graph& g = graphs[gi];
            std::size_t bound = 0;
            for (Element v = 0; v < g.size(); ++v)
                bound = std::max(bound, g.degree(v) + 1);
            std::size_t best = 0;
            bool complete = true;
            for (std::size_t n = 1; n <= std::min(bound, g.size()); ++n) {
                try {
                    if (!find_subdivided_clique(g, n, r, budget))
                        break;
                    best = n;
                } catch (const BudgetExceeded&) {
                    complete = false;
                    break;
                }
            }
            std::lock_guard<std::mutex> guard(lock);
            entry.n = std::max(entry.n, best);
            entry.complete = entry.complete && complete;
        };
        std::size_t threads = std::max<std::size_t>(1, std::min(jobs, graphs.size()));
        if (threads == 1) {
            for (std::size_t gi = 0; gi < graphs.size(); ++gi)
                work(gi);
        } else {
            std::atomic<std::size_t> next{0};
            std::vector<std::thread> pool;
            for (std::size_t t = 0; t < threads; ++t)
                pool.emplace_back([&] {
                    for (std::size_t gi = next++; gi < graphs.size(); gi = next++)
                        work(gi);
                });
            for (auto& th : pool)
                th.join();
        }
        out.push_back(entry);
    }
    return out;
}

} // namespace mnip
