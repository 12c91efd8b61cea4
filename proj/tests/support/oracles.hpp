#pragma once

// Reference implementations used as test oracles. They share no code with
// the library beyond the data types: plain recursion over syntax trees and
// exhaustive enumeration of maps.

#include "mnip/formula.hpp"
#include "mnip/relcore.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace oracle {

using mnip::Element;
using mnip::Node;
using mnip::NodeKind;
using mnip::Structure;
using mnip::Tuple;

using Env = std::map<std::string, Element>;

inline bool satisfies(const Structure& m, const Node& n, Env& env);

// Calls f for every assignment of `vars` over the universe; stops when f
// returns true and reports whether it did.
inline bool any_assignment(const Structure& m, const std::vector<std::string>& vars, Env& env,
                           const std::function<bool()>& f) {
    std::vector<std::optional<Element>> saved;
    for (const auto& v : vars)
        saved.push_back(env.count(v) ? std::optional<Element>(env[v]) : std::nullopt);
    bool hit = false;
    std::function<void(std::size_t)> go = [&](std::size_t i) {
        if (hit)
            return;
        if (i == vars.size()) {
            hit = f();
            return;
        }
        for (Element e = 0; e < m.size() && !hit; ++e) {
            env[vars[i]] = e;
            go(i + 1);
        }
    };
    go(0);
    for (std::size_t i = 0; i < vars.size(); ++i) {
        if (saved[i])
            env[vars[i]] = *saved[i];
        else
            env.erase(vars[i]);
    }
    return hit;
}

inline bool satisfies(const Structure& m, const Node& n, Env& env) {
    switch (n.kind) {
    case NodeKind::atom: {
        Tuple t;
        for (const auto& v : n.terms)
            t.push_back(env.at(v));
        auto s = m.signature().find(n.symbol);
        return s && m.relation(*s).count(t) != 0;
    }
    case NodeKind::equals:
        return env.at(n.terms[0]) == env.at(n.terms[1]);
    case NodeKind::negation:
        return !satisfies(m, *n.children[0], env);
    case NodeKind::conjunction:
        return std::all_of(n.children.begin(), n.children.end(), [&](const auto& c) { return satisfies(m, *c, env); });
    case NodeKind::disjunction:
        return std::any_of(n.children.begin(), n.children.end(), [&](const auto& c) { return satisfies(m, *c, env); });
    case NodeKind::exists:
        return any_assignment(m, n.terms, env, [&] { return satisfies(m, *n.children[0], env); });
    case NodeKind::forall:
        return !any_assignment(m, n.terms, env, [&] { return !satisfies(m, *n.children[0], env); });
    case NodeKind::exists_more: {
        std::size_t count = 0;
        return any_assignment(m, n.terms, env, [&] { return satisfies(m, *n.children[0], env) && ++count > n.threshold; });
    }
    }
    return false;
}

inline bool holds(const Structure& m, const mnip::Formula& f, const std::vector<Element>& free,
                  const std::vector<Element>& params = {}) {
    Env env;
    for (std::size_t i = 0; i < f.free.size(); ++i)
        env[f.free[i]] = free.at(i);
    for (std::size_t i = 0; i < f.params.size(); ++i)
        env[f.params[i]] = params.at(i);
    return satisfies(m, *f.body, env);
}

// Exhaustive search for a homomorphism a -> b extending `fixed` (pairs of
// a-element, b-element). Relations are matched by symbol name.
inline bool homomorphism_exists(const Structure& a, const Structure& b,
                                const std::vector<std::pair<Element, Element>>& fixed = {}) {
    std::vector<std::optional<Element>> map(a.size());
    for (auto [x, y] : fixed) {
        if (map[x] && *map[x] != y)
            return false;
        map[x] = y;
    }
    auto consistent = [&] {
        for (std::size_t s = 0; s < a.signature().size(); ++s) {
            auto t = b.signature().find(a.signature()[s].name);
            for (const auto& tup : a.relation(s)) {
                if (!t)
                    return false;
                Tuple img;
                for (Element e : tup)
                    img.push_back(*map[e]);
                if (!b.relation(*t).count(img))
                    return false;
            }
        }
        return true;
    };
    std::function<bool(Element)> go = [&](Element x) {
        if (x == a.size())
            return consistent();
        if (map[x])
            return go(x + 1);
        for (Element y = 0; y < b.size(); ++y) {
            map[x] = y;
            if (go(x + 1))
                return true;
        }
        map[x].reset();
        return false;
    };
    return go(0);
}

// Isomorphism by trying every bijection; labels are ignored.
inline bool isomorphic(const Structure& a, const Structure& b) {
    if (a.size() != b.size() || a.signature().size() != b.signature().size())
        return false;
    std::vector<Element> perm(a.size());
    std::iota(perm.begin(), perm.end(), 0);
    do {
        bool ok = true;
        for (std::size_t s = 0; s < a.signature().size() && ok; ++s) {
            auto t = b.signature().find(a.signature()[s].name);
            if (!t || a.relation(s).size() != b.relation(*t).size()) {
                ok = false;
                break;
            }
            for (const auto& tup : a.relation(s)) {
                Tuple img;
                for (Element e : tup)
                    img.push_back(perm[e]);
                if (!b.relation(*t).count(img)) {
                    ok = false;
                    break;
                }
            }
        }
        if (ok)
            return true;
    } while (std::next_permutation(perm.begin(), perm.end()));
    return false;
}

// Graph with an exact K_n^r subgraph, checked by trying all injective
// placements of the subdivided clique (tiny graphs only).
inline bool contains_subdivided_clique(const mnip::Graph& g, std::size_t n, std::size_t r) {
    std::vector<std::pair<std::size_t, std::size_t>> pattern_edges;
    std::size_t vertices = n;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            std::size_t prev = i;
            for (std::size_t k = 0; k < r; ++k) {
                pattern_edges.emplace_back(prev, vertices);
                prev = vertices++;
            }
            pattern_edges.emplace_back(prev, j);
        }
    if (vertices > g.size())
        return false;
    std::vector<Element> place(vertices);
    std::vector<char> used(g.size(), 0);
    std::function<bool(std::size_t)> go = [&](std::size_t v) {
        if (v == vertices) {
            for (auto [a, b] : pattern_edges)
                if (!g.adjacent(place[a], place[b]))
                    return false;
            return true;
        }
        for (Element w = 0; w < g.size(); ++w) {
            if (used[w])
                continue;
            bool ok = true;
            for (auto [a, b] : pattern_edges) {
                if (b == v && a < v && !g.adjacent(place[a], w))
                    ok = false;
                if (a == v && b < v && !g.adjacent(place[b], w))
                    ok = false;
            }
            if (!ok)
                continue;
            used[w] = 1;
            place[v] = w;
            if (go(v + 1))
                return true;
            used[w] = 0;
        }
        return false;
    };
    return go(0);
}

} // namespace oracle
