#pragma once

// Relational paths: recognition and validation of path structures, path and
// simple-path formulas, symmetric paths and path types of Gaifman-graph paths.

#include "mnip/canonical.hpp"
#include "mnip/isomorphism.hpp"
#include "mnip/relcore.hpp"

#include <algorithm>
#include <numeric>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace mnip {

struct PathDecomposition {
    std::vector<Tuple> steps;
    std::vector<std::size_t> symbols;  // symbol index of each step
    std::vector<Element> joints;       // joints[i] is the element shared by steps i and i+1
    std::vector<Element> start;        // S(P): elements of the first step not in the second
    std::vector<Element> finish;       // F(P): elements of the last step not in the one before

    std::size_t length() const noexcept { return steps.size(); }
};

namespace detail {

inline std::vector<Element> minus(const Tuple& a, const Tuple& b) {
    std::vector<Element> out;
    for (Element e : a)
        if (std::find(b.begin(), b.end(), e) == b.end())
            out.push_back(e);
    return out;
}

inline std::size_t common(const Tuple& a, const Tuple& b, Element* which = nullptr) {
    std::size_t c = 0;
    for (Element e : a)
        if (std::find(b.begin(), b.end(), e) != b.end()) {
            ++c;
            if (which)
                *which = e;
        }
    return c;
}

inline PathDecomposition assemble_path(std::vector<Tuple> steps, std::vector<std::size_t> symbols) {
    PathDecomposition p;
    p.steps = std::move(steps);
    p.symbols = std::move(symbols);
    for (std::size_t i = 0; i + 1 < p.steps.size(); ++i) {
        Element j = 0;
        common(p.steps[i], p.steps[i + 1], &j);
        p.joints.push_back(j);
    }
    const std::size_t n = p.steps.size();
    if (n == 1) {
        p.start = p.steps[0];
        p.finish = p.steps[0];
    } else {
        p.start = minus(p.steps[0], p.steps[1]);
        p.finish = minus(p.steps[n - 1], p.steps[n - 2]);
    }
    return p;
}

} // namespace detail

inline PathDecomposition reversed(const PathDecomposition& p) {
    std::vector<Tuple> steps(p.steps.rbegin(), p.steps.rend());
    std::vector<std::size_t> symbols(p.symbols.rbegin(), p.symbols.rend());
    return detail::assemble_path(std::move(steps), std::move(symbols));
}

/// Decides whether `m` is a relational path and returns a decomposition. Of
/// the two orientations, the one whose first step is smaller (symbol index,
/// then tuple) is returned.
inline std::optional<PathDecomposition> recognize_path(const Structure& m) {
    std::vector<std::pair<std::size_t, Tuple>> tuples;
    for (std::size_t s = 0; s < m.signature().size(); ++s)
        for (const auto& t : m.relation(s))
            tuples.emplace_back(s, t);
    if (tuples.empty())
        return std::nullopt;
    const std::size_t k = tuples.size();
    for (const auto& [s, t] : tuples) {
        std::set<Element> distinct(t.begin(), t.end());
        if (distinct.size() != t.size())
            return std::nullopt;
    }
    // Pairwise: either disjoint or sharing exactly one element without
    // containment. Two tuples over the same element set are never allowed.
    std::vector<std::vector<std::size_t>> adj(k);
    for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = i + 1; j < k; ++j) {
            std::size_t c = detail::common(tuples[i].second, tuples[j].second);
            if (c == 0)
                continue;
            if (c > 1 || c == tuples[i].second.size() || c == tuples[j].second.size())
                return std::nullopt;
            adj[i].push_back(j);
            adj[j].push_back(i);
        }
    // The intersection graph must itself be a path.
    std::size_t endpoint = k;
    for (std::size_t i = 0; i < k; ++i) {
        if (adj[i].size() > 2)
            return std::nullopt;
        if (adj[i].size() <= 1 && (endpoint == k || tuples[i] < tuples[endpoint]))
            endpoint = i;
    }
    if (endpoint == k)
        return std::nullopt;
    std::vector<std::size_t> order{endpoint};
    std::vector<bool> seen(k, false);
    seen[endpoint] = true;
    while (true) {
        std::size_t cur = order.back(), next = k;
        for (auto j : adj[cur])
            if (!seen[j])
                next = j;
        if (next == k)
            break;
        seen[next] = true;
        order.push_back(next);
    }
    if (order.size() != k)
        return std::nullopt;
    std::vector<bool> covered(m.size(), false);
    for (const auto& [s, t] : tuples)
        for (Element e : t)
            covered[e] = true;
    if (std::find(covered.begin(), covered.end(), false) != covered.end())
        return std::nullopt;
    std::vector<Tuple> steps;
    std::vector<std::size_t> symbols;
    for (auto i : order) {
        symbols.push_back(tuples[i].first);
        steps.push_back(tuples[i].second);
    }
    return detail::assemble_path(std::move(steps), std::move(symbols));
}

/// Re-checks every condition of the path definition for `p` against `m`.
/// Returns a description of the first violated condition, or nothing.
inline std::optional<std::string> validate_path(const Structure& m, const PathDecomposition& p) {
    const std::size_t n = p.steps.size();
    if (n == 0)
        return "a path has at least one step";
    if (p.symbols.size() != n)
        return "one symbol per step is required";
    for (std::size_t i = 0; i < n; ++i) {
        const auto& e = p.steps[i];
        for (std::size_t a = 0; a < e.size(); ++a) {
            if (e[a] >= m.size())
                return "step " + std::to_string(i + 1) + " mentions an unknown element";
            for (std::size_t b = a + 1; b < e.size(); ++b)
                if (e[a] == e[b])
                    return "step " + std::to_string(i + 1) + " repeats an element";
        }
    }
    std::set<Element> all;
    for (const auto& e : p.steps)
        all.insert(e.begin(), e.end());
    if (all.size() != m.size())
        return "the steps do not cover every element";
    if (p.joints.size() + 1 != n)
        return "wrong number of joints";
    for (std::size_t i = 0; i + 1 < n; ++i) {
        const auto& e = p.steps[i];
        const auto& f = p.steps[i + 1];
        std::set<Element> se(e.begin(), e.end()), sf(f.begin(), f.end());
        std::vector<Element> inter;
        std::set_intersection(se.begin(), se.end(), sf.begin(), sf.end(), std::back_inserter(inter));
        if (inter.size() != 1)
            return "steps " + std::to_string(i + 1) + " and " + std::to_string(i + 2) + " do not share exactly one element";
        if (inter[0] != p.joints[i])
            return "joint " + std::to_string(i + 1) + " is not the shared element";
        if (std::includes(sf.begin(), sf.end(), se.begin(), se.end()) ||
            std::includes(se.begin(), se.end(), sf.begin(), sf.end()))
            return "step " + std::to_string(i + 1) + " and its successor are nested";
    }
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 2; j < n; ++j)
            for (Element x : p.steps[i])
                if (std::find(p.steps[j].begin(), p.steps[j].end(), x) != p.steps[j].end())
                    return "non-consecutive steps " + std::to_string(i + 1) + " and " + std::to_string(j + 1) + " meet";
    for (std::size_t i = 0; i < n; ++i) {
        if (p.symbols[i] >= m.signature().size() || !m.holds(p.symbols[i], p.steps[i]))
            return "step " + std::to_string(i + 1) + " is not a tuple of its symbol";
        for (std::size_t s = 0; s < m.signature().size(); ++s)
            if (s != p.symbols[i] && m.holds(s, p.steps[i]))
                return "step " + std::to_string(i + 1) + " lies in two relations";
    }
    for (std::size_t s = 0; s < m.signature().size(); ++s)
        for (const auto& t : m.relation(s))
            if (std::find(p.steps.begin(), p.steps.end(), t) == p.steps.end())
                return "tuple of " + m.signature()[s].name + " is not a step";
    auto start = n == 1 ? p.steps[0] : detail::minus(p.steps[0], p.steps[1]);
    auto finish = n == 1 ? p.steps[0] : detail::minus(p.steps[n - 1], p.steps[n - 2]);
    if (start != p.start)
        return "start set is wrong";
    if (finish != p.finish)
        return "finish set is wrong";
    return std::nullopt;
}

enum class PathKind { not_path, path, simple_path };

inline const char* to_string(PathKind k) {
    switch (k) {
    case PathKind::not_path:
        return "not-path";
    case PathKind::path:
        return "path";
    case PathKind::simple_path:
        return "simple-path";
    }
    return "?";
}

struct PathClassification {
    PathKind kind = PathKind::not_path;
    PointedStructure canonical;
    std::optional<PathDecomposition> path;  // oriented so that x lies at the start
};

namespace detail {

inline std::vector<Element> elements_named(const Structure& m, const std::vector<std::string>& names) {
    std::vector<Element> out;
    for (const auto& v : names) {
        auto e = m.find(v);
        if (!e)
            throw Error("variable " + v + " does not occur in the formula header");
        out.push_back(*e);
    }
    return out;
}

inline PathKind orientation_kind(const PathDecomposition& p, const std::vector<Element>& xs,
                                 const std::vector<Element>& ys) {
    auto in = [](const std::vector<Element>& set, Element e) {
        return std::find(set.begin(), set.end(), e) != set.end();
    };
    bool all_x = std::all_of(xs.begin(), xs.end(), [&](Element e) { return in(p.start, e); });
    bool all_y = std::all_of(ys.begin(), ys.end(), [&](Element e) { return in(p.finish, e); });
    bool some_x = std::any_of(xs.begin(), xs.end(), [&](Element e) { return in(p.start, e); });
    bool some_y = std::any_of(ys.begin(), ys.end(), [&](Element e) { return in(p.finish, e); });
    if (all_x && all_y && !xs.empty() && !ys.empty())
        return PathKind::simple_path;
    if (some_x && some_y)
        return PathKind::path;
    return PathKind::not_path;
}

} // namespace detail

/// Classifies a pp formula with free variables split into `xs` and `ys`
/// (remaining free variables play no role).
inline PathClassification classify_path_formula(const Formula& f, const std::vector<std::string>& xs,
                                                const std::vector<std::string>& ys) {
    if (!is_pp(f))
        throw Error("path classification requires a primitive positive formula");
    for (const auto* side : {&xs, &ys})
        for (const auto& v : *side)
            if (std::find(f.free.begin(), f.free.end(), v) == f.free.end())
                throw Error(v + " is not a free variable of the formula");
    PathClassification out;
    out.canonical = canonical_structure(f);
    auto p = recognize_path(out.canonical.structure);
    if (!p)
        return out;
    auto xe = detail::elements_named(out.canonical.structure, xs);
    auto ye = detail::elements_named(out.canonical.structure, ys);
    auto q = reversed(*p);
    auto kp = detail::orientation_kind(*p, xe, ye);
    auto kq = detail::orientation_kind(q, xe, ye);
    if (kq > kp) {
        out.kind = kq;
        out.path = std::move(q);
    } else {
        out.kind = kp;
        out.path = std::move(*p);
    }
    if (out.kind == PathKind::not_path)
        out.path.reset();
    return out;
}

struct SymmetricWitness {
    std::vector<Element> automorphism;  // of the canonical structure
    std::vector<std::size_t> sigma;     // sigma[i] = σ(i), 0-based
};

/// Automorphism of the canonical structure sending x_i to y_σ(i) and y_i to
/// x_σ⁻¹(i) while fixing every parameter, if one exists.
inline std::optional<std::vector<Element>> swap_automorphism(const PointedStructure& c,
                                                            const std::vector<Element>& xs,
                                                            const std::vector<Element>& ys,
                                                            const std::vector<std::size_t>& sigma) {
    const std::size_t m = xs.size();
    std::vector<std::size_t> inverse(m);
    for (std::size_t i = 0; i < m; ++i)
        inverse[sigma[i]] = i;
    std::vector<std::pair<Element, Element>> fixed;
    for (std::size_t i = 0; i < m; ++i) {
        fixed.emplace_back(xs[i], ys[sigma[i]]);
        fixed.emplace_back(ys[i], xs[inverse[i]]);
    }
    for (Element p : c.parameters)
        fixed.emplace_back(p, p);
    return find_isomorphism(c.structure, c.structure, fixed);
}

inline std::optional<std::vector<Element>> swap_automorphism(const Formula& f, const std::vector<std::string>& xs,
                                                            const std::vector<std::string>& ys,
                                                            const std::vector<std::size_t>& sigma) {
    auto c = canonical_structure(f);
    return swap_automorphism(c, detail::elements_named(c.structure, xs), detail::elements_named(c.structure, ys),
                             sigma);
}

/// Searches for a witness that the simple path formula is symmetric: a
/// palindromic symbol sequence and an automorphism realising some σ ≠ id.
/// Permutations are tried in lexicographic order.
inline std::optional<SymmetricWitness> symmetric_witness(const Formula& f, const std::vector<std::string>& xs,
                                                         const std::vector<std::string>& ys) {
    auto cls = classify_path_formula(f, xs, ys);
    if (cls.kind != PathKind::simple_path)
        throw Error("symmetric_witness requires a simple path formula");
    if (xs.size() != ys.size())
        throw Error("symmetric_witness requires |x| = |y|");
    const auto& p = *cls.path;
    const std::size_t n = p.length();
    for (std::size_t i = 0; i < n; ++i)
        if (p.symbols[i] != p.symbols[n - 1 - i])
            return std::nullopt;
    auto xe = detail::elements_named(cls.canonical.structure, xs);
    auto ye = detail::elements_named(cls.canonical.structure, ys);
    std::vector<std::size_t> sigma(xs.size());
    std::iota(sigma.begin(), sigma.end(), 0);
    while (std::next_permutation(sigma.begin(), sigma.end())) {
        if (auto f_map = swap_automorphism(cls.canonical, xe, ye, sigma))
            return SymmetricWitness{*f_map, sigma};
    }
    return std::nullopt;
}

/// Path type of a graph path u_1..u_n (n >= 2) in the Gaifman graph of `m`.
/// For each consecutive pair the lexicographically least witness (symbol
/// name, position sequence, remaining elements) is used. Free variables are
/// (x, y, z2, ..., z(n-1)); the extra positions of step i are v<i>_<j>.
inline Formula path_type(const Structure& m, const std::vector<Element>& path) {
    if (path.size() < 2)
        throw Error("a path type needs at least two vertices");
    for (Element u : path)
        if (u >= m.size())
            throw Error("path mentions an unknown element");
    const std::size_t n = path.size();
    auto var = [&](std::size_t i) -> std::string {
        if (i == 0)
            return "x";
        if (i == n - 1)
            return "y";
        return "z" + std::to_string(i + 1);
    };
    std::vector<std::size_t> by_name(m.signature().size());
    std::iota(by_name.begin(), by_name.end(), 0);
    std::sort(by_name.begin(), by_name.end(),
              [&](std::size_t a, std::size_t b) { return m.signature()[a].name < m.signature()[b].name; });

    Formula f;
    f.free.push_back("x");
    f.free.push_back("y");
    for (std::size_t i = 1; i + 1 < n; ++i)
        f.free.push_back(var(i));
    std::vector<std::string> bound;
    std::vector<NodePtr> atoms;
    for (std::size_t i = 0; i + 1 < n; ++i) {
        Element u = path[i], w = path[i + 1];
        if (u == w)
            throw Error("consecutive path vertices must differ");
        bool found = false;
        std::size_t best_symbol = 0;
        std::vector<std::size_t> best_perm;
        std::vector<Element> best_rest;
        for (std::size_t s : by_name) {
            for (const auto& t : m.relation(s))
                for (std::size_t p = 0; p < t.size(); ++p)
                    for (std::size_t q = 0; q < t.size(); ++q) {
                        if (p == q || t[p] != u || t[q] != w)
                            continue;
                        std::vector<std::size_t> perm{p, q};
                        std::vector<Element> rest;
                        for (std::size_t r = 0; r < t.size(); ++r)
                            if (r != p && r != q) {
                                perm.push_back(r);
                                rest.push_back(t[r]);
                            }
                        if (!found || perm < best_perm || (perm == best_perm && rest < best_rest)) {
                            found = true;
                            best_symbol = s;
                            best_perm = perm;
                            best_rest = rest;
                        }
                    }
            if (found)
                break;
        }
        if (!found)
            throw Error("consecutive path vertices " + m.label(u) + " and " + m.label(w) +
                        " are not adjacent in the Gaifman graph");
        std::vector<std::string> terms(best_perm.size());
        terms[best_perm[0]] = var(i);
        terms[best_perm[1]] = var(i + 1);
        for (std::size_t j = 2; j < best_perm.size(); ++j) {
            std::string v = "v" + std::to_string(i + 1) + "_" + std::to_string(j - 1);
            terms[best_perm[j]] = v;
            bound.push_back(v);
        }
        atoms.push_back(fo::atom(m.signature()[best_symbol].name, std::move(terms)));
    }
    f.body = fo::exists_if_any(std::move(bound), fo::conjunction_of(std::move(atoms)));
    return f;
}

} // namespace mnip
