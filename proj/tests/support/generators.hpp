#pragma once

// Random and exhaustive instance generators for tests. All take an explicit
// engine so runs are reproducible from a seed.

#include "mnip/formula.hpp"
#include "mnip/interp.hpp"
#include "mnip/relcore.hpp"

#include <functional>
#include <random>
#include <string>
#include <vector>

namespace gen {

using mnip::Element;
using mnip::Formula;
using mnip::NodePtr;
using mnip::Signature;
using mnip::Structure;
using mnip::Tuple;
using Rng = std::mt19937_64;

inline Signature graph_signature() { return Signature({{"E", 2}}); }
inline Signature mixed_signature() { return Signature({{"E", 2}, {"T", 3}}); }

inline std::size_t pick(Rng& rng, std::size_t lo, std::size_t hi) {
    return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

inline bool coin(Rng& rng, double p = 0.5) { return std::bernoulli_distribution(p)(rng); }

// Every tuple is present with probability p.
inline Structure random_structure(Rng& rng, const Signature& sig, std::size_t n, double p) {
    Structure m(sig);
    for (std::size_t i = 0; i < n; ++i)
        m.add_element("e" + std::to_string(i));
    for (std::size_t s = 0; s < sig.size(); ++s) {
        std::size_t ar = sig[s].arity;
        Tuple t(ar, 0);
        if (n == 0)
            continue;
        for (;;) {
            if (coin(rng, p))
                m.add_tuple(s, t);
            std::size_t i = 0;
            while (i < ar && ++t[i] == n)
                t[i++] = 0;
            if (i == ar)
                break;
        }
    }
    return m;
}

// Every structure on exactly n elements (2^(number of possible tuples)).
inline void all_structures(const Signature& sig, std::size_t n, const std::function<void(const Structure&)>& f) {
    std::vector<std::pair<std::size_t, Tuple>> slots;
    for (std::size_t s = 0; s < sig.size(); ++s) {
        std::size_t ar = sig[s].arity;
        Tuple t(ar, 0);
        if (n == 0)
            break;
        for (;;) {
            slots.emplace_back(s, t);
            std::size_t i = 0;
            while (i < ar && ++t[i] == n)
                t[i++] = 0;
            if (i == ar)
                break;
        }
    }
    if (slots.size() > 24)
        throw mnip::Error("too many structures to enumerate");
    for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << slots.size()); ++mask) {
        Structure m(sig);
        for (std::size_t i = 0; i < n; ++i)
            m.add_element("e" + std::to_string(i));
        for (std::size_t b = 0; b < slots.size(); ++b)
            if (mask >> b & 1)
                m.add_tuple(slots[b].first, slots[b].second);
        f(m);
    }
}

// Random conjunctive query with at most max_vars variables and parameters
// in total, 1..max_atoms atoms, and with `qp` up to two disequalities.
inline Formula random_cq(Rng& rng, const Signature& sig, std::size_t max_vars, bool qp, std::size_t max_atoms = 4,
                         std::size_t max_params = 1) {
    std::size_t total = pick(rng, 1, max_vars);
    std::size_t params = std::min(pick(rng, 0, max_params), total - 1);
    std::size_t free = pick(rng, 0, total - params);
    Formula f;
    std::vector<std::string> names;
    for (std::size_t i = 0; i < free; ++i)
        names.push_back("x" + std::to_string(i)), f.free.push_back(names.back());
    for (std::size_t i = 0; i < params; ++i)
        names.push_back("p" + std::to_string(i)), f.params.push_back(names.back());
    std::vector<std::string> bound;
    for (std::size_t i = 0; i + free + params < total; ++i)
        names.push_back("w" + std::to_string(i)), bound.push_back(names.back());
    std::vector<NodePtr> parts;
    std::size_t atoms = pick(rng, 1, max_atoms);
    for (std::size_t a = 0; a < atoms; ++a) {
        const auto& s = sig[pick(rng, 0, sig.size() - 1)];
        std::vector<std::string> terms;
        for (std::size_t k = 0; k < s.arity; ++k)
            terms.push_back(names[pick(rng, 0, names.size() - 1)]);
        parts.push_back(mnip::fo::atom(s.name, terms));
    }
    if (qp && names.size() >= 2) {
        std::size_t d = pick(rng, 0, 2);
        for (std::size_t i = 0; i < d; ++i) {
            std::size_t a = pick(rng, 0, names.size() - 1), b = pick(rng, 0, names.size() - 1);
            parts.push_back(mnip::fo::disequality(names[a], names[b]));
        }
    }
    f.body = mnip::fo::exists_if_any(bound, mnip::fo::conjunction_of(parts));
    return f;
}

// Sentences with quantifier depth at most `depth` and at most three
// connectives on any branch.
inline Formula random_sentence(Rng& rng, const Signature& sig, std::size_t depth) {
    std::vector<std::string> scope;
    std::size_t counter = 0;
    std::function<NodePtr(std::size_t, std::size_t)> build = [&](std::size_t q, std::size_t nest) -> NodePtr {
        using namespace mnip::fo;
        std::size_t options = (q > 0 ? 3 : 0) + (nest > 0 ? 2 : 0) + (scope.empty() ? 0 : 3);
        if (options == 0)
            return coin(rng) ? truth() : falsity();
        std::size_t c = pick(rng, 0, options - 1);
        if (q > 0) {
            if (c < 3) {
                std::string v = "q" + std::to_string(counter++);
                scope.push_back(v);
                auto body = build(q - 1, nest);
                scope.pop_back();
                if (c == 0)
                    return exists({v}, body);
                if (c == 1)
                    return forall({v}, body);
                return exists_more(pick(rng, 0, 2), {v}, body);
            }
            c -= 3;
        }
        if (nest > 0) {
            if (c < 2) {
                auto a = build(q, nest - 1);
                if (c == 0)
                    return negation(a);
                auto b = build(q, nest - 1);
                return coin(rng) ? conjunction({a, b}) : disjunction({a, b});
            }
            c -= 2;
        }
        if (c < 2) {
            const auto& s = sig[pick(rng, 0, sig.size() - 1)];
            std::vector<std::string> terms;
            for (std::size_t k = 0; k < s.arity; ++k)
                terms.push_back(scope[pick(rng, 0, scope.size() - 1)]);
            return atom(s.name, terms);
        }
        return equals(scope[pick(rng, 0, scope.size() - 1)], scope[pick(rng, 0, scope.size() - 1)]);
    };
    Formula f;
    f.body = build(depth, 3);
    return f;
}

// Random quantifier-free-or-shallow formula over the given free variables and
// parameters; used for interpretation domains and relations.
inline NodePtr random_qf(Rng& rng, const Signature& sig, const std::vector<std::string>& vars, std::size_t atoms,
                         bool allow_exists) {
    using namespace mnip::fo;
    std::vector<std::string> scope = vars;
    std::vector<std::string> extra;
    if (allow_exists && coin(rng, 0.4)) {
        extra.push_back("e0");
        scope.push_back("e0");
    }
    std::vector<NodePtr> lits;
    for (std::size_t i = 0; i < atoms; ++i) {
        NodePtr lit;
        if (coin(rng, 0.25)) {
            lit = equals(scope[pick(rng, 0, scope.size() - 1)], scope[pick(rng, 0, scope.size() - 1)]);
        } else {
            const auto& s = sig[pick(rng, 0, sig.size() - 1)];
            std::vector<std::string> terms;
            for (std::size_t k = 0; k < s.arity; ++k)
                terms.push_back(scope[pick(rng, 0, scope.size() - 1)]);
            lit = atom(s.name, terms);
        }
        lits.push_back(coin(rng, 0.3) ? negation(lit) : lit);
    }
    NodePtr body = coin(rng) ? conjunction(lits) : disjunction(lits);
    return exists_if_any(extra, body);
}

// Simple interpretation {E} -> {E} of the given dimension; with a parameter
// the supplier reads the first element.
inline mnip::SimpleInterpretation random_interpretation(Rng& rng, std::size_t dimension, bool parameter) {
    mnip::SimpleInterpretation I;
    I.source = graph_signature();
    I.target = graph_signature();
    I.dimension = dimension;
    std::vector<std::string> u, uv;
    for (std::size_t i = 0; i < dimension; ++i)
        u.push_back("u" + std::to_string(i));
    uv = u;
    for (std::size_t i = 0; i < dimension; ++i)
        uv.push_back("v" + std::to_string(i));
    std::vector<std::string> params;
    if (parameter)
        params.push_back("p");
    auto with_params = [&](std::vector<std::string> vars) {
        vars.insert(vars.end(), params.begin(), params.end());
        return vars;
    };
    auto supplier = mnip::supplier_from_id(parameter ? "header:1" : "none");
    if (coin(rng, 0.3))
        I.domain = {u, params, mnip::fo::truth()};
    else
        I.domain = {u, params, random_qf(rng, I.source, with_params(u), pick(rng, 1, 2), true)};
    I.domain_supplier = supplier;
    I.relations.push_back({"E", {uv, params, random_qf(rng, I.source, with_params(uv), pick(rng, 1, 3), true)}, supplier});
    return I;
}

inline mnip::BipartiteGraph random_bipartite(Rng& rng, std::size_t nu, std::size_t nv, double p = 0.5) {
    mnip::BipartiteGraph g;
    for (std::size_t u = 0; u < nu; ++u)
        g.add_left("u" + std::to_string(u));
    for (std::size_t v = 0; v < nv; ++v)
        g.add_right("v" + std::to_string(v));
    for (std::size_t u = 0; u < nu; ++u)
        for (std::size_t v = 0; v < nv; ++v)
            if (coin(rng, p))
                g.add_edge(u, v);
    return g;
}

// Every bipartite graph with parts of exactly nu and nv vertices.
inline void all_bipartite(std::size_t nu, std::size_t nv, const std::function<void(const mnip::BipartiteGraph&)>& f) {
    std::size_t cells = nu * nv;
    for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << cells); ++mask) {
        mnip::BipartiteGraph g;
        for (std::size_t u = 0; u < nu; ++u)
            g.add_left("u" + std::to_string(u));
        for (std::size_t v = 0; v < nv; ++v)
            g.add_right("v" + std::to_string(v));
        for (std::size_t c = 0; c < cells; ++c)
            if (mask >> c & 1)
                g.add_edge(c / nv, c % nv);
        f(g);
    }
}

inline mnip::Graph complete_graph(std::size_t n, const std::string& prefix = "k") {
    mnip::Graph g;
    for (std::size_t i = 0; i < n; ++i)
        g.add_vertex(prefix + std::to_string(i));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            g.add_edge(static_cast<Element>(i), static_cast<Element>(j));
    return g;
}

// Random recursive tree on a shuffled vertex order: every vertex after the
// first picks a parent among the earlier ones.
inline mnip::Graph random_tree(Rng& rng, std::size_t n) {
    mnip::Graph g;
    for (std::size_t i = 0; i < n; ++i)
        g.add_vertex("t" + std::to_string(i));
    std::vector<Element> order(n);
    for (std::size_t i = 0; i < n; ++i)
        order[i] = static_cast<Element>(i);
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t i = 1; i < n; ++i)
        g.add_edge(order[i], order[pick(rng, 0, i - 1)]);
    return g;
}

inline mnip::Graph random_graph(Rng& rng, std::size_t n, double p, const std::string& prefix = "g") {
    mnip::Graph g;
    for (std::size_t i = 0; i < n; ++i)
        g.add_vertex(prefix + std::to_string(i));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            if (coin(rng, p))
                g.add_edge(static_cast<Element>(i), static_cast<Element>(j));
    return g;
}

// Disjoint union; vertices of b keep their labels with a prefix.
inline mnip::Graph disjoint_union(const mnip::Graph& a, const mnip::Graph& b, const std::string& prefix) {
    mnip::Graph g;
    for (Element v = 0; v < a.size(); ++v)
        g.add_vertex(a.label(v));
    for (Element v = 0; v < b.size(); ++v)
        g.add_vertex(prefix + b.label(v));
    for (auto [u, v] : a.edges())
        g.add_edge(u, v);
    auto off = static_cast<Element>(a.size());
    for (auto [u, v] : b.edges())
        g.add_edge(u + off, v + off);
    return g;
}

} // namespace gen
