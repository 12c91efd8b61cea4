#pragma once

// Primitive positive and quasi-positive fragments, canonical structures and
// canonical formulas.

#include "mnip/formula.hpp"
#include "mnip/relcore.hpp"

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace mnip {

struct AtomOccurrence {
    std::string symbol;
    std::vector<std::string> terms;

    bool operator==(const AtomOccurrence&) const = default;
};

/// A formula in the shape  exists bound (conjunction of atoms and disequalities).
struct ConjunctiveQuery {
    std::vector<std::string> free;
    std::vector<std::string> params;
    std::vector<std::string> bound;
    std::vector<AtomOccurrence> atoms;
    std::vector<std::pair<std::string, std::string>> disequalities;
};

namespace detail {

inline bool collect_conjuncts(const NodePtr& n, ConjunctiveQuery& q) {
    switch (n->kind) {
    case NodeKind::atom:
        q.atoms.push_back({n->symbol, n->terms});
        return true;
    case NodeKind::conjunction:
        for (const auto& c : n->children)
            if (!collect_conjuncts(c, q))
                return false;
        return true;
    case NodeKind::negation:
        if (n->children[0]->kind != NodeKind::equals)
            return false;
        q.disequalities.emplace_back(n->children[0]->terms[0], n->children[0]->terms[1]);
        return true;
    default:
        return false;
    }
}

} // namespace detail

/// Decomposes a quasi-positive formula (a block of existential quantifiers,
/// possibly nested, over a conjunction of relation atoms and negated
/// equalities). Absent when the formula has any other shape.
inline std::optional<ConjunctiveQuery> as_conjunctive(const Formula& f) {
    ConjunctiveQuery q{f.free, f.params, {}, {}, {}};
    NodePtr n = f.body;
    while (n->kind == NodeKind::exists) {
        q.bound.insert(q.bound.end(), n->terms.begin(), n->terms.end());
        n = n->children[0];
    }
    if (!detail::collect_conjuncts(n, q))
        return std::nullopt;
    return q;
}

inline bool is_quasi_positive(const Formula& f) { return as_conjunctive(f).has_value(); }

inline bool is_pp(const Formula& f) {
    auto q = as_conjunctive(f);
    return q && q->disequalities.empty();
}

inline Formula to_formula(const ConjunctiveQuery& q) {
    std::vector<NodePtr> parts;
    for (const auto& a : q.atoms)
        parts.push_back(fo::atom(a.symbol, a.terms));
    for (const auto& [a, b] : q.disequalities)
        parts.push_back(fo::disequality(a, b));
    return {q.free, q.params, fo::exists_if_any(q.bound, fo::conjunction_of(std::move(parts)))};
}

struct StrippedFormula {
    Formula formula;
    std::vector<std::pair<std::string, std::string>> removed;
};

/// Removes the disequality conjuncts of a quasi-positive formula.
inline StrippedFormula strip_disequalities(const Formula& f) {
    auto q = as_conjunctive(f);
    if (!q)
        throw Error("formula is not quasi-positive");
    if (q->disequalities.empty())
        return {f, {}};
    auto removed = std::move(q->disequalities);
    q->disequalities.clear();
    return {to_formula(*q), std::move(removed)};
}

/// Canonical structure of a pp formula: one element per variable (free
/// variables first, then parameters, then bound variables) and one tuple per
/// atom. Anchors are the free variables, in order.
inline PointedStructure canonical_structure(const Formula& f, const Signature& signature) {
    auto q = as_conjunctive(f);
    if (!q || !q->disequalities.empty())
        throw Error("canonical structure requires a primitive positive formula");
    PointedStructure p{Structure(signature), {}, {}};
    for (const auto& v : q->free)
        p.anchors.push_back(p.structure.add_element(v));
    for (const auto& v : q->params)
        p.parameters.push_back(p.structure.add_element(v));
    for (const auto& v : q->bound)
        p.structure.add_element(v);
    for (const auto& a : q->atoms) {
        auto s = signature.find(a.symbol);
        if (!s)
            throw Error("relation symbol " + a.symbol + " is not in the signature");
        Tuple t;
        for (const auto& v : a.terms)
            t.push_back(p.structure.element(v));
        p.structure.add_tuple(*s, std::move(t));
    }
    return p;
}

inline PointedStructure canonical_structure(const Formula& f) {
    return canonical_structure(f, symbols_of(f.body));
}

/// Canonical formula of a pointed structure: anchors become free variables,
/// parameter elements become parameters, all other elements are existentially
/// quantified. Element labels serve as names when they are valid identifiers.
inline Formula canonical_formula(const PointedStructure& p) {
    const Structure& m = p.structure;
    std::vector<int> role(m.size(), 0);
    for (Element a : p.anchors) {
        if (a >= m.size())
            throw Error("anchor outside the structure");
        if (role[a] != 0)
            throw Error("anchors must be distinct");
        role[a] = 1;
    }
    for (Element e : p.parameters) {
        if (e >= m.size())
            throw Error("parameter outside the structure");
        if (role[e] != 0)
            throw Error("parameter elements must be distinct from each other and from anchors");
        role[e] = 2;
    }
    bool labels_ok = true;
    for (Element e = 0; e < m.size(); ++e)
        labels_ok = labels_ok && is_valid_identifier(m.label(e));
    auto name = [&](Element e) { return labels_ok ? m.label(e) : "v" + std::to_string(e); };

    Formula f;
    for (Element a : p.anchors)
        f.free.push_back(name(a));
    for (Element e : p.parameters)
        f.params.push_back(name(e));
    std::vector<std::string> bound;
    for (Element e = 0; e < m.size(); ++e)
        if (role[e] == 0)
            bound.push_back(name(e));
    std::vector<NodePtr> atoms;
    for (std::size_t s = 0; s < m.signature().size(); ++s)
        for (const auto& t : m.relation(s)) {
            std::vector<std::string> terms;
            for (Element e : t)
                terms.push_back(name(e));
            atoms.push_back(fo::atom(m.signature()[s].name, std::move(terms)));
        }
    f.body = fo::exists_if_any(std::move(bound), fo::conjunction_of(std::move(atoms)));
    return f;
}

} // namespace mnip
