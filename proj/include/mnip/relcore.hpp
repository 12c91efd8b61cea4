#pragma once

// Finite relational signatures and structures, graphs, and the basic
// operations on them (Gaifman graphs, subdivisions, substructures,
// neighbourhoods, equality types).

#include "mnip/error.hpp"

#include <algorithm>
#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace mnip {

using Element = std::uint32_t;
using Tuple = std::vector<Element>;

struct Symbol {
    std::string name;
    std::size_t arity = 0;

    bool operator==(const Symbol&) const = default;
};

inline bool is_valid_name(std::string_view name) {
    if (name.empty())
        return false;
    for (char ch : name) {
        auto c = static_cast<unsigned char>(ch);
        if (c <= ' ' || ch == '(' || ch == ')' || ch == '#')
            return false;
    }
    return true;
}

class Signature {
public:
    Signature() = default;

    explicit Signature(std::vector<Symbol> symbols) {
        for (auto& s : symbols)
            add(std::move(s.name), s.arity);
    }

    std::size_t add(std::string name, std::size_t arity) {
        if (!is_valid_name(name))
            throw Error("invalid relation symbol name '" + name + "'");
        if (arity == 0)
            throw Error("relation symbol " + name + " must have positive arity");
        if (find(name))
            throw Error("duplicate relation symbol " + name);
        symbols_.push_back({std::move(name), arity});
        return symbols_.size() - 1;
    }

    std::size_t size() const noexcept { return symbols_.size(); }
    bool empty() const noexcept { return symbols_.empty(); }
    const Symbol& operator[](std::size_t i) const { return symbols_.at(i); }
    const std::vector<Symbol>& symbols() const noexcept { return symbols_; }

    std::optional<std::size_t> find(std::string_view name) const {
        for (std::size_t i = 0; i < symbols_.size(); ++i)
            if (symbols_[i].name == name)
                return i;
        return std::nullopt;
    }

    std::size_t index(std::string_view name) const {
        if (auto i = find(name))
            return *i;
        throw Error("unknown relation symbol " + std::string(name));
    }

    std::size_t max_arity() const {
        std::size_t m = 0;
        for (const auto& s : symbols_)
            m = std::max(m, s.arity);
        return m;
    }

    bool operator==(const Signature&) const = default;

private:
    std::vector<Symbol> symbols_;
};

/// Element names. Names are unique, non-empty and free of whitespace,
/// parentheses and '#', so that every text format can carry them.
class LabelTable {
public:
    Element add(std::string name) {
        if (name.empty())
            return add_fresh(std::to_string(names_.size()));
        if (!is_valid_name(name))
            throw Error("invalid element name '" + name + "'");
        auto id = static_cast<Element>(names_.size());
        if (!index_.emplace(name, id).second)
            throw Error("duplicate element name " + name);
        names_.push_back(std::move(name));
        return id;
    }

    Element add_fresh(const std::string& base) {
        std::string name = base;
        for (std::size_t suffix = 1; index_.count(name); ++suffix)
            name = base + "'" + std::to_string(suffix);
        return add(std::move(name));
    }

    std::size_t size() const noexcept { return names_.size(); }
    const std::string& operator[](Element e) const { return names_.at(e); }

    std::optional<Element> find(std::string_view name) const {
        auto it = index_.find(std::string(name));
        if (it == index_.end())
            return std::nullopt;
        return it->second;
    }

    bool operator==(const LabelTable& other) const { return names_ == other.names_; }

private:
    std::vector<std::string> names_;
    std::unordered_map<std::string, Element> index_;
};

/// A finite structure over a relational signature. Elements are the dense ids
/// 0..size()-1; every element carries a unique label.
class Structure {
public:
    Structure() = default;
    explicit Structure(Signature signature)
        : signature_(std::move(signature)), relations_(signature_.size()) {}

    Element add_element(std::string label = {}) { return labels_.add(std::move(label)); }
    Element add_fresh_element(const std::string& base) { return labels_.add_fresh(base); }

    void add_tuple(std::size_t symbol, Tuple tuple) {
        if (symbol >= relations_.size())
            throw Error("relation symbol index out of range");
        if (tuple.size() != signature_[symbol].arity)
            throw Error("tuple length " + std::to_string(tuple.size()) + " does not match arity of " +
                        signature_[symbol].name);
        for (Element e : tuple)
            if (e >= size())
                throw Error("tuple mentions undeclared element " + std::to_string(e));
        relations_[symbol].insert(std::move(tuple));
    }

    void add_tuple(std::string_view symbol, Tuple tuple) { add_tuple(signature_.index(symbol), std::move(tuple)); }

    std::size_t size() const noexcept { return labels_.size(); }
    const Signature& signature() const noexcept { return signature_; }
    const LabelTable& labels() const noexcept { return labels_; }
    const std::string& label(Element e) const { return labels_[e]; }
    std::optional<Element> find(std::string_view label) const { return labels_.find(label); }

    Element element(std::string_view label) const {
        if (auto e = labels_.find(label))
            return *e;
        throw Error("unknown element " + std::string(label));
    }

    const std::set<Tuple>& relation(std::size_t symbol) const { return relations_.at(symbol); }
    const std::set<Tuple>& relation(std::string_view name) const { return relations_.at(signature_.index(name)); }

    bool holds(std::size_t symbol, const Tuple& tuple) const { return relations_.at(symbol).count(tuple) != 0; }

    std::size_t tuple_count() const {
        std::size_t total = 0;
        for (const auto& r : relations_)
            total += r.size();
        return total;
    }

    bool operator==(const Structure&) const = default;

private:
    Signature signature_;
    LabelTable labels_;
    std::vector<std::set<Tuple>> relations_;
};

/// Pointed structure: a structure with a tuple of distinguished elements and
/// the elements naming parameters.
struct PointedStructure {
    Structure structure;
    std::vector<Element> anchors;
    std::vector<Element> parameters;
};

/// Simple undirected graph; loops are unrepresentable.
class Graph {
public:
    Element add_vertex(std::string label = {}) {
        Element v = labels_.add(std::move(label));
        adjacency_.emplace_back();
        return v;
    }

    Element add_fresh_vertex(const std::string& base) {
        Element v = labels_.add_fresh(base);
        adjacency_.emplace_back();
        return v;
    }

    void add_edge(Element u, Element v) {
        if (u >= size() || v >= size())
            throw Error("edge mentions unknown vertex");
        if (u == v)
            throw Error("graphs are irreflexive; loop at " + labels_[u]);
        insert_sorted(adjacency_[u], v);
        insert_sorted(adjacency_[v], u);
    }

    std::size_t size() const noexcept { return adjacency_.size(); }
    const LabelTable& labels() const noexcept { return labels_; }
    const std::string& label(Element v) const { return labels_[v]; }
    std::optional<Element> find(std::string_view label) const { return labels_.find(label); }

    Element vertex(std::string_view label) const {
        if (auto v = labels_.find(label))
            return *v;
        throw Error("unknown vertex " + std::string(label));
    }

    const std::vector<Element>& neighbors(Element v) const { return adjacency_.at(v); }
    std::size_t degree(Element v) const { return adjacency_.at(v).size(); }

    bool adjacent(Element u, Element v) const {
        const auto& n = adjacency_.at(u);
        return std::binary_search(n.begin(), n.end(), v);
    }

    /// Edges as pairs (u, v) with u < v, in increasing order.
    std::vector<std::pair<Element, Element>> edges() const {
        std::vector<std::pair<Element, Element>> out;
        for (Element u = 0; u < size(); ++u)
            for (Element v : adjacency_[u])
                if (u < v)
                    out.emplace_back(u, v);
        return out;
    }

    std::size_t edge_count() const {
        std::size_t twice = 0;
        for (const auto& n : adjacency_)
            twice += n.size();
        return twice / 2;
    }

    bool operator==(const Graph&) const = default;

private:
    static void insert_sorted(std::vector<Element>& v, Element x) {
        auto it = std::lower_bound(v.begin(), v.end(), x);
        if (it == v.end() || *it != x)
            v.insert(it, x);
    }

    LabelTable labels_;
    std::vector<std::vector<Element>> adjacency_;
};

/// Bipartite graph G = (U, V; E) with E a subset of U x V. Vertices of each
/// part are indexed 0..n-1; names are unique across both parts.
class BipartiteGraph {
public:
    std::size_t add_left(std::string label) { return add(left_, std::move(label)); }
    std::size_t add_right(std::string label) { return add(right_, std::move(label)); }

    void add_edge(std::size_t u, std::size_t v) {
        if (u >= left_.size() || v >= right_.size())
            throw Error("bipartite edge endpoint outside its part");
        edges_.emplace(u, v);
    }

    void remove_edge(std::size_t u, std::size_t v) { edges_.erase({u, v}); }

    std::size_t left_size() const noexcept { return left_.size(); }
    std::size_t right_size() const noexcept { return right_.size(); }
    const std::string& left_label(std::size_t u) const { return left_.at(u); }
    const std::string& right_label(std::size_t v) const { return right_.at(v); }
    const std::set<std::pair<std::size_t, std::size_t>>& edges() const noexcept { return edges_; }
    bool has_edge(std::size_t u, std::size_t v) const { return edges_.count({u, v}) != 0; }

    std::optional<std::size_t> find_left(std::string_view label) const { return find_in(left_, label); }
    std::optional<std::size_t> find_right(std::string_view label) const { return find_in(right_, label); }

    bool operator==(const BipartiteGraph&) const = default;

private:
    std::size_t add(std::vector<std::string>& part, std::string label) {
        if (label.empty())
            label = (&part == &left_ ? "u" : "v") + std::to_string(part.size());
        if (!is_valid_name(label))
            throw Error("invalid vertex name '" + label + "'");
        if (find_in(left_, label) || find_in(right_, label))
            throw Error("duplicate vertex name " + label + " (parts must be disjoint)");
        part.push_back(std::move(label));
        return part.size() - 1;
    }

    static std::optional<std::size_t> find_in(const std::vector<std::string>& part, std::string_view label) {
        for (std::size_t i = 0; i < part.size(); ++i)
            if (part[i] == label)
                return i;
        return std::nullopt;
    }

    std::vector<std::string> left_;
    std::vector<std::string> right_;
    std::set<std::pair<std::size_t, std::size_t>> edges_;
};

/// The equality pattern of a tuple: the pairs (i, j), i < j, of positions
/// holding the same value. Positions are 0-based.
struct EqualityType {
    std::size_t length = 0;
    std::vector<std::pair<std::size_t, std::size_t>> pairs;

    /// Builds a type from explicit pairs; throws unless they already form a
    /// transitively closed relation.
    static EqualityType from_pairs(std::size_t length, std::vector<std::pair<std::size_t, std::size_t>> pairs) {
        std::set<std::pair<std::size_t, std::size_t>> set;
        for (auto [i, j] : pairs) {
            if (i >= j || j >= length)
                throw Error("equality pair out of range or not ordered");
            set.emplace(i, j);
        }
        auto same = [&](std::size_t a, std::size_t b) {
            return a == b || set.count({std::min(a, b), std::max(a, b)}) != 0;
        };
        for (std::size_t a = 0; a < length; ++a)
            for (std::size_t b = 0; b < length; ++b)
                for (std::size_t c = 0; c < length; ++c)
                    if (same(a, b) && same(b, c) && !same(a, c))
                        throw Error("equality pairs are not transitively closed");
        return {length, {set.begin(), set.end()}};
    }

    bool operator==(const EqualityType&) const = default;
    auto operator<=>(const EqualityType&) const = default;
};

inline EqualityType equality_type(std::span<const Element> tuple) {
    EqualityType t{tuple.size(), {}};
    for (std::size_t i = 0; i < tuple.size(); ++i)
        for (std::size_t j = i + 1; j < tuple.size(); ++j)
            if (tuple[i] == tuple[j])
                t.pairs.emplace_back(i, j);
    return t;
}

inline Graph gaifman(const Structure& m) {
    Graph g;
    for (Element e = 0; e < m.size(); ++e)
        g.add_vertex(m.label(e));
    for (std::size_t s = 0; s < m.signature().size(); ++s)
        for (const auto& t : m.relation(s))
            for (std::size_t i = 0; i < t.size(); ++i)
                for (std::size_t j = i + 1; j < t.size(); ++j)
                    if (t[i] != t[j])
                        g.add_edge(t[i], t[j]);
    return g;
}

/// r-subdivision: every edge becomes a path with r fresh internal vertices.
/// Original vertices keep their ids; internal vertices follow in edge order.
inline Graph subdivide(const Graph& g, std::size_t r) {
    Graph out;
    for (Element v = 0; v < g.size(); ++v)
        out.add_vertex(g.label(v));
    for (auto [u, v] : g.edges()) {
        Element prev = u;
        for (std::size_t k = 1; k <= r; ++k) {
            Element w = out.add_fresh_vertex(g.label(u) + "~" + g.label(v) + "." + std::to_string(k));
            out.add_edge(prev, w);
            prev = w;
        }
        out.add_edge(prev, v);
    }
    return out;
}

/// Sorted, duplicate-free copy of an element set, checked against a universe.
inline std::vector<Element> normalize_subset(std::span<const Element> subset, std::size_t universe) {
    std::vector<Element> out(subset.begin(), subset.end());
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    if (!out.empty() && out.back() >= universe)
        throw Error("unknown element id " + std::to_string(out.back()));
    return out;
}

/// Old id -> new id for a restriction to `subset`; new ids follow the
/// increasing order of the retained old ids.
inline std::vector<std::optional<Element>> restriction_index(std::span<const Element> subset, std::size_t universe) {
    std::vector<std::optional<Element>> index(universe);
    auto kept = normalize_subset(subset, universe);
    for (std::size_t i = 0; i < kept.size(); ++i)
        index[kept[i]] = static_cast<Element>(i);
    return index;
}

/// M[A]. Retained elements are renumbered in increasing order of their old
/// ids (see restriction_index); labels carry over.
inline Structure induced_substructure(const Structure& m, std::span<const Element> subset) {
    auto kept = normalize_subset(subset, m.size());
    auto index = restriction_index(kept, m.size());
    Structure out(m.signature());
    for (Element e : kept)
        out.add_element(m.label(e));
    for (std::size_t s = 0; s < m.signature().size(); ++s)
        for (const auto& t : m.relation(s)) {
            Tuple mapped;
            mapped.reserve(t.size());
            for (Element e : t) {
                if (!index[e])
                    break;
                mapped.push_back(*index[e]);
            }
            if (mapped.size() == t.size())
                out.add_tuple(s, std::move(mapped));
        }
    return out;
}

/// Weak substructure on `subset` keeping exactly the tuples in `keep`
/// (indexed by symbol, in the ids of `m`). Renumbering as induced_substructure.
inline Structure weak_substructure(const Structure& m, std::span<const Element> subset,
                                   const std::vector<std::set<Tuple>>& keep) {
    auto kept = normalize_subset(subset, m.size());
    auto index = restriction_index(kept, m.size());
    if (keep.size() > m.signature().size())
        throw Error("kept tuples name more symbols than the signature has");
    Structure out(m.signature());
    for (Element e : kept)
        out.add_element(m.label(e));
    for (std::size_t s = 0; s < keep.size(); ++s)
        for (const auto& t : keep[s]) {
            if (!m.holds(s, t))
                throw Error("kept tuple is not a tuple of " + m.signature()[s].name);
            Tuple mapped;
            for (Element e : t) {
                if (!index[e])
                    throw Error("kept tuple touches element " + m.label(e) + " outside the retained set");
                mapped.push_back(*index[e]);
            }
            out.add_tuple(s, std::move(mapped));
        }
    return out;
}

/// Vertices within distance `radius` of `sources`; no radius means the union
/// of the connected components meeting `sources`.
inline std::vector<Element> neighborhood(const Graph& g, std::span<const Element> sources,
                                         std::optional<std::size_t> radius) {
    std::vector<std::size_t> dist(g.size(), SIZE_MAX);
    std::deque<Element> queue;
    for (Element s : sources) {
        if (s >= g.size())
            throw Error("unknown vertex id " + std::to_string(s));
        if (dist[s] != 0) {
            dist[s] = 0;
            queue.push_back(s);
        }
    }
    while (!queue.empty()) {
        Element u = queue.front();
        queue.pop_front();
        if (radius && dist[u] >= *radius)
            continue;
        for (Element w : g.neighbors(u))
            if (dist[w] == SIZE_MAX) {
                dist[w] = dist[u] + 1;
                queue.push_back(w);
            }
    }
    std::vector<Element> out;
    for (Element v = 0; v < g.size(); ++v)
        if (dist[v] != SIZE_MAX)
            out.push_back(v);
    return out;
}

/// Graph as an {E}-structure with E symmetric.
inline Structure graph_to_structure(const Graph& g, const std::string& edge_symbol = "E") {
    Structure m(Signature({{edge_symbol, 2}}));
    for (Element v = 0; v < g.size(); ++v)
        m.add_element(g.label(v));
    for (auto [u, v] : g.edges()) {
        m.add_tuple(0, {u, v});
        m.add_tuple(0, {v, u});
    }
    return m;
}

/// Inverse of graph_to_structure; the binary relation must be symmetric and
/// irreflexive.
inline Graph structure_to_graph(const Structure& m, const std::string& edge_symbol = "E") {
    auto s = m.signature().index(edge_symbol);
    if (m.signature()[s].arity != 2)
        throw Error("edge symbol must be binary");
    Graph g;
    for (Element e = 0; e < m.size(); ++e)
        g.add_vertex(m.label(e));
    for (const auto& t : m.relation(s)) {
        if (t[0] == t[1])
            throw Error("relation has a loop at " + m.label(t[0]));
        if (!m.holds(s, {t[1], t[0]}))
            throw Error("relation is not symmetric at (" + m.label(t[0]) + ", " + m.label(t[1]) + ")");
        g.add_edge(t[0], t[1]);
    }
    return g;
}

/// Bipartite graph as an {E}-structure: left part first, then right part.
/// With `symmetric` every edge is stored in both directions.
inline Structure bipartite_to_structure(const BipartiteGraph& g, bool symmetric = false) {
    Structure m(Signature({{"E", 2}}));
    for (std::size_t u = 0; u < g.left_size(); ++u)
        m.add_element(g.left_label(u));
    for (std::size_t v = 0; v < g.right_size(); ++v)
        m.add_element(g.right_label(v));
    auto offset = static_cast<Element>(g.left_size());
    for (auto [u, v] : g.edges()) {
        m.add_tuple(0, {static_cast<Element>(u), static_cast<Element>(v) + offset});
        if (symmetric)
            m.add_tuple(0, {static_cast<Element>(v) + offset, static_cast<Element>(u)});
    }
    return m;
}

} // namespace mnip
