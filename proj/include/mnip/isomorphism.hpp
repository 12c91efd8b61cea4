#pragma once

// Isomorphism search between finite structures: colour refinement followed by
// backtracking. Structures are compared symbol-by-name.

#include "mnip/relcore.hpp"

#include <functional>
#include <map>
#include <optional>
#include <span>
#include <utility>
#include <vector>

namespace mnip {

namespace detail {

struct IncidenceIndex {
    // For each element, the (symbol, tuple) pairs it occurs in.
    std::vector<std::vector<std::pair<std::size_t, const Tuple*>>> occurrences;

    explicit IncidenceIndex(const Structure& m) : occurrences(m.size()) {
        for (std::size_t s = 0; s < m.signature().size(); ++s)
            for (const auto& t : m.relation(s)) {
                std::vector<Element> seen;
                for (Element e : t)
                    if (std::find(seen.begin(), seen.end(), e) == seen.end()) {
                        seen.push_back(e);
                        occurrences[e].emplace_back(s, &t);
                    }
            }
    }
};

// Joint colour refinement of two structures. Colours are comparable across
// both; returns false when the colour histograms differ.
inline bool refine_jointly(const Structure& a, const IncidenceIndex& ia, const std::vector<std::size_t>& symbol_map,
                           const Structure& b, const IncidenceIndex& ib, std::vector<std::size_t>& ca,
                           std::vector<std::size_t>& cb) {
    using Key = std::pair<std::size_t, std::vector<std::vector<std::size_t>>>;
    auto histogram_classes = [](const std::vector<std::size_t>& c) {
        std::vector<std::size_t> sorted = c;
        std::sort(sorted.begin(), sorted.end());
        return std::unique(sorted.begin(), sorted.end()) - sorted.begin();
    };
    std::size_t classes = 0;
    for (std::size_t round = 0; round <= a.size() + 1; ++round) {
        std::map<Key, std::size_t> ids;
        auto signature_of = [&](const IncidenceIndex& idx, const std::vector<std::size_t>& col, Element e,
                                bool in_b) {
            Key key{col[e], {}};
            for (auto [s, t] : idx.occurrences[e]) {
                std::vector<std::size_t> row;
                row.push_back(in_b ? s : symbol_map[s]);
                for (Element x : *t) {
                    row.push_back(x == e ? SIZE_MAX : col[x]);
                }
                key.second.push_back(std::move(row));
            }
            std::sort(key.second.begin(), key.second.end());
            return key;
        };
        std::vector<Key> ka, kb;
        for (Element e = 0; e < a.size(); ++e)
            ka.push_back(signature_of(ia, ca, e, false));
        for (Element e = 0; e < b.size(); ++e)
            kb.push_back(signature_of(ib, cb, e, true));
        for (auto& k : ka)
            ids.emplace(k, 0);
        for (auto& k : kb)
            ids.emplace(k, 0);
        std::size_t next = 0;
        for (auto& [k, id] : ids)
            id = next++;
        std::vector<std::size_t> na(a.size()), nb(b.size());
        for (Element e = 0; e < a.size(); ++e)
            na[e] = ids[ka[e]];
        for (Element e = 0; e < b.size(); ++e)
            nb[e] = ids[kb[e]];
        ca = std::move(na);
        cb = std::move(nb);
        std::vector<std::size_t> ha = ca, hb = cb;
        std::sort(ha.begin(), ha.end());
        std::sort(hb.begin(), hb.end());
        if (ha != hb)
            return false;
        auto now = static_cast<std::size_t>(histogram_classes(ca));
        if (now == classes)
            break;
        classes = now;
    }
    return true;
}

} // namespace detail

/// Searches for an isomorphism a -> b (as a vector indexed by elements of a)
/// that maps each `fixed` pair's first element to its second.
inline std::optional<std::vector<Element>> find_isomorphism(const Structure& a, const Structure& b,
                                                            std::span<const std::pair<Element, Element>> fixed = {},
                                                            Budget budget = {}) {
    if (a.size() != b.size() || a.signature().size() != b.signature().size())
        return std::nullopt;
    std::vector<std::size_t> symbol_map(a.signature().size());
    for (std::size_t s = 0; s < a.signature().size(); ++s) {
        auto t = b.signature().find(a.signature()[s].name);
        if (!t || b.signature()[*t].arity != a.signature()[s].arity)
            return std::nullopt;
        if (a.relation(s).size() != b.relation(*t).size())
            return std::nullopt;
        symbol_map[s] = *t;
    }
    const std::size_t n = a.size();
    std::vector<std::size_t> ca(n, 0), cb(n, 0);
    for (auto [x, y] : fixed)
        if (x >= n || y >= n)
            throw Error("fixed pair mentions an unknown element");
    // Repeated images among fixed pairs must agree.
    for (std::size_t i = 0; i < fixed.size(); ++i)
        for (std::size_t j = 0; j < fixed.size(); ++j)
            if ((fixed[i].first == fixed[j].first) != (fixed[i].second == fixed[j].second))
                return std::nullopt;
    for (std::size_t i = 0; i < fixed.size(); ++i) {
        ca[fixed[i].first] = fixed[i].first + 1;
        cb[fixed[i].second] = fixed[i].first + 1;
    }
    detail::IncidenceIndex ia(a), ib(b);
    if (!detail::refine_jointly(a, ia, symbol_map, b, ib, ca, cb))
        return std::nullopt;

    // Smallest colour classes first; fixed elements form singleton classes.
    std::map<std::size_t, std::size_t> class_size;
    for (auto c : ca)
        ++class_size[c];
    std::vector<Element> order(n);
    for (Element e = 0; e < n; ++e)
        order[e] = e;
    std::stable_sort(order.begin(), order.end(), [&](Element x, Element y) {
        return class_size[ca[x]] < class_size[ca[y]];
    });

    std::vector<std::optional<Element>> map(n);
    std::vector<bool> used(n, false);
    detail::NodeCounter counter(budget, "isomorphism search");

    auto consistent = [&](Element x) {
        for (auto [s, t] : ia.occurrences[x]) {
            Tuple image;
            image.reserve(t->size());
            bool complete = true;
            for (Element e : *t) {
                if (!map[e]) {
                    complete = false;
                    break;
                }
                image.push_back(*map[e]);
            }
            if (complete && !b.holds(symbol_map[s], image))
                return false;
        }
        return true;
    };

    std::function<bool(std::size_t)> extend = [&](std::size_t depth) -> bool {
        if (depth == n)
            return true;
        counter.tick();
        Element x = order[depth];
        for (Element y = 0; y < n; ++y) {
            if (used[y] || cb[y] != ca[x])
                continue;
            map[x] = y;
            used[y] = true;
            if (consistent(x) && extend(depth + 1))
                return true;
            used[y] = false;
            map[x].reset();
        }
        return false;
    };
    if (!extend(0))
        return std::nullopt;
    std::vector<Element> out(n);
    for (Element e = 0; e < n; ++e)
        out[e] = *map[e];
    return out;
}

inline bool are_isomorphic(const Structure& a, const Structure& b,
                           std::span<const std::pair<Element, Element>> fixed = {}, Budget budget = {}) {
    return find_isomorphism(a, b, fixed, budget).has_value();
}

} // namespace mnip
