#pragma once

// Homomorphism search from a small pattern (a canonical structure) into a
// target structure: backtracking over pattern variables with candidates drawn
// from already-constrained atoms and forward checking of partially assigned
// atoms. Supports fixed images, disequalities, projection counting and
// lexicographically least solutions.

#include "mnip/relcore.hpp"

#include <algorithm>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <vector>

namespace mnip {

namespace detail {

inline constexpr Element kUnassigned = std::numeric_limits<Element>::max();

struct PatternAtom {
    std::size_t symbol = 0;  // index into the target signature
    std::vector<std::size_t> vars;
};

struct Pattern {
    std::size_t vars = 0;
    std::vector<PatternAtom> atoms;
    std::vector<std::pair<std::size_t, std::size_t>> disequalities;
    bool unsatisfiable = false;
};

/// Per symbol and position, the tuples containing a given element there.
class TargetIndex {
public:
    explicit TargetIndex(const Structure& t) : target_(&t) {
        const auto& sig = t.signature();
        tuples_.resize(sig.size());
        by_position_.resize(sig.size());
        for (std::size_t s = 0; s < sig.size(); ++s) {
            tuples_[s].assign(t.relation(s).begin(), t.relation(s).end());
            by_position_[s].assign(sig[s].arity, std::vector<std::vector<std::uint32_t>>(t.size()));
            for (std::uint32_t i = 0; i < tuples_[s].size(); ++i)
                for (std::size_t p = 0; p < sig[s].arity; ++p)
                    by_position_[s][p][tuples_[s][i][p]].push_back(i);
        }
    }

    const Structure& target() const { return *target_; }
    std::size_t size() const { return target_->size(); }
    const std::vector<Tuple>& tuples(std::size_t s) const { return tuples_[s]; }
    const std::vector<std::uint32_t>& at(std::size_t s, std::size_t p, Element e) const { return by_position_[s][p][e]; }

private:
    const Structure* target_;
    std::vector<std::vector<Tuple>> tuples_;
    std::vector<std::vector<std::vector<std::vector<std::uint32_t>>>> by_position_;
};

class HomSearch {
public:
    HomSearch(const Pattern& pattern, const TargetIndex& index, Budget budget = {})
        : p_(pattern), t_(index), counter_(budget, "homomorphism search"), var_atoms_(pattern.vars),
          var_diseq_(pattern.vars), support_(pattern.vars) {
        for (std::size_t a = 0; a < p_.atoms.size(); ++a)
            for (auto v : p_.atoms[a].vars)
                if (var_atoms_[v].empty() || var_atoms_[v].back() != a)
                    var_atoms_[v].push_back(a);
        for (auto [a, b] : p_.disequalities) {
            var_diseq_[a].push_back(b);
            var_diseq_[b].push_back(a);
        }
    }

    /// Extends `assignment` (kUnassigned marks free slots) to a full solution.
    /// With `order`, variables are assigned in that order and candidates in
    /// increasing order, so the first solution found is lexicographically
    /// least with respect to `order`.
    bool solve(std::vector<Element>& assignment, const std::vector<std::size_t>* order = nullptr) {
        if (!prepare(assignment))
            return false;
        std::vector<std::size_t> pending;
        for (std::size_t v = 0; v < p_.vars; ++v)
            if (assignment[v] == kUnassigned)
                pending.push_back(v);
        if (order) {
            std::vector<std::size_t> ordered;
            for (auto v : *order)
                if (assignment[v] == kUnassigned)
                    ordered.push_back(v);
            for (auto v : pending)
                if (std::find(ordered.begin(), ordered.end(), v) == ordered.end())
                    ordered.push_back(v);
            return dfs_static(assignment, ordered, 0);
        }
        return dfs(assignment, pending);
    }

    /// Calls `emit` once per distinct tuple of values on `counted` that extends
    /// to a solution; stops early when `emit` returns false.
    void project(std::vector<Element> assignment, const std::vector<std::size_t>& counted,
                 const std::function<bool(const std::vector<Element>&)>& emit) {
        if (!prepare(assignment))
            return;
        std::vector<std::size_t> first, rest;
        for (std::size_t v = 0; v < p_.vars; ++v) {
            if (assignment[v] != kUnassigned)
                continue;
            if (std::find(counted.begin(), counted.end(), v) != counted.end())
                first.push_back(v);
            else
                rest.push_back(v);
        }
        bool stop = false;
        project_dfs(assignment, first, rest, counted, emit, stop);
    }

    /// Number of distinct projections onto `counted`, capped at limit + 1.
    std::size_t count(std::vector<Element> assignment, const std::vector<std::size_t>& counted, std::size_t limit) {
        std::size_t n = 0;
        project(std::move(assignment), counted, [&](const std::vector<Element>&) { return ++n <= limit; });
        return n;
    }

private:
    bool prepare(std::vector<Element>& assignment) {
        if (assignment.size() != p_.vars)
            assignment.resize(p_.vars, kUnassigned);
        if (p_.unsatisfiable)
            return false;
        for (std::size_t v = 0; v < p_.vars; ++v)
            if (assignment[v] != kUnassigned) {
                if (assignment[v] >= t_.size())
                    throw Error("fixed image outside the target structure");
                if (!consistent(assignment, v))
                    return false;
            }
        return true;
    }

    bool diseq_ok(const std::vector<Element>& a, std::size_t v) const {
        for (auto w : var_diseq_[v])
            if (w == v || (a[w] != kUnassigned && a[w] == a[v]))
                return false;
        return true;
    }

    // Is there a target tuple agreeing with all assigned positions of atom a?
    bool atom_supported(const std::vector<Element>& a, const PatternAtom& atom) const {
        std::size_t best_pos = SIZE_MAX, best_len = SIZE_MAX;
        for (std::size_t p = 0; p < atom.vars.size(); ++p) {
            Element e = a[atom.vars[p]];
            if (e == kUnassigned)
                continue;
            std::size_t len = t_.at(atom.symbol, p, e).size();
            if (len < best_len) {
                best_len = len;
                best_pos = p;
            }
        }
        if (best_pos == SIZE_MAX)
            return !t_.tuples(atom.symbol).empty();
        const auto& list = t_.at(atom.symbol, best_pos, a[atom.vars[best_pos]]);
        const auto& tuples = t_.tuples(atom.symbol);
        for (auto id : list)
            if (matches(a, atom, tuples[id]))
                return true;
        return false;
    }

    static bool matches(const std::vector<Element>& a, const PatternAtom& atom, const Tuple& t) {
        for (std::size_t p = 0; p < atom.vars.size(); ++p) {
            Element e = a[atom.vars[p]];
            if (e != kUnassigned && e != t[p])
                return false;
            for (std::size_t q = p + 1; q < atom.vars.size(); ++q)
                if (atom.vars[q] == atom.vars[p] && t[q] != t[p])
                    return false;
        }
        return true;
    }

    bool consistent(const std::vector<Element>& a, std::size_t v) const {
        if (!diseq_ok(a, v))
            return false;
        for (auto ai : var_atoms_[v])
            if (!atom_supported(a, p_.atoms[ai]))
                return false;
        return true;
    }

    const std::vector<Element>& support(std::size_t v) {
        if (!support_[v]) {
            std::vector<Element> out;
            for (Element e = 0; e < t_.size(); ++e) {
                bool ok = true;
                for (auto ai : var_atoms_[v]) {
                    const auto& atom = p_.atoms[ai];
                    for (std::size_t p = 0; p < atom.vars.size() && ok; ++p)
                        if (atom.vars[p] == v && t_.at(atom.symbol, p, e).empty())
                            ok = false;
                }
                if (ok)
                    out.push_back(e);
            }
            support_[v] = std::move(out);
        }
        return *support_[v];
    }

    std::vector<Element> candidates(const std::vector<Element>& a, std::size_t v) {
        // Cheapest atom with an assigned position containing v.
        const PatternAtom* best = nullptr;
        std::size_t best_pos = 0, best_len = SIZE_MAX;
        for (auto ai : var_atoms_[v]) {
            const auto& atom = p_.atoms[ai];
            for (std::size_t p = 0; p < atom.vars.size(); ++p) {
                Element e = a[atom.vars[p]];
                if (e == kUnassigned)
                    continue;
                std::size_t len = t_.at(atom.symbol, p, e).size();
                if (len < best_len) {
                    best = &atom;
                    best_pos = p;
                    best_len = len;
                }
            }
        }
        if (!best)
            return support(v);
        std::vector<Element> out;
        const auto& tuples = t_.tuples(best->symbol);
        std::size_t vpos = 0;
        while (best->vars[vpos] != v)
            ++vpos;
        for (auto id : t_.at(best->symbol, best_pos, a[best->vars[best_pos]])) {
            const auto& t = tuples[id];
            if (matches(a, *best, t))
                out.push_back(t[vpos]);
        }
        std::sort(out.begin(), out.end());
        out.erase(std::unique(out.begin(), out.end()), out.end());
        return out;
    }

    std::size_t pick(const std::vector<Element>& a, const std::vector<std::size_t>& pending) const {
        std::size_t best = SIZE_MAX, best_score = 0;
        for (auto v : pending) {
            if (a[v] != kUnassigned)
                continue;
            std::size_t score = 1;
            for (auto ai : var_atoms_[v])
                for (auto w : p_.atoms[ai].vars)
                    if (a[w] != kUnassigned) {
                        score += 4;
                        break;
                    }
            score = score * 64 + std::min<std::size_t>(var_atoms_[v].size(), 63);
            if (best == SIZE_MAX || score > best_score) {
                best = v;
                best_score = score;
            }
        }
        return best;
    }

    bool dfs(std::vector<Element>& a, const std::vector<std::size_t>& pending) {
        std::size_t v = pick(a, pending);
        if (v == SIZE_MAX)
            return true;
        for (Element c : candidates(a, v)) {
            counter_.tick();
            a[v] = c;
            if (consistent(a, v) && dfs(a, pending))
                return true;
        }
        a[v] = kUnassigned;
        return false;
    }

    bool dfs_static(std::vector<Element>& a, const std::vector<std::size_t>& order, std::size_t depth) {
        if (depth == order.size())
            return true;
        std::size_t v = order[depth];
        for (Element c : candidates(a, v)) {
            counter_.tick();
            a[v] = c;
            if (consistent(a, v) && dfs_static(a, order, depth + 1))
                return true;
        }
        a[v] = kUnassigned;
        return false;
    }

    void project_dfs(std::vector<Element>& a, const std::vector<std::size_t>& first,
                     const std::vector<std::size_t>& rest, const std::vector<std::size_t>& counted,
                     const std::function<bool(const std::vector<Element>&)>& emit, bool& stop) {
        std::size_t v = pick(a, first);
        if (v == SIZE_MAX) {
            std::vector<Element> copy = a;
            if (dfs(copy, rest)) {
                std::vector<Element> proj;
                for (auto c : counted)
                    proj.push_back(a[c]);
                if (!emit(proj))
                    stop = true;
            }
            return;
        }
        for (Element c : candidates(a, v)) {
            counter_.tick();
            a[v] = c;
            if (consistent(a, v))
                project_dfs(a, first, rest, counted, emit, stop);
            if (stop)
                break;
        }
        a[v] = kUnassigned;
    }

    const Pattern& p_;
    const TargetIndex& t_;
    NodeCounter counter_;
    std::vector<std::vector<std::size_t>> var_atoms_;
    std::vector<std::vector<std::size_t>> var_diseq_;
    std::vector<std::optional<std::vector<Element>>> support_;
};

/// Pattern of a structure's tuples, with symbols matched by name in `target`.
inline Pattern pattern_of(const Structure& source, const Signature& target) {
    Pattern p;
    p.vars = source.size();
    for (std::size_t s = 0; s < source.signature().size(); ++s) {
        if (source.relation(s).empty())
            continue;
        auto ts = target.find(source.signature()[s].name);
        if (!ts || target[*ts].arity != source.signature()[s].arity) {
            p.unsatisfiable = true;
            continue;
        }
        for (const auto& t : source.relation(s))
            p.atoms.push_back({*ts, std::vector<std::size_t>(t.begin(), t.end())});
    }
    return p;
}

} // namespace detail

/// Homomorphism from the pointed structure into `target` sending anchors to
/// `target_anchors`, parameter elements to `target_parameters`, and keeping
/// every listed pair of source elements apart. Returned as a vector indexed by
/// source elements.
inline std::optional<std::vector<Element>> find_hom(const PointedStructure& source, const Structure& target,
                                                    std::span<const Element> target_anchors,
                                                    std::span<const std::pair<Element, Element>> disequalities = {},
                                                    std::span<const Element> target_parameters = {},
                                                    Budget budget = {}) {
    if (target_anchors.size() != source.anchors.size())
        throw Error("anchor tuple lengths differ");
    if (target_parameters.size() != source.parameters.size())
        throw Error("parameter tuple lengths differ");
    auto pattern = detail::pattern_of(source.structure, target.signature());
    for (auto [a, b] : disequalities) {
        if (a >= source.structure.size() || b >= source.structure.size())
            throw Error("disequality mentions an unknown element");
        pattern.disequalities.emplace_back(a, b);
    }
    std::vector<Element> assignment(pattern.vars, detail::kUnassigned);
    auto fix = [&](Element s, Element t) {
        if (t >= target.size())
            throw Error("target anchor outside the target structure");
        if (assignment[s] != detail::kUnassigned && assignment[s] != t)
            return false;
        assignment[s] = t;
        return true;
    };
    for (std::size_t i = 0; i < target_anchors.size(); ++i)
        if (!fix(source.anchors[i], target_anchors[i]))
            return std::nullopt;
    for (std::size_t i = 0; i < target_parameters.size(); ++i)
        if (!fix(source.parameters[i], target_parameters[i]))
            return std::nullopt;
    detail::TargetIndex index(target);
    detail::HomSearch search(pattern, index, budget);
    if (!search.solve(assignment))
        return std::nullopt;
    return assignment;
}

} // namespace mnip
