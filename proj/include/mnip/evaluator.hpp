#pragma once

// Model checking. `model_check` is the plain recursive evaluator with explicit
// quantifier loops. `Evaluator` answers the same questions faster by sending
// existential conjunctive subformulas to homomorphism search and by
// enumerating only guard solutions under relativized quantifiers; the rest of
// the library uses it for bulk work.

#include "mnip/canonical.hpp"
#include "mnip/formula.hpp"
#include "mnip/hom.hpp"
#include "mnip/relcore.hpp"

#include <algorithm>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace mnip {

struct Assignment {
    std::map<std::string, Element> variables;
    std::map<std::string, Element> parameters;
};

namespace detail {

struct CompiledNode {
    NodeKind kind = NodeKind::conjunction;
    std::size_t symbol = 0;
    std::vector<std::size_t> slots;  // atom/equality terms, or bound slots
    std::size_t threshold = 0;
    std::vector<std::size_t> children;
    std::vector<std::size_t> free_slots;  // sorted
};

/// A formula with variables replaced by slots: header slots first (free
/// variables, then parameters), then one slot per bound variable occurrence.
struct CompiledFormula {
    std::vector<CompiledNode> nodes;
    std::size_t root = 0;
    std::size_t slot_count = 0;
    std::size_t free_count = 0;
    std::size_t param_count = 0;
    Signature signature;
};

inline CompiledFormula compile(const Formula& f, const Signature& sig) {
    if (!f.body)
        throw Error("formula has no body");
    CompiledFormula c;
    std::map<std::string, std::size_t> scope;
    for (const auto& v : f.free)
        if (!scope.emplace(v, c.slot_count++).second)
            throw Error("variable " + v + " listed twice in the header");
    for (const auto& p : f.params)
        if (!scope.emplace(p, c.slot_count++).second)
            throw Error("parameter " + p + " clashes with another header name");
    c.free_count = f.free.size();
    c.param_count = f.params.size();
    c.signature = sig;

    std::function<std::size_t(const Node&, std::map<std::string, std::size_t>&)> walk =
        [&](const Node& n, std::map<std::string, std::size_t>& sc) -> std::size_t {
        CompiledNode out;
        out.kind = n.kind;
        out.threshold = n.threshold;
        auto slot_of = [&](const std::string& v) {
            auto it = sc.find(v);
            if (it == sc.end())
                throw Error("unbound variable " + v);
            return it->second;
        };
        std::set<std::size_t> free;
        switch (n.kind) {
        case NodeKind::atom: {
            auto s = sig.find(n.symbol);
            if (!s)
                throw Error("relation symbol " + n.symbol + " is not in the structure's signature");
            if (sig[*s].arity != n.terms.size())
                throw Error("atom " + n.symbol + " has " + std::to_string(n.terms.size()) + " terms but arity " +
                            std::to_string(sig[*s].arity));
            out.symbol = *s;
            [[fallthrough]];
        }
        case NodeKind::equals:
            for (const auto& t : n.terms) {
                out.slots.push_back(slot_of(t));
                free.insert(out.slots.back());
            }
            break;
        case NodeKind::exists:
        case NodeKind::forall:
        case NodeKind::exists_more: {
            auto inner = sc;
            for (const auto& v : n.terms) {
                out.slots.push_back(c.slot_count);
                inner[v] = c.slot_count++;
            }
            out.children.push_back(walk(*n.children.at(0), inner));
            break;
        }
        default:
            for (const auto& ch : n.children)
                out.children.push_back(walk(*ch, sc));
        }
        c.nodes.push_back(std::move(out));
        std::size_t id = c.nodes.size() - 1;
        for (auto ch : c.nodes[id].children)
            free.insert(c.nodes[ch].free_slots.begin(), c.nodes[ch].free_slots.end());
        if (is_quantifier(n.kind))
            for (auto s : c.nodes[id].slots)
                free.erase(s);
        c.nodes[id].free_slots.assign(free.begin(), free.end());
        return id;
    };
    c.root = walk(*f.body, scope);
    return c;
}

/// Membership tests for relation tuples read from slot values.
class RelationTable {
public:
    explicit RelationTable(const Structure& m) : m_(&m), n_(m.size()) {
        const auto& sig = m.signature();
        mode_.resize(sig.size());
        dense_.resize(sig.size());
        hashed_.resize(sig.size());
        for (std::size_t s = 0; s < sig.size(); ++s) {
            std::uint64_t cap = 1;
            bool fits = true;
            for (std::size_t i = 0; i < sig[s].arity && fits; ++i) {
                if (n_ != 0 && cap > (std::uint64_t{1} << 62) / n_)
                    fits = false;
                cap *= n_;
            }
            if (fits && cap <= (std::uint64_t{1} << 24)) {
                mode_[s] = 0;
                dense_[s].assign(cap, false);
                for (const auto& t : m.relation(s))
                    dense_[s][encode(t.data(), t.size())] = true;
            } else if (fits) {
                mode_[s] = 1;
                for (const auto& t : m.relation(s))
                    hashed_[s].insert(encode(t.data(), t.size()));
            } else {
                mode_[s] = 2;
            }
        }
    }

    bool holds(std::size_t s, const std::vector<std::size_t>& slots, const std::vector<Element>& env) const {
        Element buf[16];
        std::vector<Element> big;
        Element* vals = buf;
        if (slots.size() > 16) {
            big.resize(slots.size());
            vals = big.data();
        }
        for (std::size_t i = 0; i < slots.size(); ++i)
            vals[i] = env[slots[i]];
        switch (mode_[s]) {
        case 0:
            return dense_[s][encode(vals, slots.size())];
        case 1:
            return hashed_[s].count(encode(vals, slots.size())) != 0;
        default:
            return m_->holds(s, Tuple(vals, vals + slots.size()));
        }
    }

private:
    std::uint64_t encode(const Element* vals, std::size_t k) const {
        std::uint64_t key = 0;
        for (std::size_t i = 0; i < k; ++i)
            key = key * n_ + vals[i];
        return key;
    }

    const Structure* m_;
    std::uint64_t n_;
    std::vector<int> mode_;
    std::vector<std::vector<bool>> dense_;
    std::vector<std::unordered_set<std::uint64_t>> hashed_;
};

inline std::vector<Element> header_values(const Formula& f, const Assignment& a, std::size_t universe) {
    std::vector<Element> out;
    auto take = [&](const std::vector<std::string>& names, const std::map<std::string, Element>& from,
                    const char* what) {
        for (const auto& v : names) {
            auto it = from.find(v);
            if (it == from.end())
                throw Error(std::string("assignment misses ") + what + " " + v);
            if (it->second >= universe)
                throw Error(std::string("assignment sends ") + what + " " + v + " outside the structure");
            out.push_back(it->second);
        }
        if (from.size() != names.size())
            throw Error(std::string("assignment has ") + what + "s that the formula does not declare");
    };
    take(f.free, a.variables, "variable");
    take(f.params, a.parameters, "parameter");
    return out;
}

// Steps `env` through all values of `slots`; false once exhausted.
inline bool next_values(std::vector<Element>& env, const std::vector<std::size_t>& slots, std::size_t n) {
    for (std::size_t i = slots.size(); i-- > 0;) {
        if (++env[slots[i]] < n)
            return true;
        env[slots[i]] = 0;
    }
    return false;
}

inline bool naive_eval(const CompiledFormula& c, const RelationTable& table, std::size_t n, std::size_t id,
                       std::vector<Element>& env) {
    const CompiledNode& node = c.nodes[id];
    switch (node.kind) {
    case NodeKind::atom:
        return table.holds(node.symbol, node.slots, env);
    case NodeKind::equals:
        return env[node.slots[0]] == env[node.slots[1]];
    case NodeKind::negation:
        return !naive_eval(c, table, n, node.children[0], env);
    case NodeKind::conjunction:
        for (auto ch : node.children)
            if (!naive_eval(c, table, n, ch, env))
                return false;
        return true;
    case NodeKind::disjunction:
        for (auto ch : node.children)
            if (naive_eval(c, table, n, ch, env))
                return true;
        return false;
    case NodeKind::exists:
    case NodeKind::forall:
    case NodeKind::exists_more: {
        if (n == 0)
            return node.kind == NodeKind::forall;
        for (auto s : node.slots)
            env[s] = 0;
        std::size_t count = 0;
        do {
            bool b = naive_eval(c, table, n, node.children[0], env);
            if (node.kind == NodeKind::exists && b)
                return true;
            if (node.kind == NodeKind::forall && !b)
                return false;
            if (node.kind == NodeKind::exists_more && b && ++count > node.threshold)
                return true;
        } while (next_values(env, node.slots, n));
        return node.kind == NodeKind::forall;
    }
    }
    return false;
}

} // namespace detail

/// Tarskian satisfaction by direct recursion. The assignment must cover
/// exactly the formula's free variables and parameters.
inline bool model_check(const Structure& m, const Formula& f, const Assignment& a) {
    auto c = detail::compile(f, m.signature());
    auto header = detail::header_values(f, a, m.size());
    std::vector<Element> env(c.slot_count, 0);
    std::copy(header.begin(), header.end(), env.begin());
    detail::RelationTable table(m);
    return detail::naive_eval(c, table, m.size(), c.root, env);
}

namespace detail {

struct NodePlan {
    enum class Mode { direct, hom, guarded } mode = Mode::direct;

    // hom: pattern variables 0..fixed-1 are the node's free slots in `inputs` order
    Pattern pattern;
    std::vector<std::size_t> inputs;
    std::vector<std::size_t> counted;
    std::size_t shape = 0;

    // guarded: guard nodes (for forall, the nodes under the negations)
    std::vector<std::size_t> guards;
    std::vector<std::vector<std::size_t>> guard_slots;
    std::vector<std::size_t> guard_cache;
    std::vector<std::size_t> rest;
};

} // namespace detail

/// Compiles f once for Evaluators over many structures of one signature.
inline std::shared_ptr<const detail::CompiledFormula> compile_shared(const Formula& f, const Signature& sig) {
    return std::make_shared<const detail::CompiledFormula>(detail::compile(f, sig));
}

/// A formula planned against one Evaluator's structure.
class PreparedFormula {
public:
    std::size_t free_count() const noexcept { return compiled_->free_count; }
    std::size_t param_count() const noexcept { return compiled_->param_count; }

private:
    friend class Evaluator;
    std::shared_ptr<const detail::CompiledFormula> compiled_;
    std::vector<detail::NodePlan> plans_;
    std::vector<std::map<std::vector<Element>, std::vector<Tuple>>> guard_solutions_;
};

/// Evaluates many formulas over one structure, which must outlive it.
class Evaluator {
public:
    explicit Evaluator(const Structure& m, Budget budget = {}) : m_(&m), budget_(budget), table_(m) {}

    const Structure& structure() const noexcept { return *m_; }

    std::shared_ptr<PreparedFormula> prepare(const Formula& f) {
        return prepare(std::make_shared<const detail::CompiledFormula>(detail::compile(f, m_->signature())));
    }

    /// Plans a formula compiled by compile_shared; the signatures must agree.
    std::shared_ptr<PreparedFormula> prepare(std::shared_ptr<const detail::CompiledFormula> compiled) {
        if (!(compiled->signature == m_->signature()))
            throw Error("formula was compiled for another signature");
        auto p = std::make_shared<PreparedFormula>();
        p->compiled_ = std::move(compiled);
        p->plans_.resize(p->compiled_->nodes.size());
        for (std::size_t id = 0; id < p->compiled_->nodes.size(); ++id)
            plan(*p, id);
        return p;
    }

    /// Values for the free variables followed by values for the parameters.
    bool holds(PreparedFormula& p, std::span<const Element> header) {
        const auto& c = *p.compiled_;
        if (header.size() != c.free_count + c.param_count)
            throw Error("expected " + std::to_string(c.free_count + c.param_count) + " header values, got " +
                        std::to_string(header.size()));
        std::vector<Element> env(c.slot_count, 0);
        for (std::size_t i = 0; i < header.size(); ++i) {
            if (header[i] >= m_->size())
                throw Error("header value outside the structure");
            env[i] = header[i];
        }
        detail::NodeCounter counter(budget_, "model checking");
        return eval(p, c.root, env, counter);
    }

    bool check(const Formula& f, const Assignment& a) {
        auto p = prepare(f);
        auto header = detail::header_values(f, a, m_->size());
        return holds(*p, header);
    }

    /// All tuples for the free variables (lexicographic order) satisfying f
    /// under the given parameter values.
    std::vector<Tuple> solutions(const Formula& f, std::span<const Element> params) {
        auto p = prepare(f);
        if (params.size() != f.params.size())
            throw Error("parameter value count does not match the formula");
        std::vector<Tuple> out;
        std::size_t d = f.free.size();
        std::vector<Element> header(d + params.size(), 0);
        std::copy(params.begin(), params.end(), header.begin() + static_cast<std::ptrdiff_t>(d));
        if (m_->size() == 0 && d > 0)
            return out;
        std::vector<std::size_t> slots(d);
        for (std::size_t i = 0; i < d; ++i)
            slots[i] = i;
        do {
            if (holds(*p, header))
                out.emplace_back(header.begin(), header.begin() + static_cast<std::ptrdiff_t>(d));
        } while (detail::next_values(header, slots, m_->size()));
        return out;
    }

private:
    using Mode = detail::NodePlan::Mode;

    const detail::TargetIndex& index() {
        if (!index_)
            index_ = std::make_unique<detail::TargetIndex>(*m_);
        return *index_;
    }

    // Collects atoms and disequalities of an exists-chain over a conjunction.
    static bool gather_conjunctive(const detail::CompiledFormula& c, std::size_t id, std::vector<std::size_t>& bound,
                                   std::vector<std::size_t>& atoms, std::vector<std::pair<std::size_t, std::size_t>>& diseq) {
        const auto& n = c.nodes[id];
        switch (n.kind) {
        case NodeKind::exists:
            bound.insert(bound.end(), n.slots.begin(), n.slots.end());
            return gather_conjunctive(c, n.children[0], bound, atoms, diseq);
        case NodeKind::atom:
            atoms.push_back(id);
            return true;
        case NodeKind::conjunction:
            for (auto ch : n.children)
                if (!gather_conjunctive(c, ch, bound, atoms, diseq))
                    return false;
            return true;
        case NodeKind::negation: {
            const auto& inner = c.nodes[n.children[0]];
            if (inner.kind != NodeKind::equals)
                return false;
            diseq.emplace_back(inner.slots[0], inner.slots[1]);
            return true;
        }
        default:
            return false;
        }
    }

    void shape_text(const detail::CompiledFormula& c, std::size_t id, const std::set<std::size_t>& free,
                    std::map<std::size_t, std::string>& names, std::vector<std::size_t>& inputs, std::size_t& bound_count,
                    std::string& out) {
        const auto& n = c.nodes[id];
        auto name = [&](std::size_t s) -> const std::string& {
            auto it = names.find(s);
            if (it != names.end())
                return it->second;
            if (free.count(s)) {
                inputs.push_back(s);
                return names[s] = "$" + std::to_string(inputs.size() - 1);
            }
            return names[s] = "#" + std::to_string(bound_count++);
        };
        out += '(';
        out += std::to_string(static_cast<int>(n.kind));
        if (n.kind == NodeKind::atom)
            out += ":" + std::to_string(n.symbol);
        if (n.kind == NodeKind::exists_more)
            out += ">" + std::to_string(n.threshold);
        for (auto s : n.slots)
            out += " " + name(s);
        for (auto ch : n.children)
            shape_text(c, ch, free, names, inputs, bound_count, out);
        out += ')';
    }

    void plan(PreparedFormula& p, std::size_t id) {
        const auto& c = *p.compiled_;
        const auto& n = c.nodes[id];
        auto& pl = p.plans_[id];
        if (n.kind != NodeKind::exists && n.kind != NodeKind::exists_more && n.kind != NodeKind::forall)
            return;

        if (n.kind != NodeKind::forall) {
            std::vector<std::size_t> bound(n.slots), atoms;
            std::vector<std::pair<std::size_t, std::size_t>> diseq;
            if (gather_conjunctive(c, n.children[0], bound, atoms, diseq)) {
                std::set<std::size_t> free(n.free_slots.begin(), n.free_slots.end());
                std::map<std::size_t, std::string> names;
                std::size_t bound_count = 0;
                std::string text;
                shape_text(c, id, free, names, pl.inputs, bound_count, text);
                for (auto s : n.free_slots)
                    if (!names.count(s))
                        pl.inputs.push_back(s);
                std::map<std::size_t, std::size_t> var;
                for (auto s : pl.inputs)
                    var.emplace(s, var.size());
                for (auto s : bound)
                    var.emplace(s, var.size());
                pl.pattern.vars = var.size();
                for (auto a : atoms) {
                    detail::PatternAtom pa{c.nodes[a].symbol, {}};
                    for (auto s : c.nodes[a].slots)
                        pa.vars.push_back(var.at(s));
                    pl.pattern.atoms.push_back(std::move(pa));
                }
                for (auto [a, b] : diseq) {
                    if (a == b)
                        pl.pattern.unsatisfiable = true;
                    pl.pattern.disequalities.emplace_back(var.at(a), var.at(b));
                }
                if (n.kind == NodeKind::exists_more)
                    for (auto s : n.slots)
                        pl.counted.push_back(var.at(s));
                pl.shape = shapes_.emplace(text, shapes_.size()).first->second;
                if (memo_.size() < shapes_.size())
                    memo_.resize(shapes_.size());
                pl.mode = Mode::hom;
                return;
            }
        }

        // Guards: conjuncts (or negated disjuncts under forall) that mention
        // only bound slots of this node and parameters.
        std::set<std::size_t> bound(n.slots.begin(), n.slots.end());
        std::vector<std::size_t> parts;
        const auto& body = c.nodes[n.children[0]];
        NodeKind joiner = n.kind == NodeKind::forall ? NodeKind::disjunction : NodeKind::conjunction;
        if (body.kind == joiner)
            parts = body.children;
        else
            parts.push_back(n.children[0]);
        std::size_t header_end = c.free_count + c.param_count;
        std::uint64_t universe = m_->size();
        for (auto part : parts) {
            std::size_t g = part;
            if (n.kind == NodeKind::forall) {
                if (c.nodes[part].kind != NodeKind::negation) {
                    pl.rest.push_back(part);
                    continue;
                }
                g = c.nodes[part].children[0];
            }
            std::vector<std::size_t> used;
            bool ok = true;
            for (auto s : c.nodes[g].free_slots) {
                if (bound.count(s))
                    used.push_back(s);
                else if (s < c.free_count || s >= header_end)
                    ok = false;
            }
            std::uint64_t space = 1;
            for (std::size_t i = 0; i < used.size() && ok; ++i) {
                space *= std::max<std::uint64_t>(universe, 1);
                ok = space <= 1'000'000;
            }
            if (!ok || used.empty()) {
                pl.rest.push_back(part);
                continue;
            }
            std::sort(used.begin(), used.end(), [&](std::size_t a, std::size_t b) {
                return std::find(n.slots.begin(), n.slots.end(), a) < std::find(n.slots.begin(), n.slots.end(), b);
            });
            pl.guards.push_back(g);
            pl.guard_slots.push_back(std::move(used));
            pl.guard_cache.push_back(p.guard_solutions_.size());
            p.guard_solutions_.emplace_back();
        }
        if (!pl.guards.empty())
            pl.mode = Mode::guarded;
    }

    const std::vector<Tuple>& guard_solutions(PreparedFormula& p, const detail::NodePlan& pl, std::size_t i,
                                              std::vector<Element>& env, detail::NodeCounter& counter) {
        const auto& c = *p.compiled_;
        std::vector<Element> key(env.begin() + static_cast<std::ptrdiff_t>(c.free_count),
                                 env.begin() + static_cast<std::ptrdiff_t>(c.free_count + c.param_count));
        auto& cache = p.guard_solutions_[pl.guard_cache[i]];
        auto it = cache.find(key);
        if (it != cache.end())
            return it->second;
        std::vector<Tuple> sols;
        const auto& slots = pl.guard_slots[i];
        std::size_t n = m_->size();
        if (n > 0) {
            std::vector<Element> saved;
            for (auto s : slots) {
                saved.push_back(env[s]);
                env[s] = 0;
            }
            do {
                counter.tick();
                if (eval(p, pl.guards[i], env, counter)) {
                    Tuple t;
                    for (auto s : slots)
                        t.push_back(env[s]);
                    sols.push_back(std::move(t));
                }
            } while (detail::next_values(env, slots, n));
            for (std::size_t k = 0; k < slots.size(); ++k)
                env[slots[k]] = saved[k];
        }
        return cache.emplace(std::move(key), std::move(sols)).first->second;
    }

    // Walks the join of guard solutions, then all values of unguarded bound
    // slots; `visit` returns false to stop.
    bool join(PreparedFormula& p, const detail::NodePlan& pl, const detail::CompiledNode& node, std::size_t g,
              std::vector<char>& fixed, std::vector<Element>& env, detail::NodeCounter& counter,
              const std::function<bool()>& visit) {
        if (g == pl.guards.size()) {
            std::vector<std::size_t> open;
            for (auto s : node.slots)
                if (!fixed[s])
                    open.push_back(s);
            if (open.empty())
                return visit();
            if (m_->size() == 0)
                return true;
            for (auto s : open)
                env[s] = 0;
            do {
                counter.tick();
                if (!visit())
                    return false;
            } while (detail::next_values(env, open, m_->size()));
            return true;
        }
        const auto& slots = pl.guard_slots[g];
        const auto& sols = guard_solutions(p, pl, g, env, counter);
        std::vector<std::size_t> newly;
        for (const auto& t : sols) {
            counter.tick();
            bool ok = true;
            for (std::size_t k = 0; k < slots.size() && ok; ++k)
                ok = !fixed[slots[k]] || env[slots[k]] == t[k];
            if (!ok)
                continue;
            newly.clear();
            for (std::size_t k = 0; k < slots.size(); ++k)
                if (!fixed[slots[k]]) {
                    fixed[slots[k]] = 1;
                    env[slots[k]] = t[k];
                    newly.push_back(slots[k]);
                }
            bool go = join(p, pl, node, g + 1, fixed, env, counter, visit);
            for (auto s : newly)
                fixed[s] = 0;
            if (!go)
                return false;
        }
        return true;
    }

    bool eval(PreparedFormula& p, std::size_t id, std::vector<Element>& env, detail::NodeCounter& counter) {
        const auto& c = *p.compiled_;
        const auto& node = c.nodes[id];
        const auto& pl = p.plans_[id];
        switch (node.kind) {
        case NodeKind::atom:
            return table_.holds(node.symbol, node.slots, env);
        case NodeKind::equals:
            return env[node.slots[0]] == env[node.slots[1]];
        case NodeKind::negation:
            return !eval(p, node.children[0], env, counter);
        case NodeKind::conjunction:
            for (auto ch : node.children)
                if (!eval(p, ch, env, counter))
                    return false;
            return true;
        case NodeKind::disjunction:
            for (auto ch : node.children)
                if (eval(p, ch, env, counter))
                    return true;
            return false;
        default:
            break;
        }

        if (pl.mode == Mode::hom) {
            std::vector<Element> key;
            for (auto s : pl.inputs)
                key.push_back(env[s]);
            auto& memo = memo_[pl.shape];
            auto it = memo.find(key);
            if (it != memo.end())
                return it->second;
            counter.tick();
            std::vector<Element> assignment(pl.pattern.vars, detail::kUnassigned);
            std::copy(key.begin(), key.end(), assignment.begin());
            detail::HomSearch search(pl.pattern, index(), budget_);
            bool r = node.kind == NodeKind::exists
                         ? search.solve(assignment)
                         : search.count(assignment, pl.counted, node.threshold) > node.threshold;
            memo.emplace(std::move(key), r);
            return r;
        }

        if (pl.mode == Mode::guarded) {
            std::vector<char> fixed(c.slot_count, 0);
            bool result = node.kind == NodeKind::forall;
            std::size_t count = 0;
            join(p, pl, node, 0, fixed, env, counter, [&]() {
                if (node.kind == NodeKind::forall) {
                    for (auto r : pl.rest)
                        if (eval(p, r, env, counter))
                            return true;
                    result = false;
                    return false;
                }
                for (auto r : pl.rest)
                    if (!eval(p, r, env, counter))
                        return true;
                if (node.kind == NodeKind::exists || ++count > node.threshold) {
                    result = true;
                    return false;
                }
                return true;
            });
            return result;
        }

        std::size_t n = m_->size();
        if (n == 0)
            return node.kind == NodeKind::forall;
        for (auto s : node.slots)
            env[s] = 0;
        std::size_t count = 0;
        do {
            counter.tick();
            bool b = eval(p, node.children[0], env, counter);
            if (node.kind == NodeKind::exists && b)
                return true;
            if (node.kind == NodeKind::forall && !b)
                return false;
            if (node.kind == NodeKind::exists_more && b && ++count > node.threshold)
                return true;
        } while (detail::next_values(env, node.slots, n));
        return node.kind == NodeKind::forall;
    }

    struct KeyHash {
        std::size_t operator()(const std::vector<Element>& v) const noexcept {
            std::size_t h = 1469598103934665603ull;
            for (auto e : v)
                h = (h ^ e) * 1099511628211ull;
            return h;
        }
    };

    const Structure* m_;
    Budget budget_;
    detail::RelationTable table_;
    std::unique_ptr<detail::TargetIndex> index_;
    std::map<std::string, std::size_t> shapes_;
    std::vector<std::unordered_map<std::vector<Element>, bool, KeyHash>> memo_;
};

namespace detail {

inline PointedStructure canonical_for(const Formula& f, const Structure& m) {
    auto used = symbols_of(f.body);
    for (const auto& name : used.symbols()) {
        auto s = m.signature().find(name.name);
        if (!s)
            throw Error("relation symbol " + name.name + " is not in the structure's signature");
        if (m.signature()[*s].arity != name.arity)
            throw Error("arity of " + name.name + " differs from the structure's signature");
    }
    return canonical_structure(f, m.signature());
}

inline void check_values(std::span<const Element> values, std::size_t expected, std::size_t universe, const char* what) {
    if (values.size() != expected)
        throw Error(std::string(what) + " tuple has the wrong length");
    for (auto v : values)
        if (v >= universe)
            throw Error(std::string(what) + " value outside the structure");
}

} // namespace detail

/// Primitive positive evaluation: the canonical structure minus anchors and
/// parameters is split into Gaifman components, each solved separately.
inline bool eval_pp(const Structure& m, const Formula& f, std::span<const Element> values,
                    std::span<const Element> params = {}, Budget budget = {}) {
    if (!is_pp(f))
        throw Error("formula is not primitive positive");
    detail::check_values(values, f.free.size(), m.size(), "anchor");
    detail::check_values(params, f.params.size(), m.size(), "parameter");
    auto canon = detail::canonical_for(f, m);
    const Structure& c = canon.structure;
    std::vector<char> pinned(c.size(), 0);
    for (auto a : canon.anchors)
        pinned[a] = 1;
    for (auto a : canon.parameters)
        pinned[a] = 1;

    // Components of the Gaifman graph restricted to unpinned elements.
    std::vector<std::size_t> comp(c.size(), SIZE_MAX);
    Graph g = gaifman(c);
    std::size_t count = 0;
    for (Element s = 0; s < c.size(); ++s) {
        if (pinned[s] || comp[s] != SIZE_MAX)
            continue;
        std::vector<Element> stack{s};
        comp[s] = count;
        while (!stack.empty()) {
            Element u = stack.back();
            stack.pop_back();
            for (Element w : g.neighbors(u))
                if (!pinned[w] && comp[w] == SIZE_MAX) {
                    comp[w] = count;
                    stack.push_back(w);
                }
        }
        ++count;
    }

    // Part `count` holds the tuples among pinned elements only.
    std::vector<std::vector<std::pair<std::size_t, Tuple>>> parts(count + 1);
    for (std::size_t s = 0; s < c.signature().size(); ++s)
        for (const auto& t : c.relation(s)) {
            std::size_t part = count;
            for (Element e : t)
                if (!pinned[e])
                    part = comp[e];
            parts[part].emplace_back(s, t);
        }

    for (std::size_t part = 0; part <= count; ++part) {
        PointedStructure piece{Structure(c.signature()), {}, {}};
        std::vector<Element> local(c.size(), detail::kUnassigned);
        for (Element e = 0; e < c.size(); ++e)
            if (pinned[e] || comp[e] == part)
                local[e] = piece.structure.add_element(c.label(e));
        for (auto a : canon.anchors)
            piece.anchors.push_back(local[a]);
        for (auto a : canon.parameters)
            piece.parameters.push_back(local[a]);
        for (const auto& [s, t] : parts[part]) {
            Tuple lt;
            for (Element e : t)
                lt.push_back(local[e]);
            piece.structure.add_tuple(s, std::move(lt));
        }
        if (!find_hom(piece, m, values, {}, params, budget))
            return false;
    }
    return true;
}

/// Quasi-positive evaluation: one homomorphism search on the canonical
/// structure of the stripped formula, honouring the removed disequalities.
inline bool eval_qp(const Structure& m, const Formula& f, std::span<const Element> values,
                    std::span<const Element> params = {}, Budget budget = {}) {
    auto stripped = strip_disequalities(f);
    detail::check_values(values, f.free.size(), m.size(), "anchor");
    detail::check_values(params, f.params.size(), m.size(), "parameter");
    auto canon = detail::canonical_for(stripped.formula, m);
    std::vector<std::pair<Element, Element>> diseq;
    for (const auto& [a, b] : stripped.removed) {
        if (a == b)
            return false;
        diseq.emplace_back(canon.structure.element(a), canon.structure.element(b));
    }
    return find_hom(canon, m, values, diseq, params, budget).has_value();
}

/// A finite prefix of a pre-coding configuration: rows d̄_1..d̄_N and cell
/// elements c_{s,t}, optionally with the existential witnesses h̄_{s,t}
/// listed in the order of the formula's bound variables.
struct PrecodingWitness {
    Formula formula;
    std::vector<std::string> xs, ys;
    std::string z;
    std::vector<Element> params;
    std::vector<Tuple> rows;
    std::vector<std::vector<Element>> cells;
    std::optional<std::vector<std::vector<Tuple>>> witnesses;
};

struct PrecodingReport {
    bool ok = true;
    std::string violation;
};

inline PrecodingReport verify_precoding(const Structure& m, const PrecodingWitness& w) {
    auto fail = [](std::string what) { return PrecodingReport{false, std::move(what)}; };
    const Formula& f = w.formula;
    std::size_t n = w.rows.size();
    std::vector<std::string> order = w.xs;
    order.insert(order.end(), w.ys.begin(), w.ys.end());
    order.push_back(w.z);
    if (std::set<std::string>(order.begin(), order.end()) != std::set<std::string>(f.free.begin(), f.free.end()) ||
        order.size() != f.free.size())
        return fail("free variables do not split into x, y and z");
    if (w.params.size() != f.params.size())
        return fail("parameter count does not match the formula");
    if (w.cells.size() != n)
        return fail("cell grid is not N by N");
    for (const auto& row : w.cells)
        if (row.size() != n)
            return fail("cell grid is not N by N");
    for (const auto& d : w.rows)
        if (d.size() != w.xs.size() || d.size() != w.ys.size())
            return fail("row tuple length differs from |x| or |y|");

    Evaluator ev(m);
    Formula ordered = f;
    ordered.free = order;
    auto prepared = ev.prepare(ordered);
    auto holds = [&](std::size_t s, std::size_t t, Element c) {
        std::vector<Element> header(w.rows[s].begin(), w.rows[s].end());
        header.insert(header.end(), w.rows[t].begin(), w.rows[t].end());
        header.push_back(c);
        header.insert(header.end(), w.params.begin(), w.params.end());
        return ev.holds(*prepared, header);
    };
    auto cell = [](std::size_t s, std::size_t t) {
        return "(" + std::to_string(s + 1) + "," + std::to_string(t + 1) + ")";
    };
    for (std::size_t s = 0; s < n; ++s)
        for (std::size_t t = 0; t < n; ++t) {
            Element c = w.cells[s][t];
            if (!holds(s, t, c))
                return fail("condition 1 fails at cell " + cell(s, t));
            for (std::size_t v = t + 1; v < n; ++v)
                if (holds(s, v, c))
                    return fail("condition 2 fails at cell " + cell(s, t) + " with column " + std::to_string(v + 1));
            for (std::size_t u = 0; u < s; ++u)
                if (holds(u, t, c))
                    return fail("condition 3 fails at cell " + cell(s, t) + " with row " + std::to_string(u + 1));
        }

    if (!w.witnesses)
        return {};
    auto q = as_conjunctive(f);
    if (!q)
        return fail("disjoint witnesses require a quasi-positive formula");
    const auto& hs = *w.witnesses;
    if (hs.size() != n)
        return fail("witness grid is not N by N");
    for (std::size_t s = 0; s < n; ++s) {
        if (hs[s].size() != n)
            return fail("witness grid is not N by N");
        for (std::size_t t = 0; t < n; ++t) {
            if (hs[s][t].size() != q->bound.size())
                return fail("witness length differs from the bound variables at " + cell(s, t));
            Assignment a;
            for (std::size_t i = 0; i < w.xs.size(); ++i)
                a.variables[w.xs[i]] = w.rows[s][i];
            for (std::size_t i = 0; i < w.ys.size(); ++i)
                a.variables[w.ys[i]] = w.rows[t][i];
            a.variables[w.z] = w.cells[s][t];
            for (std::size_t i = 0; i < q->bound.size(); ++i)
                a.variables[q->bound[i]] = hs[s][t][i];
            for (std::size_t i = 0; i < f.params.size(); ++i)
                a.parameters[f.params[i]] = w.params[i];
            ConjunctiveQuery matrix = *q;
            matrix.free.insert(matrix.free.end(), matrix.bound.begin(), matrix.bound.end());
            matrix.bound.clear();
            if (!model_check(m, to_formula(matrix), a))
                return fail("witness does not satisfy the matrix at " + cell(s, t));
        }
    }

    // Blocks: every row, every cell element, every witness tuple.
    std::vector<std::pair<std::string, std::vector<Element>>> blocks;
    for (std::size_t s = 0; s < n; ++s)
        blocks.emplace_back("row " + std::to_string(s + 1), w.rows[s]);
    for (std::size_t s = 0; s < n; ++s)
        for (std::size_t t = 0; t < n; ++t) {
            blocks.emplace_back("cell " + cell(s, t), std::vector<Element>{w.cells[s][t]});
            blocks.emplace_back("witness " + cell(s, t), hs[s][t]);
        }
    std::map<Element, std::size_t> owner;
    for (auto p : w.params)
        owner.emplace(p, SIZE_MAX);
    for (std::size_t b = 0; b < blocks.size(); ++b)
        for (Element e : std::set<Element>(blocks[b].second.begin(), blocks[b].second.end())) {
            auto [it, fresh] = owner.emplace(e, b);
            if (fresh)
                continue;
            if (it->second == SIZE_MAX)
                return fail(blocks[b].first + " meets the parameters");
            return fail(blocks[it->second].first + " and " + blocks[b].first + " share an element");
        }
    return {};
}

/// Path between an x variable and a y variable in the Gaifman graph of the
/// stripped formula's canonical structure, avoiding parameter vertices.
inline std::optional<std::vector<std::string>> precoding_path_check(const Formula& f, const std::vector<std::string>& xs,
                                                                    const std::vector<std::string>& ys) {
    auto canon = canonical_structure(strip_disequalities(f).formula);
    const Structure& c = canon.structure;
    Graph g = gaifman(c);
    std::vector<char> blocked(c.size(), 0);
    for (auto p : canon.parameters)
        blocked[p] = 1;
    std::set<Element> targets;
    for (const auto& y : ys)
        targets.insert(c.element(y));
    for (const auto& x : xs) {
        Element start = c.element(x);
        std::vector<Element> parent(c.size(), detail::kUnassigned);
        std::vector<Element> queue{start};
        parent[start] = start;
        for (std::size_t head = 0; head < queue.size(); ++head) {
            Element u = queue[head];
            if (targets.count(u)) {
                std::vector<std::string> path;
                for (Element v = u; v != start; v = parent[v])
                    path.push_back(c.label(v));
                path.push_back(c.label(start));
                std::reverse(path.begin(), path.end());
                return path;
            }
            for (Element w : g.neighbors(u))
                if (!blocked[w] && parent[w] == detail::kUnassigned) {
                    parent[w] = u;
                    queue.push_back(w);
                }
        }
    }
    return std::nullopt;
}

} // namespace mnip
