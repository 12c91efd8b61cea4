#pragma once

// Simple interpretations with parameters: application to a structure, the
// dual rewriting of target formulas into source formulas, composition, and
// reducing model checking on an interpreted structure to its preimage.

#include "mnip/evaluator.hpp"
#include "mnip/formula.hpp"
#include "mnip/isomorphism.hpp"
#include "mnip/relcore.hpp"
#include "mnip/sexpr.hpp"

#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

namespace mnip {

/// Deterministic map from a structure to concrete parameter elements.
struct ParameterSupplier {
    std::string id = "none";
    std::function<std::vector<Element>(const Structure&)> fn = [](const Structure&) { return std::vector<Element>{}; };

    std::vector<Element> operator()(const Structure& m) const { return fn(m); }
};

/// Built-in suppliers: `none`, `header:K` (the first K elements), and
/// `labels:a,b,...` (elements by label).
inline ParameterSupplier supplier_from_id(const std::string& id) {
    if (id == "none")
        return {};
    auto colon = id.find(':');
    std::string kind = id.substr(0, colon);
    std::string arg = colon == std::string::npos ? "" : id.substr(colon + 1);
    if (kind == "header" && colon != std::string::npos) {
        std::size_t k = 0;
        try {
            std::size_t used = 0;
            k = std::stoul(arg, &used);
            if (used != arg.size())
                throw Error("");
        } catch (...) {
            throw Error("bad supplier '" + id + "': header size must be a number");
        }
        return {id, [k](const Structure& m) {
                    if (m.size() < k)
                        throw Error("structure has fewer than " + std::to_string(k) + " header elements");
                    std::vector<Element> out(k);
                    for (std::size_t i = 0; i < k; ++i)
                        out[i] = static_cast<Element>(i);
                    return out;
                }};
    }
    if (kind == "labels" && colon != std::string::npos) {
        std::vector<std::string> labels;
        std::size_t start = 0;
        while (start <= arg.size()) {
            auto comma = arg.find(',', start);
            if (comma == std::string::npos)
                comma = arg.size();
            if (comma > start)
                labels.push_back(arg.substr(start, comma - start));
            start = comma + 1;
        }
        return {id, [labels](const Structure& m) {
                    std::vector<Element> out;
                    for (const auto& l : labels)
                        out.push_back(m.element(l));
                    return out;
                }};
    }
    throw Error("unknown parameter supplier '" + id + "'");
}

struct InterpretedRelation {
    std::string symbol;
    Formula formula;  // free variables: arity * dimension, block by block
    ParameterSupplier supplier;
};

struct SimpleInterpretation {
    Signature source;
    Signature target;
    std::size_t dimension = 1;
    Formula domain;  // free variables: dimension many
    ParameterSupplier domain_supplier;
    std::vector<InterpretedRelation> relations;

    const InterpretedRelation& relation(std::string_view symbol) const {
        for (const auto& r : relations)
            if (r.symbol == symbol)
                return r;
        throw Error("interpretation has no formula for " + std::string(symbol));
    }
};

inline void validate(const SimpleInterpretation& I) {
    if (I.dimension == 0)
        throw Error("interpretation dimension must be at least 1");
    if (I.domain.free.size() != I.dimension)
        throw Error("domain formula must have exactly " + std::to_string(I.dimension) + " free variables");
    validate(I.domain, &I.source);
    if (I.relations.size() != I.target.size())
        throw Error("every target symbol needs exactly one interpreting formula");
    for (const auto& s : I.target.symbols()) {
        std::size_t hits = 0;
        for (const auto& r : I.relations)
            if (r.symbol == s.name) {
                ++hits;
                if (r.formula.free.size() != s.arity * I.dimension)
                    throw Error("formula for " + s.name + " must have " + std::to_string(s.arity * I.dimension) +
                                " free variables");
                validate(r.formula, &I.source);
            }
        if (hits != 1)
            throw Error("target symbol " + s.name + " needs exactly one interpreting formula");
    }
}

/// Interpreted structure plus, per element, the source tuple it stands for.
struct InterpretedStructure {
    Structure structure;
    std::vector<Tuple> provenance;
};

namespace detail {

inline std::vector<Element> supplied(const ParameterSupplier& s, const Structure& m, std::size_t expected,
                                     const std::string& what) {
    auto values = s(m);
    if (values.size() != expected)
        throw Error("supplier " + s.id + " gave " + std::to_string(values.size()) + " values for " + what +
                    ", expected " + std::to_string(expected));
    for (auto v : values)
        if (v >= m.size())
            throw Error("supplier " + s.id + " gave an element outside the structure");
    return values;
}

} // namespace detail

inline InterpretedStructure apply(const SimpleInterpretation& I, const Structure& m, Budget budget = {}) {
    validate(I);
    if (!(m.signature() == I.source))
        for (const auto& s : I.source.symbols()) {
            auto idx = m.signature().find(s.name);
            if (!idx || m.signature()[*idx].arity != s.arity)
                throw Error("structure lacks source symbol " + s.name + "/" + std::to_string(s.arity));
        }
    Evaluator ev(m, budget);
    InterpretedStructure out{Structure(I.target), {}};
    auto dom_params = detail::supplied(I.domain_supplier, m, I.domain.params.size(), "the domain formula");
    out.provenance = ev.solutions(I.domain, dom_params);
    for (const auto& t : out.provenance) {
        std::string label;
        for (std::size_t i = 0; i < t.size(); ++i)
            label += (i ? ":" : "") + m.label(t[i]);
        if (out.structure.find(label))
            out.structure.add_fresh_element(label);
        else
            out.structure.add_element(label);
    }
    std::size_t n = out.provenance.size();
    for (std::size_t s = 0; s < I.target.size(); ++s) {
        const auto& rel = I.relation(I.target[s].name);
        auto params = detail::supplied(rel.supplier, m, rel.formula.params.size(), "relation " + rel.symbol);
        auto prepared = ev.prepare(rel.formula);
        std::size_t k = I.target[s].arity;
        if (n == 0)
            continue;
        std::vector<Element> pick(k, 0);
        std::vector<std::size_t> slots(k);
        for (std::size_t i = 0; i < k; ++i)
            slots[i] = i;
        std::vector<Element> header;
        do {
            header.clear();
            for (auto e : pick)
                header.insert(header.end(), out.provenance[e].begin(), out.provenance[e].end());
            header.insert(header.end(), params.begin(), params.end());
            if (ev.holds(*prepared, header))
                out.structure.add_tuple(s, Tuple(pick.begin(), pick.end()));
        } while (detail::next_values(pick, slots, n));
    }
    return out;
}

/// Parameter names used by hat(I, ·) for I's own parameters, in the order of
/// interpretation_parameters.
inline std::vector<std::string> interpretation_parameter_names(const SimpleInterpretation& I) {
    std::vector<std::string> out;
    for (const auto& p : I.domain.params)
        out.push_back("dom." + p);
    for (const auto& r : I.relations)
        for (const auto& p : r.formula.params)
            out.push_back("rel." + r.symbol + "." + p);
    return out;
}

/// Values for interpretation_parameter_names on a source structure.
inline std::vector<Element> interpretation_parameters(const SimpleInterpretation& I, const Structure& m) {
    auto out = detail::supplied(I.domain_supplier, m, I.domain.params.size(), "the domain formula");
    for (const auto& r : I.relations) {
        auto v = detail::supplied(r.supplier, m, r.formula.params.size(), "relation " + r.symbol);
        out.insert(out.end(), v.begin(), v.end());
    }
    return out;
}

namespace detail {

/// Copy of `body` with free names renamed by `rename` and every bound
/// variable renamed to a fresh name.
inline NodePtr instantiate(const NodePtr& body, const std::map<std::string, std::string>& rename, FreshNames& names) {
    const Node& n = *body;
    auto map_term = [&](const std::string& v) {
        auto it = rename.find(v);
        if (it == rename.end())
            throw Error("unbound name " + v + " while instantiating a formula");
        return it->second;
    };
    Node out = n;
    out.children.clear();
    switch (n.kind) {
    case NodeKind::atom:
    case NodeKind::equals:
        for (auto& t : out.terms)
            t = map_term(t);
        return fo::make(std::move(out));
    case NodeKind::exists:
    case NodeKind::forall:
    case NodeKind::exists_more: {
        auto inner = rename;
        for (auto& v : out.terms) {
            std::string f = names.fresh(v);
            inner[v] = f;
            v = f;
        }
        out.children.push_back(instantiate(n.children[0], inner, names));
        return fo::make(std::move(out));
    }
    default:
        for (const auto& c : n.children)
            out.children.push_back(instantiate(c, rename, names));
        return fo::make(std::move(out));
    }
}

class HatBuilder {
public:
    HatBuilder(const SimpleInterpretation& I, FreshNames& names) : I_(I), names_(names) {
        for (const auto& p : I.domain.params)
            dom_params_[p] = "dom." + p;
        for (const auto& r : I.relations)
            for (const auto& p : r.formula.params)
                rel_params_[r.symbol][p] = "rel." + r.symbol + "." + p;
    }

    std::vector<std::string> components(const std::string& v) {
        std::vector<std::string> out;
        if (I_.dimension == 1)
            out.push_back(names_.fresh(v));
        else
            for (std::size_t i = 1; i <= I_.dimension; ++i)
                out.push_back(names_.fresh(v + "." + std::to_string(i)));
        return out;
    }

    NodePtr domain(const std::vector<std::string>& comps) {
        auto rename = dom_params_;
        for (std::size_t i = 0; i < comps.size(); ++i)
            rename[I_.domain.free[i]] = comps[i];
        return instantiate(I_.domain.body, rename, names_);
    }

    NodePtr rewrite(const Node& n, const std::map<std::string, std::vector<std::string>>& comps) {
        auto lookup = [&](const std::string& v) -> const std::vector<std::string>& {
            auto it = comps.find(v);
            if (it == comps.end())
                throw Error("unbound variable " + v + " in the target formula");
            return it->second;
        };
        switch (n.kind) {
        case NodeKind::atom: {
            if (!I_.target.find(n.symbol))
                throw Error("relation symbol " + n.symbol + " is not in the target signature");
            const auto& rel = I_.relation(n.symbol);
            auto rename = rel_params_[n.symbol];
            std::size_t d = I_.dimension;
            if (rel.formula.free.size() != n.terms.size() * d)
                throw Error("atom " + n.symbol + " does not match its interpreting formula");
            for (std::size_t b = 0; b < n.terms.size(); ++b) {
                const auto& c = lookup(n.terms[b]);
                for (std::size_t i = 0; i < d; ++i)
                    rename[rel.formula.free[b * d + i]] = c[i];
            }
            return instantiate(rel.formula.body, rename, names_);
        }
        case NodeKind::equals: {
            const auto& a = lookup(n.terms[0]);
            const auto& b = lookup(n.terms[1]);
            std::vector<NodePtr> parts;
            for (std::size_t i = 0; i < a.size(); ++i)
                parts.push_back(fo::equals(a[i], b[i]));
            return fo::conjunction_of(std::move(parts));
        }
        case NodeKind::negation:
            return fo::negation(rewrite(*n.children[0], comps));
        case NodeKind::conjunction:
        case NodeKind::disjunction: {
            std::vector<NodePtr> parts;
            for (const auto& c : n.children)
                parts.push_back(rewrite(*c, comps));
            return n.kind == NodeKind::conjunction ? fo::conjunction(std::move(parts))
                                                   : fo::disjunction(std::move(parts));
        }
        default:
            break;
        }
        auto inner = comps;
        std::vector<std::string> bound;
        std::vector<std::vector<std::string>> per_var;
        for (const auto& v : n.terms) {
            auto c = components(v);
            bound.insert(bound.end(), c.begin(), c.end());
            per_var.push_back(c);
            inner[v] = std::move(c);
        }
        std::vector<NodePtr> guards;
        for (const auto& c : per_var)
            guards.push_back(domain(c));
        NodePtr body = rewrite(*n.children[0], inner);
        if (n.kind == NodeKind::forall) {
            std::vector<NodePtr> parts;
            for (auto& g : guards)
                parts.push_back(fo::negation(std::move(g)));
            parts.push_back(std::move(body));
            return fo::forall(std::move(bound), fo::disjunction(std::move(parts)));
        }
        guards.push_back(std::move(body));
        if (n.kind == NodeKind::exists)
            return fo::exists(std::move(bound), fo::conjunction(std::move(guards)));
        return fo::exists_more(n.threshold, std::move(bound), fo::conjunction(std::move(guards)));
    }

private:
    const SimpleInterpretation& I_;
    FreshNames& names_;
    std::map<std::string, std::string> dom_params_;
    std::map<std::string, std::map<std::string, std::string>> rel_params_;
};

} // namespace detail

/// Rewrites a target formula into a source formula with
///   M ⊨ hat(φ)(ā) iff I(M) ⊨ φ(a)  for interpreted elements a.
/// Each target variable v becomes I.dimension source variables. Parameters:
/// interpretation_parameter_names(I), then each target parameter expanded
/// into components.
inline Formula hat(const SimpleInterpretation& I, const Formula& f) {
    validate(I);
    validate(f, &I.target);
    FreshNames names;
    auto own = interpretation_parameter_names(I);
    for (const auto& p : own)
        names.reserve(p);
    detail::HatBuilder builder(I, names);
    Formula out;
    out.params = own;
    std::map<std::string, std::vector<std::string>> comps;
    for (const auto& v : f.free) {
        comps[v] = builder.components(v);
        out.free.insert(out.free.end(), comps[v].begin(), comps[v].end());
    }
    for (const auto& p : f.params) {
        comps[p] = builder.components(p);
        out.params.insert(out.params.end(), comps[p].begin(), comps[p].end());
    }
    out.body = builder.rewrite(*f.body, comps);
    return out;
}

/// apply(compose(I, J), M) ≅ apply(J, apply(I, M)).
inline SimpleInterpretation compose(const SimpleInterpretation& I, const SimpleInterpretation& J) {
    validate(I);
    validate(J);
    if (!(I.target == J.source))
        throw Error("signature mismatch: the second interpretation must read the first one's target");
    SimpleInterpretation K;
    K.source = I.source;
    K.target = J.target;
    K.dimension = I.dimension * J.dimension;
    auto own = interpretation_parameter_names(I);

    // Every composite formula keeps I's parameters and expands J's.
    auto supplier_for = [I](const ParameterSupplier& inner, std::size_t width) {
        ParameterSupplier s;
        s.id = "composite";
        s.fn = [I, inner, width](const Structure& m) {
            auto out = interpretation_parameters(I, m);
            auto image = apply(I, m);
            auto values = detail::supplied(inner, image.structure, width, "the composed interpretation");
            for (auto v : values)
                out.insert(out.end(), image.provenance[v].begin(), image.provenance[v].end());
            return out;
        };
        return s;
    };

    Formula dom_j = hat(I, J.domain);
    std::vector<NodePtr> parts;
    {
        FreshNames names(all_names(dom_j));
        for (std::size_t b = 0; b < J.dimension; ++b) {
            std::map<std::string, std::string> rename;
            for (std::size_t i = 0; i < I.domain.params.size(); ++i)
                rename[I.domain.params[i]] = "dom." + I.domain.params[i];
            for (std::size_t i = 0; i < I.dimension; ++i)
                rename[I.domain.free[i]] = dom_j.free[b * I.dimension + i];
            parts.push_back(detail::instantiate(I.domain.body, rename, names));
        }
    }
    parts.push_back(dom_j.body);
    K.domain = {dom_j.free, dom_j.params, fo::conjunction_of(std::move(parts))};
    K.domain_supplier = supplier_for(J.domain_supplier, J.domain.params.size());
    for (const auto& r : J.relations) {
        Formula f = hat(I, r.formula);
        K.relations.push_back({r.symbol, f, supplier_for(r.supplier, r.formula.params.size())});
    }
    return K;
}

/// Decides D ⊨ sentence by evaluating hat(I, sentence) on a preimage of D.
/// The preimage is checked once: apply(I, preimage) must be isomorphic to D.
class ReductionHarness {
public:
    ReductionHarness(const Structure& d, SimpleInterpretation I, const Structure& preimage, Budget budget = {})
        : I_(std::move(I)), preimage_(preimage), ev_(preimage_, budget) {
        auto image = apply(I_, preimage_, budget);
        if (!are_isomorphic(image.structure, d, {}, budget))
            throw Error("the preimage does not interpret to the given structure");
        params_ = interpretation_parameters(I_, preimage_);
    }

    bool holds(const Formula& sentence) {
        if (!sentence.free.empty() || !sentence.params.empty())
            throw Error("reduction expects a sentence without parameters");
        auto rewritten = hat(I_, sentence);
        auto prepared = ev_.prepare(rewritten);
        return ev_.holds(*prepared, params_);
    }

private:
    SimpleInterpretation I_;
    Structure preimage_;
    Evaluator ev_;
    std::vector<Element> params_;
};

inline bool reduce_mc(const Structure& d, const Formula& sentence, const SimpleInterpretation& I,
                      const Structure& preimage, Budget budget = {}) {
    return ReductionHarness(d, I, preimage, budget).holds(sentence);
}

// ---------------------------------------------------------------------------
// Text form:
//   (interpretation :source (E/2 T/3) :target (E/2) :dimension 1
//     :domain (formula ...) :supplier none
//     (relation E (formula ...) :supplier none) ...)

inline Signature signature_from_sexpr(const SExpr& e) {
    if (!e.is_list)
        e.fail("expected a parenthesised signature such as (E/2 T/3)");
    Signature sig;
    for (const auto& item : e.items) {
        auto slash = item.is_list ? std::string::npos : item.atom.rfind('/');
        if (slash == std::string::npos || slash == 0 || slash + 1 == item.atom.size())
            item.fail("expected NAME/ARITY");
        std::size_t arity = 0;
        for (char c : item.atom.substr(slash + 1)) {
            if (c < '0' || c > '9')
                item.fail("arity must be a positive number");
            arity = arity * 10 + static_cast<std::size_t>(c - '0');
        }
        try {
            sig.add(item.atom.substr(0, slash), arity);
        } catch (const Error& err) {
            item.fail(err.what());
        }
    }
    return sig;
}

inline std::string to_string(const Signature& sig) {
    std::string out = "(";
    for (std::size_t i = 0; i < sig.size(); ++i)
        out += (i ? " " : "") + sig[i].name + "/" + std::to_string(sig[i].arity);
    return out + ")";
}

inline SimpleInterpretation interpretation_from_sexpr(const SExpr& e) {
    if (!e.is_list || e.items.empty() || !e.items[0].is_atom("interpretation"))
        e.fail("expected (interpretation ...)");
    SimpleInterpretation I;
    bool has_source = false, has_target = false, has_domain = false;
    auto supplier = [](const SExpr& s) {
        if (s.is_list)
            s.fail("expected a supplier name");
        try {
            return supplier_from_id(s.atom);
        } catch (const Error& err) {
            s.fail(err.what());
        }
    };
    std::size_t i = 1;
    while (i < e.items.size()) {
        const auto& item = e.items[i];
        if (item.is_list) {
            if (item.items.size() < 3 || !item.items[0].is_atom("relation") || item.items[1].is_list)
                item.fail("expected (relation NAME (formula ...) [:supplier ID])");
            InterpretedRelation r{item.items[1].atom, formula_from_sexpr(item.items[2]), {}};
            if (item.items.size() == 5 && item.items[3].is_atom(":supplier"))
                r.supplier = supplier(item.items[4]);
            else if (item.items.size() != 3)
                item.fail("expected (relation NAME (formula ...) [:supplier ID])");
            I.relations.push_back(std::move(r));
            ++i;
            continue;
        }
        if (i + 1 >= e.items.size())
            item.fail("keyword " + item.atom + " lacks a value");
        const auto& value = e.items[i + 1];
        if (item.atom == ":source") {
            I.source = signature_from_sexpr(value);
            has_source = true;
        } else if (item.atom == ":target") {
            I.target = signature_from_sexpr(value);
            has_target = true;
        } else if (item.atom == ":dimension") {
            if (value.is_list || value.atom.empty() || value.atom.find_first_not_of("0123456789") != std::string::npos)
                value.fail("dimension must be a positive number");
            I.dimension = std::stoul(value.atom);
        } else if (item.atom == ":domain") {
            I.domain = formula_from_sexpr(value);
            has_domain = true;
        } else if (item.atom == ":supplier") {
            I.domain_supplier = supplier(value);
        } else {
            item.fail("unexpected keyword " + item.atom);
        }
        i += 2;
    }
    if (!has_source || !has_target || !has_domain)
        e.fail("interpretation needs :source, :target and :domain");
    try {
        validate(I);
    } catch (const ParseError&) {
        throw;
    } catch (const Error& err) {
        e.fail(err.what());
    }
    return I;
}

inline SimpleInterpretation parse_interpretation(std::string_view text) {
    return interpretation_from_sexpr(parse_sexpr(text));
}

inline std::string to_string(const SimpleInterpretation& I) {
    std::string out = "(interpretation :source " + to_string(I.source) + " :target " + to_string(I.target) +
                      " :dimension " + std::to_string(I.dimension) + "\n  :domain " + to_string(I.domain) +
                      " :supplier " + I.domain_supplier.id;
    for (const auto& r : I.relations)
        out += "\n  (relation " + r.symbol + " " + to_string(r.formula) + " :supplier " + r.supplier.id + ")";
    return out + ")\n";
}

} // namespace mnip
