#pragma once

// First-order formulas over relational signatures with named parameters and a
// counting quantifier, in the s-expression syntax
//
//   (formula :free (v ...) :params (p ...) BODY)
//   BODY := (R t ...) | (= t t) | (not BODY) | (and BODY ...) | (or BODY ...)
//         | (exists (v ...) BODY) | (forall (v ...) BODY)
//         | (exists> k (v ...) BODY)
//
// (and) is true and (or) is false. Terms are variables or parameters.

#include "mnip/relcore.hpp"
#include "mnip/sexpr.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <vector>

namespace mnip {

enum class NodeKind { atom, equals, negation, conjunction, disjunction, exists, forall, exists_more };

struct Node;
using NodePtr = std::shared_ptr<const Node>;

struct Node {
    NodeKind kind = NodeKind::conjunction;
    std::string symbol;              // atom
    std::vector<std::string> terms;  // atom, equals: terms; quantifiers: bound variables
    std::size_t threshold = 0;       // exists_more
    std::vector<NodePtr> children;
};

struct Formula {
    std::vector<std::string> free;
    std::vector<std::string> params;
    NodePtr body;
};

namespace fo {

inline NodePtr make(Node n) { return std::make_shared<const Node>(std::move(n)); }

inline NodePtr atom(std::string symbol, std::vector<std::string> terms) {
    return make({NodeKind::atom, std::move(symbol), std::move(terms), 0, {}});
}
inline NodePtr equals(std::string a, std::string b) {
    return make({NodeKind::equals, {}, {std::move(a), std::move(b)}, 0, {}});
}
inline NodePtr negation(NodePtr b) { return make({NodeKind::negation, {}, {}, 0, {std::move(b)}}); }
inline NodePtr conjunction(std::vector<NodePtr> parts) {
    return make({NodeKind::conjunction, {}, {}, 0, std::move(parts)});
}
inline NodePtr disjunction(std::vector<NodePtr> parts) {
    return make({NodeKind::disjunction, {}, {}, 0, std::move(parts)});
}
inline NodePtr truth() { return conjunction({}); }
inline NodePtr falsity() { return disjunction({}); }
inline NodePtr exists(std::vector<std::string> vars, NodePtr b) {
    return make({NodeKind::exists, {}, std::move(vars), 0, {std::move(b)}});
}
inline NodePtr forall(std::vector<std::string> vars, NodePtr b) {
    return make({NodeKind::forall, {}, std::move(vars), 0, {std::move(b)}});
}
inline NodePtr exists_more(std::size_t k, std::vector<std::string> vars, NodePtr b) {
    return make({NodeKind::exists_more, {}, std::move(vars), k, {std::move(b)}});
}
inline NodePtr disequality(std::string a, std::string b) { return negation(equals(std::move(a), std::move(b))); }

/// Wraps in an existential block unless `vars` is empty.
inline NodePtr exists_if_any(std::vector<std::string> vars, NodePtr b) {
    return vars.empty() ? b : exists(std::move(vars), std::move(b));
}

/// Conjunction that collapses a single conjunct.
inline NodePtr conjunction_of(std::vector<NodePtr> parts) {
    return parts.size() == 1 ? parts.front() : conjunction(std::move(parts));
}

} // namespace fo

inline bool is_quantifier(NodeKind k) {
    return k == NodeKind::exists || k == NodeKind::forall || k == NodeKind::exists_more;
}

inline const std::set<std::string>& reserved_words() {
    static const std::set<std::string> words = {"and", "or", "not", "exists", "forall", "exists>", "=", "formula"};
    return words;
}

inline bool is_valid_identifier(std::string_view name) {
    return is_valid_name(name) && name.front() != ':' && !reserved_words().count(std::string(name));
}

// ---------------------------------------------------------------------------
// Printing

inline void print_body(const Node& n, std::string& out) {
    auto list = [&](const std::vector<std::string>& names) {
        out += '(';
        for (std::size_t i = 0; i < names.size(); ++i) {
            if (i)
                out += ' ';
            out += names[i];
        }
        out += ')';
    };
    switch (n.kind) {
    case NodeKind::atom:
        out += '(';
        out += n.symbol;
        for (const auto& t : n.terms) {
            out += ' ';
            out += t;
        }
        out += ')';
        return;
    case NodeKind::equals:
        out += "(= " + n.terms[0] + " " + n.terms[1] + ")";
        return;
    case NodeKind::negation:
        out += "(not ";
        print_body(*n.children[0], out);
        out += ')';
        return;
    case NodeKind::conjunction:
    case NodeKind::disjunction:
        out += n.kind == NodeKind::conjunction ? "(and" : "(or";
        for (const auto& c : n.children) {
            out += ' ';
            print_body(*c, out);
        }
        out += ')';
        return;
    case NodeKind::exists:
    case NodeKind::forall:
    case NodeKind::exists_more:
        if (n.kind == NodeKind::exists)
            out += "(exists ";
        else if (n.kind == NodeKind::forall)
            out += "(forall ";
        else
            out += "(exists> " + std::to_string(n.threshold) + " ";
        list(n.terms);
        out += ' ';
        print_body(*n.children[0], out);
        out += ')';
        return;
    }
}

inline std::string to_string(const NodePtr& body) {
    std::string out;
    print_body(*body, out);
    return out;
}

inline std::string to_string(const Formula& f) {
    auto list = [](const std::vector<std::string>& names) {
        std::string s = "(";
        for (std::size_t i = 0; i < names.size(); ++i) {
            if (i)
                s += ' ';
            s += names[i];
        }
        return s + ")";
    };
    return "(formula :free " + list(f.free) + " :params " + list(f.params) + " " + to_string(f.body) + ")";
}

// ---------------------------------------------------------------------------
// Validation

namespace detail {

struct FormulaChecker {
    const Signature* signature;
    std::map<std::string, std::size_t> arities;
    std::vector<std::string> scope;

    [[noreturn]] static void fail(const std::string& what) { throw Error(what); }

    bool in_scope(const std::string& v) const { return std::find(scope.begin(), scope.end(), v) != scope.end(); }

    void check_term(const std::string& t) {
        if (!in_scope(t))
            fail("unbound variable " + t);
    }

    void visit(const Node& n) {
        switch (n.kind) {
        case NodeKind::atom: {
            if (!is_valid_identifier(n.symbol))
                fail("invalid relation symbol '" + n.symbol + "'");
            if (n.terms.empty())
                fail("atom " + n.symbol + " has no arguments");
            if (signature) {
                auto s = signature->find(n.symbol);
                if (!s)
                    fail("relation symbol " + n.symbol + " is not in the signature");
                if ((*signature)[*s].arity != n.terms.size())
                    fail("arity mismatch for " + n.symbol + ": expected " + std::to_string((*signature)[*s].arity) +
                         ", got " + std::to_string(n.terms.size()));
            }
            auto [it, fresh] = arities.emplace(n.symbol, n.terms.size());
            if (!fresh && it->second != n.terms.size())
                fail("relation symbol " + n.symbol + " used with arities " + std::to_string(it->second) + " and " +
                     std::to_string(n.terms.size()));
            for (const auto& t : n.terms)
                check_term(t);
            return;
        }
        case NodeKind::equals:
            if (n.terms.size() != 2)
                fail("equality takes two terms");
            check_term(n.terms[0]);
            check_term(n.terms[1]);
            return;
        case NodeKind::negation:
            if (n.children.size() != 1)
                fail("negation takes one argument");
            visit(*n.children[0]);
            return;
        case NodeKind::conjunction:
        case NodeKind::disjunction:
            for (const auto& c : n.children)
                visit(*c);
            return;
        case NodeKind::exists:
        case NodeKind::forall:
        case NodeKind::exists_more: {
            if (n.terms.empty())
                fail("quantifier binds no variables");
            if (n.children.size() != 1)
                fail("quantifier takes one body");
            for (std::size_t i = 0; i < n.terms.size(); ++i) {
                const auto& v = n.terms[i];
                if (!is_valid_identifier(v))
                    fail("invalid variable name '" + v + "'");
                if (in_scope(v))
                    fail("variable " + v + " is bound twice along one branch");
                for (std::size_t j = 0; j < i; ++j)
                    if (n.terms[j] == v)
                        fail("variable " + v + " repeated in one quantifier block");
            }
            for (const auto& v : n.terms)
                scope.push_back(v);
            visit(*n.children[0]);
            scope.resize(scope.size() - n.terms.size());
            return;
        }
        }
    }
};

} // namespace detail

/// Checks scoping and arities; throws Error on the first problem.
inline void validate(const Formula& f, const Signature* signature = nullptr) {
    detail::FormulaChecker c{signature, {}, {}};
    std::set<std::string> header;
    for (const auto* list : {&f.free, &f.params})
        for (const auto& v : *list) {
            if (!is_valid_identifier(v))
                throw Error("invalid variable name '" + v + "'");
            if (!header.insert(v).second)
                throw Error("name " + v + " declared twice in the formula header");
            c.scope.push_back(v);
        }
    if (!f.body)
        throw Error("formula has no body");
    c.visit(*f.body);
}

// ---------------------------------------------------------------------------
// Parsing

namespace detail {

inline std::vector<std::string> name_list(const SExpr& e, const char* what) {
    if (!e.is_list)
        e.fail(std::string("expected a parenthesised ") + what + " list");
    std::vector<std::string> out;
    for (const auto& item : e.items) {
        if (item.is_list)
            item.fail(std::string("expected a name in the ") + what + " list");
        if (!is_valid_identifier(item.atom))
            item.fail("invalid name '" + item.atom + "'");
        out.push_back(item.atom);
    }
    return out;
}

inline NodePtr body_from_sexpr(const SExpr& e) {
    if (!e.is_list)
        e.fail("expected a parenthesised formula, got '" + e.atom + "'");
    if (e.items.empty())
        e.fail("empty formula");
    const SExpr& head = e.items[0];
    if (head.is_list)
        head.fail("expected an operator or relation symbol");
    const std::string& op = head.atom;
    auto terms_from = [&](std::size_t first) {
        std::vector<std::string> terms;
        for (std::size_t i = first; i < e.items.size(); ++i) {
            const auto& t = e.items[i];
            if (t.is_list)
                t.fail("expected a variable or parameter name");
            if (!is_valid_identifier(t.atom))
                t.fail("invalid term '" + t.atom + "'");
            terms.push_back(t.atom);
        }
        return terms;
    };
    if (op == "=") {
        if (e.items.size() != 3)
            e.fail("equality takes exactly two terms");
        auto t = terms_from(1);
        return fo::equals(t[0], t[1]);
    }
    if (op == "not") {
        if (e.items.size() != 2)
            e.fail("not takes exactly one argument");
        return fo::negation(body_from_sexpr(e.items[1]));
    }
    if (op == "and" || op == "or") {
        std::vector<NodePtr> parts;
        for (std::size_t i = 1; i < e.items.size(); ++i)
            parts.push_back(body_from_sexpr(e.items[i]));
        return op == "and" ? fo::conjunction(std::move(parts)) : fo::disjunction(std::move(parts));
    }
    if (op == "exists" || op == "forall") {
        if (e.items.size() != 3)
            e.fail(op + " takes a variable list and a body");
        auto vars = name_list(e.items[1], "variable");
        if (vars.empty())
            e.items[1].fail("quantifier binds no variables");
        auto b = body_from_sexpr(e.items[2]);
        return op == "exists" ? fo::exists(std::move(vars), std::move(b)) : fo::forall(std::move(vars), std::move(b));
    }
    if (op == "exists>") {
        if (e.items.size() != 4)
            e.fail("exists> takes a threshold, a variable list and a body");
        const auto& k = e.items[1];
        if (k.is_list || k.atom.empty() || k.atom.find_first_not_of("0123456789") != std::string::npos)
            k.fail("threshold must be a nonnegative integer");
        std::size_t threshold = 0;
        try {
            threshold = std::stoull(k.atom);
        } catch (const std::exception&) {
            k.fail("threshold out of range");
        }
        auto vars = name_list(e.items[2], "variable");
        if (vars.empty())
            e.items[2].fail("quantifier binds no variables");
        return fo::exists_more(threshold, std::move(vars), body_from_sexpr(e.items[3]));
    }
    if (!is_valid_identifier(op) || op.front() == ':')
        head.fail("invalid relation symbol '" + op + "'");
    if (e.items.size() < 2)
        e.fail("atom " + op + " has no arguments");
    return fo::atom(op, terms_from(1));
}

} // namespace detail

inline Formula formula_from_sexpr(const SExpr& e, const Signature* signature = nullptr) {
    if (!e.is_list || e.items.empty() || !e.items[0].is_atom("formula"))
        e.fail("expected (formula :free (...) :params (...) BODY)");
    Formula f;
    std::size_t i = 1;
    bool seen_free = false, seen_params = false;
    while (i < e.items.size() && e.items[i].is_atom() && !e.items[i].atom.empty() && e.items[i].atom[0] == ':') {
        const auto& key = e.items[i];
        if (i + 1 >= e.items.size())
            key.fail("keyword " + key.atom + " lacks a value");
        if (key.atom == ":free" && !seen_free) {
            f.free = detail::name_list(e.items[i + 1], "free variable");
            seen_free = true;
        } else if (key.atom == ":params" && !seen_params) {
            f.params = detail::name_list(e.items[i + 1], "parameter");
            seen_params = true;
        } else {
            key.fail("unexpected keyword " + key.atom);
        }
        i += 2;
    }
    if (i + 1 != e.items.size())
        e.fail("formula needs exactly one body after its header");
    f.body = detail::body_from_sexpr(e.items[i]);
    try {
        validate(f, signature);
    } catch (const ParseError&) {
        throw;
    } catch (const Error& err) {
        throw ParseError(err.what(), e.line, e.column);
    }
    return f;
}

inline Formula parse_formula(std::string_view text, const Signature* signature = nullptr) {
    return formula_from_sexpr(parse_sexpr(text), signature);
}

// ---------------------------------------------------------------------------
// Syntactic utilities

/// Names occurring free in a body (variables and parameters alike), in order
/// of first occurrence.
inline std::vector<std::string> free_names(const NodePtr& body) {
    std::vector<std::string> out;
    std::vector<std::string> bound;
    auto note = [&](const std::string& v) {
        if (std::find(bound.begin(), bound.end(), v) == bound.end() &&
            std::find(out.begin(), out.end(), v) == out.end())
            out.push_back(v);
    };
    std::function<void(const Node&)> walk = [&](const Node& n) {
        if (n.kind == NodeKind::atom || n.kind == NodeKind::equals) {
            for (const auto& t : n.terms)
                note(t);
            return;
        }
        if (is_quantifier(n.kind)) {
            bound.insert(bound.end(), n.terms.begin(), n.terms.end());
            walk(*n.children[0]);
            bound.resize(bound.size() - n.terms.size());
            return;
        }
        for (const auto& c : n.children)
            walk(*c);
    };
    walk(*body);
    return out;
}

/// Every name appearing anywhere in the body, bound or free.
inline std::set<std::string> all_names(const NodePtr& body) {
    std::set<std::string> out;
    std::function<void(const Node&)> walk = [&](const Node& n) {
        out.insert(n.terms.begin(), n.terms.end());
        for (const auto& c : n.children)
            walk(*c);
    };
    walk(*body);
    return out;
}

inline std::set<std::string> all_names(const Formula& f) {
    auto out = all_names(f.body);
    out.insert(f.free.begin(), f.free.end());
    out.insert(f.params.begin(), f.params.end());
    return out;
}

/// Relation symbols with their arities, in order of first occurrence.
inline Signature symbols_of(const NodePtr& body) {
    Signature sig;
    std::function<void(const Node&)> walk = [&](const Node& n) {
        if (n.kind == NodeKind::atom) {
            if (auto s = sig.find(n.symbol)) {
                if (sig[*s].arity != n.terms.size())
                    throw Error("relation symbol " + n.symbol + " used with two arities");
            } else {
                sig.add(n.symbol, n.terms.size());
            }
        }
        for (const auto& c : n.children)
            walk(*c);
    };
    walk(*body);
    return sig;
}

inline std::size_t quantifier_depth(const NodePtr& body) {
    std::size_t d = 0;
    for (const auto& c : body->children)
        d = std::max(d, quantifier_depth(c));
    return is_quantifier(body->kind) ? d + 1 : d;
}

/// Generates names not yet in use.
class FreshNames {
public:
    FreshNames() = default;
    explicit FreshNames(std::set<std::string> used) : used_(std::move(used)) {}

    void reserve(const std::string& name) { used_.insert(name); }
    void reserve(const std::set<std::string>& names) { used_.insert(names.begin(), names.end()); }
    bool used(const std::string& name) const { return used_.count(name) != 0; }

    std::string fresh(const std::string& base) {
        std::string name = base;
        for (std::size_t i = 1; used_.count(name) || !is_valid_identifier(name); ++i)
            name = base + "_" + std::to_string(i);
        used_.insert(name);
        return name;
    }

private:
    std::set<std::string> used_;
};

/// Replaces free occurrences of names by `map`. Bound variables that would
/// capture an inserted name are renamed through `names`.
inline NodePtr substitute(const NodePtr& body, const std::map<std::string, std::string>& map, FreshNames& names) {
    std::set<std::string> inserted;
    for (const auto& [from, to] : map)
        inserted.insert(to);
    std::function<NodePtr(const NodePtr&, const std::map<std::string, std::string>&)> walk =
        [&](const NodePtr& n, const std::map<std::string, std::string>& m) -> NodePtr {
        auto rename = [&](const std::string& v) {
            auto it = m.find(v);
            return it == m.end() ? v : it->second;
        };
        Node copy = *n;
        switch (n->kind) {
        case NodeKind::atom:
        case NodeKind::equals:
            for (auto& t : copy.terms)
                t = rename(t);
            return fo::make(std::move(copy));
        case NodeKind::exists:
        case NodeKind::forall:
        case NodeKind::exists_more: {
            auto inner = m;
            for (auto& v : copy.terms) {
                inner.erase(v);
                if (inserted.count(v)) {
                    std::string renamed = names.fresh(v);
                    inner[v] = renamed;
                    v = renamed;
                }
            }
            copy.children[0] = walk(n->children[0], inner);
            return fo::make(std::move(copy));
        }
        default:
            for (auto& c : copy.children)
                c = walk(c, m);
            return fo::make(std::move(copy));
        }
    };
    return walk(body, map);
}

inline NodePtr substitute(const NodePtr& body, const std::map<std::string, std::string>& map) {
    FreshNames names(all_names(body));
    for (const auto& [from, to] : map)
        names.reserve(to);
    return substitute(body, map, names);
}

} // namespace mnip
