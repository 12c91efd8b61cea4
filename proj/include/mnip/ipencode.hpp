#pragma once

// Coding bipartite graphs with a simple path formula: pendant augmentation,
// the encoder, desymmetrization, the decoding interpretation, and checks of
// the resulting independence-property witness.

#include "mnip/canonical.hpp"
#include "mnip/evaluator.hpp"
#include "mnip/formula.hpp"
#include "mnip/interp.hpp"
#include "mnip/io.hpp"
#include "mnip/path.hpp"
#include "mnip/relcore.hpp"

#include <map>
#include <numeric>
#include <set>
#include <string>
#include <vector>

namespace mnip {

struct EncoderTemplate {
    Formula formula;
    std::vector<std::string> xs;
    std::vector<std::string> ys;
    Signature signature;
    std::size_t k = 0;  // number of steps of the canonical path
};

/// Checks the template and returns its path length.
inline std::size_t validate_template(const Formula& f, const std::vector<std::string>& xs,
                                     const std::vector<std::string>& ys, const Signature& sig) {
    validate(f, &sig);
    if (!is_pp(f))
        throw Error("template formula must be primitive positive");
    std::vector<std::string> split = xs;
    split.insert(split.end(), ys.begin(), ys.end());
    if (std::set<std::string>(split.begin(), split.end()) != std::set<std::string>(f.free.begin(), f.free.end()) ||
        split.size() != f.free.size())
        throw Error("x and y must partition the free variables");
    auto cls = classify_path_formula(f, xs, ys);
    if (cls.kind != PathKind::simple_path)
        throw Error(std::string("template must be a simple path formula, got ") + to_string(cls.kind));
    if (cls.path->length() < 2)
        throw Error("template path must have length at least 2");
    return cls.path->length();
}

inline EncoderTemplate make_template(Formula f, std::vector<std::string> xs, std::vector<std::string> ys,
                                     std::optional<Signature> sig = std::nullopt) {
    EncoderTemplate t{std::move(f), std::move(xs), std::move(ys), {}, 0};
    t.signature = sig ? *sig : symbols_of(t.formula.body);
    t.k = validate_template(t.formula, t.xs, t.ys, t.signature);
    return t;
}

/// (template :x (x) :y (y) [:signature (E/2 T/3)] (formula ...))
inline EncoderTemplate parse_template(std::string_view text) {
    auto e = parse_sexpr(text);
    if (!e.is_list || e.items.empty() || !e.items[0].is_atom("template"))
        e.fail("expected (template :x (...) :y (...) (formula ...))");
    std::optional<std::vector<std::string>> xs, ys;
    std::optional<Signature> sig;
    std::optional<Formula> f;
    for (std::size_t i = 1; i < e.items.size(); ++i) {
        const auto& item = e.items[i];
        if (item.is_list) {
            if (f)
                item.fail("template has more than one formula");
            f = formula_from_sexpr(item);
            continue;
        }
        if (i + 1 >= e.items.size())
            item.fail("keyword " + item.atom + " lacks a value");
        const auto& value = e.items[++i];
        if (item.atom == ":x")
            xs = detail::name_list(value, "x variable");
        else if (item.atom == ":y")
            ys = detail::name_list(value, "y variable");
        else if (item.atom == ":signature")
            sig = signature_from_sexpr(value);
        else
            item.fail("unexpected keyword " + item.atom);
    }
    if (!xs || !ys || !f)
        e.fail("template needs :x, :y and a formula");
    try {
        return make_template(*f, *xs, *ys, sig);
    } catch (const ParseError&) {
        throw;
    } catch (const Error& err) {
        e.fail(err.what());
    }
}

inline std::string to_string(const EncoderTemplate& t) {
    auto list = [](const std::vector<std::string>& v) {
        std::string out = "(";
        for (std::size_t i = 0; i < v.size(); ++i)
            out += (i ? " " : "") + v[i];
        return out + ")";
    };
    return "(template :x " + list(t.xs) + " :y " + list(t.ys) + " :signature " + to_string(t.signature) + "\n  " +
           to_string(t.formula) + ")\n";
}

/// Adds k + 1 pendant partners to every vertex. Originals keep their indices;
/// the pendants of a right vertex v are left vertices labelled v~1..v~(k+1),
/// and symmetrically.
inline BipartiteGraph pendant_augment(const BipartiteGraph& g, std::size_t k) {
    if (k == 0)
        throw Error("pendant augmentation needs k >= 1");
    BipartiteGraph out;
    for (std::size_t u = 0; u < g.left_size(); ++u)
        out.add_left(g.left_label(u));
    for (std::size_t v = 0; v < g.right_size(); ++v)
        out.add_right(g.right_label(v));
    for (auto [u, v] : g.edges())
        out.add_edge(u, v);
    auto name = [&](const std::string& base) {
        std::string label = base;
        for (std::size_t suffix = 1; out.find_left(label) || out.find_right(label); ++suffix)
            label = base + "'" + std::to_string(suffix);
        return label;
    };
    for (std::size_t v = 0; v < g.right_size(); ++v)
        for (std::size_t i = 1; i <= k + 1; ++i)
            out.add_edge(out.add_left(name(g.right_label(v) + "~" + std::to_string(i))), v);
    for (std::size_t u = 0; u < g.left_size(); ++u)
        for (std::size_t i = 1; i <= k + 1; ++i)
            out.add_edge(u, out.add_right(name(g.left_label(u) + "~" + std::to_string(i))));
    return out;
}

/// Reorders y so that no swap automorphism with a non-identity permutation
/// remains. Templates that are not symmetric (in particular those with
/// |x| != |y|) come back unchanged.
inline EncoderTemplate desymmetrize(const EncoderTemplate& t) {
    if (t.xs.size() != t.ys.size())
        return t;
    auto w = symmetric_witness(t.formula, t.xs, t.ys);
    if (!w)
        return t;
    EncoderTemplate out = t;
    for (std::size_t i = 0; i < t.ys.size(); ++i)
        out.ys[i] = t.ys[w->sigma[i]];
    if (symmetric_witness(out.formula, out.xs, out.ys))
        throw Error("template stays symmetric after reordering y");
    return out;
}

/// Whether swapping x_i with y_i extends to an automorphism fixing the
/// parameters; such templates define a symmetric edge relation.
inline bool swaps_identically(const EncoderTemplate& t) {
    if (t.xs.size() != t.ys.size())
        return false;
    std::vector<std::size_t> id(t.xs.size());
    std::iota(id.begin(), id.end(), 0);
    return swap_automorphism(t.formula, t.xs, t.ys, id).has_value();
}

struct EncodedInstance {
    Structure structure;
    std::vector<Element> params;
    std::vector<Tuple> left;   // ā_u
    std::vector<Tuple> right;  // b̄_v
    std::map<std::pair<std::size_t, std::size_t>, Tuple> edges;  // h̄_{u,v}, bound-variable order
    BipartiteGraph source;
};

/// Parameters first, then one tuple per left vertex, one per right vertex,
/// and per edge a fresh copy of the bound variables carrying the template's
/// tuples.
inline EncodedInstance encode(const BipartiteGraph& g, const EncoderTemplate& t) {
    validate_template(t.formula, t.xs, t.ys, t.signature);
    auto q = as_conjunctive(t.formula);
    EncodedInstance out{Structure(t.signature), {}, {}, {}, {}, g};
    Structure& m = out.structure;
    auto add = [&](const std::string& label) { return m.find(label) ? m.add_fresh_element(label) : m.add_element(label); };
    for (const auto& p : t.formula.params)
        out.params.push_back(add(p));
    for (std::size_t u = 0; u < g.left_size(); ++u) {
        Tuple a;
        for (const auto& x : t.xs)
            a.push_back(add(g.left_label(u) + "." + x));
        out.left.push_back(std::move(a));
    }
    for (std::size_t v = 0; v < g.right_size(); ++v) {
        Tuple b;
        for (const auto& y : t.ys)
            b.push_back(add(g.right_label(v) + "." + y));
        out.right.push_back(std::move(b));
    }
    for (auto [u, v] : g.edges()) {
        std::map<std::string, Element> at;
        for (std::size_t i = 0; i < t.xs.size(); ++i)
            at[t.xs[i]] = out.left[u][i];
        for (std::size_t i = 0; i < t.ys.size(); ++i)
            at[t.ys[i]] = out.right[v][i];
        for (std::size_t i = 0; i < t.formula.params.size(); ++i)
            at[t.formula.params[i]] = out.params[i];
        Tuple h;
        for (const auto& w : q->bound) {
            at[w] = add(g.left_label(u) + "-" + g.right_label(v) + "." + w);
            h.push_back(at[w]);
        }
        for (const auto& atom : q->atoms) {
            Tuple tup;
            for (const auto& term : atom.terms)
                tup.push_back(at.at(term));
            m.add_tuple(atom.symbol, std::move(tup));
        }
        out.edges[{u, v}] = std::move(h);
    }
    return out;
}

/// The decoding interpretation: domain θ_U ∨ θ_V over tuples of width
/// max(|x|, |y|) (the shorter side padded by repeating its last entry), edge
/// formula φ(x, y). Parameters are read from the header of the encoded
/// structure.
inline SimpleInterpretation decoder(const EncoderTemplate& t) {
    validate_template(t.formula, t.xs, t.ys, t.signature);
    if (t.xs.size() == t.ys.size() && symmetric_witness(t.formula, t.xs, t.ys))
        throw Error("template is symmetric; desymmetrize it first");
    const std::size_t d = std::max(t.xs.size(), t.ys.size());
    const Formula& f = t.formula;
    FreshNames names(all_names(f));
    std::vector<std::string> s, r;
    for (std::size_t i = 1; i <= d; ++i)
        s.push_back(names.fresh("s" + std::to_string(i)));
    for (std::size_t i = 1; i <= d; ++i)
        r.push_back(names.fresh("t" + std::to_string(i)));

    auto instance = [&](const std::vector<std::string>& xv, const std::vector<std::string>& yv) {
        std::map<std::string, std::string> map;
        for (std::size_t i = 0; i < t.xs.size(); ++i)
            map[t.xs[i]] = xv[i];
        for (std::size_t i = 0; i < t.ys.size(); ++i)
            map[t.ys[i]] = yv[i];
        return substitute(f.body, map, names);
    };
    auto side = [&](bool left) {
        std::size_t own = left ? t.xs.size() : t.ys.size();
        std::size_t other = left ? t.ys.size() : t.xs.size();
        std::vector<std::string> mine(s.begin(), s.begin() + static_cast<std::ptrdiff_t>(own));
        std::vector<std::string> counted(r.begin(), r.begin() + static_cast<std::ptrdiff_t>(other));
        std::vector<NodePtr> parts;
        parts.push_back(fo::exists_more(t.k, counted, left ? instance(mine, counted) : instance(counted, mine)));
        for (const auto& v : mine)
            for (const auto& p : f.params)
                parts.push_back(fo::disequality(v, p));
        for (std::size_t i = own; i < d; ++i)
            parts.push_back(fo::equals(s[i - 1], s[i]));
        return fo::conjunction_of(std::move(parts));
    };

    SimpleInterpretation I;
    I.source = t.signature;
    I.target.add("E", 2);
    I.dimension = d;
    I.domain = {s, f.params, fo::disjunction({side(true), side(false)})};
    I.domain_supplier = supplier_from_id("header:" + std::to_string(f.params.size()));

    std::vector<std::string> edge_free = s;
    edge_free.insert(edge_free.end(), r.begin(), r.end());
    std::vector<std::string> xv(s.begin(), s.begin() + static_cast<std::ptrdiff_t>(t.xs.size()));
    std::vector<std::string> yv(r.begin(), r.begin() + static_cast<std::ptrdiff_t>(t.ys.size()));
    NodePtr edge = instance(xv, yv);
    if (swaps_identically(t)) {
        // Folding the path onto its first half satisfies φ(ā, ā); keep the
        // two endpoints apart so no loops appear.
        std::vector<NodePtr> parts{edge};
        for (const auto& a : s)
            for (const auto& b : r)
                parts.push_back(fo::disequality(a, b));
        edge = fo::conjunction(std::move(parts));
    }
    I.relations.push_back({"E", {edge_free, f.params, edge}, I.domain_supplier});
    return I;
}

struct RoundtripResult {
    bool ok = false;
    std::string detail;
    InterpretedStructure image;
};

/// Decodes the encoding of the pendant-augmented graph and compares it with
/// G through provenance: the element built from ā_u must stand for u, the
/// one built from b̄_v for v, and nothing else may be selected. Edges must be
/// exactly those of G (symmetric when the template swaps identically).
/// Symmetric templates are desymmetrized first.
inline RoundtripResult roundtrip(const BipartiteGraph& g, const EncoderTemplate& given, Budget budget = {}) {
    RoundtripResult out;
    const EncoderTemplate t = desymmetrize(given);
    auto augmented = pendant_augment(g, t.k);
    auto enc = encode(augmented, t);
    auto I = decoder(t);
    out.image = apply(I, enc.structure, budget);
    const std::size_t d = I.dimension;
    auto padded = [d](Tuple tup) {
        while (tup.size() < d)
            tup.push_back(tup.back());
        return tup;
    };
    std::map<Tuple, Element> expected;  // provenance -> vertex of bipartite_to_structure(g)
    for (std::size_t u = 0; u < g.left_size(); ++u)
        expected[padded(enc.left[u])] = static_cast<Element>(u);
    for (std::size_t v = 0; v < g.right_size(); ++v)
        expected[padded(enc.right[v])] = static_cast<Element>(g.left_size() + v);
    const Structure& img = out.image.structure;
    if (img.size() != expected.size()) {
        out.detail = "decoded " + std::to_string(img.size()) + " vertices, expected " + std::to_string(expected.size());
        return out;
    }
    Structure want = bipartite_to_structure(g, swaps_identically(t));
    std::vector<Element> to_want(img.size());
    for (Element e = 0; e < img.size(); ++e) {
        auto it = expected.find(out.image.provenance[e]);
        if (it == expected.end()) {
            out.detail = "decoded vertex " + img.label(e) + " is not an original vertex";
            return out;
        }
        to_want[e] = it->second;
    }
    std::set<Tuple> got;
    for (const auto& tup : img.relation("E"))
        got.insert({to_want[tup[0]], to_want[tup[1]]});
    if (got != want.relation("E")) {
        out.detail = "decoded edges differ from the source graph";
        return out;
    }
    out.ok = true;
    out.detail = "ISOMORPHIC";
    return out;
}

inline bool roundtrip_check(const BipartiteGraph& g, const EncoderTemplate& t, Budget budget = {}) {
    return roundtrip(g, t, budget).ok;
}

struct WitnessReport {
    bool ok = true;
    std::vector<std::string> violations;
};

/// Re-checks an encoded instance: (1) φ(ā_u, b̄_v) iff (u, v) is an edge,
/// (2) the listed witnesses satisfy the matrix on edges, (3) constant
/// equality type of ā_u b̄_v h̄_{u,v} over edges, (4) listed tuples pairwise
/// disjoint and away from the parameters.
inline WitnessReport verify_ip_witness(const EncodedInstance& inst, const EncoderTemplate& t, Budget budget = {}) {
    WitnessReport rep;
    auto violation = [&](std::string what) {
        rep.ok = false;
        rep.violations.push_back(std::move(what));
    };
    const auto& g = inst.source;
    const Structure& m = inst.structure;
    auto q = as_conjunctive(t.formula);
    if (!q)
        throw Error("template formula must be primitive positive");
    if (inst.left.size() != g.left_size() || inst.right.size() != g.right_size() ||
        inst.params.size() != t.formula.params.size()) {
        violation("instance does not match its source graph or template");
        return rep;
    }
    auto pair_name = [&](std::size_t u, std::size_t v) { return "(" + g.left_label(u) + "," + g.right_label(v) + ")"; };

    Evaluator ev(m, budget);
    Formula ordered = t.formula;
    ordered.free = t.xs;
    ordered.free.insert(ordered.free.end(), t.ys.begin(), t.ys.end());
    auto prepared = ev.prepare(ordered);
    for (std::size_t u = 0; u < g.left_size(); ++u)
        for (std::size_t v = 0; v < g.right_size(); ++v) {
            std::vector<Element> header(inst.left[u].begin(), inst.left[u].end());
            header.insert(header.end(), inst.right[v].begin(), inst.right[v].end());
            header.insert(header.end(), inst.params.begin(), inst.params.end());
            bool holds = ev.holds(*prepared, header);
            if (holds != g.has_edge(u, v))
                violation("condition 1 at " + pair_name(u, v) + (holds ? ": formula holds on a non-edge"
                                                                         : ": formula fails on an edge"));
        }

    ConjunctiveQuery matrix = *q;
    matrix.free = t.xs;
    matrix.free.insert(matrix.free.end(), t.ys.begin(), t.ys.end());
    matrix.free.insert(matrix.free.end(), q->bound.begin(), q->bound.end());
    matrix.bound.clear();
    Formula psi = to_formula(matrix);
    std::optional<EqualityType> shape;
    for (auto [u, v] : g.edges()) {
        auto it = inst.edges.find({u, v});
        if (it == inst.edges.end() || it->second.size() != q->bound.size()) {
            violation("condition 2 at " + pair_name(u, v) + ": no witness listed");
            continue;
        }
        Assignment a;
        for (std::size_t i = 0; i < t.xs.size(); ++i)
            a.variables[t.xs[i]] = inst.left[u][i];
        for (std::size_t i = 0; i < t.ys.size(); ++i)
            a.variables[t.ys[i]] = inst.right[v][i];
        for (std::size_t i = 0; i < q->bound.size(); ++i)
            a.variables[q->bound[i]] = it->second[i];
        for (std::size_t i = 0; i < t.formula.params.size(); ++i)
            a.parameters[t.formula.params[i]] = inst.params[i];
        if (!model_check(m, psi, a))
            violation("condition 2 at " + pair_name(u, v) + ": witness does not satisfy the matrix");
        Tuple all = inst.left[u];
        all.insert(all.end(), inst.right[v].begin(), inst.right[v].end());
        all.insert(all.end(), it->second.begin(), it->second.end());
        auto et = equality_type(all);
        if (!shape)
            shape = et;
        else if (!(*shape == et))
            violation("condition 3 at " + pair_name(u, v) + ": equality type differs");
    }

    std::map<Element, std::string> owner;
    for (auto p : inst.params)
        owner.emplace(p, "parameters");
    auto claim = [&](const Tuple& tup, const std::string& name) {
        for (Element e : std::set<Element>(tup.begin(), tup.end())) {
            auto [it, fresh] = owner.emplace(e, name);
            if (!fresh)
                violation("condition 4: " + name + " meets " + it->second + " at " + m.label(e));
        }
    };
    for (std::size_t u = 0; u < inst.left.size(); ++u)
        claim(inst.left[u], "tuple of " + g.left_label(u));
    for (std::size_t v = 0; v < inst.right.size(); ++v)
        claim(inst.right[v], "tuple of " + g.right_label(v));
    for (const auto& [uv, h] : inst.edges)
        claim(h, "witness of " + pair_name(uv.first, uv.second));
    return rep;
}

// Serialization: structure format preceded by
//   # meta params E...
//   # meta left U E...   /  # meta right V E...
//   # meta edge U V E...
inline std::string to_text(const EncodedInstance& inst) {
    const Structure& m = inst.structure;
    const auto& g = inst.source;
    auto elems = [&](const Tuple& t) {
        std::string out;
        for (Element e : t)
            out += " " + m.label(e);
        return out;
    };
    std::string out = "# meta params" + elems(inst.params) + "\n";
    for (std::size_t u = 0; u < inst.left.size(); ++u)
        out += "# meta left " + g.left_label(u) + elems(inst.left[u]) + "\n";
    for (std::size_t v = 0; v < inst.right.size(); ++v)
        out += "# meta right " + g.right_label(v) + elems(inst.right[v]) + "\n";
    for (const auto& [uv, h] : inst.edges)
        out += "# meta edge " + g.left_label(uv.first) + " " + g.right_label(uv.second) + elems(h) + "\n";
    return out + to_text(m);
}

inline EncodedInstance parse_encoded(std::string_view text) {
    EncodedInstance inst;
    inst.structure = parse_structure(text);
    const Structure& m = inst.structure;
    std::vector<detail::Line> meta;
    {
        std::size_t number = 0, pos = 0;
        while (pos < text.size()) {
            auto end = text.find('\n', pos);
            if (end == std::string_view::npos)
                end = text.size();
            ++number;
            auto line = text.substr(pos, end - pos);
            pos = end + 1;
            if (line.rfind("# meta ", 0) != 0)
                continue;
            auto parsed = detail::split_lines(line.substr(7));
            if (!parsed.empty()) {
                parsed[0].number = number;
                for (auto& c : parsed[0].columns)
                    c += 7;
                meta.push_back(std::move(parsed[0]));
            }
        }
    }
    auto element = [&](const detail::Line& l, std::size_t w) {
        auto e = m.find(l.words[w]);
        if (!e)
            l.fail("unknown element " + l.words[w], w);
        return *e;
    };
    auto tuple_from = [&](const detail::Line& l, std::size_t first) {
        Tuple t;
        for (std::size_t w = first; w < l.words.size(); ++w)
            t.push_back(element(l, w));
        return t;
    };
    std::vector<std::pair<const detail::Line*, Tuple>> edges;
    for (const auto& l : meta) {
        const auto& key = l.words[0];
        if (key == "params") {
            inst.params = tuple_from(l, 1);
        } else if (key == "left" && l.words.size() >= 2) {
            detail::at_line(l, 1, [&] { return inst.source.add_left(l.words[1]); });
            inst.left.push_back(tuple_from(l, 2));
        } else if (key == "right" && l.words.size() >= 2) {
            detail::at_line(l, 1, [&] { return inst.source.add_right(l.words[1]); });
            inst.right.push_back(tuple_from(l, 2));
        } else if (key == "edge" && l.words.size() >= 3) {
            edges.emplace_back(&l, tuple_from(l, 3));
        } else {
            l.fail("unknown meta line");
        }
    }
    for (auto& [l, h] : edges) {
        auto u = inst.source.find_left(l->words[1]);
        auto v = inst.source.find_right(l->words[2]);
        if (!u || !v)
            l->fail("edge between unknown vertices", 1);
        inst.source.add_edge(*u, *v);
        inst.edges[{*u, *v}] = std::move(h);
    }
    return inst;
}

} // namespace mnip
