#pragma once

// Extraction of coding families from a structure whose Gaifman graph holds a
// subdivided clique: a uniform path type, disjointification of the witness
// tuples, selection of trivially intersecting blocks, uniform equality type,
// and finally coding of arbitrary bipartite graphs by pruning.

#include "mnip/canonical.hpp"
#include "mnip/evaluator.hpp"
#include "mnip/formula.hpp"
#include "mnip/path.hpp"
#include "mnip/ramsey.hpp"
#include "mnip/relcore.hpp"
#include "mnip/sparsity.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace mnip {

/// ψ(x̄, ȳ, z̄, w̄) with parameters, and for every cell (i, j) of the grid the
/// tuples ā_i, b̄_j, c̄_{i,j} (joints) and d̄_{i,j} (witnesses for w̄).
struct CodingFamily {
    std::vector<AtomOccurrence> atoms;
    std::vector<std::string> xs, ys, zs, ws, param_names;
    std::vector<Element> params;
    std::vector<Tuple> rows, cols;
    std::vector<std::vector<Tuple>> joints, witnesses;  // [row][col]
    std::vector<std::size_t> row_origin, col_origin;    // branch indices of the subdivided clique

    std::size_t row_count() const noexcept { return rows.size(); }
    std::size_t col_count() const noexcept { return cols.size(); }

    /// ψ with free variables x̄ ȳ z̄ w̄.
    Formula matrix() const {
        ConjunctiveQuery q;
        q.free = xs;
        q.free.insert(q.free.end(), ys.begin(), ys.end());
        q.free.insert(q.free.end(), zs.begin(), zs.end());
        q.free.insert(q.free.end(), ws.begin(), ws.end());
        q.params = param_names;
        q.atoms = atoms;
        return to_formula(q);
    }

    /// φ(x̄, ȳ, z̄) = ∃w̄ ψ.
    Formula formula() const {
        ConjunctiveQuery q;
        q.free = xs;
        q.free.insert(q.free.end(), ys.begin(), ys.end());
        q.free.insert(q.free.end(), zs.begin(), zs.end());
        q.bound = ws;
        q.params = param_names;
        q.atoms = atoms;
        return to_formula(q);
    }

    /// φ'(x̄, ȳ) = ∃z̄ w̄ ψ, the formula that codes the edge relation.
    Formula coding_formula() const {
        ConjunctiveQuery q;
        q.free = xs;
        q.free.insert(q.free.end(), ys.begin(), ys.end());
        q.bound = zs;
        q.bound.insert(q.bound.end(), ws.begin(), ws.end());
        q.params = param_names;
        q.atoms = atoms;
        return to_formula(q);
    }

    /// p̄_{i,j} = ā_i b̄_j c̄_{i,j} d̄_{i,j}.
    Tuple block(std::size_t i, std::size_t j) const {
        Tuple t = rows[i];
        t.insert(t.end(), cols[j].begin(), cols[j].end());
        t.insert(t.end(), joints[i][j].begin(), joints[i][j].end());
        t.insert(t.end(), witnesses[i][j].begin(), witnesses[i][j].end());
        return t;
    }

    /// h̄_{i,j} = c̄_{i,j} d̄_{i,j}.
    Tuple edge_block(std::size_t i, std::size_t j) const {
        Tuple t = joints[i][j];
        t.insert(t.end(), witnesses[i][j].begin(), witnesses[i][j].end());
        return t;
    }

    std::size_t block_width() const noexcept { return xs.size() + ys.size() + zs.size() + ws.size(); }
};

/// Keeps the given rows and columns, in the given order.
inline CodingFamily restrict_family(const CodingFamily& f, const std::vector<std::size_t>& rows,
                                    const std::vector<std::size_t>& cols) {
    CodingFamily out = f;
    out.rows.clear();
    out.cols.clear();
    out.joints.assign(rows.size(), {});
    out.witnesses.assign(rows.size(), {});
    out.row_origin.clear();
    out.col_origin.clear();
    for (std::size_t i : rows) {
        out.rows.push_back(f.rows.at(i));
        out.row_origin.push_back(f.row_origin.at(i));
    }
    for (std::size_t j : cols) {
        out.cols.push_back(f.cols.at(j));
        out.col_origin.push_back(f.col_origin.at(j));
    }
    for (std::size_t a = 0; a < rows.size(); ++a)
        for (std::size_t j : cols) {
            out.joints[a].push_back(f.joints.at(rows[a]).at(j));
            out.witnesses[a].push_back(f.witnesses.at(rows[a]).at(j));
        }
    return out;
}

namespace detail {

inline std::string join_indices(const std::vector<std::size_t>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i)
        out += (i ? " " : "") + std::to_string(v[i]);
    return out;
}

// Lexicographically least w̄ with M ⊨ ψ(ā, b̄, c̄, w̄).
inline void fix_witnesses(const Structure& m, CodingFamily& f, Budget budget) {
    ConjunctiveQuery q;
    q.free = f.ws;
    q.params = f.xs;
    q.params.insert(q.params.end(), f.ys.begin(), f.ys.end());
    q.params.insert(q.params.end(), f.zs.begin(), f.zs.end());
    q.params.insert(q.params.end(), f.param_names.begin(), f.param_names.end());
    q.atoms = f.atoms;
    Formula psi = to_formula(q);
    Evaluator ev(m, budget);
    f.witnesses.assign(f.row_count(), std::vector<Tuple>(f.col_count()));
    for (std::size_t i = 0; i < f.row_count(); ++i)
        for (std::size_t j = 0; j < f.col_count(); ++j) {
            Tuple header = f.rows[i];
            header.insert(header.end(), f.cols[j].begin(), f.cols[j].end());
            header.insert(header.end(), f.joints[i][j].begin(), f.joints[i][j].end());
            header.insert(header.end(), f.params.begin(), f.params.end());
            auto sols = ev.solutions(psi, header);
            if (sols.empty())
                throw Error("path type does not hold on cell (" + std::to_string(i) + "," + std::to_string(j) + ")");
            f.witnesses[i][j] = sols.front();
        }
}

} // namespace detail

struct PathTypeExtraction {
    Formula type;                          // the path type, free (x, y, z2, ...)
    std::vector<std::size_t> subset;       // branch indices, rows first then columns
    CodingFamily family;
    std::map<std::string, std::size_t> histogram;  // path type text -> number of routes
};

/// Colours every route of the subdivided clique by its path type and picks
/// 2n branches on which the type is constant; rows are the first n, columns
/// the rest. Joints are the inner route vertices, witnesses the least ones.
inline PathTypeExtraction extract_uniform_path_type(const Structure& m, const SubdivisionWitness& w,
                                                    std::size_t n_target, Budget budget = {}) {
    if (!verify_witness(gaifman(m), w.n, w.r, w))
        throw Error("witness is not a subdivided clique in the Gaifman graph");
    if (n_target == 0)
        throw Error("target size must be positive");
    PathTypeExtraction out;
    std::map<std::pair<std::size_t, std::size_t>, std::string> color;
    std::map<std::pair<std::size_t, std::size_t>, Formula> types;
    for (const auto& [ij, route] : w.routes) {
        Formula t = path_type(m, route);
        std::string text = to_string(t);
        ++out.histogram[text];
        color[ij] = text;
        types.emplace(ij, std::move(t));
    }
    auto subset = mono_subset(
        w.n, 2, 2 * n_target, [&](const std::vector<std::size_t>& e) { return color.at({e[0], e[1]}); },
        budget);
    if (!subset) {
        std::string msg = "no " + std::to_string(2 * n_target) + " branches share a path type; histogram:";
        for (const auto& [t, c] : out.histogram)
            msg += "\n  " + std::to_string(c) + " x " + t;
        throw Error(msg);
    }
    out.subset = *subset;
    const auto& S = out.subset;
    out.type = types.at({S[0], S[1]});
    auto q = as_conjunctive(out.type);
    CodingFamily& f = out.family;
    f.atoms = q->atoms;
    f.xs = {"x"};
    f.ys = {"y"};
    f.zs.assign(out.type.free.begin() + 2, out.type.free.end());
    f.ws = q->bound;
    for (std::size_t i = 0; i < n_target; ++i) {
        f.rows.push_back({w.branch[S[i]]});
        f.row_origin.push_back(S[i]);
        f.cols.push_back({w.branch[S[n_target + i]]});
        f.col_origin.push_back(S[n_target + i]);
    }
    f.joints.assign(n_target, std::vector<Tuple>(n_target));
    for (std::size_t i = 0; i < n_target; ++i)
        for (std::size_t j = 0; j < n_target; ++j) {
            const auto& route = w.routes.at({S[i], S[n_target + j]});
            f.joints[i][j].assign(route.begin() + 1, route.end() - 1);
        }
    detail::fix_witnesses(m, f, budget);
    return out;
}

struct CoordinateStep {
    std::string variable;
    int type = 0;          // canonical type of χ_k
    std::string action;    // "parameter", "row", "column" or "keep"
};

struct Disjointification {
    CodingFamily family;
    std::vector<std::size_t> grid_rows, grid_cols;  // indices into the input family
    std::vector<CoordinateStep> steps;
};

/// Passes to a grid on which every witness coordinate χ_k(i, j) = d̄_{i,j}(k)
/// is canonical, then moves each coordinate: constant ones become parameters,
/// row- or column-determined ones join ā_i or b̄_j, injective ones stay.
inline Disjointification disjointify(const Structure& m, const CodingFamily& in, std::size_t n, Budget budget = {}) {
    if (in.witnesses.size() != in.row_count())
        throw Error("family has no fixed witnesses");
    std::vector<std::function<Element(std::size_t, std::size_t)>> colorings;
    for (std::size_t k = 0; k < in.ws.size(); ++k)
        colorings.emplace_back([&in, k](std::size_t i, std::size_t j) { return in.witnesses[i][j][k]; });
    auto grid = iterate_canonical(in.row_count(), in.col_count(), n, colorings, budget);
    if (!grid)
        throw Error("no " + std::to_string(n) + "x" + std::to_string(n) +
                    " grid makes every witness coordinate canonical");
    Disjointification out;
    out.grid_rows = grid->left;
    out.grid_cols = grid->right;
    CodingFamily f = restrict_family(in, grid->left, grid->right);
    CodingFamily next = f;
    next.ws.clear();
    for (auto& row : next.witnesses)
        for (auto& cell : row)
            cell.clear();
    FreshNames names(all_names(f.matrix()));
    for (std::size_t k = 0; k < f.ws.size(); ++k) {
        int type = grid->types[k];
        CoordinateStep step{f.ws[k], type, {}};
        switch (type) {
        case 1: {
            std::string p = names.fresh("p");
            for (auto& a : next.atoms)
                for (auto& t : a.terms)
                    if (t == f.ws[k])
                        t = p;
            next.param_names.push_back(p);
            next.params.push_back(f.witnesses[0][0][k]);
            step.action = "parameter " + p;
            break;
        }
        case 2:
            next.xs.push_back(f.ws[k]);
            for (std::size_t i = 0; i < f.row_count(); ++i)
                next.rows[i].push_back(f.witnesses[i][0][k]);
            step.action = "row";
            break;
        case 3:
            next.ys.push_back(f.ws[k]);
            for (std::size_t j = 0; j < f.col_count(); ++j)
                next.cols[j].push_back(f.witnesses[0][j][k]);
            step.action = "column";
            break;
        default:
            next.ws.push_back(f.ws[k]);
            for (std::size_t i = 0; i < f.row_count(); ++i)
                for (std::size_t j = 0; j < f.col_count(); ++j)
                    next.witnesses[i][j].push_back(f.witnesses[i][j][k]);
            step.action = "keep";
            break;
        }
        out.steps.push_back(std::move(step));
    }
    for (std::size_t i = 0; i < next.row_count(); ++i)
        for (std::size_t j = 0; j < next.col_count(); ++j) {
            Tuple header = next.rows[i];
            for (const Tuple* t : {&next.cols[j], &next.joints[i][j], &next.witnesses[i][j], &next.params})
                header.insert(header.end(), t->begin(), t->end());
            Formula psi = next.matrix();
            Assignment a;
            for (std::size_t v = 0; v < psi.free.size(); ++v)
                a.variables[psi.free[v]] = header[v];
            for (std::size_t v = 0; v < psi.params.size(); ++v)
                a.parameters[psi.params[v]] = header[psi.free.size() + v];
            if (!model_check(m, psi, a))
                throw Error("witness surgery broke the formula on cell (" + std::to_string(i) + "," +
                            std::to_string(j) + ")");
        }
    out.family = std::move(next);
    return out;
}

/// Checks the disjointness conditions on a family: ψ holds on every cell,
/// rows and columns differ coordinatewise, joints differ across cells and
/// within a cell, witnesses differ coordinatewise across cells.
inline std::vector<std::string> verify_disjoint_conditions(const Structure& m, const CodingFamily& f) {
    std::vector<std::string> bad;
    auto cell = [](std::size_t i, std::size_t j) { return "(" + std::to_string(i) + "," + std::to_string(j) + ")"; };
    Formula psi = f.matrix();
    for (std::size_t i = 0; i < f.row_count(); ++i)
        for (std::size_t j = 0; j < f.col_count(); ++j) {
            Assignment a;
            auto bind = [&](const std::vector<std::string>& vars, const Tuple& vals) {
                for (std::size_t k = 0; k < vars.size(); ++k)
                    a.variables[vars[k]] = vals.at(k);
            };
            bind(f.xs, f.rows[i]);
            bind(f.ys, f.cols[j]);
            bind(f.zs, f.joints[i][j]);
            bind(f.ws, f.witnesses[i][j]);
            for (std::size_t k = 0; k < f.param_names.size(); ++k)
                a.parameters[f.param_names[k]] = f.params[k];
            if (!model_check(m, psi, a))
                bad.push_back("condition 1 fails at " + cell(i, j));
        }
    for (std::size_t i = 0; i < f.row_count(); ++i)
        for (std::size_t i2 = i + 1; i2 < f.row_count(); ++i2)
            for (std::size_t k = 0; k < f.xs.size(); ++k)
                if (f.rows[i][k] == f.rows[i2][k])
                    bad.push_back("condition 2 fails: rows " + std::to_string(i) + " and " + std::to_string(i2) +
                                  " agree at " + f.xs[k]);
    for (std::size_t j = 0; j < f.col_count(); ++j)
        for (std::size_t j2 = j + 1; j2 < f.col_count(); ++j2)
            for (std::size_t k = 0; k < f.ys.size(); ++k)
                if (f.cols[j][k] == f.cols[j2][k])
                    bad.push_back("condition 3 fails: columns " + std::to_string(j) + " and " + std::to_string(j2) +
                                  " agree at " + f.ys[k]);
    std::vector<std::pair<std::size_t, std::size_t>> cells;
    for (std::size_t i = 0; i < f.row_count(); ++i)
        for (std::size_t j = 0; j < f.col_count(); ++j)
            cells.emplace_back(i, j);
    for (auto [i, j] : cells) {
        const auto& c = f.joints[i][j];
        for (std::size_t k = 0; k < c.size(); ++k)
            for (std::size_t l = k + 1; l < c.size(); ++l)
                if (c[k] == c[l])
                    bad.push_back("condition 4 fails: joints of " + cell(i, j) + " repeat an element");
    }
    for (std::size_t p = 0; p < cells.size(); ++p)
        for (std::size_t q = p + 1; q < cells.size(); ++q) {
            auto [i, j] = cells[p];
            auto [i2, j2] = cells[q];
            for (std::size_t k = 0; k < f.zs.size(); ++k)
                if (f.joints[i][j][k] == f.joints[i2][j2][k])
                    bad.push_back("condition 4 fails: " + cell(i, j) + " and " + cell(i2, j2) + " agree at " + f.zs[k]);
            for (std::size_t k = 0; k < f.ws.size(); ++k)
                if (f.witnesses[i][j][k] == f.witnesses[i2][j2][k])
                    bad.push_back("condition 5 fails: " + cell(i, j) + " and " + cell(i2, j2) + " agree at " + f.ws[k]);
        }
    return bad;
}

/// f(n) = q (n - 1)^2 + n.
inline std::size_t selection_bound(std::size_t q, std::size_t n) { return n == 0 ? 0 : q * (n - 1) * (n - 1) + n; }

namespace detail {

inline std::set<Element> element_set(const Tuple& t) { return {t.begin(), t.end()}; }

// Whether the blocks of cells (i, j) and (k, l) meet exactly as the grid
// positions demand: everything, the row tuple, the column tuple, or nothing.
inline bool meets_trivially(const CodingFamily& f, std::size_t i, std::size_t j, std::size_t k, std::size_t l) {
    auto a = element_set(f.block(i, j));
    auto b = element_set(f.block(k, l));
    std::set<Element> both;
    std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::inserter(both, both.end()));
    if (i == k && j == l)
        return both == a;
    if (i == k)
        return both == element_set(f.rows[i]);
    if (j == l)
        return both == element_set(f.cols[j]);
    return both.empty();
}

inline bool avoids_parameters(const CodingFamily& f, std::size_t i, std::size_t j) {
    auto p = element_set(f.params);
    for (Element e : f.block(i, j))
        if (p.count(e))
            return false;
    return true;
}

// Greedy maximal index set over the diagonal order 0, 1, 2, ...
inline std::vector<std::size_t> greedy_trivial(const CodingFamily& f) {
    std::size_t supply = std::min(f.row_count(), f.col_count());
    std::vector<std::size_t> chosen;
    for (std::size_t l = 0; l < supply; ++l) {
        std::vector<std::size_t> with = chosen;
        with.push_back(l);
        bool ok = true;
        for (std::size_t a : with)
            for (std::size_t b : with) {
                if (a != l && b != l)
                    continue;
                if (!avoids_parameters(f, a, b)) {
                    ok = false;
                    break;
                }
                for (std::size_t c : with)
                    for (std::size_t d : with)
                        if (!meets_trivially(f, a, b, c, d))
                            ok = false;
                if (!ok)
                    break;
            }
        if (ok)
            chosen.push_back(l);
    }
    return chosen;
}

} // namespace detail

/// n indices A such that blocks of cells in A × A pairwise intersect
/// trivially and avoid the parameters. Index l is used for row l and
/// column l.
inline std::vector<std::size_t> select_trivially_intersecting(const CodingFamily& f, std::size_t n) {
    auto chosen = detail::greedy_trivial(f);
    if (chosen.size() < n) {
        std::size_t supply = std::min(f.row_count(), f.col_count());
        std::size_t bound = selection_bound(f.block_width(), n);
        throw Error("insufficient supply: found " + std::to_string(chosen.size()) + " of " + std::to_string(n) +
                    " indices from a supply of " + std::to_string(supply) + " (f(n) = " + std::to_string(bound) +
                    (supply < bound ? ", short by " + std::to_string(bound - supply) : std::string()) + ")");
    }
    chosen.resize(n);
    return chosen;
}

/// Direct scan of all cell pairs for trivial intersections and parameter
/// avoidance.
inline std::vector<std::string> verify_trivial_intersections(const CodingFamily& f) {
    std::vector<std::string> bad;
    auto contains = [](const Tuple& t, Element e) { return std::find(t.begin(), t.end(), e) != t.end(); };
    auto cell = [](std::size_t i, std::size_t j) { return "(" + std::to_string(i) + "," + std::to_string(j) + ")"; };
    for (std::size_t i = 0; i < f.row_count(); ++i)
        for (std::size_t j = 0; j < f.col_count(); ++j) {
            Tuple p = f.block(i, j);
            for (Element e : p)
                if (contains(f.params, e))
                    bad.push_back("block " + cell(i, j) + " meets the parameters");
            for (std::size_t k = 0; k < f.row_count(); ++k)
                for (std::size_t l = 0; l < f.col_count(); ++l) {
                    if (k == i && l == j)
                        continue;
                    Tuple r = f.block(k, l);
                    const Tuple* allowed = nullptr;
                    Tuple none;
                    if (k == i)
                        allowed = &f.rows[i];
                    else if (l == j)
                        allowed = &f.cols[j];
                    else
                        allowed = &none;
                    bool ok = true;
                    for (Element e : p)
                        if (contains(r, e) != contains(*allowed, e))
                            ok = false;
                    for (Element e : *allowed)
                        if (!contains(r, e))
                            ok = false;
                    if (!ok)
                        bad.push_back("blocks " + cell(i, j) + " and " + cell(k, l) + " do not intersect trivially");
                }
        }
    return bad;
}

struct Uniformization {
    CodingFamily family;
    std::vector<std::size_t> rows, cols;
};

/// n rows and n columns on which the equality type of p̄_{i,j} is constant.
inline Uniformization uniformize_equality_type(const CodingFamily& f, std::size_t n, Budget budget = {}) {
    auto bic = mono_biclique(
        f.row_count(), f.col_count(), n,
        [&](std::size_t i, std::size_t j) { return equality_type(f.block(i, j)); }, budget);
    if (!bic)
        throw Error("no " + std::to_string(n) + "x" + std::to_string(n) + " grid has a constant equality type");
    return {restrict_family(f, bic->left, bic->right), bic->left, bic->right};
}

/// Constant equality type, and pairwise disjointness of all ā_i, b̄_j, h̄_{i,j}
/// and the parameters.
inline std::vector<std::string> verify_uniform_family(const CodingFamily& f) {
    std::vector<std::string> bad;
    if (f.row_count() && f.col_count()) {
        auto first = equality_type(f.block(0, 0));
        for (std::size_t i = 0; i < f.row_count(); ++i)
            for (std::size_t j = 0; j < f.col_count(); ++j)
                if (!(equality_type(f.block(i, j)) == first))
                    bad.push_back("equality type of (" + std::to_string(i) + "," + std::to_string(j) + ") differs");
    }
    std::map<Element, std::string> owner;
    auto claim = [&](const Tuple& t, const std::string& name) {
        for (Element e : std::set<Element>(t.begin(), t.end())) {
            auto [it, fresh] = owner.emplace(e, name);
            if (!fresh)
                bad.push_back(name + " meets " + it->second);
        }
    };
    claim(f.params, "parameters");
    for (std::size_t i = 0; i < f.row_count(); ++i)
        claim(f.rows[i], "row " + std::to_string(i));
    for (std::size_t j = 0; j < f.col_count(); ++j)
        claim(f.cols[j], "column " + std::to_string(j));
    for (std::size_t i = 0; i < f.row_count(); ++i)
        for (std::size_t j = 0; j < f.col_count(); ++j)
            claim(f.edge_block(i, j), "block (" + std::to_string(i) + "," + std::to_string(j) + ")");
    return bad;
}

struct Realization {
    Structure structure;
    std::vector<Element> params;
    std::vector<Tuple> left, right;  // ā_u and b̄_v in the pruned structure
    std::vector<std::string> violations;
    bool ok() const noexcept { return violations.empty(); }
};

/// The weak substructure keeping parameters, ā_u, b̄_v, the blocks h̄_{u,v}
/// of edges, and only the tuples that witness ψ on edges. Vertex u of G uses
/// row u, vertex v column v. The result is checked: φ'(ā_u, b̄_v) iff uv ∈ E.
inline Realization realize_bipartite(const Structure& m, const CodingFamily& f, const BipartiteGraph& g,
                                     Budget budget = {}) {
    if (g.left_size() > f.row_count() || g.right_size() > f.col_count())
        throw Error("graph needs " + std::to_string(g.left_size()) + "x" + std::to_string(g.right_size()) +
                    " cells but the family has " + std::to_string(f.row_count()) + "x" + std::to_string(f.col_count()));
    std::set<Element> keep(f.params.begin(), f.params.end());
    for (std::size_t u = 0; u < g.left_size(); ++u)
        keep.insert(f.rows[u].begin(), f.rows[u].end());
    for (std::size_t v = 0; v < g.right_size(); ++v)
        keep.insert(f.cols[v].begin(), f.cols[v].end());
    std::vector<std::set<Tuple>> tuples(m.signature().size());
    for (auto [u, v] : g.edges()) {
        auto h = f.edge_block(u, v);
        keep.insert(h.begin(), h.end());
        std::map<std::string, Element> at;
        auto bind = [&](const std::vector<std::string>& vars, const Tuple& vals) {
            for (std::size_t k = 0; k < vars.size(); ++k)
                at[vars[k]] = vals[k];
        };
        bind(f.xs, f.rows[u]);
        bind(f.ys, f.cols[v]);
        bind(f.zs, f.joints[u][v]);
        bind(f.ws, f.witnesses[u][v]);
        bind(f.param_names, f.params);
        for (const auto& atom : f.atoms) {
            Tuple t;
            for (const auto& term : atom.terms)
                t.push_back(at.at(term));
            tuples[m.signature().index(atom.symbol)].insert(std::move(t));
        }
    }
    std::vector<Element> kept(keep.begin(), keep.end());
    Realization out;
    out.structure = weak_substructure(m, kept, tuples);
    std::map<Element, Element> to_new;
    for (std::size_t i = 0; i < kept.size(); ++i)
        to_new[kept[i]] = static_cast<Element>(i);
    auto mapped = [&](const Tuple& t) {
        Tuple r;
        for (Element e : t)
            r.push_back(to_new.at(e));
        return r;
    };
    out.params = mapped(f.params);
    for (std::size_t u = 0; u < g.left_size(); ++u)
        out.left.push_back(mapped(f.rows[u]));
    for (std::size_t v = 0; v < g.right_size(); ++v)
        out.right.push_back(mapped(f.cols[v]));

    Evaluator ev(out.structure, budget);
    auto phi = ev.prepare(f.coding_formula());
    for (std::size_t u = 0; u < g.left_size(); ++u)
        for (std::size_t v = 0; v < g.right_size(); ++v) {
            Tuple header = out.left[u];
            header.insert(header.end(), out.right[v].begin(), out.right[v].end());
            header.insert(header.end(), out.params.begin(), out.params.end());
            bool holds = ev.holds(*phi, header);
            if (holds != g.has_edge(u, v))
                out.violations.push_back("pair (" + g.left_label(u) + "," + g.right_label(v) + ") " +
                                         (holds ? "satisfies the formula but is not an edge"
                                                : "is an edge but fails the formula"));
        }
    return out;
}

struct ExtractionResult {
    bool ok = false;
    CodingFamily family;
    std::string report;
};

/// Runs every stage for a target grid size n, verifying each stage with its
/// independent checker, and finally codes K_{n,n} and the empty graph.
/// Stage failures end the pipeline with ok = false and the reason in the
/// report; budget overruns propagate.
inline ExtractionResult extract(const Structure& m, const SubdivisionWitness& w, std::size_t n, Budget budget = {}) {
    ExtractionResult out;
    std::ostringstream log;
    auto fail = [&](const std::string& stage, const std::vector<std::string>& bad) {
        log << "verify " << stage << " FAIL\n";
        for (const auto& b : bad)
            log << "  " << b << "\n";
        out.report = log.str();
        return out;
    };
    auto vertices = [&](const CodingFamily& f) {
        std::string s;
        for (std::size_t i = 0; i < f.row_count(); ++i)
            s += (i ? " " : "") + std::to_string(f.row_origin[i]);
        s += " |";
        for (std::size_t j = 0; j < f.col_count(); ++j)
            s += " " + std::to_string(f.col_origin[j]);
        return s;
    };
    log << "input elements " << m.size() << " clique " << w.n << " subdivision " << w.r << " target " << n << "\n";
    try {
        std::size_t half = w.n / 2;
        if (half < n)
            throw Error("the subdivided clique has " + std::to_string(w.n) + " branches, " + std::to_string(2 * n) +
                        " are needed");
        // Largest uniform subset first, so later stages have room to select.
        std::optional<PathTypeExtraction> stage1;
        for (std::size_t s = half; s >= n && !stage1; --s) {
            try {
                stage1 = extract_uniform_path_type(m, w, s, budget);
            } catch (const BudgetExceeded&) {
                throw;
            } catch (const Error&) {
                if (s == n)
                    throw;
            }
        }
        log << "stage path-type\n  types " << stage1->histogram.size() << "\n";
        for (const auto& [t, c] : stage1->histogram)
            log << "  " << c << " routes: " << t << "\n";
        log << "  branches " << vertices(stage1->family) << "\n";
        log << "  formula " << to_string(stage1->family.formula()) << "\n";

        std::optional<Disjointification> stage2;
        for (std::size_t s = stage1->family.row_count(); s >= n && !stage2; --s) {
            try {
                stage2 = disjointify(m, stage1->family, s, budget);
            } catch (const BudgetExceeded&) {
                throw;
            } catch (const Error&) {
                if (s == n)
                    throw;
            }
        }
        log << "stage disjoint\n  grid " << vertices(stage2->family) << "\n";
        for (const auto& st : stage2->steps)
            log << "  coordinate " << st.variable << " type " << st.type << " " << st.action << "\n";
        log << "  formula " << to_string(stage2->family.formula()) << "\n";
        if (auto bad = verify_disjoint_conditions(m, stage2->family); !bad.empty())
            return fail("disjoint", bad);
        log << "verify disjoint ok\n";

        const CodingFamily& f2 = stage2->family;
        auto chosen = detail::greedy_trivial(f2);
        if (chosen.size() < n)
            select_trivially_intersecting(f2, n);
        CodingFamily f3 = restrict_family(f2, chosen, chosen);
        log << "stage trivial\n  q " << f2.block_width() << " supply " << std::min(f2.row_count(), f2.col_count())
            << " f(n) " << selection_bound(f2.block_width(), n) << "\n  selected " << detail::join_indices(chosen)
            << "\n";
        if (auto bad = verify_trivial_intersections(f3); !bad.empty())
            return fail("trivial", bad);
        log << "verify trivial ok\n";

        auto stage4 = uniformize_equality_type(f3, n, budget);
        log << "stage equality-type\n  rows " << detail::join_indices(stage4.rows) << "\n  columns "
            << detail::join_indices(stage4.cols) << "\n";
        auto bad4 = verify_uniform_family(stage4.family);
        if (auto more = verify_trivial_intersections(stage4.family); !more.empty())
            bad4.insert(bad4.end(), more.begin(), more.end());
        if (auto more = verify_disjoint_conditions(m, stage4.family); !more.empty())
            bad4.insert(bad4.end(), more.begin(), more.end());
        if (!bad4.empty())
            return fail("equality-type", bad4);
        log << "verify equality-type ok\n";
        out.family = stage4.family;
        log << "family " << vertices(out.family) << "\n";
        log << "coding formula " << to_string(out.family.coding_formula()) << "\n";

        BipartiteGraph full, empty;
        for (std::size_t i = 0; i < n; ++i) {
            full.add_left("u" + std::to_string(i));
            empty.add_left("u" + std::to_string(i));
        }
        for (std::size_t j = 0; j < n; ++j) {
            full.add_right("v" + std::to_string(j));
            empty.add_right("v" + std::to_string(j));
        }
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                full.add_edge(i, j);
        for (const auto* g : {&full, &empty}) {
            auto r = realize_bipartite(m, out.family, *g, budget);
            if (!r.ok())
                return fail("realize", r.violations);
        }
        log << "verify realize ok\n";
    } catch (const BudgetExceeded&) {
        throw;
    } catch (const Error& e) {
        log << "stopped: " << e.what() << "\n";
        out.report = log.str();
        return out;
    }
    out.ok = true;
    out.report = log.str();
    return out;
}

} // namespace mnip
