#include "mnip/canonical.hpp"
#include "mnip/io.hpp"
#include "mnip/path.hpp"
#include "support/generators.hpp"
#include "support/oracles.hpp"

#include <gtest/gtest.h>

#include <numeric>

using namespace mnip;

namespace {

// A structure is a path iff some ordering of all its tuples has single-element
// overlaps exactly between neighbours and covers the universe.
bool path_by_permutations(const Structure& m) {
    std::vector<Tuple> ts;
    for (std::size_t s = 0; s < m.signature().size(); ++s)
        for (const auto& t : m.relation(s))
            ts.push_back(t);
    if (ts.empty())
        return false;
    std::set<Element> covered;
    for (const auto& t : ts) {
        if (std::set<Element>(t.begin(), t.end()).size() != t.size())
            return false;
        covered.insert(t.begin(), t.end());
    }
    if (covered.size() != m.size())
        return false;
    auto shared = [](const Tuple& a, const Tuple& b) {
        std::size_t c = 0;
        for (Element x : std::set<Element>(a.begin(), a.end()))
            c += std::count(b.begin(), b.end(), x) > 0;
        return c;
    };
    std::vector<std::size_t> order(ts.size());
    std::iota(order.begin(), order.end(), 0);
    do {
        bool ok = true;
        for (std::size_t i = 0; i < ts.size() && ok; ++i)
            for (std::size_t j = i + 1; j < ts.size() && ok; ++j)
                ok = shared(ts[order[i]], ts[order[j]]) == (j == i + 1 ? 1u : 0u);
        if (ok)
            return true;
    } while (std::next_permutation(order.begin(), order.end()));
    return false;
}

} // namespace

TEST(Canonical, ElementOrderFreeParamsBound) {
    auto f = parse_formula("(formula :free (y x) :params (p) (exists (z) (and (E x z) (E z p) (E y y))))");
    auto c = canonical_structure(f);
    EXPECT_EQ(c.structure.label(0), "y");
    EXPECT_EQ(c.structure.label(1), "x");
    EXPECT_EQ(c.structure.label(2), "p");
    EXPECT_EQ(c.structure.label(3), "z");
    EXPECT_EQ(c.anchors, (std::vector<Element>{0, 1}));
    EXPECT_EQ(c.parameters, (std::vector<Element>{2}));
    EXPECT_EQ(c.structure.relation(0).size(), 3u);
    EXPECT_THROW(canonical_structure(parse_formula("(formula :free (x) (not (E x x)))")), Error);
}

TEST(Canonical, RoundTripIsPointedIsomorphic) {
    gen::Rng rng(21);
    auto sig = gen::mixed_signature();
    for (int i = 0; i < 100; ++i) {
        auto f = gen::random_cq(rng, sig, 6, false);
        auto p = canonical_structure(f, sig);
        auto q = canonical_structure(canonical_formula(p), sig);
        ASSERT_EQ(p.structure.size(), q.structure.size());
        // Same labels in the same order, so identity is the isomorphism.
        EXPECT_EQ(to_text(p), to_text(q));
        EXPECT_TRUE(oracle::isomorphic(p.structure, q.structure));
    }
}

TEST(Canonical, FormulaFromUnnamedStructure) {
    PointedStructure p{Structure(gen::graph_signature()), {}, {}};
    // "and" cannot be a variable, so every element gets a v<id> name.
    p.structure.add_element("and");
    p.structure.add_element("b");
    p.structure.add_tuple("E", {0, 1});
    p.anchors = {1};
    auto f = canonical_formula(p);
    EXPECT_EQ(to_string(f), "(formula :free (v1) :params () (exists (v0) (E v0 v1)))");
    p.parameters = {1};
    EXPECT_THROW(canonical_formula(p), Error);
}

TEST(Canonical, HomomorphismCriterionAgainstOracle) {
    // M |= f(a) iff the canonical structure maps to M with anchors to a.
    gen::Rng rng(22);
    auto sig = gen::mixed_signature();
    for (int i = 0; i < 60; ++i) {
        auto f = gen::random_cq(rng, sig, 4, false, 3, 0);
        auto c = canonical_structure(f, sig);
        auto m = gen::random_structure(rng, sig, 3, 0.3);
        std::vector<Element> vals(f.free.size());
        for (auto& v : vals)
            v = static_cast<Element>(gen::pick(rng, 0, 2));
        std::vector<std::pair<Element, Element>> fixed;
        for (std::size_t k = 0; k < vals.size(); ++k)
            fixed.emplace_back(c.anchors[k], vals[k]);
        EXPECT_EQ(oracle::homomorphism_exists(c.structure, m, fixed), oracle::holds(m, f, vals)) << to_string(f);
    }
}

TEST(Path, RecognisesTernaryChain) {
    auto f = parse_formula("(formula :free (x y) (exists (z w1 w2) (and (T x w1 z) (T z w2 y))))");
    auto cls = classify_path_formula(f, {"x"}, {"y"});
    EXPECT_EQ(cls.kind, PathKind::simple_path);
    ASSERT_TRUE(cls.path);
    EXPECT_EQ(cls.path->length(), 2u);
    EXPECT_FALSE(validate_path(cls.canonical.structure, *cls.path));
    auto x = cls.canonical.structure.element("x");
    EXPECT_NE(std::find(cls.path->start.begin(), cls.path->start.end(), x), cls.path->start.end());
}

TEST(Path, KindsOfClassification) {
    auto tri = parse_formula("(formula :free (x y) (exists (z) (and (E x y) (E y z) (E z x))))");
    EXPECT_EQ(classify_path_formula(tri, {"x"}, {"y"}).kind, PathKind::not_path);
    auto mid = parse_formula("(formula :free (x y) (exists (z) (and (E x z) (E z y))))");
    EXPECT_EQ(classify_path_formula(mid, {"x"}, {"y"}).kind, PathKind::simple_path);
    auto inner = parse_formula("(formula :free (x y u) (and (E x y) (E y u)))");
    EXPECT_EQ(classify_path_formula(inner, {"x"}, {"y"}).kind, PathKind::not_path);
    EXPECT_EQ(classify_path_formula(inner, {"x", "y"}, {"u"}).kind, PathKind::path);
    EXPECT_THROW(classify_path_formula(inner, {"q"}, {"u"}), Error);
}

TEST(Path, RecognitionMatchesPermutationOracle) {
    gen::Rng rng(23);
    auto sig = gen::mixed_signature();
    int paths = 0;
    for (int i = 0; i < 400; ++i) {
        Structure m(sig);
        std::size_t n = gen::pick(rng, 2, 6);
        for (std::size_t e = 0; e < n; ++e)
            m.add_element("e" + std::to_string(e));
        std::size_t k = gen::pick(rng, 1, 4);
        for (std::size_t t = 0; t < k; ++t) {
            std::size_t s = gen::pick(rng, 0, 1);
            Tuple tup;
            for (std::size_t a = 0; a < sig[s].arity; ++a)
                tup.push_back(static_cast<Element>(gen::pick(rng, 0, n - 1)));
            m.add_tuple(s, tup);
        }
        auto p = recognize_path(m);
        EXPECT_EQ(p.has_value(), path_by_permutations(m)) << to_text(m);
        if (p) {
            ++paths;
            EXPECT_FALSE(validate_path(m, *p)) << to_text(m);
            EXPECT_FALSE(validate_path(m, reversed(*p)));
        }
    }
    EXPECT_GE(paths, 10);
}

TEST(Path, SymmetricWitness) {
    auto sym = parse_formula("(formula :free (x1 x2 y1 y2) (exists (z) (and (T x1 x2 z) (T y2 y1 z))))");
    auto w = symmetric_witness(sym, {"x1", "x2"}, {"y1", "y2"});
    ASSERT_TRUE(w);
    EXPECT_EQ(w->sigma, (std::vector<std::size_t>{1, 0}));
    auto directed = parse_formula("(formula :free (x y) (exists (z) (and (E x z) (E z y))))");
    EXPECT_FALSE(symmetric_witness(directed, {"x"}, {"y"}));
    // Repeated elements inside a step: not a path at all.
    auto both = parse_formula("(formula :free (x y) (exists (z) (and (T x z z) (T y z z))))");
    EXPECT_THROW(symmetric_witness(both, {"x"}, {"y"}), Error);
}

TEST(Path, PathTypeUsesLeastWitness) {
    auto m = parse_structure("signature E/2 T/3\nelement a\nelement b\nelement c\nelement d\n"
                             "rel T a b d\nrel T a b c\nrel E c b\n");
    auto t = path_type(m, {0, 1, 2});
    EXPECT_EQ(to_string(t), "(formula :free (x y z2) :params () (exists (v1_1) (and (T x z2 v1_1) (E y z2))))");
    EXPECT_THROW(path_type(m, {0, 2, 3}), Error);
    EXPECT_THROW(path_type(m, {0}), Error);
}
