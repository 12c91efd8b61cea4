#pragma once

// Ramsey-type searches. Colourings are callables; colours are compared with
// == only, so any value type works (element ids, strings, tuples).

#include "mnip/error.hpp"

#include <cstddef>
#include <optional>
#include <utility>
#include <vector>

namespace mnip {

namespace detail {

// Calls f on each k-subset of `items` (as index lists into items), stopping
// when f returns false. Returns false if stopped.
template <class F>
bool for_each_subset(const std::vector<std::size_t>& items, std::size_t k, F&& f) {
    if (k > items.size())
        return true;
    std::vector<std::size_t> pick(k);
    for (std::size_t i = 0; i < k; ++i)
        pick[i] = i;
    std::vector<std::size_t> chosen(k);
    for (;;) {
        for (std::size_t i = 0; i < k; ++i)
            chosen[i] = items[pick[i]];
        if (!f(chosen))
            return false;
        std::size_t i = k;
        while (i > 0 && pick[i - 1] == items.size() - k + i - 1)
            --i;
        if (i == 0)
            return true;
        ++pick[i - 1];
        for (std::size_t j = i; j < k; ++j)
            pick[j] = pick[j - 1] + 1;
    }
}

struct TypeMask {
    // Bit t-1 set while canonical type t is still possible.
    unsigned bits = 0xF;

    void cells(bool same_row, bool same_col, bool equal) {
        if (!equal)
            bits &= ~1u;
        if (equal != same_row)
            bits &= ~2u;
        if (equal != same_col)
            bits &= ~4u;
        if (equal != (same_row && same_col))
            bits &= ~8u;
    }

    int smallest() const {
        for (int t = 0; t < 4; ++t)
            if (bits & (1u << t))
                return t + 1;
        return 0;
    }
};

} // namespace detail

/// An m-subset of {0..N-1} all of whose k-subsets get one colour, searched
/// exhaustively in lexicographic order. `color` takes a sorted index vector.
template <class ColorFn>
std::optional<std::vector<std::size_t>> mono_subset(std::size_t N, std::size_t k, std::size_t m, ColorFn color,
                                                    Budget budget = {}) {
    if (k == 0)
        throw Error("subset size k must be positive");
    if (m > N)
        return std::nullopt;
    std::vector<std::size_t> chosen;
    if (m < k) {
        for (std::size_t i = 0; i < m; ++i)
            chosen.push_back(i);
        return chosen;
    }
    using Color = decltype(color(std::vector<std::size_t>{}));
    detail::NodeCounter counter(budget, "monochromatic subset search");
    std::optional<Color> target;

    auto extend = [&](auto& self, std::size_t from) -> bool {
        if (chosen.size() == m)
            return true;
        for (std::size_t e = from; e + (m - chosen.size()) <= N; ++e) {
            counter.tick();
            bool had_target = target.has_value();
            std::vector<std::size_t> idx(chosen.size());
            for (std::size_t i = 0; i < idx.size(); ++i)
                idx[i] = i;
            bool ok = detail::for_each_subset(idx, k - 1, [&](const std::vector<std::size_t>& sub) {
                std::vector<std::size_t> edge;
                for (auto i : sub)
                    edge.push_back(chosen[i]);
                edge.push_back(e);
                auto c = color(edge);
                if (!target)
                    target = c;
                return *target == c;
            });
            if (ok) {
                chosen.push_back(e);
                if (self(self, e + 1))
                    return true;
                chosen.pop_back();
            }
            if (!had_target)
                target.reset();
        }
        return false;
    };
    if (extend(extend, 0))
        return chosen;
    return std::nullopt;
}

struct Biclique {
    std::vector<std::size_t> left;
    std::vector<std::size_t> right;
};

/// X ⊆ A, Y ⊆ B of size m with X × Y monochromatic; X in lexicographic
/// order, Y the first m columns of the first colour class large enough.
template <class ColorFn>
std::optional<Biclique> mono_biclique(std::size_t A, std::size_t B, std::size_t m, ColorFn color, Budget budget = {}) {
    if (m > A || m > B)
        return std::nullopt;
    if (m == 0)
        return Biclique{};
    using Color = decltype(color(std::size_t{}, std::size_t{}));
    detail::NodeCounter counter(budget, "monochromatic biclique search");
    std::vector<std::size_t> rows(A);
    for (std::size_t i = 0; i < A; ++i)
        rows[i] = i;
    std::optional<Biclique> found;
    detail::for_each_subset(rows, m, [&](const std::vector<std::size_t>& X) {
        std::vector<std::pair<Color, std::vector<std::size_t>>> classes;
        for (std::size_t y = 0; y < B; ++y) {
            counter.tick();
            Color c = color(X[0], y);
            bool constant = true;
            for (std::size_t i = 1; i < X.size() && constant; ++i)
                constant = color(X[i], y) == c;
            if (!constant)
                continue;
            auto it = classes.begin();
            while (it != classes.end() && !(it->first == c))
                ++it;
            if (it == classes.end()) {
                classes.emplace_back(c, std::vector<std::size_t>{});
                it = classes.end() - 1;
            }
            it->second.push_back(y);
            if (it->second.size() == m) {
                found = Biclique{X, it->second};
                return false;
            }
        }
        return true;
    });
    return found;
}

/// Canonical type (1 constant, 2 depends exactly on the row, 3 exactly on the
/// column, 4 injective) of the colouring on the given grid; ties on
/// degenerate grids go to the smallest index.
template <class ColorFn>
std::optional<int> classify_canonical(const std::vector<std::size_t>& X, const std::vector<std::size_t>& Y, ColorFn color) {
    detail::TypeMask mask;
    std::vector<std::pair<std::size_t, std::size_t>> cells;
    for (std::size_t i = 0; i < X.size(); ++i)
        for (std::size_t j = 0; j < Y.size(); ++j)
            cells.emplace_back(i, j);
    for (std::size_t p = 0; p < cells.size(); ++p)
        for (std::size_t q = p + 1; q < cells.size(); ++q) {
            auto [a, b] = cells[p];
            auto [c, d] = cells[q];
            mask.cells(a == c, b == d, color(X[a], Y[b]) == color(X[c], Y[d]));
        }
    if (int t = mask.smallest())
        return t;
    return std::nullopt;
}

struct CanonicalGrid {
    std::vector<std::size_t> left;
    std::vector<std::size_t> right;
    std::vector<int> types;  // one per colouring
};

/// Lexicographically first (X, Y), |X| = |Y| = n, on which every colouring is
/// canonical. Each colouring is a callable (row, column) -> colour.
template <class ColorFn>
std::optional<CanonicalGrid> iterate_canonical(std::size_t A, std::size_t B, std::size_t n,
                                               const std::vector<ColorFn>& colorings, Budget budget = {}) {
    if (n > A || n > B)
        return std::nullopt;
    detail::NodeCounter counter(budget, "canonical grid search");
    std::vector<std::size_t> rows(A);
    for (std::size_t i = 0; i < A; ++i)
        rows[i] = i;
    std::optional<CanonicalGrid> found;
    using Mask = detail::TypeMask;

    detail::for_each_subset(rows, n, [&](const std::vector<std::size_t>& X) {
        std::vector<std::size_t> Y;
        std::vector<Mask> masks(colorings.size());
        auto extend = [&](auto& self, std::size_t from) -> bool {
            if (Y.size() == n) {
                CanonicalGrid g{X, Y, {}};
                for (const auto& m : masks)
                    g.types.push_back(m.smallest());
                found = std::move(g);
                return true;
            }
            for (std::size_t y = from; y + (n - Y.size()) <= B; ++y) {
                counter.tick();
                auto saved = masks;
                bool alive = true;
                for (std::size_t c = 0; c < colorings.size() && alive; ++c) {
                    const auto& color = colorings[c];
                    for (std::size_t i = 0; i < n && alive; ++i) {
                        auto here = color(X[i], y);
                        for (std::size_t i2 = i + 1; i2 < n; ++i2)
                            masks[c].cells(false, true, here == color(X[i2], y));
                        for (std::size_t j = 0; j < Y.size(); ++j)
                            for (std::size_t i2 = 0; i2 < n; ++i2)
                                masks[c].cells(i == i2, false, here == color(X[i2], Y[j]));
                        alive = masks[c].bits != 0;
                    }
                }
                if (alive) {
                    Y.push_back(y);
                    if (self(self, y + 1))
                        return true;
                    Y.pop_back();
                }
                masks = std::move(saved);
            }
            return false;
        };
        return !extend(extend, 0);
    });
    return found;
}

template <class ColorFn>
std::optional<CanonicalGrid> find_canonical_grid(std::size_t A, std::size_t B, std::size_t n, ColorFn color,
                                                 Budget budget = {}) {
    return iterate_canonical(A, B, n, std::vector<ColorFn>{color}, budget);
}

} // namespace mnip
