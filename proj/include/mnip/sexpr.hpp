#pragma once

// Minimal s-expression reader. Atoms are maximal runs of characters other than
// whitespace, parentheses and '#'; '#' starts a comment running to end of line.

#include "mnip/error.hpp"

#include <string>
#include <string_view>
#include <vector>

namespace mnip {

struct SExpr {
    bool is_list = false;
    std::string atom;
    std::vector<SExpr> items;
    std::size_t line = 1;
    std::size_t column = 1;

    bool is_atom() const noexcept { return !is_list; }
    bool is_atom(std::string_view text) const { return !is_list && atom == text; }

    [[noreturn]] void fail(const std::string& what) const { throw ParseError(what, line, column); }
};

namespace detail {

class SExprReader {
public:
    explicit SExprReader(std::string_view text) : text_(text) {}

    std::vector<SExpr> read_all() {
        std::vector<SExpr> out;
        skip();
        while (pos_ < text_.size()) {
            out.push_back(read());
            skip();
        }
        return out;
    }

private:
    void advance() {
        if (text_[pos_] == '\n') {
            ++line_;
            column_ = 1;
        } else {
            ++column_;
        }
        ++pos_;
    }

    void skip() {
        while (pos_ < text_.size()) {
            char c = text_[pos_];
            if (c == '#') {
                while (pos_ < text_.size() && text_[pos_] != '\n')
                    advance();
            } else if (static_cast<unsigned char>(c) <= ' ') {
                advance();
            } else {
                break;
            }
        }
    }

    SExpr read() {
        SExpr e;
        e.line = line_;
        e.column = column_;
        char c = text_[pos_];
        if (c == ')')
            throw ParseError("unexpected ')'", line_, column_);
        if (c == '(') {
            e.is_list = true;
            advance();
            for (;;) {
                skip();
                if (pos_ >= text_.size())
                    throw ParseError("unterminated list opened here", e.line, e.column);
                if (text_[pos_] == ')') {
                    advance();
                    break;
                }
                e.items.push_back(read());
            }
            return e;
        }
        while (pos_ < text_.size()) {
            char d = text_[pos_];
            if (static_cast<unsigned char>(d) <= ' ' || d == '(' || d == ')' || d == '#')
                break;
            e.atom.push_back(d);
            advance();
        }
        return e;
    }

    std::string_view text_;
    std::size_t pos_ = 0;
    std::size_t line_ = 1;
    std::size_t column_ = 1;
};

} // namespace detail

inline std::vector<SExpr> parse_sexprs(std::string_view text) { return detail::SExprReader(text).read_all(); }

/// Parses exactly one s-expression.
inline SExpr parse_sexpr(std::string_view text) {
    auto all = parse_sexprs(text);
    if (all.empty())
        throw ParseError("empty input", 1, 1);
    if (all.size() > 1)
        all[1].fail("trailing input after the expression");
    return std::move(all.front());
}

inline std::string to_string(const SExpr& e) {
    if (!e.is_list)
        return e.atom;
    std::string out = "(";
    for (std::size_t i = 0; i < e.items.size(); ++i) {
        if (i)
            out += ' ';
        out += to_string(e.items[i]);
    }
    return out + ")";
}

} // namespace mnip
