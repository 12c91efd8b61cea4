#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace mnip {

/// Malformed input or a violated precondition.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Syntax error in one of the text formats. `line` and `column` are 1-based.
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t line, std::size_t column)
        : Error("line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + what),
          line_(line), column_(column) {}

    std::size_t line() const noexcept { return line_; }
    std::size_t column() const noexcept { return column_; }

private:
    std::size_t line_;
    std::size_t column_;
};

/// A search ran out of its node budget. Never a statement about absence.
class BudgetExceeded : public std::runtime_error {
public:
    explicit BudgetExceeded(const std::string& where)
        : std::runtime_error("node budget exceeded in " + where) {}
};

/// Node budget for exhaustive searches; zero means unlimited.
struct Budget {
    std::uint64_t max_nodes = 0;
};

namespace detail {

class NodeCounter {
public:
    NodeCounter(Budget budget, const char* where) : limit_(budget.max_nodes), where_(where) {}

    void tick() {
        ++used_;
        if (limit_ != 0 && used_ > limit_)
            throw BudgetExceeded(where_);
    }

    std::uint64_t used() const noexcept { return used_; }

private:
    std::uint64_t limit_;
    std::uint64_t used_ = 0;
    const char* where_;
};

} // namespace detail
} // namespace mnip
