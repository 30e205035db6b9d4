#pragma once

#include <stdexcept>
#include <string>

namespace tandim {

/// Process exit codes shared by the CLI and the verification suites.
enum class exit_code : int {
    ok = 0,
    internal = 1,
    input = 2,
    range = 3,
    budget = 4,
};

/// Base class for every error raised by the library.
struct error : std::runtime_error {
    using std::runtime_error::runtime_error;
    virtual exit_code code() const noexcept { return exit_code::internal; }
};

/// Malformed or out-of-contract input (unknown point, empty set, r <= 0, ...).
struct input_error : error {
    using error::error;
    exit_code code() const noexcept override { return exit_code::input; }
};

/// A requested scale/grid is not resolvable by the data at hand.
struct range_error : error {
    using error::error;
    exit_code code() const noexcept override { return exit_code::range; }
};

/// A search ran out of its node budget before producing the requested answer.
struct budget_error : error {
    using error::error;
    exit_code code() const noexcept override { return exit_code::budget; }
};

/// An invariant that holds by construction was observed broken.
struct internal_error : error {
    using error::error;
};

inline void require(bool cond, const std::string& what) {
    if (!cond) throw input_error(what);
}

}  // namespace tandim
