#pragma once

#include <stdexcept>
#include <string>

namespace gnclab {

// Input or precondition failure. CLI maps this to exit code 2.
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

// A configured budget (draws, enumeration size) was exhausted. Exit code 3.
class BudgetError : public std::runtime_error {
public:
    explicit BudgetError(const std::string& what) : std::runtime_error(what) {}
};

// Internal consistency check failed. Exit code 4.
class InvariantError : public std::runtime_error {
public:
    explicit InvariantError(const std::string& what) : std::runtime_error(what) {}
};

inline void require(bool ok, const std::string& what) {
    if (!ok) throw ValidationError(what);
}

}  // namespace gnclab
