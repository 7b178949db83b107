#pragma once

#include <stdexcept>
#include <string>

namespace spc {

// Caller broke a documented precondition (bad dimensions, k > n, ...).
class ContractViolation : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

// Computed quantities disagree with an identity they must satisfy.
class NumericalConsistencyError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& what, long line)
        : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
    long line() const { return line_; }

private:
    long line_;
};

inline void require(bool ok, const std::string& msg) {
    if (!ok) throw ContractViolation(msg);
}

}  // namespace spc
