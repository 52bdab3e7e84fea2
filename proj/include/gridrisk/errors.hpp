#pragma once

#include <stdexcept>
#include <string>

namespace gridrisk {

// Malformed input text. `line` is 1-based within the source the parser saw.
class ParseError : public std::runtime_error {
public:
    ParseError(int line, const std::string& what)
        : std::runtime_error("parse error at line " + std::to_string(line) + ": " + what),
          line_(line) {}
    int line() const { return line_; }

private:
    int line_;
};

// Structurally well-formed data that violates a model invariant.
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(const std::string& what)
        : std::runtime_error("validation error: " + what) {}
};

// Argument outside the documented domain of an operation.
class DomainError : public std::runtime_error {
public:
    explicit DomainError(const std::string& what)
        : std::runtime_error("domain error: " + what) {}
};

// Network topology unusable for the requested computation (e.g. a
// disconnected system passed to a solver that expects one component).
class TopologyError : public std::runtime_error {
public:
    explicit TopologyError(const std::string& what)
        : std::runtime_error("topology error: " + what) {}
};

// Numerical failure inside an optimization backend.
class SolverError : public std::runtime_error {
public:
    explicit SolverError(const std::string& what)
        : std::runtime_error("solver error: " + what) {}
};

// Iterative scheme hit its cycle limit before reaching its postcondition.
class ConvergenceError : public std::runtime_error {
public:
    explicit ConvergenceError(const std::string& what)
        : std::runtime_error("non-convergence: " + what) {}
};

// Enumeration request larger than the configured guard.
class SizeError : public std::runtime_error {
public:
    explicit SizeError(const std::string& what)
        : std::runtime_error("size error: " + what) {}
};

}  // namespace gridrisk
