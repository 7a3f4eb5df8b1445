#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace hysmc {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/* Lexical or grammatical error in an expression, guard, formula or model
 * document. `position` is a byte offset into the parsed text. */
class SyntaxError : public Error {
public:
    SyntaxError(const std::string& msg, std::size_t position)
        : Error(msg + " (at offset " + std::to_string(position) + ")"),
          position_(position) {}
    std::size_t position() const { return position_; }

private:
    std::size_t position_;
};

class UnknownSymbolError : public SyntaxError {
public:
    UnknownSymbolError(const std::string& name, std::size_t position)
        : SyntaxError("unknown identifier '" + name + "'", position), name_(name) {}
    const std::string& name() const { return name_; }

private:
    std::string name_;
};

/* A structurally well-formed model that violates a semantic invariant
 * (empty mode set, degenerate init interval, wrong ODE count, ...). */
class ValidationError : public Error {
public:
    using Error::Error;
};

/* Arithmetic domain error during expression evaluation (division by zero,
 * log of a non-positive value, non-finite result). */
class EvalError : public Error {
public:
    using Error::Error;
};

/* Numerical integration produced a non-finite or absurdly large state. */
class FlowError : public Error {
public:
    FlowError(const std::string& msg, int mode, double time)
        : Error(msg + " (mode " + std::to_string(mode) + ", t=" + std::to_string(time) + ")"),
          mode_(mode), time_(time) {}
    int mode() const { return mode_; }
    double time() const { return time_; }

private:
    int mode_;
    double time_;
};

/* Robust sampling kept rejecting states that hit a property constant. */
class DegenerateModelError : public Error {
public:
    using Error::Error;
};

/* A trace is too short to decide a formula at the requested position. */
class TraceError : public Error {
public:
    using Error::Error;
};

}  // namespace hysmc
