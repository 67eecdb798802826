#pragma once

#include <stdexcept>
#include <string>

namespace tstar {

// All library failures derive from Error so callers can catch one type.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Invalid search configuration (constraint named in the message).
class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& msg) : Error(msg) {}
};

// Grid construction contract violated (duplicates, overflow, bad side).
class GridError : public Error {
public:
    explicit GridError(const std::string& msg) : Error(msg) {}
};

// Score-state contract violated (e.g. re-scoring a visited frame).
class StateError : public Error {
public:
    explicit StateError(const std::string& msg) : Error(msg) {}
};

// Scorer backend failed (child process died, malformed reply, bad table).
class ScorerError : public Error {
public:
    explicit ScorerError(const std::string& msg) : Error(msg) {}
};

// Input file could not be parsed; message carries record number and reason.
class ParseError : public Error {
public:
    explicit ParseError(const std::string& msg) : Error(msg) {}
};

// Probability mass vanished where the contract forbids it.
class NumericalError : public Error {
public:
    explicit NumericalError(const std::string& msg) : Error(msg) {}
};

// Mismatched or empty operand dimensions (images, embeddings).
class DimensionError : public Error {
public:
    explicit DimensionError(const std::string& msg) : Error(msg) {}
};

// Cosine similarity against a zero-norm vector.
class ZeroVectorError : public Error {
public:
    explicit ZeroVectorError(const std::string& msg) : Error(msg) {}
};

// Set metric asked to score an empty prediction or reference set.
class EmptySetError : public Error {
public:
    explicit EmptySetError(const std::string& msg) : Error(msg) {}
};

} // namespace tstar
