#pragma once

#include <stdexcept>
#include <string>

namespace tandem {

// DIMACS reader failures, tagged so callers can branch on the cause.
enum class ParseErrc {
    MissingHeader,
    CountMismatch,
    MalformedLine,
    SelfLoop,
};

class ParseError : public std::runtime_error {
public:
    ParseError(ParseErrc code, const std::string& what)
        : std::runtime_error(what), code_(code) {}
    ParseErrc code() const { return code_; }

private:
    ParseErrc code_;
};

class UnknownVertexError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Scoring a NOT-SOLVABLE claim against an instance whose oracle label was
// never computed.
class MissingLabelError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

class EmptyTranscriptError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

enum class SolverErrc {
    Timeout,
    Transport,
    FixtureExhausted,
};

class SolverError : public std::runtime_error {
public:
    SolverError(SolverErrc code, const std::string& what)
        : std::runtime_error(what), code_(code) {}
    SolverErrc code() const { return code_; }

private:
    SolverErrc code_;
};

class OracleTimeoutError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class SandboxError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class RuntimeUnavailableError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class PersistenceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace tandem
