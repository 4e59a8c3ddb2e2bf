#pragma once

#include <stdexcept>
#include <string>

namespace adapt {

// Base of every error the library throws. `code()` is a stable machine-readable
// tag; the HTTP facade maps it to a status code.
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& message)
        : std::runtime_error(message), code_(std::move(code)) {}

    const std::string& code() const noexcept { return code_; }

private:
    std::string code_;
};

#define ADAPT_DEFINE_ERROR(Name, Code)                                   \
    class Name : public Error {                                          \
    public:                                                              \
        explicit Name(const std::string& message) : Error(Code, message) {} \
    }

ADAPT_DEFINE_ERROR(ValidationError, "validation");
ADAPT_DEFINE_ERROR(NotFoundError, "not_found");
ADAPT_DEFINE_ERROR(SequenceError, "sequence");
ADAPT_DEFINE_ERROR(IoError, "io");
ADAPT_DEFINE_ERROR(PreconditionError, "precondition");
ADAPT_DEFINE_ERROR(ConflictError, "conflict");
ADAPT_DEFINE_ERROR(ConfigError, "config");
ADAPT_DEFINE_ERROR(ModeError, "mode");
ADAPT_DEFINE_ERROR(GatewayUnavailableError, "gateway_unavailable");
ADAPT_DEFINE_ERROR(BudgetTooSmallError, "budget_too_small");
ADAPT_DEFINE_ERROR(InfeasibleError, "infeasible");
ADAPT_DEFINE_ERROR(StatsError, "stats");
ADAPT_DEFINE_ERROR(UndefinedRateError, "undefined_rate");

#undef ADAPT_DEFINE_ERROR

// A record on disk that could not be decoded. Carries the offending path.
class DecodeError : public Error {
public:
    DecodeError(std::string path, const std::string& detail)
        : Error("decode", "cannot decode " + path + ": " + detail), path_(std::move(path)) {}

    const std::string& path() const noexcept { return path_; }

private:
    std::string path_;
};

// An LLM reply that could not be turned into structured output. Keeps the raw text.
class ParseError : public Error {
public:
    ParseError(std::string code, const std::string& message, std::string raw)
        : Error(std::move(code), message), raw_(std::move(raw)) {}

    const std::string& raw_text() const noexcept { return raw_; }

private:
    std::string raw_;
};

class ExtractionParseError : public ParseError {
public:
    ExtractionParseError(const std::string& message, std::string raw)
        : ParseError("extraction_parse", message, std::move(raw)) {}
};

class JudgeParseError : public ParseError {
public:
    JudgeParseError(const std::string& message, std::string raw)
        : ParseError("judge_parse", message, std::move(raw)) {}
};

class SynthesisError : public ParseError {
public:
    SynthesisError(const std::string& message, std::string last_candidate)
        : ParseError("synthesis", message, std::move(last_candidate)) {}
};

}  // namespace adapt
