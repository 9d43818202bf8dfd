#pragma once

#include <stdexcept>
#include <string>

namespace nlq {

class Error : public std::runtime_error {
public:
    Error(const std::string& kind, const std::string& msg)
        : std::runtime_error(msg), kind_(kind) {}
    const std::string& kind() const noexcept { return kind_; }
    virtual int exit_code() const noexcept { return 1; }

private:
    std::string kind_;
};

class ParameterError : public Error {
public:
    explicit ParameterError(const std::string& msg) : Error("parameter", msg) {}
    int exit_code() const noexcept override { return 2; }
};

class DomainError : public Error {
public:
    explicit DomainError(const std::string& msg) : Error("domain", msg) {}
};

class ConfigError : public Error {
public:
    ConfigError(const std::string& msg, int line)
        : Error("config", line > 0 ? "line " + std::to_string(line) + ": " + msg : msg), line_(line) {}
    int line() const noexcept { return line_; }
    int exit_code() const noexcept override { return 2; }

private:
    int line_;
};

class StepRejected : public Error {
public:
    explicit StepRejected(const std::string& msg) : Error("step_rejected", msg) {}
    int exit_code() const noexcept override { return 3; }
};

class DivergenceError : public Error {
public:
    explicit DivergenceError(const std::string& msg) : Error("divergence", msg) {}
    int exit_code() const noexcept override { return 3; }
};

class VerificationFailure : public Error {
public:
    explicit VerificationFailure(const std::string& msg) : Error("verification", msg) {}
    int exit_code() const noexcept override { return 4; }
};

}  // namespace nlq
