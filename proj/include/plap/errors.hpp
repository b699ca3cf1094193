#pragma once

#include <stdexcept>
#include <string>

namespace plap {

/// Raised when an improper integral does not converge (power-law divergence).
class DivergentIntegral : public std::domain_error {
public:
    explicit DivergentIntegral(const std::string& what) : std::domain_error(what) {}
};

/// The borderline case q·m = s: the integral diverges like log(R).
class LogDivergent : public DivergentIntegral {
public:
    explicit LogDivergent(const std::string& what) : DivergentIntegral(what) {}
};

class InvalidGeometry : public std::invalid_argument {
public:
    explicit InvalidGeometry(const std::string& what) : std::invalid_argument(what) {}
};

class FitDegenerate : public std::runtime_error {
public:
    explicit FitDegenerate(const std::string& what) : std::runtime_error(what) {}
};

class NonCoercive : public std::runtime_error {
public:
    explicit NonCoercive(const std::string& what) : std::runtime_error(what) {}
};

/// A claim-specific (n, p) range check failed; the message names the violated inequality.
class PreconditionFailed : public std::domain_error {
public:
    explicit PreconditionFailed(const std::string& what) : std::domain_error(what) {}
};

class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace plap
