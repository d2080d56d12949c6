#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace polaron {

// Every error names the module and the offending parameter so the CLI can
// report them verbatim.
class Error : public std::runtime_error
{
public:
    Error(std::string module, std::string parameter, const std::string& what)
        : std::runtime_error(module + ": " + parameter + ": " + what),
          m_module(std::move(module)), m_parameter(std::move(parameter))
    {}

    const std::string& module() const noexcept { return m_module; }
    const std::string& parameter() const noexcept { return m_parameter; }

private:
    std::string m_module;
    std::string m_parameter;
};

/// Rejected input: violated precondition or invariant of a domain type.
class ValidationError : public Error
{
public:
    using Error::Error;
};

/// The computational domain is too small for the requested object
/// (insufficient decay at the box edge, rescaled support outside the grid).
class DomainError : public ValidationError
{
public:
    using ValidationError::ValidationError;
};

/// An iterative method stopped without meeting its tolerance.
class ConvergenceError : public Error
{
public:
    ConvergenceError(std::string module, std::string parameter, const std::string& what,
                     double best_residual)
        : Error(std::move(module), std::move(parameter), what), m_best_residual(best_residual)
    {}

    double best_residual() const noexcept { return m_best_residual; }

private:
    double m_best_residual;
};

} // namespace polaron
