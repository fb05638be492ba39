#pragma once

#include <stdexcept>
#include <string>

namespace freelim {

// Fixed-point / root-finding failure. Carries the best residual reached so the
// caller can tell a near-miss from a blow-up.
class solver_error : public std::runtime_error {
public:
    explicit solver_error(const std::string& what, double residual = -1.0)
        : std::runtime_error(what), residual_(residual) {}
    double residual() const noexcept { return residual_; }

private:
    double residual_;
};

// Requested accuracy is unreachable with the configured quadrature/extrapolation.
class precision_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Operation not defined for this law / parameter combination.
class unsupported_error : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

}  // namespace freelim
