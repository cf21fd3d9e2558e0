#pragma once

#include <stdexcept>
#include <string>

namespace subphi {

// Argument outside the mathematical domain of an operation (negative u, s outside (0,2], ...).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

// Evaluation outside a tabulated or attainable range.
class RangeError : public std::range_error {
public:
    using std::range_error::range_error;
};

// The requested computation is not supported for the given inputs
// (source not in Sub_phi, missing tail information, unregistered sampler).
class CapabilityError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class PreconditionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class KernelError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class RankError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DegeneracyError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class RouteError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace subphi
