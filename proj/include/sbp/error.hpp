#pragma once

#include <stdexcept>
#include <string>

namespace sbp {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid user-supplied model, cost table or experiment configuration.
class ModelError : public Error {
public:
    using Error::Error;
};

/// The job model has no path from `phase` to departure.
class AbsorptionUnreachable : public ModelError {
public:
    explicit AbsorptionUnreachable(std::size_t phase)
        : ModelError("departure is unreachable from phase " + std::to_string(phase))
        , phase_(phase) {}

    [[nodiscard]] std::size_t phase() const noexcept { return phase_; }

private:
    std::size_t phase_;
};

class SingularSystem : public Error {
public:
    using Error::Error;
};

class SizeOverflow : public Error {
public:
    using Error::Error;
};

/// No feasible point with positive throughput exists.
class LpInfeasible : public Error {
public:
    using Error::Error;
};

class LpUnbounded : public Error {
public:
    using Error::Error;
};

/// A policy that never serves any job, or a zero-throughput optimum.
class DegeneratePolicy : public Error {
public:
    using Error::Error;
};

class ImpulseCycle : public Error {
public:
    using Error::Error;
};

class MassOffRecurrentSupport : public Error {
public:
    using Error::Error;
};

/// Hard simulator invariant violated. Carries the offending event record.
class InvariantBreach : public Error {
public:
    using Error::Error;
};

class WindowEmpty : public Error {
public:
    using Error::Error;
};

class DegenerateGrid : public Error {
public:
    using Error::Error;
};

}  // namespace sbp
