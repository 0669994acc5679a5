#pragma once

#include <stdexcept>
#include <string>

namespace kscrit {

/// Base of every error raised by the library.  Carries a short category tag
/// so the CLI can map failures to exit codes without string matching.
class Error : public std::runtime_error {
public:
    Error(std::string category, const std::string& what)
        : std::runtime_error(category + ": " + what), category_(std::move(category)) {}
    const std::string& category() const noexcept { return category_; }

private:
    std::string category_;
};

#define KSCRIT_ERROR(Name, tag)                                                   \
    class Name : public Error {                                                  \
    public:                                                                      \
        explicit Name(const std::string& what) : Error(tag, what) {}             \
    };

KSCRIT_ERROR(InvalidInput, "invalid-input")
KSCRIT_ERROR(RangeError, "range")
KSCRIT_ERROR(DegenerateSlope, "degenerate-slope")
KSCRIT_ERROR(ConstructionError, "construction")
KSCRIT_ERROR(SingularInput, "singular-input")
KSCRIT_ERROR(MTooSmall, "M-too-small")
KSCRIT_ERROR(Infeasible, "infeasible")
KSCRIT_ERROR(AsymptoticsViolation, "asymptotics-violation")
KSCRIT_ERROR(InvalidK, "invalid-K")
KSCRIT_ERROR(DomainError, "domain")
KSCRIT_ERROR(ResolutionError, "resolution")
KSCRIT_ERROR(SolverFailure, "solver-failure")
KSCRIT_ERROR(MaximumPrincipleViolation, "maximum-principle-violation")
KSCRIT_ERROR(OrderingFailure, "ordering-failure")
KSCRIT_ERROR(ConfigError, "config")

#undef KSCRIT_ERROR

}  // namespace kscrit
