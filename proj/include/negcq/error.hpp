#pragma once

#include <stdexcept>
#include <string>

namespace negcq {

// Exit-code category; the CLI maps these to 2/3/4.
enum class ErrorKind { usage, budget, internal };

class Error : public std::runtime_error {
public:
    Error(std::string name, ErrorKind kind, const std::string& what)
        : std::runtime_error(name + ": " + what), name_(std::move(name)), kind_(kind) {}
    const std::string& name() const noexcept { return name_; }
    ErrorKind kind() const noexcept { return kind_; }

private:
    std::string name_;
    ErrorKind kind_;
};

#define NEGCQ_DEFINE_ERROR(Name, Kind)                                        \
    struct Name : Error {                                                     \
        explicit Name(const std::string& what) : Error(#Name, Kind, what) {}  \
    };

NEGCQ_DEFINE_ERROR(IngestError, ErrorKind::usage)
NEGCQ_DEFINE_ERROR(UnknownVariable, ErrorKind::usage)
NEGCQ_DEFINE_ERROR(UnknownRelation, ErrorKind::usage)
NEGCQ_DEFINE_ERROR(EmptyProjection, ErrorKind::usage)
NEGCQ_DEFINE_ERROR(ParseError, ErrorKind::usage)
NEGCQ_DEFINE_ERROR(UnsafeHead, ErrorKind::usage)
NEGCQ_DEFINE_ERROR(RangeRestrictionError, ErrorKind::usage)
NEGCQ_DEFINE_ERROR(ArityMismatch, ErrorKind::usage)
NEGCQ_DEFINE_ERROR(InvalidDistribution, ErrorKind::usage)
NEGCQ_DEFINE_ERROR(ParameterError, ErrorKind::usage)
NEGCQ_DEFINE_ERROR(InfeasibleCover, ErrorKind::usage)
NEGCQ_DEFINE_ERROR(PlanError, ErrorKind::usage)
NEGCQ_DEFINE_ERROR(CoverageGap, ErrorKind::usage)
NEGCQ_DEFINE_ERROR(PlanningBudgetExceeded, ErrorKind::budget)
NEGCQ_DEFINE_ERROR(QuotientBudgetExceeded, ErrorKind::budget)
NEGCQ_DEFINE_ERROR(ChromaticBudgetExceeded, ErrorKind::budget)
NEGCQ_DEFINE_ERROR(ExplicitBudgetExceeded, ErrorKind::budget)
NEGCQ_DEFINE_ERROR(EvaluationBudgetExceeded, ErrorKind::budget)
NEGCQ_DEFINE_ERROR(FamilyConstructionFailed, ErrorKind::budget)
NEGCQ_DEFINE_ERROR(ConstructionBug, ErrorKind::internal)

#undef NEGCQ_DEFINE_ERROR

}  // namespace negcq
