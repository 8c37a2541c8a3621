#pragma once

#include <stdexcept>
#include <string>

namespace jtri {

enum class ErrorCode {
    // matcore
    RankDeficient,
    NoConvergence,
    NotSquare,
    IndexOutOfRange,
    DuplicateIndex,
    OverlappingGroups,
    LengthMismatch,
    NonPositiveEntry,
    Singular,
    NotHermitian,
    NotPsd,
    // gtd
    MajorizationViolated,
    ShapeMismatch,
    BlockConditionViolated,
    // joint
    BadDeterminant,
    ConditionViolated,
    NotConstructible,
    // spacetime
    TooFewExtensions,
    FormMismatch,
    UnachievableFraction,
    // multicast
    DiagBelowOne,
    DimensionMismatch,
    TooManyUsers,
    BadK,
    // interchange
    ParseError,
};

const char* error_name(ErrorCode code);

// Process exit status: 2 parse, 3 infeasible condition, 4 numerical failure,
// 5 dimension or shape mismatch.
int exit_code(ErrorCode code);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(error_name(code)) + ": " + what), code_(code) {}

    ErrorCode code() const { return code_; }

private:
    ErrorCode code_;
};

}  // namespace jtri
