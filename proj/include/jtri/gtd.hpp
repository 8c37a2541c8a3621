#pragma once

#include <cstddef>
#include <vector>

#include "jtri/linalg.hpp"
#include "jtri/matrix.hpp"

namespace jtri {

// A = U R V† with unitary U, V and upper-triangular R whose diagonal is the
// real positive vector diag.
struct GtdFactors {
    CMatrix u;
    CMatrix r;
    CMatrix v;
    std::vector<double> diag;
};

struct BlockSpec {
    std::vector<std::size_t> block_sizes;
    std::vector<cplx> block_dets;
};

struct BlockGtdFactors {
    GtdFactors factors;
    // 1-based index of the last row/column of every diagonal block.
    std::vector<std::size_t> boundaries;
};

// Triangularization with a prescribed diagonal (in the given order).
GtdFactors gtd(const CMatrix& a, const std::vector<double>& target_diag);

// Constant diagonal equal to the geometric mean of the singular values.
GtdFactors gmd(const CMatrix& a);

// The M prefix conditions for a diagonal made of values[m] repeated mults[m]
// times. failing_prefix reports the 1-based position (in non-increasing
// value order) of the first violated condition.
MajorizationCheck multiplicity_check(const std::vector<double>& sigma, const std::vector<double>& values,
                                     const std::vector<std::size_t>& mults);
bool check_multiplicity_conditions(const std::vector<double>& sigma, const std::vector<double>& values,
                                   const std::vector<std::size_t>& mults);

// Block feasibility conditions for a given singular-value vector.
MajorizationCheck block_conditions(const std::vector<double>& sigma, const BlockSpec& spec);

// Block upper-triangular form with prescribed |det| of the diagonal blocks.
BlockGtdFactors block_gtd(const CMatrix& a, const BlockSpec& spec);

}  // namespace jtri
