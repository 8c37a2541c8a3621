#pragma once

#include <cstddef>
#include <vector>

#include "jtri/matrix.hpp"

namespace jtri {

struct QrFactors {
    CMatrix q;  // m x n, orthonormal columns
    CMatrix r;  // n x n, upper triangular with real positive diagonal
};

struct SvdFactors {
    CMatrix u;                  // m x k, orthonormal columns (k = min(m, n))
    std::vector<double> sigma;  // non-increasing
    CMatrix v;                  // n x k, orthonormal columns
};

struct EigFactors {
    std::vector<double> values;  // non-increasing
    CMatrix vectors;             // unitary, columns are eigenvectors
};

struct MajorizationCheck {
    bool ok = true;
    // 1-based prefix length of the first violated condition; equals the
    // vector length when only the product equality fails. Zero when ok.
    std::size_t failing_prefix = 0;
    // Smallest slack over the prefix inequalities, in log units (negative
    // when violated). The product equality only enters when it fails.
    double margin = 0.0;
};

// Householder QR of a full-column-rank matrix (rows >= cols).
QrFactors qr(const CMatrix& a);

// One-sided (Hestenes) Jacobi SVD.
SvdFactors svd(const CMatrix& a);
std::vector<double> singular_values(const CMatrix& a);

// Cyclic Jacobi eigendecomposition of a Hermitian matrix.
EigFactors hermitian_eig(const CMatrix& a);

cplx det(const CMatrix& a);
CMatrix inverse(const CMatrix& a);
CMatrix adjugate(const CMatrix& a);

// Lower-triangular L with L L† = a for Hermitian positive semidefinite a.
CMatrix cholesky_lower(const CMatrix& a);

// Extends orthonormal columns to a full unitary matrix (given columns first).
CMatrix complete_unitary(const CMatrix& cols);

// Block-diagonal matrix holding n_ext copies of a.
CMatrix time_extend(const CMatrix& a, std::size_t n_ext);

// n x k matrix whose columns are the standard basis vectors e_{indices[j]}
// (1-based).
CMatrix extraction_matrix(std::size_t n, const std::vector<std::size_t>& indices);

// Starts from I_n and writes b(i, j) at (g_i, g_j) for every group g
// (1-based indices).
CMatrix embed(std::size_t n, const CMatrix& b, const std::vector<std::vector<std::size_t>>& groups);

// Multiplicative majorization x ⪰ y with tolerance tol::major on log sums.
bool majorizes(const std::vector<double>& x, const std::vector<double>& y);
MajorizationCheck check_majorization(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace jtri
