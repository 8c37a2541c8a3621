#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "jtri/joint.hpp"
#include "jtri/matrix.hpp"

namespace jtri {

struct SpaceTimeUser {
    CMatrix u;  // nN x m, orthonormal columns
    CMatrix t;  // m x m, upper triangular
};

// U_k† (I_N ⊗ A_k) V = T_k with m = n (N - (n^{K-1} - 1)) kept dimensions.
struct SpaceTimeFactors {
    std::size_t n = 0;
    std::size_t k_users = 0;
    std::size_t n_ext = 0;
    CMatrix v;  // nN x m, orthonormal columns
    std::vector<SpaceTimeUser> users;
    // 1-based positions in the extended coordinate system, in the order of
    // the columns of v.
    std::vector<std::size_t> kept_indices;
    // Per user, the product of the magnitudes of the discarded diagonal
    // entries.
    std::vector<double> discarded_products;
};

enum class SpaceTimeMode { Gmd, Jet };

// Number of kept dimensions n (N - (n^e - 1)); zero when N < n^e.
std::size_t kept_dimension(std::size_t n, std::size_t exponent, std::size_t n_ext);

SpaceTimeFactors nearly_kgmd(const std::vector<CMatrix>& matrices, std::size_t n_ext);
SpaceTimeFactors nearly_kjet(const std::vector<CMatrix>& matrices, std::size_t n_ext);

// True when no exact 2-GMD exists, which no time extension can repair.
bool extension_futile_2x2(const CMatrix& a1, const CMatrix& a2);

// Unitary 2x2 rephased into the form [[a+bi, c+di], [c-di, -a+bi]].
CMatrix to_abcd_form(const CMatrix& u);
// Real orthogonal 4x4 matrix for a 2x2 matrix already in that form. Input
// coordinates (Re x1, Im x1, Re x2, Im x2); output (Re y1, Re y2, Im y1, Im y2).
CMatrix real_embedding(const CMatrix& m);

struct RealGmdFactors {
    CMatrix v;                 // 4x4 real orthogonal
    std::vector<CMatrix> u;    // 4x4 real orthogonal per user
    std::vector<CMatrix> r;    // 4x4 real upper triangular, unit diagonal
    JointFactors complex_factors;
};

// 2-GMD of two real 2x2 unit-determinant matrices over two real channel uses.
RealGmdFactors real_embedding_2gmd(const CMatrix& a1, const CMatrix& a2);

// Minimal N >= n^e with (N - (n^e - 1)) / N >= fraction, where
// e = K - 1 for a K-GMD and e = K - 2 for a K-JET of K matrices.
std::size_t required_extensions(double fraction, std::size_t n, std::size_t k_matrices, SpaceTimeMode mode);
double extension_efficiency(std::size_t n, std::size_t exponent, std::size_t n_ext);

struct TableColumn {
    std::string label;  // percentage as printed
    double fraction;
    std::size_t n_gmd;
    std::size_t n_jet;
};

// Columns of the extension tables for three 2x2 matrices.
std::vector<TableColumn> extension_table();

}  // namespace jtri
