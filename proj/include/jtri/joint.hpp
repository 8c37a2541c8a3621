#pragma once

#include <array>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "jtri/matrix.hpp"

namespace jtri {

struct JointUser {
    CMatrix u;
    CMatrix r;
};

// A_k = U_k R_k V† for every user, with a common real positive diagonal.
// V and U_k may have orthonormal columns (rectangular) when produced by the
// space-time constructions.
struct JointFactors {
    CMatrix v;
    std::vector<JointUser> users;
    std::vector<double> diag;
};

struct NormalizedSet {
    std::vector<CMatrix> matrices;
    std::vector<double> scales;  // original = scale * normalized
};

// Unit vector v with v†S1v = v†S2v = 0 for 2x2 Hermitian S1, S2.
struct QuadraticWitness {
    std::array<cplx, 2> v1{};
    std::optional<double> t;
    int case_id = 0;
    double residual = 0.0;  // max(|v†S1v|, |v†S2v|, |‖v‖ - 1|)
};

struct ExistenceReport {
    bool feasible = false;
    double f_value = 0.0;       // F1 or F2
    double det_s1 = 0.0;        // det(A1†A1 - r²I)
    double det_s2 = 0.0;        // det of the second shifted Gram matrix
    std::string failing;        // human readable failing condition, empty when feasible
};

struct UpperLowerFactors {
    CMatrix v;
    CMatrix u1;
    CMatrix r1_upper;
    CMatrix u2;
    CMatrix r2_lower;
    QuadraticWitness witness;
};

using KgmdProvider = std::function<JointFactors(const std::vector<CMatrix>&)>;

NormalizedSet normalize_equal_det(const std::vector<CMatrix>& matrices);

JointFactors jet2(const CMatrix& a1, const CMatrix& a2);

// F1(S1, S2) = det(S1 adj S2 - S2 adj S1).
double f1(const CMatrix& s1, const CMatrix& s2);
// F2(S1, S2) = det(S1 S2 - adj S2 adj S1).
double f2(const CMatrix& s1, const CMatrix& s2);

ExistenceReport check_2gmd(const CMatrix& a1, const CMatrix& a2, double r = 1.0);
bool exists_2gmd(const CMatrix& a1, const CMatrix& a2, double r = 1.0);

QuadraticWitness solve_quadratic_witness(const CMatrix& s1, const CMatrix& s2);

JointFactors construct_2gmd(const CMatrix& a1, const CMatrix& a2);
// Same construction, also returning the witness used for the first column of V.
JointFactors construct_2gmd(const CMatrix& a1, const CMatrix& a2, QuadraticWitness& witness);

JointFactors kgmd_exact(const std::vector<CMatrix>& matrices);

// Equal-diagonal triangularization of K+1 matrices from a K-GMD of
// B_k = A_k A_{K+1}^{-1}. The provider may return orthonormal-column factors
// for N-extended matrices; the extension count is read from its V.
JointFactors kgmd_to_kjet(const std::vector<CMatrix>& matrices, const KgmdProvider& inner = kgmd_exact);

ExistenceReport check_upper_lower(const CMatrix& a1, const CMatrix& a2, double r = 1.0);
bool exists_upper_lower(const CMatrix& a1, const CMatrix& a2, double r = 1.0);
UpperLowerFactors construct_upper_lower(const CMatrix& a1, const CMatrix& a2);

bool joint_block_feasible(const CMatrix& a1, const CMatrix& a2, const std::vector<std::size_t>& block_sizes,
                          const std::vector<cplx>& det_ratios);

}  // namespace jtri
