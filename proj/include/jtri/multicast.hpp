#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "json.hpp"
#include "jtri/joint.hpp"
#include "jtri/matrix.hpp"
#include "jtri/spacetime.hpp"

namespace jtri {

struct MulticastProblem {
    std::vector<CMatrix> users;  // H_k, n_r(k) x n_t
    CMatrix cov;                 // n_t x n_t
    double power = 1.0;
};

struct SchemeRates {
    std::vector<double> per_stream_snr;
    std::vector<double> per_stream_rate;
    double total_rate = 0.0;
};

struct SicStream {
    double nominal_snr = 0.0;    // r_j^2 - 1 from the diagonal of U†GV
    double predicted_snr = 0.0;  // from the effective linear model after SIC
    double measured_snr = 0.0;
    double std_error = 0.0;
    bool infinite = false;       // residual power vanished (noiseless runs)
};

struct SicReport {
    std::vector<SicStream> streams;
    std::size_t n_ext = 1;
    std::size_t trials = 0;
    std::uint64_t seed = 0;
    double total_rate = 0.0;  // sum of log2(1 + predicted) per channel use
};

struct SicOptions {
    std::size_t trials = 100000;
    std::uint64_t seed = 0;
    bool noiseless = false;
    std::size_t batches = 100;
};

// Critical rate of the three-rate rateless example, 6 log2((3 + sqrt 5) / 2).
double rateless3_critical_rate();
// Four-rate critical rate as reported in the literature; not derived here.
inline constexpr double kRateless4CriticalRate = 10.55;

void validate_problem(const MulticastProblem& problem);

double mutual_info(const CMatrix& h, const CMatrix& cov);
double multicast_rate(const MulticastProblem& problem);

// Upper-triangular factor of [H C^{1/2}; I] with C^{1/2} the lower Cholesky factor.
CMatrix canonical_matrix(const CMatrix& h, const CMatrix& cov);
// Canonical matrix together with the first n_r rows of the orthonormal factor.
struct CanonicalSplit {
    CMatrix g;
    CMatrix q_top;
    CMatrix cov_sqrt;
};
CanonicalSplit canonical_split(const CMatrix& h, const CMatrix& cov);

SchemeRates scheme_rates(const std::vector<double>& diag, std::size_t n_ext);

// Genie-aided SIC Monte-Carlo for every user. Factors refer to the users'
// canonical matrices (any determinant scaling), extended over N uses when
// their row count is N n_t.
std::vector<SicReport> simulate_sic(const MulticastProblem& problem, const JointFactors& factors,
                                    const SicOptions& options);
std::vector<SicReport> simulate_sic(const MulticastProblem& problem, const SpaceTimeFactors& factors,
                                    const SicOptions& options);

std::vector<CMatrix> rateless_channels(std::size_t k_rates, double total_rate);

struct Rateless3Reduction {
    CMatrix a1;  // 3x3, diag(b^4, b^-2, b^-2)
    CMatrix a2;  // 3x3, diag(b, b, b^-2)
    CMatrix v0;  // 3x3 orthogonal, first column fixed by the unit-norm conditions
    CMatrix reduced1;
    CMatrix reduced2;
};

// Closed-form reduced pair of the three-rate example.
std::pair<CMatrix, CMatrix> rateless3_reduce(double total_rate);
// The same pair obtained numerically from the 3x3 problem.
Rateless3Reduction rateless3_reduction_path(double total_rate);

std::vector<CMatrix> permuted_channels(const std::vector<double>& gains);
CMatrix dft_precoder(std::size_t k);

enum class DofVariant { TwoUser, ThreeUser };

struct DofExample {
    MulticastProblem problem;
    std::vector<CMatrix> canonical;
    CMatrix v;               // closed-form precoder
    std::vector<CMatrix> t;  // closed-form triangular factors (three-user variant)
};

DofExample dof_mismatch_example(double c_ptp, DofVariant variant);

// Gains with log2(1 + a1^2 P) = 2 log2(1 + a2^2 P / 2) = c_ptp.
std::pair<double, double> example1_gains(double c_ptp, double power);

// {"users": [{"streams": [...], "total_rate", "seed", "trials", "n_ext"}]}
nlohmann::json sic_reports_to_json(const std::vector<SicReport>& reports);

}  // namespace jtri
