#pragma once

namespace jtri::tol {

inline constexpr double unitary = 1e-9;  // absolute, on unit-scaled matrices
inline constexpr double zero = 1e-9;     // absolute, triangularity and diagonal checks
inline constexpr double recon = 1e-9;    // relative Frobenius reconstruction
inline constexpr double rank = 1e-12;    // relative column residual in QR
inline constexpr double major = 1e-9;    // on log-products
inline constexpr int svd_sweeps = 60;

}  // namespace jtri::tol
