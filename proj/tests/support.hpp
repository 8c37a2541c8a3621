#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "jtri/linalg.hpp"
#include "jtri/matrix.hpp"

namespace testsupport {

using jtri::CMatrix;
using jtri::cplx;

inline CMatrix random_matrix(std::mt19937_64& rng, std::size_t rows, std::size_t cols) {
    std::normal_distribution<double> nd;
    CMatrix a(rows, cols);
    for (auto& x : a.data()) x = cplx(nd(rng), nd(rng));
    return a;
}

inline CMatrix random_real(std::mt19937_64& rng, std::size_t rows, std::size_t cols) {
    std::normal_distribution<double> nd;
    CMatrix a(rows, cols);
    for (auto& x : a.data()) x = nd(rng);
    return a;
}

inline CMatrix unit_det(const CMatrix& a) {
    const double d = std::abs(jtri::det(a));
    return (1.0 / std::pow(d, 1.0 / static_cast<double>(a.rows()))) * a;
}

inline CMatrix random_unit_det(std::mt19937_64& rng, std::size_t n) { return unit_det(random_matrix(rng, n, n)); }

inline CMatrix random_unitary(std::mt19937_64& rng, std::size_t n) { return jtri::qr(random_matrix(rng, n, n)).q; }

inline CMatrix random_hermitian(std::mt19937_64& rng, std::size_t n) {
    const CMatrix a = random_matrix(rng, n, n);
    return 0.5 * (a + a.adjoint());
}

// Max entrywise distance after aligning every column of b to a by a unit phase.
inline double column_phase_distance(const CMatrix& a, const CMatrix& b) {
    double worst = 0.0;
    for (std::size_t j = 0; j < a.cols(); ++j) {
        cplx ip = 0.0;
        for (std::size_t i = 0; i < a.rows(); ++i) ip += std::conj(b(i, j)) * a(i, j);
        const cplx ph = std::abs(ip) > 0.0 ? ip / std::abs(ip) : cplx(1.0);
        for (std::size_t i = 0; i < a.rows(); ++i) worst = std::max(worst, std::abs(a(i, j) - ph * b(i, j)));
    }
    return worst;
}

// Nelder-Mead minimization, used only by the brute-force oracles.
inline double nelder_mead(const std::function<double(const std::vector<double>&)>& f, std::vector<double>& x,
                          double step, int iterations) {
    const std::size_t n = x.size();
    std::vector<std::vector<double>> p(n + 1, x);
    for (std::size_t i = 0; i < n; ++i) p[i + 1][i] += step;
    std::vector<double> fv(n + 1);
    for (std::size_t i = 0; i <= n; ++i) fv[i] = f(p[i]);
    for (int it = 0; it < iterations; ++it) {
        std::vector<std::size_t> idx(n + 1);
        for (std::size_t i = 0; i <= n; ++i) idx[i] = i;
        std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return fv[a] < fv[b]; });
        const std::size_t best = idx[0], worst = idx[n], second = idx[n - 1];
        if (std::abs(fv[worst] - fv[best]) <= 1e-30) break;
        std::vector<double> c(n, 0.0);
        for (std::size_t i = 0; i <= n; ++i)
            if (i != worst)
                for (std::size_t d = 0; d < n; ++d) c[d] += p[i][d] / static_cast<double>(n);
        auto along = [&](double t) {
            std::vector<double> y(n);
            for (std::size_t d = 0; d < n; ++d) y[d] = c[d] + t * (p[worst][d] - c[d]);
            return y;
        };
        const auto xr = along(-1.0);
        const double fr = f(xr);
        if (fr < fv[best]) {
            const auto xe = along(-2.0);
            const double fe = f(xe);
            if (fe < fr) {
                p[worst] = xe;
                fv[worst] = fe;
            } else {
                p[worst] = xr;
                fv[worst] = fr;
            }
        } else if (fr < fv[second]) {
            p[worst] = xr;
            fv[worst] = fr;
        } else {
            const auto xc = along(fr < fv[worst] ? -0.5 : 0.5);
            const double fc = f(xc);
            if (fc < std::min(fr, fv[worst])) {
                p[worst] = xc;
                fv[worst] = fc;
            } else {
                for (std::size_t i = 0; i <= n; ++i) {
                    if (i == best) continue;
                    for (std::size_t d = 0; d < n; ++d) p[i][d] = p[best][d] + 0.5 * (p[i][d] - p[best][d]);
                    fv[i] = f(p[i]);
                }
            }
        }
    }
    const std::size_t b = static_cast<std::size_t>(std::min_element(fv.begin(), fv.end()) - fv.begin());
    x = p[b];
    return fv[b];
}

inline double quad(const CMatrix& s, const std::array<cplx, 2>& v) {
    cplx acc = 0.0;
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) acc += std::conj(v[i]) * s(i, j) * v[j];
    return acc.real();
}

inline std::array<cplx, 2> unit_vector(double phi, double psi) {
    return {cplx(std::cos(phi), 0.0), std::polar(std::sin(phi), psi)};
}

// Smallest max(|g1(v)|, |g2(v)|) over unit 2-vectors v = (cos phi, e^{i psi} sin phi):
// a 181 x 360 grid followed by simplex refinement of the best grid points.
inline double unit_vector_oracle(const std::function<std::array<double, 2>(const std::array<cplx, 2>&)>& g) {
    struct Start {
        double value, phi, psi;
    };
    std::vector<Start> starts;
    const double pi = std::acos(-1.0);
    for (int i = 0; i <= 180; ++i)
        for (int j = 0; j < 360; ++j) {
            const double phi = 0.5 * pi * i / 180.0, psi = 2.0 * pi * j / 360.0;
            const auto r = g(unit_vector(phi, psi));
            starts.push_back({std::max(std::abs(r[0]), std::abs(r[1])), phi, psi});
        }
    std::partial_sort(starts.begin(), starts.begin() + 8, starts.end(),
                      [](const Start& a, const Start& b) { return a.value < b.value; });
    double best = starts.front().value;
    auto obj = [&](const std::vector<double>& x) {
        const auto r = g(unit_vector(x[0], x[1]));
        return r[0] * r[0] + r[1] * r[1];
    };
    for (int s = 0; s < 8; ++s) {
        std::vector<double> x{starts[s].phi, starts[s].psi};
        for (int round = 0; round < 3; ++round) nelder_mead(obj, x, 0.01 / (1 + 10 * round), 400);
        const auto r = g(unit_vector(x[0], x[1]));
        best = std::min(best, std::max(std::abs(r[0]), std::abs(r[1])));
    }
    return best;
}

inline CMatrix gram_minus(const CMatrix& a, double shift) {
    CMatrix s = a.adjoint() * a;
    for (std::size_t i = 0; i < s.rows(); ++i) s(i, i) -= shift;
    return s;
}

// Independent test of the first-column conditions ‖A1 v‖ = ‖A2 v‖ = 1.
inline double same_orientation_oracle(const CMatrix& a1, const CMatrix& a2) {
    const CMatrix s1 = gram_minus(a1, 1.0), s2 = gram_minus(a2, 1.0);
    return unit_vector_oracle([&](const std::array<cplx, 2>& v) { return std::array<double, 2>{quad(s1, v), quad(s2, v)}; });
}

// ‖A1 v‖ = 1 for the first column and ‖A2 w‖ = 1 for the orthogonal second column.
inline double upper_lower_oracle(const CMatrix& a1, const CMatrix& a2) {
    const CMatrix s1 = gram_minus(a1, 1.0), s2 = gram_minus(a2, 1.0);
    return unit_vector_oracle([&](const std::array<cplx, 2>& v) {
        const std::array<cplx, 2> w{-std::conj(v[1]), std::conj(v[0])};
        return std::array<double, 2>{quad(s1, v), quad(s2, w)};
    });
}

// First-column conditions on the two-use extension I_2 ⊗ A_k, searched over
// unit vectors of C^4 from random starts.
inline double extended_oracle(const CMatrix& a1, const CMatrix& a2, std::mt19937_64& rng, int starts) {
    const CMatrix s1 = gram_minus(a1, 1.0), s2 = gram_minus(a2, 1.0);
    auto residuals = [&](const std::vector<double>& x) {
        double nrm = 0.0;
        for (double e : x) nrm += e * e;
        nrm = std::sqrt(nrm);
        if (nrm == 0.0) return std::array<double, 2>{1e9, 1e9};
        const std::array<cplx, 2> a{cplx(x[0], x[1]) / nrm, cplx(x[2], x[3]) / nrm};
        const std::array<cplx, 2> b{cplx(x[4], x[5]) / nrm, cplx(x[6], x[7]) / nrm};
        return std::array<double, 2>{quad(s1, a) + quad(s1, b), quad(s2, a) + quad(s2, b)};
    };
    auto obj = [&](const std::vector<double>& x) {
        const auto r = residuals(x);
        return r[0] * r[0] + r[1] * r[1];
    };
    std::normal_distribution<double> nd;
    double best = 1e300;
    for (int s = 0; s < starts; ++s) {
        std::vector<double> x(8);
        for (auto& e : x) e = nd(rng);
        for (int round = 0; round < 4; ++round) nelder_mead(obj, x, 0.2 / (1 + 5 * round), 2000);
        const auto r = residuals(x);
        best = std::min(best, std::max(std::abs(r[0]), std::abs(r[1])));
    }
    return best;
}

}  // namespace testsupport
