#include "jtri/gtd.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <sstream>

#include "jtri/error.hpp"
#include "jtri/tolerances.hpp"

namespace jtri {

namespace {

// Symmetric permutation of indices i and j in R together with the matching
// columns of U and V.
void symmetric_swap(CMatrix& u, CMatrix& r, CMatrix& v, std::size_t i, std::size_t j) {
    if (i == j) return;
    r.swap_rows(i, j);
    r.swap_cols(i, j);
    u.swap_cols(i, j);
    v.swap_cols(i, j);
}

double log_scale(const std::vector<double>& sigma) {
    double s = 1.0;
    for (double x : sigma) s += std::abs(std::log(x));
    return s;
}

}  // namespace

GtdFactors gtd(const CMatrix& a, const std::vector<double>& target) {
    if (!a.square()) throw Error(ErrorCode::NotSquare, "gtd needs a square matrix");
    const std::size_t n = a.rows();
    if (target.size() != n) throw Error(ErrorCode::ShapeMismatch, "target length differs from matrix size");
    for (double t : target)
        if (!(t > 0.0)) throw Error(ErrorCode::NonPositiveEntry, "target diagonal must be positive");

    SvdFactors s = svd(a);
    if (n == 0) return GtdFactors{s.u, CMatrix(), s.v, {}};
    if (!(s.sigma.back() > 1e-15 * s.sigma.front() * static_cast<double>(n)))
        throw Error(ErrorCode::Singular, "gtd needs an invertible matrix");

    const MajorizationCheck mc = check_majorization(s.sigma, target);
    if (!mc.ok) {
        std::ostringstream msg;
        if (mc.failing_prefix == n)
            msg << "product of target differs from product of singular values";
        else
            msg << "prefix " << mc.failing_prefix << " of the sorted target exceeds the singular values";
        throw Error(ErrorCode::MajorizationViolated, msg.str());
    }

    CMatrix u = s.u;
    CMatrix v = s.v;
    CMatrix r = CMatrix::diag(s.sigma);

    // Invariant: r(k:, k:) is diagonal. Each step fixes r(k, k) = target[k]
    // with a 2x2 rotation pair acting on two remaining diagonal entries that
    // straddle the target value.
    for (std::size_t k = 0; k + 1 < n; ++k) {
        const double rk = target[k];
        auto d = [&](std::size_t i) { return r(i, i).real(); };

        std::size_t exact = n, above = n, below = n, nearest = k;
        for (std::size_t i = k; i < n; ++i) {
            if (std::abs(d(i) - rk) <= 1e-13 * rk && exact == n) exact = i;
            if (d(i) > rk && (above == n || d(i) < d(above))) above = i;
            if (d(i) < rk && (below == n || d(i) > d(below))) below = i;
            if (std::abs(std::log(d(i) / rk)) < std::abs(std::log(d(nearest) / rk))) nearest = i;
        }
        if (exact != n || above == n || below == n) {
            // Either an entry already matches, or the target sits on the
            // majorization boundary within tolerance.
            symmetric_swap(u, r, v, k, exact != n ? exact : nearest);
            continue;
        }

        symmetric_swap(u, r, v, k, above);
        if (below == k) below = above;
        symmetric_swap(u, r, v, k + 1, below);

        const double d1 = d(k);
        const double d2 = d(k + 1);
        const double c = std::sqrt(std::clamp((rk * rk - d2 * d2) / (d1 * d1 - d2 * d2), 0.0, 1.0));
        const double sn = std::sqrt(std::max(0.0, 1.0 - c * c));

        // Right rotation [[c, -s], [s, c]] on columns k, k+1.
        for (CMatrix* m : {&r, &v}) {
            for (std::size_t i = 0; i < m->rows(); ++i) {
                const cplx x = (*m)(i, k);
                const cplx y = (*m)(i, k + 1);
                (*m)(i, k) = c * x + sn * y;
                (*m)(i, k + 1) = -sn * x + c * y;
            }
        }
        // Left rotation G1 = (1/r)[[c d1, -s d2], [s d2, c d1]]: R <- G1ᵀ R, U <- U G1.
        const double g00 = c * d1 / rk, g01 = -sn * d2 / rk, g10 = sn * d2 / rk, g11 = c * d1 / rk;
        for (std::size_t j = 0; j < n; ++j) {
            const cplx x = r(k, j);
            const cplx y = r(k + 1, j);
            r(k, j) = g00 * x + g10 * y;
            r(k + 1, j) = g01 * x + g11 * y;
        }
        for (std::size_t i = 0; i < n; ++i) {
            const cplx x = u(i, k);
            const cplx y = u(i, k + 1);
            u(i, k) = g00 * x + g10 * y;
            u(i, k + 1) = g01 * x + g11 * y;
        }
        r(k + 1, k) = 0.0;
        r(k, k) = r(k, k).real();
        r(k + 1, k + 1) = r(k + 1, k + 1).real();
    }

    GtdFactors out{u, r, v, std::vector<double>(n)};
    for (std::size_t j = 0; j < n; ++j) {
        out.diag[j] = std::abs(r(j, j));
        if (std::abs(out.diag[j] - target[j]) > tol::zero * std::max(1.0, target[j]))
            throw Error(ErrorCode::NoConvergence, "diagonal entry " + std::to_string(j + 1) + " missed its target");
    }
    return out;
}

GtdFactors gmd(const CMatrix& a) {
    if (!a.square()) throw Error(ErrorCode::NotSquare, "gmd needs a square matrix");
    const std::size_t n = a.rows();
    const auto sigma = singular_values(a);
    if (n == 0) return gtd(a, {});
    if (!(sigma.back() > 1e-15 * sigma.front() * static_cast<double>(n)))
        throw Error(ErrorCode::Singular, "gmd needs an invertible matrix");
    double log_mean = 0.0;
    for (double x : sigma) log_mean += std::log(x);
    log_mean /= static_cast<double>(n);
    return gtd(a, std::vector<double>(n, std::exp(log_mean)));
}

MajorizationCheck multiplicity_check(const std::vector<double>& sigma_in, const std::vector<double>& values,
                                     const std::vector<std::size_t>& mults) {
    if (values.size() != mults.size()) throw Error(ErrorCode::ShapeMismatch, "values and multiplicities differ in length");
    const std::size_t total = std::accumulate(mults.begin(), mults.end(), std::size_t{0});
    if (total != sigma_in.size()) throw Error(ErrorCode::ShapeMismatch, "multiplicities do not sum to the dimension");
    for (std::size_t m : mults)
        if (m == 0) throw Error(ErrorCode::ShapeMismatch, "zero multiplicity");
    for (double x : sigma_in)
        if (!(x > 0.0)) throw Error(ErrorCode::NonPositiveEntry, "singular values must be positive");
    for (double x : values)
        if (!(x > 0.0)) throw Error(ErrorCode::NonPositiveEntry, "values must be positive");

    std::vector<double> sigma = sigma_in;
    std::sort(sigma.begin(), sigma.end(), std::greater<>());
    std::vector<std::size_t> order(values.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return values[x] > values[y]; });

    const double slack = tol::major * log_scale(sigma);
    MajorizationCheck out;
    out.margin = std::numeric_limits<double>::infinity();
    double lhs = 0.0, rhs = 0.0;
    std::size_t used = 0;
    for (std::size_t q = 0; q < order.size(); ++q) {
        const std::size_t m = order[q];
        lhs += static_cast<double>(mults[m]) * std::log(values[m]);
        for (std::size_t j = 0; j < mults[m]; ++j) rhs += std::log(sigma[used++]);
        const bool last = q + 1 == order.size();
        const double gap = last ? -std::abs(rhs - lhs) : rhs - lhs;
        if (!last || gap < -slack) out.margin = std::min(out.margin, gap);
        if (gap < -slack && out.ok) {
            out.ok = false;
            out.failing_prefix = q + 1;
        }
    }
    if (!std::isfinite(out.margin)) out.margin = 0.0;
    return out;
}

bool check_multiplicity_conditions(const std::vector<double>& sigma, const std::vector<double>& values,
                                   const std::vector<std::size_t>& mults) {
    return multiplicity_check(sigma, values, mults).ok;
}

MajorizationCheck block_conditions(const std::vector<double>& sigma, const BlockSpec& spec) {
    if (spec.block_sizes.size() != spec.block_dets.size())
        throw Error(ErrorCode::ShapeMismatch, "block sizes and determinants differ in length");
    std::vector<double> d(spec.block_sizes.size());
    for (std::size_t m = 0; m < d.size(); ++m) {
        const double ad = std::abs(spec.block_dets[m]);
        if (!(ad > 0.0)) throw Error(ErrorCode::NonPositiveEntry, "block determinant must be nonzero");
        if (spec.block_sizes[m] == 0) throw Error(ErrorCode::ShapeMismatch, "empty block");
        d[m] = std::pow(ad, 1.0 / static_cast<double>(spec.block_sizes[m]));
    }
    return multiplicity_check(sigma, d, spec.block_sizes);
}

BlockGtdFactors block_gtd(const CMatrix& a, const BlockSpec& spec) {
    if (!a.square()) throw Error(ErrorCode::NotSquare, "block_gtd needs a square matrix");
    const auto sigma = singular_values(a);
    const std::size_t n = a.rows();
    if (n == 0 || !(sigma.back() > 1e-15 * sigma.front() * static_cast<double>(n)))
        throw Error(ErrorCode::Singular, "block_gtd needs an invertible matrix");
    const MajorizationCheck mc = block_conditions(sigma, spec);
    if (!mc.ok) {
        std::ostringstream msg;
        msg << "condition q = " << mc.failing_prefix << " fails (log margin " << mc.margin << ")";
        throw Error(ErrorCode::BlockConditionViolated, msg.str());
    }

    std::vector<double> target;
    std::vector<std::size_t> boundaries;
    std::size_t end = 0;
    for (std::size_t m = 0; m < spec.block_sizes.size(); ++m) {
        const std::size_t nm = spec.block_sizes[m];
        const double dm = std::pow(std::abs(spec.block_dets[m]), 1.0 / static_cast<double>(nm));
        target.insert(target.end(), nm, dm);
        end += nm;
        boundaries.push_back(end);
    }
    return BlockGtdFactors{gtd(a, target), boundaries};
}

}  // namespace jtri
