#include "jtri/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <set>
#include <string>

#include "jtri/error.hpp"
#include "jtri/tolerances.hpp"

namespace jtri {

namespace {

void require_square(const CMatrix& a, const char* what) {
    if (!a.square()) throw Error(ErrorCode::NotSquare, std::string(what) + " needs a square matrix");
}

// Columns (p, q) of m are replaced by [m_p m_q] * [[g00, g01], [g10, g11]].
void rotate_cols(CMatrix& m, std::size_t p, std::size_t q, cplx g00, cplx g01, cplx g10, cplx g11) {
    for (std::size_t i = 0; i < m.rows(); ++i) {
        const cplx x = m(i, p);
        const cplx y = m(i, q);
        m(i, p) = x * g00 + y * g10;
        m(i, q) = x * g01 + y * g11;
    }
}

// Rows (p, q) of m are replaced by G† [m_p; m_q] for G = [[g00, g01], [g10, g11]].
void rotate_rows_adj(CMatrix& m, std::size_t p, std::size_t q, cplx g00, cplx g01, cplx g10, cplx g11) {
    for (std::size_t j = 0; j < m.cols(); ++j) {
        const cplx x = m(p, j);
        const cplx y = m(q, j);
        m(p, j) = std::conj(g00) * x + std::conj(g10) * y;
        m(q, j) = std::conj(g01) * x + std::conj(g11) * y;
    }
}

struct Lu {
    CMatrix lu;
    std::vector<std::size_t> perm;
    int sign = 1;
    bool singular = false;
};

Lu lu_decompose(const CMatrix& a) {
    Lu f{a, std::vector<std::size_t>(a.rows()), 1, false};
    std::iota(f.perm.begin(), f.perm.end(), 0);
    const std::size_t n = a.rows();
    for (std::size_t k = 0; k < n; ++k) {
        std::size_t piv = k;
        double best = std::abs(f.lu(k, k));
        for (std::size_t i = k + 1; i < n; ++i) {
            if (std::abs(f.lu(i, k)) > best) {
                best = std::abs(f.lu(i, k));
                piv = i;
            }
        }
        if (best == 0.0) {
            f.singular = true;
            continue;
        }
        if (piv != k) {
            f.lu.swap_rows(piv, k);
            std::swap(f.perm[piv], f.perm[k]);
            f.sign = -f.sign;
        }
        for (std::size_t i = k + 1; i < n; ++i) {
            const cplx l = f.lu(i, k) / f.lu(k, k);
            f.lu(i, k) = l;
            for (std::size_t j = k + 1; j < n; ++j) f.lu(i, j) -= l * f.lu(k, j);
        }
    }
    return f;
}

}  // namespace

QrFactors qr(const CMatrix& a) {
    const std::size_t m = a.rows();
    const std::size_t n = a.cols();
    if (n > m) throw Error(ErrorCode::RankDeficient, "more columns than rows");
    const double scale = a.frobenius_norm();
    CMatrix r = a;
    std::vector<std::vector<cplx>> reflectors(n);

    for (std::size_t k = 0; k < n; ++k) {
        double xnorm = 0.0;
        for (std::size_t i = k; i < m; ++i) xnorm += std::norm(r(i, k));
        xnorm = std::sqrt(xnorm);
        if (!(xnorm > tol::rank * scale)) {
            throw Error(ErrorCode::RankDeficient,
                        "column " + std::to_string(k + 1) + " residual " + std::to_string(xnorm));
        }
        const cplx x0 = r(k, k);
        const cplx phase = std::abs(x0) > 0.0 ? x0 / std::abs(x0) : cplx(1.0, 0.0);
        const cplx alpha = -phase * xnorm;
        std::vector<cplx> v(m - k);
        for (std::size_t i = k; i < m; ++i) v[i - k] = r(i, k);
        v[0] -= alpha;
        const double vnorm = norm2(v);
        for (auto& x : v) x /= vnorm;
        for (std::size_t j = k; j < n; ++j) {
            cplx s = 0.0;
            for (std::size_t i = k; i < m; ++i) s += std::conj(v[i - k]) * r(i, j);
            for (std::size_t i = k; i < m; ++i) r(i, j) -= 2.0 * v[i - k] * s;
        }
        for (std::size_t i = k + 1; i < m; ++i) r(i, k) = 0.0;
        r(k, k) = alpha;
        reflectors[k] = std::move(v);
    }

    // Q = H_0 H_1 ... H_{n-1} applied to the first n columns of I_m.
    CMatrix q(m, n);
    for (std::size_t j = 0; j < n; ++j) q(j, j) = 1.0;
    for (std::size_t kk = n; kk-- > 0;) {
        const auto& v = reflectors[kk];
        for (std::size_t j = 0; j < n; ++j) {
            cplx s = 0.0;
            for (std::size_t i = kk; i < m; ++i) s += std::conj(v[i - kk]) * q(i, j);
            for (std::size_t i = kk; i < m; ++i) q(i, j) -= 2.0 * v[i - kk] * s;
        }
    }

    QrFactors out{q, r.block(0, 0, n, n)};
    // Move diagonal phases into Q so R has a real positive diagonal.
    for (std::size_t k = 0; k < n; ++k) {
        const cplx d = out.r(k, k);
        const cplx ph = d / std::abs(d);
        for (std::size_t j = k; j < n; ++j) out.r(k, j) *= std::conj(ph);
        out.r(k, k) = std::abs(d);
        for (std::size_t i = 0; i < m; ++i) out.q(i, k) *= ph;
    }
    return out;
}

SvdFactors svd(const CMatrix& a) {
    if (a.rows() < a.cols()) {
        SvdFactors t = svd(a.adjoint());
        return SvdFactors{t.v, t.sigma, t.u};
    }
    const std::size_t m = a.rows();
    const std::size_t n = a.cols();
    CMatrix w = a;
    CMatrix v = CMatrix::identity(n);
    constexpr double eps = 1e-15;

    bool converged = n < 2;
    for (int sweep = 0; sweep < tol::svd_sweeps && !converged; ++sweep) {
        bool rotated = false;
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                double alpha = 0.0, beta = 0.0;
                cplx gamma = 0.0;
                for (std::size_t i = 0; i < m; ++i) {
                    alpha += std::norm(w(i, p));
                    beta += std::norm(w(i, q));
                    gamma += std::conj(w(i, p)) * w(i, q);
                }
                const double g = std::abs(gamma);
                if (g == 0.0 || g <= eps * std::sqrt(alpha * beta)) continue;
                rotated = true;
                const cplx ph = gamma / g;
                const double zeta = (beta - alpha) / (2.0 * g);
                const double t = (zeta >= 0.0 ? 1.0 : -1.0) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = c * t;
                const cplx g00 = c, g01 = s * ph, g10 = -s * std::conj(ph), g11 = c;
                rotate_cols(w, p, q, g00, g01, g10, g11);
                rotate_cols(v, p, q, g00, g01, g10, g11);
            }
        }
        converged = !rotated;
    }
    if (!converged) throw Error(ErrorCode::NoConvergence, "Jacobi SVD exceeded sweep budget");

    std::vector<double> norms(n);
    for (std::size_t j = 0; j < n; ++j) norms[j] = norm2(w.col(j));
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return norms[x] > norms[y]; });

    SvdFactors out{CMatrix(m, n), std::vector<double>(n), CMatrix(n, n)};
    const double smax = n ? norms[order[0]] : 0.0;
    std::size_t nonzero = 0;
    for (std::size_t k = 0; k < n; ++k) {
        const std::size_t j = order[k];
        out.sigma[k] = norms[j];
        for (std::size_t i = 0; i < n; ++i) out.v(i, k) = v(i, j);
        if (norms[j] > 1e-14 * smax && norms[j] > 0.0) {
            for (std::size_t i = 0; i < m; ++i) out.u(i, k) = w(i, j) / norms[j];
            ++nonzero;
        }
    }
    if (nonzero < n) {
        CMatrix full = complete_unitary(out.u.block(0, 0, m, nonzero));
        for (std::size_t k = nonzero; k < n; ++k)
            for (std::size_t i = 0; i < m; ++i) out.u(i, k) = full(i, k);
    }
    return out;
}

std::vector<double> singular_values(const CMatrix& a) { return svd(a).sigma; }

EigFactors hermitian_eig(const CMatrix& a) {
    require_square(a, "hermitian_eig");
    const double scale = std::max(a.max_abs(), 1e-300);
    if (!is_hermitian(a, 1e-9 * scale)) throw Error(ErrorCode::NotHermitian, "hermitian_eig input");
    const std::size_t n = a.rows();
    CMatrix h = a;
    CMatrix w = CMatrix::identity(n);
    const double fro = a.frobenius_norm();
    bool converged = n < 2;
    for (int sweep = 0; sweep < 100 && !converged; ++sweep) {
        bool rotated = false;
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const cplx gpq = h(p, q);
                const double g = std::abs(gpq);
                if (g <= 1e-17 * fro) continue;
                rotated = true;
                const cplx ph = gpq / g;
                const double app = h(p, p).real();
                const double aqq = h(q, q).real();
                const double tau = (aqq - app) / (2.0 * g);
                const double t = (tau >= 0.0 ? 1.0 : -1.0) / (std::abs(tau) + std::sqrt(1.0 + tau * tau));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = c * t;
                const cplx g00 = c, g01 = s, g10 = -s * std::conj(ph), g11 = c * std::conj(ph);
                rotate_cols(h, p, q, g00, g01, g10, g11);
                rotate_rows_adj(h, p, q, g00, g01, g10, g11);
                rotate_cols(w, p, q, g00, g01, g10, g11);
                h(p, q) = 0.0;
                h(q, p) = 0.0;
            }
        }
        converged = !rotated;
    }
    if (!converged) throw Error(ErrorCode::NoConvergence, "Jacobi eigensolver exceeded sweep budget");

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t x, std::size_t y) { return h(x, x).real() > h(y, y).real(); });
    EigFactors out{std::vector<double>(n), CMatrix(n, n)};
    for (std::size_t k = 0; k < n; ++k) {
        out.values[k] = h(order[k], order[k]).real();
        for (std::size_t i = 0; i < n; ++i) out.vectors(i, k) = w(i, order[k]);
    }
    return out;
}

cplx det(const CMatrix& a) {
    require_square(a, "det");
    if (a.rows() == 0) return 1.0;
    if (a.rows() == 2) return a(0, 0) * a(1, 1) - a(0, 1) * a(1, 0);
    Lu f = lu_decompose(a);
    if (f.singular) return 0.0;
    cplx d = static_cast<double>(f.sign);
    for (std::size_t i = 0; i < a.rows(); ++i) d *= f.lu(i, i);
    return d;
}

CMatrix inverse(const CMatrix& a) {
    require_square(a, "inverse");
    const std::size_t n = a.rows();
    Lu f = lu_decompose(a);
    const double scale = a.max_abs();
    for (std::size_t i = 0; i < n && !f.singular; ++i)
        if (std::abs(f.lu(i, i)) <= 1e-15 * scale * static_cast<double>(n)) f.singular = true;
    if (f.singular || scale == 0.0) throw Error(ErrorCode::Singular, "matrix is not invertible");
    CMatrix inv(n, n);
    for (std::size_t col = 0; col < n; ++col) {
        std::vector<cplx> x(n);
        for (std::size_t i = 0; i < n; ++i) x[i] = (f.perm[i] == col) ? 1.0 : 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < i; ++j) x[i] -= f.lu(i, j) * x[j];
        for (std::size_t i = n; i-- > 0;) {
            for (std::size_t j = i + 1; j < n; ++j) x[i] -= f.lu(i, j) * x[j];
            x[i] /= f.lu(i, i);
        }
        inv.set_col(col, x);
    }
    return inv;
}

CMatrix adjugate(const CMatrix& a) {
    require_square(a, "adjugate");
    const std::size_t n = a.rows();
    if (n == 1) return CMatrix{{1.0}};
    if (n == 2) return CMatrix{{a(1, 1), -a(0, 1)}, {-a(1, 0), a(0, 0)}};
    if (n > 12) return det(a) * inverse(a);
    // Cofactor expansion: adj(A)_{ji} = (-1)^{i+j} det(minor_ij).
    CMatrix adj(n, n);
    CMatrix minor(n - 1, n - 1);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            for (std::size_t r = 0, mr = 0; r < n; ++r) {
                if (r == i) continue;
                for (std::size_t c = 0, mc = 0; c < n; ++c) {
                    if (c == j) continue;
                    minor(mr, mc++) = a(r, c);
                }
                ++mr;
            }
            adj(j, i) = (((i + j) % 2) ? -1.0 : 1.0) * det(minor);
        }
    }
    return adj;
}

CMatrix cholesky_lower(const CMatrix& a) {
    require_square(a, "cholesky_lower");
    const double scale = std::max(a.max_abs(), 1e-300);
    if (!is_hermitian(a, 1e-9 * scale)) throw Error(ErrorCode::NotHermitian, "covariance is not Hermitian");
    const std::size_t n = a.rows();
    const double tol = 1e-12 * scale * static_cast<double>(n);
    CMatrix l(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        double d = a(j, j).real();
        for (std::size_t k = 0; k < j; ++k) d -= std::norm(l(j, k));
        if (d < -tol * 1e3) throw Error(ErrorCode::NotPsd, "negative pivot " + std::to_string(d));
        if (d <= tol) {
            // Semidefinite direction: the remaining column must vanish.
            for (std::size_t i = j + 1; i < n; ++i) {
                cplx s = a(i, j);
                for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * std::conj(l(j, k));
                if (std::abs(s) > std::sqrt(tol) * std::sqrt(scale))
                    throw Error(ErrorCode::NotPsd, "indefinite covariance");
            }
            continue;
        }
        const double ljj = std::sqrt(d);
        l(j, j) = ljj;
        for (std::size_t i = j + 1; i < n; ++i) {
            cplx s = a(i, j);
            for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * std::conj(l(j, k));
            l(i, j) = s / ljj;
        }
    }
    return l;
}

CMatrix complete_unitary(const CMatrix& cols) {
    const std::size_t n = cols.rows();
    const std::size_t k = cols.cols();
    if (k > n) throw Error(ErrorCode::ShapeMismatch, "more columns than rows");
    CMatrix out(n, n);
    out.set_block(0, 0, cols);
    std::size_t filled = k;
    std::vector<bool> used(n, false);
    while (filled < n) {
        // Pick the basis vector with the largest residual against the span so far.
        std::size_t best = n;
        double best_norm = -1.0;
        std::vector<cplx> best_vec;
        for (std::size_t e = 0; e < n; ++e) {
            if (used[e]) continue;
            std::vector<cplx> x(n);
            x[e] = 1.0;
            for (int pass = 0; pass < 2; ++pass) {
                for (std::size_t j = 0; j < filled; ++j) {
                    const auto c = out.col(j);
                    const cplx s = dot(c, x);
                    for (std::size_t i = 0; i < n; ++i) x[i] -= s * c[i];
                }
            }
            const double nx = norm2(x);
            if (nx > best_norm) {
                best_norm = nx;
                best = e;
                best_vec = std::move(x);
            }
        }
        used[best] = true;
        for (auto& x : best_vec) x /= best_norm;
        out.set_col(filled++, best_vec);
    }
    return out;
}

CMatrix time_extend(const CMatrix& a, std::size_t n_ext) {
    if (n_ext < 1) throw Error(ErrorCode::IndexOutOfRange, "time extension needs n_ext >= 1");
    CMatrix out(a.rows() * n_ext, a.cols() * n_ext);
    for (std::size_t b = 0; b < n_ext; ++b) out.set_block(b * a.rows(), b * a.cols(), a);
    return out;
}

CMatrix extraction_matrix(std::size_t n, const std::vector<std::size_t>& indices) {
    CMatrix e(n, indices.size());
    std::set<std::size_t> seen;
    for (std::size_t j = 0; j < indices.size(); ++j) {
        const std::size_t idx = indices[j];
        if (idx < 1 || idx > n)
            throw Error(ErrorCode::IndexOutOfRange, "index " + std::to_string(idx) + " outside [1, " + std::to_string(n) + "]");
        if (!seen.insert(idx).second) throw Error(ErrorCode::DuplicateIndex, "index " + std::to_string(idx));
        e(idx - 1, j) = 1.0;
    }
    return e;
}

CMatrix embed(std::size_t n, const CMatrix& b, const std::vector<std::vector<std::size_t>>& groups) {
    require_square(b, "embed");
    CMatrix out = CMatrix::identity(n);
    std::set<std::size_t> seen;
    for (const auto& g : groups) {
        if (g.size() != b.rows()) throw Error(ErrorCode::ShapeMismatch, "group size differs from block size");
        for (std::size_t idx : g) {
            if (idx < 1 || idx > n) throw Error(ErrorCode::IndexOutOfRange, "index " + std::to_string(idx));
            if (!seen.insert(idx).second)
                throw Error(ErrorCode::OverlappingGroups, "index " + std::to_string(idx) + " appears twice");
        }
        for (std::size_t i = 0; i < g.size(); ++i)
            for (std::size_t j = 0; j < g.size(); ++j) out(g[i] - 1, g[j] - 1) = b(i, j);
    }
    return out;
}

MajorizationCheck check_majorization(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size()) throw Error(ErrorCode::LengthMismatch, "majorization operands differ in length");
    std::vector<double> lx(x.size()), ly(y.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!(x[i] > 0.0) || !(y[i] > 0.0)) throw Error(ErrorCode::NonPositiveEntry, "majorization needs positive entries");
        lx[i] = std::log(x[i]);
        ly[i] = std::log(y[i]);
    }
    std::sort(lx.begin(), lx.end(), std::greater<>());
    std::sort(ly.begin(), ly.end(), std::greater<>());
    double scale = 1.0;
    for (double v : lx) scale += std::abs(v);
    const double slack = tol::major * scale;

    MajorizationCheck out;
    out.margin = std::numeric_limits<double>::infinity();
    double sx = 0.0, sy = 0.0;
    for (std::size_t q = 0; q < lx.size(); ++q) {
        sx += lx[q];
        sy += ly[q];
        const bool last = q + 1 == lx.size();
        const double gap = last ? -std::abs(sx - sy) : sx - sy;
        if (!last || gap < -slack) out.margin = std::min(out.margin, gap);
        if (gap < -slack && out.ok) {
            out.ok = false;
            out.failing_prefix = q + 1;
        }
    }
    if (!std::isfinite(out.margin)) out.margin = 0.0;
    return out;
}

bool majorizes(const std::vector<double>& x, const std::vector<double>& y) { return check_majorization(x, y).ok; }

}  // namespace jtri
