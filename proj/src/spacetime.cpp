#include "jtri/spacetime.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "jtri/error.hpp"
#include "jtri/gtd.hpp"
#include "jtri/linalg.hpp"
#include "jtri/tolerances.hpp"

namespace jtri {

namespace {

std::size_t ipow(std::size_t base, std::size_t exp) {
    std::size_t out = 1;
    for (std::size_t i = 0; i < exp; ++i) {
        if (out > std::numeric_limits<std::size_t>::max() / std::max<std::size_t>(base, 1))
            throw Error(ErrorCode::TooFewExtensions, "extension bound overflows");
        out *= base;
    }
    return out;
}

CMatrix principal(const CMatrix& a, const std::vector<std::size_t>& sel) {
    CMatrix out(sel.size(), sel.size());
    for (std::size_t i = 0; i < sel.size(); ++i)
        for (std::size_t j = 0; j < sel.size(); ++j) out(i, j) = a(sel[i], sel[j]);
    return out;
}

CMatrix select_cols(const CMatrix& a, const std::vector<std::size_t>& sel) {
    CMatrix out(a.rows(), sel.size());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < sel.size(); ++j) out(i, j) = a(i, sel[j]);
    return out;
}

CMatrix select_rows(const CMatrix& a, const std::vector<std::size_t>& sel) {
    CMatrix out(sel.size(), a.cols());
    for (std::size_t i = 0; i < sel.size(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) out(i, j) = a(sel[i], j);
    return out;
}

// a(:, c0:c0+n) <- a(:, c0:c0+n) * b
void right_block(CMatrix& a, std::size_t c0, const CMatrix& b) {
    const std::size_t n = b.rows();
    std::vector<cplx> row(n);
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            cplx s = 0.0;
            for (std::size_t p = 0; p < n; ++p) s += a(i, c0 + p) * b(p, j);
            row[j] = s;
        }
        for (std::size_t j = 0; j < n; ++j) a(i, c0 + j) = row[j];
    }
}

// a(r0:r0+n, :) <- b * a(r0:r0+n, :)
void left_block(CMatrix& a, std::size_t r0, const CMatrix& b) {
    const std::size_t n = b.rows();
    std::vector<cplx> col(n);
    for (std::size_t j = 0; j < a.cols(); ++j) {
        for (std::size_t i = 0; i < n; ++i) {
            cplx s = 0.0;
            for (std::size_t p = 0; p < n; ++p) s += b(i, p) * a(r0 + p, j);
            col[i] = s;
        }
        for (std::size_t i = 0; i < n; ++i) a(r0 + i, j) = col[i];
    }
}

void require_square_set(const std::vector<CMatrix>& m) {
    if (m.empty()) throw Error(ErrorCode::ShapeMismatch, "no matrices given");
    for (const auto& a : m)
        if (!a.square() || a.rows() != m.front().rows() || a.rows() == 0)
            throw Error(ErrorCode::ShapeMismatch, "matrices must be square and of equal size");
}

}  // namespace

std::size_t kept_dimension(std::size_t n, std::size_t exponent, std::size_t n_ext) {
    const std::size_t p = ipow(n, exponent);
    return n_ext < p ? 0 : n * (n_ext - (p - 1));
}

double extension_efficiency(std::size_t n, std::size_t exponent, std::size_t n_ext) {
    const std::size_t p = ipow(n, exponent);
    if (n_ext < p || n_ext == 0) return 0.0;
    return static_cast<double>(n_ext - (p - 1)) / static_cast<double>(n_ext);
}

SpaceTimeFactors nearly_kgmd(const std::vector<CMatrix>& matrices, std::size_t n_ext) {
    require_square_set(matrices);
    const std::size_t n = matrices.front().rows();
    const std::size_t k_users = matrices.size();
    const std::size_t bound = ipow(n, k_users - 1);
    if (n_ext < bound) {
        std::ostringstream msg;
        msg << "N = " << n_ext << " is below n^(K-1) = " << bound;
        throw Error(ErrorCode::TooFewExtensions, msg.str());
    }
    for (const auto& a : matrices) {
        const double d = std::abs(det(a));
        if (!(d > 0.0)) throw Error(ErrorCode::Singular, "matrix is singular");
        if (std::abs(std::log(d)) > tol::major * 10.0)
            throw Error(ErrorCode::BadDeterminant, "matrices must have unit |det| (normalize first)");
    }

    // Stage 1: the same GMD of A_1 in every block, QR for the other users.
    const GtdFactors g1 = gmd(matrices[0]);
    CMatrix v = time_extend(g1.v, n_ext);
    std::vector<CMatrix> t(k_users), uh(k_users);
    t[0] = time_extend(g1.r, n_ext);
    uh[0] = time_extend(g1.u.adjoint(), n_ext);
    for (std::size_t k = 1; k < k_users; ++k) {
        const QrFactors f = qr(matrices[k] * g1.v);
        t[k] = time_extend(f.r, n_ext);
        uh[k] = time_extend(f.q.adjoint(), n_ext);
    }
    std::vector<std::size_t> kept(n * n_ext);
    for (std::size_t i = 0; i < kept.size(); ++i) kept[i] = i + 1;
    std::vector<double> discarded(k_users, 1.0);

    for (std::size_t l = 2; l <= k_users; ++l) {
        // Reorder: keep n coordinates per group, spaced by delta, so that the
        // remaining principal submatrices of user l line up in n x n blocks.
        const std::size_t delta = ipow(n, k_users - l + 1) - 1;
        const std::size_t groups = n_ext - bound + ipow(n, k_users - l);
        std::vector<std::size_t> sel;
        for (std::size_t q1 = 1; q1 <= groups; ++q1)
            for (std::size_t q2 = 1; q2 <= n; ++q2) sel.push_back(n + (q1 - 1) * n + (q2 - 1) * delta - 1);
        const std::size_t m = t[0].rows();
        std::vector<bool> is_kept(m, false);
        for (std::size_t s : sel) {
            if (s >= m || is_kept[s]) throw Error(ErrorCode::IndexOutOfRange, "reordering index out of range");
            is_kept[s] = true;
        }
        for (std::size_t k = 0; k < k_users; ++k) {
            for (std::size_t i = 0; i < m; ++i)
                if (!is_kept[i]) discarded[k] *= std::abs(t[k](i, i));
            t[k] = principal(t[k], sel);
            uh[k] = select_rows(uh[k], sel);
        }
        v = select_cols(v, sel);
        std::vector<std::size_t> next;
        for (std::size_t s : sel) next.push_back(kept[s]);
        kept = std::move(next);

        // Per-group GMD of user l; earlier users hold identity blocks here.
        const std::size_t lu = l - 1;
        for (std::size_t g = 0; g < groups; ++g) {
            const std::size_t b0 = g * n;
            const GtdFactors gb = gmd(t[lu].block(b0, b0, n, n));
            std::vector<CMatrix> ug(k_users);
            for (std::size_t k = 0; k < k_users; ++k) {
                if (k < lu)
                    ug[k] = gb.v;
                else if (k == lu)
                    ug[k] = gb.u;
                else
                    ug[k] = qr(t[k].block(b0, b0, n, n) * gb.v).q;
            }
            right_block(v, b0, gb.v);
            for (std::size_t k = 0; k < k_users; ++k) {
                right_block(t[k], b0, gb.v);
                const CMatrix ugh = ug[k].adjoint();
                left_block(t[k], b0, ugh);
                left_block(uh[k], b0, ugh);
            }
        }
    }

    SpaceTimeFactors out;
    out.n = n;
    out.k_users = k_users;
    out.n_ext = n_ext;
    out.v = std::move(v);
    for (std::size_t k = 0; k < k_users; ++k) {
        CMatrix& tk = t[k];
        for (std::size_t i = 0; i < tk.rows(); ++i)
            for (std::size_t j = 0; j < i; ++j) tk(i, j) = 0.0;
        out.users.push_back({uh[k].adjoint(), tk});
    }
    out.kept_indices = std::move(kept);
    out.discarded_products = std::move(discarded);
    return out;
}

SpaceTimeFactors nearly_kjet(const std::vector<CMatrix>& matrices, std::size_t n_ext) {
    require_square_set(matrices);
    if (matrices.size() < 2) throw Error(ErrorCode::ShapeMismatch, "K-JET needs at least two matrices");
    SpaceTimeFactors inner_result;
    const KgmdProvider provider = [&](const std::vector<CMatrix>& b) {
        inner_result = nearly_kgmd(b, n_ext);
        JointFactors jf;
        jf.v = inner_result.v;
        for (const auto& user : inner_result.users) jf.users.push_back({user.u, user.t});
        return jf;
    };
    const JointFactors jf = kgmd_to_kjet(matrices, provider);

    SpaceTimeFactors out;
    out.n = inner_result.n;
    out.k_users = matrices.size();
    out.n_ext = n_ext;
    out.v = jf.v;
    out.kept_indices = inner_result.kept_indices;
    for (std::size_t k = 0; k < jf.users.size(); ++k) {
        out.users.push_back({jf.users[k].u, jf.users[k].r});
        double kept_log = 0.0;
        for (std::size_t j = 0; j < jf.users[k].r.rows(); ++j) kept_log += std::log(std::abs(jf.users[k].r(j, j)));
        const double full_log = static_cast<double>(n_ext) * std::log(std::abs(det(matrices[k])));
        out.discarded_products.push_back(std::exp(full_log - kept_log));
    }
    return out;
}

bool extension_futile_2x2(const CMatrix& a1, const CMatrix& a2) { return !exists_2gmd(a1, a2, 1.0); }

CMatrix to_abcd_form(const CMatrix& u) {
    if (u.rows() != 2 || u.cols() != 2) throw Error(ErrorCode::ShapeMismatch, "expected a 2x2 matrix");
    const cplx d = det(u);
    if (std::abs(std::abs(d) - 1.0) > tol::unitary) throw Error(ErrorCode::FormMismatch, "matrix is not unitary");
    // phase^2 * det = -1
    const cplx phase = cplx(0.0, 1.0) * std::polar(1.0, -0.5 * std::arg(d));
    return phase * u;
}

CMatrix real_embedding(const CMatrix& m) {
    if (m.rows() != 2 || m.cols() != 2) throw Error(ErrorCode::ShapeMismatch, "expected a 2x2 matrix");
    const double scale = std::max(1.0, m.max_abs());
    if (std::abs(m(1, 0) - std::conj(m(0, 1))) > tol::unitary * scale ||
        std::abs(m(1, 1) + std::conj(m(0, 0))) > tol::unitary * scale)
        throw Error(ErrorCode::FormMismatch, "matrix is not of the form [[a+bi, c+di], [c-di, -a+bi]]");
    const double a = m(0, 0).real(), b = m(0, 0).imag(), c = m(0, 1).real(), d = m(0, 1).imag();
    return CMatrix{{a, -b, c, -d}, {c, d, -a, -b}, {b, a, d, c}, {-d, c, b, -a}};
}

RealGmdFactors real_embedding_2gmd(const CMatrix& a1, const CMatrix& a2) {
    for (const CMatrix* a : {&a1, &a2})
        for (const auto& x : a->data())
            if (std::abs(x.imag()) > tol::zero) throw Error(ErrorCode::FormMismatch, "inputs must be real");
    RealGmdFactors out;
    out.complex_factors = construct_2gmd(a1, a2);
    JointFactors& cf = out.complex_factors;
    const cplx dv = det(cf.v);
    const cplx phase = cplx(0.0, 1.0) * std::polar(1.0, -0.5 * std::arg(dv));
    cf.v = phase * cf.v;
    for (auto& user : cf.users) user.u = phase * user.u;

    out.v = real_embedding(cf.v);
    const std::vector<const CMatrix*> inputs{&a1, &a2};
    for (std::size_t k = 0; k < 2; ++k) {
        CMatrix ext(4, 4);
        ext.set_block(0, 0, *inputs[k]);
        ext.set_block(2, 2, *inputs[k]);
        CMatrix uk = real_embedding(cf.users[k].u);
        out.r.push_back(uk.transpose() * ext * out.v);
        out.u.push_back(std::move(uk));
    }
    return out;
}

std::size_t required_extensions(double fraction, std::size_t n, std::size_t k_matrices, SpaceTimeMode mode) {
    const std::size_t min_k = mode == SpaceTimeMode::Gmd ? 1 : 2;
    if (k_matrices < min_k) throw Error(ErrorCode::BadK, "too few matrices for the requested mode");
    if (n == 0) throw Error(ErrorCode::ShapeMismatch, "n must be positive");
    const std::size_t e = k_matrices - min_k;
    const std::size_t p = ipow(n, e);
    const double slack = 1e-12;
    if (!(fraction > 0.0) || fraction > 1.0 + slack) {
        std::ostringstream msg;
        msg << "fraction " << fraction << " is outside (0, 1]";
        throw Error(ErrorCode::UnachievableFraction, msg.str());
    }
    if (p == 1) return 1;
    if (fraction >= 1.0 - slack) throw Error(ErrorCode::UnachievableFraction, "full efficiency needs infinitely many uses");
    auto ok = [&](std::size_t N) {
        return static_cast<double>(N - (p - 1)) / static_cast<double>(N) >= fraction - slack;
    };
    const double est = static_cast<double>(p - 1) / (1.0 - fraction);
    if (est > 1e15) throw Error(ErrorCode::UnachievableFraction, "extension count too large");
    std::size_t N = std::max<std::size_t>(p, static_cast<std::size_t>(std::ceil(est)));
    while (N > p && ok(N - 1)) --N;
    while (!ok(N)) ++N;
    return N;
}

std::vector<TableColumn> extension_table() {
    const std::vector<std::pair<const char*, double>> cols{{"33", 1.0 / 3.0}, {"37", 0.37}, {"50", 0.5},
                                                           {"60", 0.6},       {"67", 2.0 / 3.0}, {"75", 0.75},
                                                           {"80", 0.8},       {"90", 0.9}};
    std::vector<TableColumn> out;
    for (const auto& [label, f] : cols)
        out.push_back({label, f, required_extensions(f, 2, 3, SpaceTimeMode::Gmd),
                       required_extensions(f, 2, 3, SpaceTimeMode::Jet)});
    return out;
}

}  // namespace jtri
