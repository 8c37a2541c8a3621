#include "jtri/joint.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "jtri/error.hpp"
#include "jtri/gtd.hpp"
#include "jtri/linalg.hpp"
#include "jtri/tolerances.hpp"

namespace jtri {

namespace {

void require_pair_2x2(const CMatrix& a1, const CMatrix& a2) {
    if (a1.rows() != 2 || a1.cols() != 2 || a2.rows() != 2 || a2.cols() != 2)
        throw Error(ErrorCode::ShapeMismatch, "expected two 2x2 matrices");
}

void require_unit_det(const CMatrix& a, const char* name) {
    const double d = std::abs(det(a));
    if (!(std::abs(std::log(d)) <= tol::major)) {
        std::ostringstream msg;
        msg << "|det " << name << "| = " << d << " is not 1";
        throw Error(ErrorCode::BadDeterminant, msg.str());
    }
}

CMatrix gram_shift(const CMatrix& a, double shift) {
    CMatrix s = a.adjoint() * a;
    for (std::size_t i = 0; i < s.rows(); ++i) s(i, i) -= shift;
    // Symmetrize to remove rounding asymmetry.
    for (std::size_t i = 0; i < s.rows(); ++i) {
        s(i, i) = s(i, i).real();
        for (std::size_t j = i + 1; j < s.cols(); ++j) {
            const cplx m = 0.5 * (s(i, j) + std::conj(s(j, i)));
            s(i, j) = m;
            s(j, i) = std::conj(m);
        }
    }
    return s;
}

double quad_form(const CMatrix& s, const std::array<cplx, 2>& v) {
    return (std::conj(v[0]) * (s(0, 0) * v[0] + s(0, 1) * v[1]) + std::conj(v[1]) * (s(1, 0) * v[0] + s(1, 1) * v[1]))
        .real();
}

// Unitary with first column v and determinant 1.
CMatrix unitary_from_first_column(const std::array<cplx, 2>& v) {
    return CMatrix{{v[0], -std::conj(v[1])}, {v[1], std::conj(v[0])}};
}

void require_same_square(const std::vector<CMatrix>& m) {
    if (m.empty()) throw Error(ErrorCode::ShapeMismatch, "no matrices given");
    for (const auto& a : m)
        if (!a.square() || a.rows() != m.front().rows())
            throw Error(ErrorCode::ShapeMismatch, "matrices must be square and of equal size");
}

std::string fmt_condition(const char* name, double value, const char* rel) {
    std::ostringstream msg;
    msg << name << " = " << value << " " << rel << " 0";
    return msg.str();
}

// Feasibility of the quadratic pair problem given the shifted matrices.
ExistenceReport pair_report(const CMatrix& s1, const CMatrix& s2_det_source, double fval, const char* fname) {
    ExistenceReport rep;
    rep.f_value = fval;
    rep.det_s1 = det(s1).real();
    rep.det_s2 = det(s2_det_source).real();
    const double scale1 = std::max(1.0, s1.max_abs() * s1.max_abs());
    const double scale2 = std::max(1.0, s2_det_source.max_abs() * s2_det_source.max_abs());
    if (rep.det_s1 > tol::zero * scale1) {
        rep.failing = fmt_condition("det(A1'A1 - r^2 I)", rep.det_s1, ">");
    } else if (rep.det_s2 > tol::zero * scale2) {
        rep.failing = fmt_condition("det(A2'A2 - r^2 I)", rep.det_s2, ">");
    } else if (fval < -tol::zero) {
        rep.failing = fmt_condition(fname, fval, "<");
    }
    rep.feasible = rep.failing.empty();
    return rep;
}

}  // namespace

NormalizedSet normalize_equal_det(const std::vector<CMatrix>& matrices) {
    require_same_square(matrices);
    NormalizedSet out;
    for (const auto& a : matrices) {
        const double d = std::abs(det(a));
        if (!(d > 0.0) || !std::isfinite(d)) throw Error(ErrorCode::Singular, "matrix is singular");
        const double scale = std::pow(d, 1.0 / static_cast<double>(a.rows()));
        out.matrices.push_back((1.0 / scale) * a);
        out.scales.push_back(scale);
    }
    return out;
}

JointFactors jet2(const CMatrix& a1, const CMatrix& a2) {
    require_same_square({a1, a2});
    const double d1 = std::abs(det(a1));
    const double d2 = std::abs(det(a2));
    if (!(d1 > 0.0) || !(d2 > 0.0)) throw Error(ErrorCode::Singular, "jet2 needs invertible matrices");
    if (std::abs(std::log(d1 / d2)) > tol::major * static_cast<double>(a1.rows()) * 10.0)
        throw Error(ErrorCode::BadDeterminant, "jet2 needs equal |det|");
    const CMatrix a2inv = inverse(a2);
    const GtdFactors g = gmd(a1 * a2inv);  // B = U1 T U2†
    const QrFactors f = qr(a2inv * g.v);   // A2^{-1} U2 = V R
    const CMatrix rinv = inverse(f.r);
    JointFactors out;
    out.v = f.q;
    out.users.push_back({g.u, g.r * rinv});
    out.users.push_back({g.v, rinv});
    for (std::size_t j = 0; j < rinv.rows(); ++j) out.diag.push_back(rinv(j, j).real());
    return out;
}

double f1(const CMatrix& s1, const CMatrix& s2) {
    for (const CMatrix* s : {&s1, &s2}) {
        if (!s->square()) throw Error(ErrorCode::NotSquare, "F1 needs square matrices");
        if (!is_hermitian(*s, tol::zero * std::max(1.0, s->max_abs())))
            throw Error(ErrorCode::NotHermitian, "F1 needs Hermitian matrices");
    }
    return det(s1 * adjugate(s2) - s2 * adjugate(s1)).real();
}

double f2(const CMatrix& s1, const CMatrix& s2) {
    for (const CMatrix* s : {&s1, &s2}) {
        if (!s->square()) throw Error(ErrorCode::NotSquare, "F2 needs square matrices");
        if (!is_hermitian(*s, tol::zero * std::max(1.0, s->max_abs())))
            throw Error(ErrorCode::NotHermitian, "F2 needs Hermitian matrices");
    }
    return det(s1 * s2 - adjugate(s2) * adjugate(s1)).real();
}

ExistenceReport check_2gmd(const CMatrix& a1, const CMatrix& a2, double r) {
    require_pair_2x2(a1, a2);
    require_unit_det(a1, "A1");
    require_unit_det(a2, "A2");
    const CMatrix s1 = gram_shift(a1, r * r);
    const CMatrix s2 = gram_shift(a2, r * r);
    return pair_report(s1, s2, f1(s1, s2), "F1");
}

bool exists_2gmd(const CMatrix& a1, const CMatrix& a2, double r) { return check_2gmd(a1, a2, r).feasible; }

QuadraticWitness solve_quadratic_witness(const CMatrix& s1, const CMatrix& s2) {
    require_pair_2x2(s1, s2);
    // Rotate to the eigenbasis of S1: S1 = W diag(a1, c1) W†, a1 >= c1.
    const EigFactors e1 = hermitian_eig(s1);
    const CMatrix& w = e1.vectors;
    const double a1 = e1.values[0];
    const double c1 = e1.values[1];
    const CMatrix s2t = w.adjoint() * s2 * w;
    const double a2 = s2t(0, 0).real();
    const double c2 = s2t(1, 1).real();
    const double b2 = s2t(0, 1).real();
    const double beta2 = s2t(0, 1).imag();

    QuadraticWitness out;
    std::array<cplx, 2> v{};
    const double thr1 = 1e-10 * (std::abs(a1) + std::abs(c1) + 1.0);
    const double thr2 = 1e-10 * (std::abs(a2) + std::abs(c2) + std::abs(b2) + std::abs(beta2) + 1.0);

    // Build (x1 + i x2, y1 + i y2) from |x|², |y|² and the two cross terms
    // z2 = 2(x1 y1 + x2 y2), z3 = 2(x2 y1 - x1 y2).
    auto from_moments = [](double z1, double z2, double z3, double z4) {
        z1 = std::max(z1, 0.0);
        z4 = std::max(z4, 0.0);
        double x1, x2, y1, y2;
        if (z1 >= z4) {
            x1 = std::sqrt(z1);
            x2 = 0.0;
            y1 = z2 / (2.0 * x1);
            y2 = -z3 / (2.0 * x1);
        } else {
            y1 = std::sqrt(z4);
            y2 = 0.0;
            x1 = z2 / (2.0 * y1);
            x2 = z3 / (2.0 * y1);
        }
        return std::array<cplx, 2>{cplx(x1, x2), cplx(y1, y2)};
    };

    if (std::abs(a1 - c1) <= thr1) {
        // S1 vanishes: balance the two eigen-directions of S2.
        out.case_id = 2;
        const EigFactors e2 = hermitian_eig(s2t);
        const double l1 = e2.values[0];
        const double l2 = e2.values[1];
        double p = 1.0, q = 0.0;
        if (l1 - l2 > thr2) {
            p = std::sqrt(std::clamp(-l2 / (l1 - l2), 0.0, 1.0));
            q = std::sqrt(std::clamp(l1 / (l1 - l2), 0.0, 1.0));
        }
        for (int i = 0; i < 2; ++i) v[i] = p * e2.vectors(i, 0) + q * e2.vectors(i, 1);
    } else {
        // |x|² and |y|² are fixed by the first two equations.
        const double z1 = c1 / (c1 - a1);
        const double z4 = -a1 / (c1 - a1);
        const double k0 = a2 * z1 + c2 * z4;
        if (std::abs(b2) > thr2) {
            out.case_id = 1;
            // z3 = t, z2 = -(k0 + beta2 t) / b2, and 4 z1 z4 = z2² + z3².
            const double qa = -(beta2 * beta2 + b2 * b2);
            const double qb = -2.0 * k0 * beta2;
            const double qc = 4.0 * z1 * z4 * b2 * b2 - k0 * k0;
            const double disc = std::max(0.0, qb * qb - 4.0 * qa * qc);
            const double sq = std::sqrt(disc);
            const double t_plus = (-qb + sq) / (2.0 * qa);
            const double t_minus = (-qb - sq) / (2.0 * qa);
            const double t = std::abs(t_plus) <= std::abs(t_minus) ? t_plus : t_minus;
            out.t = t;
            v = from_moments(z1, -(k0 + beta2 * t) / b2, t, z4);
        } else if (std::abs(beta2) > thr2) {
            out.case_id = 3;
            const double dd = (a1 - c1) * beta2;
            const double f5 = -beta2 * c1 / dd;
            const double f6 = (a2 * c1 - a1 * c2) / dd;
            const double f7 = a1 * beta2 / dd;
            double x1, x2, y1, y2;
            if (f5 >= f7) {
                x1 = std::sqrt(std::max(f5, 0.0));
                x2 = 0.0;
                y2 = -f6 / (2.0 * x1);
                y1 = std::sqrt(std::max(0.0, f7 - y2 * y2));
            } else {
                y1 = std::sqrt(std::max(f7, 0.0));
                y2 = 0.0;
                x2 = f6 / (2.0 * y1);
                x1 = std::sqrt(std::max(0.0, f5 - x2 * x2));
            }
            v = {cplx(x1, x2), cplx(y1, y2)};
        } else {
            out.case_id = 4;
            v = {cplx(std::sqrt(std::max(z1, 0.0)), 0.0), cplx(std::sqrt(std::max(z4, 0.0)), 0.0)};
        }
    }

    const double nv = std::sqrt(std::norm(v[0]) + std::norm(v[1]));
    std::array<cplx, 2> vo{};
    for (int i = 0; i < 2; ++i) vo[i] = (w(i, 0) * v[0] + w(i, 1) * v[1]) / nv;
    out.v1 = vo;
    out.residual = std::max({std::abs(quad_form(s1, vo)), std::abs(quad_form(s2, vo)), std::abs(nv - 1.0)});
    return out;
}

JointFactors construct_2gmd(const CMatrix& a1, const CMatrix& a2, QuadraticWitness& witness) {
    const ExistenceReport rep = check_2gmd(a1, a2, 1.0);
    if (!rep.feasible) throw Error(ErrorCode::ConditionViolated, rep.failing);
    const CMatrix s1 = gram_shift(a1, 1.0);
    const CMatrix s2 = gram_shift(a2, 1.0);
    witness = solve_quadratic_witness(s1, s2);
    const CMatrix v = unitary_from_first_column(witness.v1);
    JointFactors out;
    out.v = v;
    for (const CMatrix* a : {&a1, &a2}) {
        QrFactors f = qr(*a * v);
        out.users.push_back({f.q, f.r});
    }
    for (std::size_t j = 0; j < 2; ++j) out.diag.push_back(out.users[0].r(j, j).real());
    return out;
}

JointFactors construct_2gmd(const CMatrix& a1, const CMatrix& a2) {
    QuadraticWitness w;
    return construct_2gmd(a1, a2, w);
}

JointFactors kgmd_exact(const std::vector<CMatrix>& matrices) {
    require_same_square(matrices);
    const std::size_t n = matrices.front().rows();
    for (const auto& a : matrices) require_unit_det(a, "A_k");

    // Unitary members impose no constraint on V (their QR factor is I).
    std::vector<std::size_t> active;
    for (std::size_t k = 0; k < matrices.size(); ++k)
        if (orthonormality_residual(matrices[k]) > tol::unitary) active.push_back(k);

    CMatrix v;
    if (active.empty()) {
        v = CMatrix::identity(n);
    } else if (active.size() == 1) {
        v = gmd(matrices[active[0]]).v;
    } else if (active.size() == 2 && n == 2) {
        const ExistenceReport rep = check_2gmd(matrices[active[0]], matrices[active[1]], 1.0);
        if (!rep.feasible)
            throw Error(ErrorCode::NotConstructible, rep.failing + " (no exact 2-GMD of the 2x2 pair)");
        v = construct_2gmd(matrices[active[0]], matrices[active[1]]).v;
    } else {
        std::ostringstream msg;
        msg << "no exact K-GMD construction for K = " << active.size() << " non-unitary matrices of size " << n;
        throw Error(ErrorCode::NotConstructible, msg.str());
    }

    JointFactors out;
    out.v = v;
    for (const auto& a : matrices) {
        QrFactors f = qr(a * v);
        for (std::size_t j = 0; j < n; ++j)
            if (std::abs(f.r(j, j).real() - 1.0) > 1e-8)
                throw Error(ErrorCode::NoConvergence, "K-GMD diagonal drifted from 1");
        out.users.push_back({f.q, f.r});
    }
    out.diag.assign(n, 1.0);
    return out;
}

JointFactors kgmd_to_kjet(const std::vector<CMatrix>& matrices, const KgmdProvider& inner) {
    require_same_square(matrices);
    if (matrices.size() < 2) throw Error(ErrorCode::ShapeMismatch, "K-JET needs at least two matrices");
    const std::size_t n = matrices.front().rows();
    const double dref = std::abs(det(matrices.back()));
    if (!(dref > 0.0)) throw Error(ErrorCode::Singular, "reference matrix is singular");
    for (const auto& a : matrices) {
        const double d = std::abs(det(a));
        if (!(d > 0.0)) throw Error(ErrorCode::Singular, "matrix is singular");
        if (std::abs(std::log(d / dref)) > 1e-8) throw Error(ErrorCode::BadDeterminant, "K-JET needs equal |det|");
    }
    const CMatrix ref_inv = inverse(matrices.back());
    std::vector<CMatrix> b;
    for (std::size_t k = 0; k + 1 < matrices.size(); ++k) b.push_back(matrices[k] * ref_inv);
    // Remove the common |det| so the inner problem sees unit determinants.
    const NormalizedSet nb = normalize_equal_det(b);

    const JointFactors g = inner(nb.matrices);
    if (g.v.rows() % n != 0) throw Error(ErrorCode::DimensionMismatch, "inner factor size is not a multiple of n");
    const std::size_t n_ext = g.v.rows() / n;
    const QrFactors f = qr(time_extend(ref_inv, n_ext) * g.v);
    const CMatrix rinv = inverse(f.r);

    JointFactors out;
    out.v = f.q;
    for (std::size_t k = 0; k < g.users.size(); ++k)
        out.users.push_back({g.users[k].u, nb.scales[k] * (g.users[k].r * rinv)});
    out.users.push_back({g.v, rinv});
    for (std::size_t j = 0; j < rinv.rows(); ++j) out.diag.push_back(rinv(j, j).real());
    return out;
}

ExistenceReport check_upper_lower(const CMatrix& a1, const CMatrix& a2, double r) {
    require_pair_2x2(a1, a2);
    require_unit_det(a1, "A1");
    require_unit_det(a2, "A2");
    const CMatrix s1 = gram_shift(a1, r * r);
    const CMatrix s2 = gram_shift(a2, 1.0 / (r * r));
    ExistenceReport rep = pair_report(s1, s2, f2(s1, s2), "F2");
    if (!rep.feasible && rep.failing.rfind("det(A2", 0) == 0)
        rep.failing = fmt_condition("det(A2'A2 - r^-2 I)", rep.det_s2, ">");
    return rep;
}

bool exists_upper_lower(const CMatrix& a1, const CMatrix& a2, double r) {
    return check_upper_lower(a1, a2, r).feasible;
}

UpperLowerFactors construct_upper_lower(const CMatrix& a1, const CMatrix& a2) {
    const ExistenceReport rep = check_upper_lower(a1, a2, 1.0);
    if (!rep.feasible) throw Error(ErrorCode::ConditionViolated, rep.failing);
    const CMatrix s1 = gram_shift(a1, 1.0);
    const CMatrix s2 = adjugate(gram_shift(a2, 1.0));
    UpperLowerFactors out;
    out.witness = solve_quadratic_witness(s1, s2);
    const cplx x = out.witness.v1[0];
    const cplx y = out.witness.v1[1];
    out.v = CMatrix{{x, std::conj(y)}, {y, -std::conj(x)}};

    const QrFactors f1q = qr(a1 * out.v);
    out.u1 = f1q.q;
    out.r1_upper = f1q.r;

    // Lower form from the QR of the column-reversed product.
    CMatrix m = a2 * out.v;
    m.swap_cols(0, 1);
    QrFactors f2q = qr(m);
    out.u2 = f2q.q;
    out.u2.swap_cols(0, 1);
    out.r2_lower = f2q.r;
    out.r2_lower.swap_rows(0, 1);
    out.r2_lower.swap_cols(0, 1);
    return out;
}

bool joint_block_feasible(const CMatrix& a1, const CMatrix& a2, const std::vector<std::size_t>& block_sizes,
                          const std::vector<cplx>& det_ratios) {
    if (!a1.square() || !a2.square() || a1.rows() != a2.rows())
        throw Error(ErrorCode::ShapeMismatch, "joint block test needs two square matrices of equal size");
    const auto mu = singular_values(a1 * inverse(a2));
    return block_conditions(mu, BlockSpec{block_sizes, det_ratios}).ok;
}

}  // namespace jtri
