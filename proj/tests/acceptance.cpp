// Acceptance checks: one line per criterion, nonzero exit if any fails.
#include <chrono>
#include <cstdio>
#include <numeric>
#include <random>
#include <sstream>
#include <string>

#include "jtri/error.hpp"
#include "jtri/gtd.hpp"
#include "jtri/joint.hpp"
#include "jtri/multicast.hpp"
#include "jtri/spacetime.hpp"
#include "support.hpp"

using namespace jtri;
using namespace testsupport;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;
};

void require(Outcome& o, bool cond, const std::string& what) {
    if (!cond && o.pass) {
        o.pass = false;
        o.detail = what;
    }
}

std::string fmt(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.3g", x);
    return buf;
}

CMatrix with_singular_values(std::mt19937_64& rng, const std::vector<double>& s) {
    return random_unitary(rng, s.size()) * CMatrix::diag(s) * random_unitary(rng, s.size());
}

Outcome gtd_correctness() {
    Outcome o;
    std::mt19937_64 rng(101);
    double worst_recon = 0.0, worst_spread = 0.0;
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 1 + trial % 16;
        const CMatrix a = random_matrix(rng, n, n);
        const GtdFactors g = gmd(a);
        worst_recon = std::max(worst_recon, (g.u * g.r * g.v.adjoint() - a).frobenius_norm() / a.frobenius_norm());
        const auto d = g.r.diagonal();
        for (const auto& x : d) worst_spread = std::max(worst_spread, std::abs(x - d[0]) / std::abs(d[0]));
        worst_recon = std::max({worst_recon, lower_residual(g.r) / std::abs(d[0]), orthonormality_residual(g.u),
                                orthonormality_residual(g.v)});
        // A QR diagonal of A W is always an attainable target.
        std::vector<double> target;
        for (const auto& x : qr(a * random_unitary(rng, n)).r.diagonal()) target.push_back(x.real());
        const GtdFactors t = gtd(a, target);
        worst_recon = std::max(worst_recon, (t.u * t.r * t.v.adjoint() - a).frobenius_norm() / a.frobenius_norm());
        for (std::size_t j = 0; j < n; ++j)
            worst_recon = std::max(worst_recon, std::abs(t.r(j, j) - target[j]) / target[j]);
    }
    require(o, worst_recon <= 1e-9, "reconstruction " + fmt(worst_recon));
    require(o, worst_spread <= 1e-9, "gmd spread " + fmt(worst_spread));

    std::normal_distribution<double> nd;
    int disagreements = 0, decided = 0;
    while (decided < 200) {
        const std::size_t n = 2 + rng() % 5;
        std::vector<double> ls(n), lt(n);
        for (auto& x : ls) x = nd(rng);
        for (auto& x : lt) x = 0.7 * nd(rng);
        const double shift =
            (std::accumulate(ls.begin(), ls.end(), 0.0) - std::accumulate(lt.begin(), lt.end(), 0.0)) / n;
        std::vector<double> s(n), t(n);
        for (std::size_t i = 0; i < n; ++i) {
            s[i] = std::exp(ls[i]);
            t[i] = std::exp(lt[i] + shift);
        }
        const MajorizationCheck mc = check_majorization(s, t);
        if (std::abs(mc.margin) <= 1e-9) continue;
        ++decided;
        bool built = true;
        try {
            gtd(with_singular_values(rng, s), t);
        } catch (const Error&) {
            built = false;
        }
        if (built != majorizes(s, t)) ++disagreements;
    }
    require(o, disagreements == 0, std::to_string(disagreements) + " feasibility disagreements");
    if (o.pass) o.detail = "recon " + fmt(worst_recon) + ", spread " + fmt(worst_spread) + ", 0/200 disagreements";
    return o;
}

Outcome two_gmd_oracle() {
    Outcome o;
    std::mt19937_64 rng(102);
    int checked = 0, disagreements = 0, feasible = 0;
    double worst = 0.0;
    while (checked < 500) {
        const CMatrix a1 = random_unit_det(rng, 2), a2 = random_unit_det(rng, 2);
        const ExistenceReport rep = check_2gmd(a1, a2);
        if (std::abs(rep.f_value) <= 1e-8) continue;
        ++checked;
        if ((same_orientation_oracle(a1, a2) < 1e-6) != rep.feasible) ++disagreements;
        if (!rep.feasible) continue;
        ++feasible;
        const JointFactors f = construct_2gmd(a1, a2);
        for (const auto& u : f.users)
            for (std::size_t j = 0; j < 2; ++j) worst = std::max(worst, std::abs(u.r(j, j) - 1.0));
    }
    require(o, disagreements == 0, std::to_string(disagreements) + " oracle disagreements");
    require(o, worst <= 1e-8, "unit diagonal residual " + fmt(worst));
    if (o.pass) o.detail = std::to_string(feasible) + "/500 feasible, diag residual " + fmt(worst);
    return o;
}

Outcome critical_rate() {
    Outcome o;
    auto feasible = [](double c) {
        const auto [a1, a2] = rateless3_reduce(c);
        return exists_2gmd(a1, a2);
    };
    double lo = 8.0, hi = 9.0;
    require(o, feasible(lo) && !feasible(hi), "boundary not bracketed by [8, 9]");
    for (int it = 0; it < 40 && o.pass; ++it) {
        const double mid = 0.5 * (lo + hi);
        (feasible(mid) ? lo : hi) = mid;
    }
    const double c = 0.5 * (lo + hi);
    const double expected = 6.0 * std::log2((3.0 + std::sqrt(5.0)) / 2.0);
    require(o, std::abs(c - expected) <= 1e-3, "boundary at " + std::to_string(c));
    if (o.pass) o.detail = "boundary " + std::to_string(c) + " vs " + std::to_string(expected);
    return o;
}

Outcome closed_forms() {
    Outcome o;
    double worst = 0.0;
    for (double c : {2.0, 4.0, 8.0}) {
        std::vector<CMatrix> g;
        for (const auto& h : rateless_channels(2, c)) g.push_back(canonical_matrix(h, CMatrix::identity(2)));
        const NormalizedSet ns = normalize_equal_det(g);
        const double q = std::exp2(c / 4.0), s = std::sqrt(1.0 / (std::exp2(c / 2.0) + 1.0));
        worst = std::max(worst, column_phase_distance(CMatrix{{s, s * q}, {s * q, -s}},
                                                      jet2(ns.matrices[0], ns.matrices[1]).v));

        const DofExample ex = dof_mismatch_example(c, DofVariant::ThreeUser);
        const UpperLowerFactors f = construct_upper_lower((1.0 / q) * ex.canonical[1], (1.0 / q) * ex.canonical[2]);
        worst = std::max(worst, column_phase_distance(ex.v, f.v));
        // Align column phases before comparing the triangular factors.
        CMatrix v = f.v;
        for (std::size_t j = 0; j < 2; ++j) {
            cplx ip = 0.0;
            for (std::size_t i = 0; i < 2; ++i) ip += std::conj(v(i, j)) * ex.v(i, j);
            const cplx ph = ip / std::abs(ip);
            for (std::size_t i = 0; i < 2; ++i) v(i, j) *= ph;
        }
        // With the aligned precoder, each user's Gram matrix V†G†GV must equal
        // T†T, which fixes a triangular factor with positive diagonal.
        for (std::size_t k = 0; k < 3; ++k) {
            const CMatrix gv = ex.canonical[k] * v;
            worst = std::max(worst, (gv.adjoint() * gv - ex.t[k].adjoint() * ex.t[k]).max_abs() / (q * q * q * q));
        }
        worst = std::max(worst, (q * f.r1_upper - ex.t[1]).max_abs() / (q * q));
        worst = std::max(worst, (q * f.r2_lower - ex.t[2]).max_abs() / (q * q));
    }
    require(o, worst <= 1e-9, "max deviation " + fmt(worst));
    if (o.pass) o.detail = "max deviation " + fmt(worst) + " at C in {2, 4, 8}";
    return o;
}

Outcome nearly_optimal() {
    Outcome o;
    std::mt19937_64 rng(105);
    double diag = 0.0, tri = 0.0, ortho = 0.0, recon = 0.0;
    bool dims = true;
    int built = 0;
    for (const auto& [n, k] : std::vector<std::pair<std::size_t, std::size_t>>{{2, 2}, {2, 3}, {3, 2}}) {
        std::size_t p = 1;
        for (std::size_t i = 1; i < k; ++i) p *= n;
        for (std::size_t n_ext = p; n_ext <= p + 3; ++n_ext) {
            for (int trial = 0; trial < 20; ++trial) {
                std::vector<CMatrix> a;
                for (std::size_t i = 0; i < k; ++i) a.push_back(random_unit_det(rng, n));
                const SpaceTimeFactors f = nearly_kgmd(a, n_ext);
                ++built;
                const std::size_t m = n * (n_ext - (p - 1));
                dims = dims && f.v.rows() == n * n_ext && f.v.cols() == m;
                ortho = std::max(ortho, orthonormality_residual(f.v));
                for (std::size_t u = 0; u < k; ++u) {
                    const auto& user = f.users[u];
                    dims = dims && user.t.rows() == m && user.t.cols() == m;
                    ortho = std::max(ortho, orthonormality_residual(user.u));
                    tri = std::max(tri, lower_residual(user.t));
                    const CMatrix ext = time_extend(a[u], n_ext);
                    recon = std::max(recon,
                                     (user.u.adjoint() * ext * f.v - user.t).frobenius_norm() / ext.frobenius_norm());
                    for (std::size_t j = 0; j < m; ++j) diag = std::max(diag, std::abs(user.t(j, j) - 1.0));
                }
            }
        }
    }
    require(o, dims, "dimension law violated");
    require(o, diag <= 1e-8, "diagonal " + fmt(diag));
    require(o, tri <= 1e-8, "triangularity " + fmt(tri));
    require(o, ortho <= 1e-9, "orthonormality " + fmt(ortho));
    require(o, recon <= 1e-8, "reconstruction " + fmt(recon));
    std::vector<CMatrix> a;
    for (int i = 0; i < 3; ++i) a.push_back(random_unit_det(rng, 2));
    std::vector<std::size_t> kept = nearly_kgmd(a, 4).kept_indices;
    std::sort(kept.begin(), kept.end());
    require(o, kept == std::vector<std::size_t>{4, 5}, "worked case kept indices differ from {4, 5}");
    if (o.pass)
        o.detail = std::to_string(built) + " instances, diag " + fmt(diag) + ", tri " + fmt(tri) + ", ortho " +
                   fmt(ortho) + ", kept {4, 5}";
    return o;
}

Outcome tables(const std::string& cli) {
    Outcome o;
    if (cli.empty()) {
        o.pass = false;
        o.detail = "no CLI path given";
        return o;
    }
    FILE* pipe = popen((cli + " tables").c_str(), "r");
    if (!pipe) {
        o.pass = false;
        o.detail = "cannot run CLI";
        return o;
    }
    std::string out;
    char buf[256];
    while (std::fgets(buf, sizeof buf, pipe)) out += buf;
    const int status = pclose(pipe);
    require(o, status == 0, "CLI exit status " + std::to_string(status));
    std::istringstream in(out);
    std::string line;
    std::getline(in, line);
    require(o, line == "percent,gmd_n,gmd_fraction,jet_n,jet_fraction", "unexpected header");
    std::vector<std::size_t> gmd_row, jet_row;
    while (std::getline(in, line)) {
        std::istringstream fields(line);
        std::string pct, gn, gf, jn;
        std::getline(fields, pct, ',');
        std::getline(fields, gn, ',');
        std::getline(fields, gf, ',');
        std::getline(fields, jn, ',');
        gmd_row.push_back(std::stoul(gn));
        jet_row.push_back(std::stoul(jn));
    }
    require(o, gmd_row == std::vector<std::size_t>{5, 5, 6, 8, 9, 12, 15, 30}, "GMD row differs");
    require(o, jet_row == std::vector<std::size_t>{2, 2, 2, 3, 3, 4, 5, 10}, "JET row differs");
    if (o.pass) o.detail = "16/16 entries match";
    return o;
}

Outcome sic_equal_rate() {
    Outcome o;
    std::mt19937_64 rng(107);
    const MulticastProblem p{{random_matrix(rng, 3, 3)}, (1.0 / 3.0) * CMatrix::identity(3), 1.0};
    const GtdFactors g = gmd(canonical_matrix(p.users[0], p.cov));
    SicOptions opt;
    opt.trials = 100000;
    opt.seed = 7;
    const auto rep = simulate_sic(p, JointFactors{g.v, {{g.u, g.r}}, g.diag}, opt);
    const auto& st = rep[0].streams;
    std::string detail;
    for (std::size_t j = 0; j < 3; ++j) {
        const double expected = g.diag[j] * g.diag[j] - 1.0;
        const double z = (st[j].measured_snr - expected) / st[j].std_error;
        require(o, std::abs(z) <= 3.0, "stream " + std::to_string(j + 1) + " off by " + fmt(z) + " SE");
        detail += (j ? ", " : "") + fmt(z);
        for (std::size_t i = 0; i < j; ++i) {
            const double se = std::hypot(st[i].std_error, st[j].std_error);
            require(o, std::abs(st[i].measured_snr - st[j].measured_snr) <= 3.0 * se,
                    "streams " + std::to_string(i + 1) + " and " + std::to_string(j + 1) + " differ");
        }
    }
    if (o.pass) o.detail = "target SNR " + fmt(g.diag[0] * g.diag[0] - 1.0) + ", z-scores " + detail;
    return o;
}

Outcome invariance() {
    Outcome o;
    std::mt19937_64 rng(108);
    double worst_f = 0.0, worst_p = 0.0;
    for (int trial = 0; trial < 200; ++trial) {
        const CMatrix s1 = random_hermitian(rng, 2), s2 = random_hermitian(rng, 2);
        const CMatrix u = random_unitary(rng, 2);
        const double base = f1(s1, s2);
        worst_f = std::max(worst_f, std::abs(f1(u.adjoint() * s1 * u, u.adjoint() * s2 * u) - base) /
                                        (1.0 + std::abs(base)));
    }
    for (double c : {0.1, 1.0, 7.0})
        for (int trial = 0; trial < 200; ++trial) {
            const QrFactors f = qr(c * random_unitary(rng, 1 + trial % 6));
            worst_p = std::max({worst_p, lower_residual(f.r), upper_residual(f.r)});
            for (const auto& d : f.r.diagonal()) worst_p = std::max(worst_p, std::abs(d - c));
        }
    require(o, worst_f <= 1e-8, "F1 deviation " + fmt(worst_f));
    require(o, worst_p <= 1e-8, "QR of a scaled unitary deviates by " + fmt(worst_p));
    if (o.pass) o.detail = "F1 " + fmt(worst_f) + ", scaled-unitary QR " + fmt(worst_p);
    return o;
}

Outcome block_conditions_match() {
    Outcome o;
    std::mt19937_64 rng(109);
    std::uniform_real_distribution<double> ud(-0.5, 0.5);
    int instances = 0, feasible = 0, mismatches = 0, multiplicity_mismatches = 0;
    double worst_det = 0.0;
    while (instances < 100) {
        const std::size_t n = 3 + rng() % 4;
        const CMatrix a = random_matrix(rng, n, n);
        const std::vector<double> sigma = singular_values(a);
        const std::size_t n1 = 1 + rng() % (n - 1);
        double top = 0.0, bottom = 0.0, total = 0.0;
        for (std::size_t i = 0; i < n; ++i) total += std::log(sigma[i]);
        for (std::size_t i = 0; i < n1; ++i) top += std::log(sigma[i]);
        for (std::size_t i = n - n1; i < n; ++i) bottom += std::log(sigma[i]);
        const double l1 = (rng() % 2 ? top : bottom) + ud(rng);
        const BlockSpec spec{{n1, n - n1}, {std::exp(l1), std::exp(total - l1)}};
        const MajorizationCheck mc = block_conditions(sigma, spec);
        if (std::abs(mc.margin) <= 1e-9) continue;
        ++instances;
        bool built = true;
        try {
            const BlockGtdFactors f = block_gtd(a, spec);
            const double d1 = std::abs(det(f.factors.r.block(0, 0, n1, n1)));
            const double d2 = std::abs(det(f.factors.r.block(n1, n1, n - n1, n - n1)));
            worst_det = std::max({worst_det, std::abs(d1 - std::abs(spec.block_dets[0])) / std::abs(spec.block_dets[0]),
                                  std::abs(d2 - std::abs(spec.block_dets[1])) / std::abs(spec.block_dets[1])});
        } catch (const Error&) {
            built = false;
        }
        if (built) ++feasible;
        if (built != mc.ok) ++mismatches;

        // Grouped values against the expanded majorization test.
        std::vector<double> values;
        std::vector<std::size_t> mults;
        std::vector<double> expanded;
        std::size_t left = n;
        while (left > 0) {
            const std::size_t m = 1 + rng() % left;
            values.push_back(std::exp(0.8 * ud(rng) * 4.0));
            mults.push_back(m);
            left -= m;
        }
        double lv = 0.0;
        for (std::size_t i = 0; i < values.size(); ++i) lv += mults[i] * std::log(values[i]);
        const double fix = std::exp((total - lv) / static_cast<double>(n));
        for (std::size_t i = 0; i < values.size(); ++i) {
            values[i] *= fix;
            for (std::size_t j = 0; j < mults[i]; ++j) expanded.push_back(values[i]);
        }
        if (check_multiplicity_conditions(sigma, values, mults) != majorizes(sigma, expanded)) ++multiplicity_mismatches;
    }
    require(o, mismatches == 0, std::to_string(mismatches) + " construction/condition mismatches");
    require(o, worst_det <= 1e-8, "block |det| error " + fmt(worst_det));
    require(o, multiplicity_mismatches == 0, std::to_string(multiplicity_mismatches) + " multiplicity mismatches");
    if (o.pass)
        o.detail = std::to_string(feasible) + "/100 feasible, |det| error " + fmt(worst_det) + ", 0 multiplicity mismatches";
    return o;
}

Outcome upper_lower() {
    Outcome o;
    std::mt19937_64 rng(110);
    int checked = 0, disagreements = 0, feasible = 0;
    while (checked < 300) {
        const CMatrix a1 = random_unit_det(rng, 2), a2 = random_unit_det(rng, 2);
        const ExistenceReport rep = check_upper_lower(a1, a2);
        if (std::abs(rep.f_value) <= 1e-8) continue;
        ++checked;
        if (rep.feasible) ++feasible;
        if ((upper_lower_oracle(a1, a2) < 1e-6) != rep.feasible) ++disagreements;
    }
    require(o, disagreements == 0, std::to_string(disagreements) + " oracle disagreements");
    double worst = 0.0;
    for (int c = 1; c <= 12; ++c) {
        const DofExample ex = dof_mismatch_example(c, DofVariant::ThreeUser);
        const double q = std::exp2(c / 4.0);
        const CMatrix b1 = (1.0 / q) * ex.canonical[1], b2 = (1.0 / q) * ex.canonical[2];
        require(o, exists_upper_lower(b1, b2), "example infeasible at C = " + std::to_string(c));
        if (!o.pass) break;
        const UpperLowerFactors f = construct_upper_lower(b1, b2);
        worst = std::max(worst, column_phase_distance(ex.v, f.v));
        worst = std::max(worst, (q * f.r1_upper - ex.t[1]).max_abs() / (q * q));
        worst = std::max(worst, (q * f.r2_lower - ex.t[2]).max_abs() / (q * q));
    }
    require(o, worst <= 1e-9, "closed-form deviation " + fmt(worst));
    if (o.pass) o.detail = std::to_string(feasible) + "/300 feasible, closed-form deviation " + fmt(worst);
    return o;
}

Outcome log_det_identity() {
    Outcome o;
    std::mt19937_64 rng(111);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t nt = 1 + trial % 4, nr = 1 + (trial / 4) % 4;
        const CMatrix h = random_matrix(rng, nr, nt);
        const CMatrix b = random_matrix(rng, nt, nt);
        CMatrix cov = b * b.adjoint();
        double tr = 0.0;
        for (std::size_t i = 0; i < nt; ++i) tr += cov(i, i).real();
        cov = (1.0 / tr) * cov;
        const CMatrix g = canonical_matrix(h, cov);
        double s = 0.0;
        for (std::size_t j = 0; j < nt; ++j) s += 2.0 * std::log2(g(j, j).real());
        worst = std::max(worst, std::abs(s - mutual_info(h, cov)));
    }
    require(o, worst <= 1e-8, "deviation " + fmt(worst));
    if (o.pass) o.detail = "max deviation " + fmt(worst) + " over 100 instances";
    return o;
}

}  // namespace

int main(int argc, char** argv) {
    const std::string cli = argc > 1 ? argv[1] : "";
    struct Entry {
        std::string name;
        double limit_s;
        std::function<Outcome()> run;
    };
    const std::vector<Entry> entries{
        {"criterion 1", 10.0, gtd_correctness},
        {"criterion 2", 60.0, two_gmd_oracle},
        {"criterion 3", 5.0, critical_rate},
        {"criterion 4", 0.0, closed_forms},
        {"criterion 5", 120.0, nearly_optimal},
        {"criterion 6", 0.0, [&] { return tables(cli); }},
        {"criterion 7", 30.0, sic_equal_rate},
        {"criterion 8", 0.0, invariance},
        {"criterion 9", 0.0, block_conditions_match},
        {"criterion 10", 0.0, upper_lower},
        {"log-det identity", 0.0, log_det_identity},
    };
    int failures = 0;
    for (const auto& e : entries) {
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = e.run();
        } catch (const std::exception& ex) {
            o.pass = false;
            o.detail = std::string("exception: ") + ex.what();
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (e.limit_s > 0.0 && secs > e.limit_s && o.pass) {
            o.pass = false;
            o.detail = "runtime " + fmt(secs) + " s exceeds " + fmt(e.limit_s) + " s";
        }
        if (!o.pass) ++failures;
        std::printf("%s: %s (%s; %.2f s)\n", e.name.c_str(), o.pass ? "PASS" : "FAIL", o.detail.c_str(), secs);
        std::fflush(stdout);
    }
    return failures == 0 ? 0 : 1;
}
