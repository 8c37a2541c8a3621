#include "jtri/multicast.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <numeric>
#include <random>
#include <sstream>
#include <thread>

#include "jtri/error.hpp"
#include "jtri/linalg.hpp"
#include "jtri/tolerances.hpp"

namespace jtri {

namespace {

struct UserModel {
    CMatrix m;  // effective matrix on the stream symbols
    CMatrix w;  // noise map
    std::vector<double> nominal_r;
};

struct StreamAccum {
    cplx sxy = 0.0;
    double sxx = 0.0;
    double syy = 0.0;
};

std::size_t thread_count(std::size_t work_items) {
    std::size_t n = std::max(1u, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("JTRI_THREADS")) {
        const long v = std::strtol(env, nullptr, 10);
        if (v > 0) n = std::min<std::size_t>(n, static_cast<std::size_t>(v));
    }
    return std::max<std::size_t>(1, std::min(n, work_items));
}

constexpr double kInfiniteSnrFloor = 1e-12;

double snr_from(const StreamAccum& a, bool& infinite) {
    infinite = false;
    if (!(a.sxx > 0.0)) return 0.0;
    const double signal = std::norm(a.sxy) / a.sxx;  // |g|^2 * sum |x|^2
    const double residual = std::max(0.0, a.syy - signal);
    // Sums are accumulated in double precision, so a residual below this
    // fraction of the signal is cancellation noise rather than interference.
    if (residual <= kInfiniteSnrFloor * std::max(signal, 1e-300)) {
        infinite = true;
        return std::numeric_limits<double>::infinity();
    }
    return signal / residual;
}

UserModel build_model(const CMatrix& h, const CMatrix& cov, const CMatrix& u, const CMatrix& v, std::size_t n_ext) {
    const CanonicalSplit cs = canonical_split(h, cov);
    const CMatrix q_ext = time_extend(cs.q_top, n_ext);  // N n_r x N n_t
    const CMatrix uh = u.adjoint();
    UserModel out;
    out.w = uh * q_ext.adjoint();
    out.m = out.w * time_extend(h * cs.cov_sqrt, n_ext) * v;
    const CMatrix r = uh * time_extend(cs.g, n_ext) * v;
    for (std::size_t j = 0; j < r.rows(); ++j) out.nominal_r.push_back(std::abs(r(j, j)));
    return out;
}

SicReport run_user(const UserModel& model, std::size_t user, std::size_t n_ext, const SicOptions& opt) {
    const std::size_t m = model.m.rows();
    const std::size_t nz = model.w.cols();
    const std::size_t batches = std::max<std::size_t>(1, std::min(opt.batches, opt.trials));

    // Per-batch sums; batches have fixed trial ranges and their own seeded
    // generator, so results do not depend on the thread count.
    std::vector<std::vector<StreamAccum>> acc(batches, std::vector<StreamAccum>(m));
    auto run_batch = [&](std::size_t b) {
        const std::size_t begin = opt.trials * b / batches;
        const std::size_t end = opt.trials * (b + 1) / batches;
        std::seed_seq seq{static_cast<std::uint32_t>(opt.seed), static_cast<std::uint32_t>(opt.seed >> 32),
                          static_cast<std::uint32_t>(user), static_cast<std::uint32_t>(b)};
        std::mt19937_64 gen(seq);
        std::normal_distribution<double> nd(0.0, std::sqrt(0.5));
        std::vector<cplx> x(m), z(nz), y(m);
        for (std::size_t t = begin; t < end; ++t) {
            for (auto& e : x) e = cplx(nd(gen), nd(gen));
            for (auto& e : z) e = opt.noiseless ? cplx(0.0) : cplx(nd(gen), nd(gen));
            for (std::size_t i = 0; i < m; ++i) {
                cplx s = 0.0;
                for (std::size_t j = 0; j < m; ++j) s += model.m(i, j) * x[j];
                for (std::size_t j = 0; j < nz; ++j) s += model.w(i, j) * z[j];
                y[i] = s;
            }
            // Decode from the last stream; later streams are known exactly.
            for (std::size_t j = 0; j < m; ++j) {
                cplx yj = y[j];
                for (std::size_t i = j + 1; i < m; ++i) yj -= model.m(j, i) * x[i];
                StreamAccum& a = acc[b][j];
                a.sxy += yj * std::conj(x[j]);
                a.sxx += std::norm(x[j]);
                a.syy += std::norm(yj);
            }
        }
    };
    const std::size_t nthreads = thread_count(batches);
    if (nthreads == 1) {
        for (std::size_t b = 0; b < batches; ++b) run_batch(b);
    } else {
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < nthreads; ++w)
            pool.emplace_back([&, w] {
                for (std::size_t b = w; b < batches; b += nthreads) run_batch(b);
            });
        for (auto& th : pool) th.join();
    }

    SicReport rep;
    rep.n_ext = n_ext;
    rep.trials = opt.trials;
    rep.seed = opt.seed;
    for (std::size_t j = 0; j < m; ++j) {
        SicStream s;
        const double r = model.nominal_r[j];
        s.nominal_snr = r * r - 1.0;
        // Interference from undecoded streams plus noise, per unit symbol power.
        double interference = 0.0;
        for (std::size_t i = 0; i < j; ++i) interference += std::norm(model.m(j, i));
        if (!opt.noiseless)
            for (std::size_t i = 0; i < nz; ++i) interference += std::norm(model.w(j, i));
        const double signal = std::norm(model.m(j, j));
        s.predicted_snr = interference > kInfiniteSnrFloor * signal ? signal / interference
                                                                    : std::numeric_limits<double>::infinity();

        StreamAccum total;
        std::vector<double> per_batch;
        bool any_finite = false;
        for (std::size_t b = 0; b < batches; ++b) {
            total.sxy += acc[b][j].sxy;
            total.sxx += acc[b][j].sxx;
            total.syy += acc[b][j].syy;
            bool inf_b = false;
            const double sb = snr_from(acc[b][j], inf_b);
            if (!inf_b) {
                per_batch.push_back(sb);
                any_finite = true;
            }
        }
        s.measured_snr = snr_from(total, s.infinite);
        if (any_finite && per_batch.size() > 1) {
            const double mean = std::accumulate(per_batch.begin(), per_batch.end(), 0.0) / per_batch.size();
            double var = 0.0;
            for (double x : per_batch) var += (x - mean) * (x - mean);
            var /= static_cast<double>(per_batch.size() - 1);
            s.std_error = std::sqrt(var / static_cast<double>(per_batch.size()));
        }
        rep.streams.push_back(s);
        if (std::isfinite(s.predicted_snr)) rep.total_rate += std::log2(1.0 + s.predicted_snr);
    }
    rep.total_rate /= static_cast<double>(n_ext);
    return rep;
}

std::vector<SicReport> simulate_all(const MulticastProblem& problem, const CMatrix& v,
                                    const std::vector<const CMatrix*>& us, const SicOptions& options) {
    validate_problem(problem);
    if (options.trials == 0) throw Error(ErrorCode::DimensionMismatch, "trials must be positive");
    if (us.size() != problem.users.size())
        throw Error(ErrorCode::DimensionMismatch, "factor count differs from the number of users");
    const std::size_t nt = problem.cov.rows();
    if (v.rows() == 0 || v.rows() % nt != 0)
        throw Error(ErrorCode::DimensionMismatch, "precoder rows are not a multiple of n_t");
    const std::size_t n_ext = v.rows() / nt;
    std::vector<SicReport> out;
    for (std::size_t k = 0; k < us.size(); ++k) {
        if (us[k]->rows() != v.rows() || us[k]->cols() != v.cols())
            throw Error(ErrorCode::DimensionMismatch, "user factor shape differs from the precoder");
        const UserModel model = build_model(problem.users[k], problem.cov, *us[k], v, n_ext);
        out.push_back(run_user(model, k, n_ext, options));
    }
    return out;
}

}  // namespace

double rateless3_critical_rate() { return 6.0 * std::log2((3.0 + std::sqrt(5.0)) / 2.0); }

void validate_problem(const MulticastProblem& problem) {
    if (!problem.cov.square() || problem.cov.rows() == 0)
        throw Error(ErrorCode::DimensionMismatch, "covariance must be square and non-empty");
    for (const auto& h : problem.users)
        if (h.cols() != problem.cov.rows())
            throw Error(ErrorCode::DimensionMismatch, "channel columns differ from n_t");
    cholesky_lower(problem.cov);
    double tr = 0.0;
    for (std::size_t i = 0; i < problem.cov.rows(); ++i) tr += problem.cov(i, i).real();
    if (tr > problem.power + tol::zero) {
        std::ostringstream msg;
        msg << "trace(C) = " << tr << " exceeds P = " << problem.power;
        throw Error(ErrorCode::ConditionViolated, msg.str());
    }
}

double mutual_info(const CMatrix& h, const CMatrix& cov) {
    if (!cov.square() || h.cols() != cov.rows())
        throw Error(ErrorCode::DimensionMismatch, "channel columns differ from covariance size");
    cholesky_lower(cov);
    CMatrix m = h * cov * h.adjoint();
    for (std::size_t i = 0; i < m.rows(); ++i) m(i, i) += 1.0;
    const CMatrix l = cholesky_lower(m);
    double s = 0.0;
    for (std::size_t j = 0; j < l.rows(); ++j) s += 2.0 * std::log2(l(j, j).real());
    return std::max(0.0, s);
}

double multicast_rate(const MulticastProblem& problem) {
    validate_problem(problem);
    if (problem.users.empty()) throw Error(ErrorCode::DimensionMismatch, "no users");
    double best = std::numeric_limits<double>::infinity();
    for (const auto& h : problem.users) best = std::min(best, mutual_info(h, problem.cov));
    return best;
}

CanonicalSplit canonical_split(const CMatrix& h, const CMatrix& cov) {
    if (!cov.square() || h.cols() != cov.rows())
        throw Error(ErrorCode::DimensionMismatch, "channel columns differ from covariance size");
    const std::size_t nr = h.rows();
    const std::size_t nt = cov.rows();
    CanonicalSplit out;
    out.cov_sqrt = cholesky_lower(cov);
    CMatrix aug(nr + nt, nt);
    aug.set_block(0, 0, h * out.cov_sqrt);
    aug.set_block(nr, 0, CMatrix::identity(nt));
    const QrFactors f = qr(aug);
    out.g = f.r;
    out.q_top = f.q.block(0, 0, nr, nt);
    return out;
}

CMatrix canonical_matrix(const CMatrix& h, const CMatrix& cov) { return canonical_split(h, cov).g; }

SchemeRates scheme_rates(const std::vector<double>& diag, std::size_t n_ext) {
    if (n_ext == 0) throw Error(ErrorCode::DimensionMismatch, "n_ext must be positive");
    SchemeRates out;
    for (std::size_t j = 0; j < diag.size(); ++j) {
        const double r = diag[j];
        if (!(r >= 1.0 - tol::zero)) {
            std::ostringstream msg;
            msg << "diagonal entry " << j + 1 << " = " << r << " is below 1";
            throw Error(ErrorCode::DiagBelowOne, msg.str());
        }
        out.per_stream_snr.push_back(std::max(0.0, r * r - 1.0));
        out.per_stream_rate.push_back(std::max(0.0, 2.0 * std::log2(r)));
        out.total_rate += out.per_stream_rate.back();
    }
    out.total_rate /= static_cast<double>(n_ext);
    return out;
}

std::vector<SicReport> simulate_sic(const MulticastProblem& problem, const JointFactors& factors,
                                    const SicOptions& options) {
    std::vector<const CMatrix*> us;
    for (const auto& user : factors.users) us.push_back(&user.u);
    return simulate_all(problem, factors.v, us, options);
}

std::vector<SicReport> simulate_sic(const MulticastProblem& problem, const SpaceTimeFactors& factors,
                                    const SicOptions& options) {
    std::vector<const CMatrix*> us;
    for (const auto& user : factors.users) us.push_back(&user.u);
    return simulate_all(problem, factors.v, us, options);
}

std::vector<CMatrix> rateless_channels(std::size_t k_rates, double total_rate) {
    if (k_rates == 0) throw Error(ErrorCode::BadK, "at least one rate is needed");
    if (!(total_rate > 0.0)) throw Error(ErrorCode::NonPositiveEntry, "rate must be positive");
    std::vector<CMatrix> out;
    for (std::size_t k = 1; k <= k_rates; ++k) {
        const double alpha = std::sqrt(std::exp2(total_rate / static_cast<double>(k)) - 1.0);
        CMatrix h(k, k_rates);
        for (std::size_t i = 0; i < k; ++i) h(i, i) = alpha;
        out.push_back(std::move(h));
    }
    return out;
}

std::pair<CMatrix, CMatrix> rateless3_reduce(double total_rate) {
    const double b = std::exp2(total_rate / 12.0);
    const double b2 = b * b, b4 = b2 * b2, b6 = b4 * b2, b8 = b4 * b4;
    const double s = std::sqrt(1.0 - b2 + b8);
    const CMatrix a1{{s / b2, (b6 - 1.0) / (b * std::sqrt((1.0 - b2 + b8) * (1.0 + b2 + b4)))}, {0.0, b2 / s}};
    const CMatrix a2{{b, 0.0}, {0.0, 1.0 / b}};
    return {a1, a2};
}

Rateless3Reduction rateless3_reduction_path(double total_rate) {
    const double b = std::exp2(total_rate / 12.0);
    const double b2 = b * b, b3 = b2 * b, b4 = b2 * b2, b5 = b4 * b, b6 = b4 * b2, b8 = b4 * b4;
    Rateless3Reduction out;
    out.a1 = CMatrix::diag(std::vector<double>{b4, 1.0 / b2, 1.0 / b2});
    out.a2 = CMatrix::diag(std::vector<double>{b, b, 1.0 / b2});
    const double n8 = std::sqrt(b8 + b4 + 1.0);
    const double n6 = std::sqrt(b6 + 1.0);
    const double n23 = std::sqrt((b2 + 1.0) * (b8 + b4 + 1.0));
    out.v0 = CMatrix{{1.0 / n8, b3 / n6, b2 / n23},
                     {b3 / n8, -1.0 / n6, b5 / n23},
                     {b2 / std::sqrt(b4 + b2 + 1.0), 0.0, -n6 / n8}};
    out.reduced1 = qr(out.a1 * out.v0).r.block(1, 1, 2, 2);
    out.reduced2 = qr(out.a2 * out.v0).r.block(1, 1, 2, 2);
    return out;
}

std::vector<CMatrix> permuted_channels(const std::vector<double>& gains) {
    if (gains.empty()) throw Error(ErrorCode::BadK, "no gains given");
    if (gains.size() > 4) throw Error(ErrorCode::TooManyUsers, "permutation enumeration is capped at K = 4");
    for (double g : gains)
        if (!(g > 0.0)) throw Error(ErrorCode::NonPositiveEntry, "gains must be positive");
    std::vector<std::size_t> perm(gains.size());
    std::iota(perm.begin(), perm.end(), 0);
    std::vector<CMatrix> out;
    do {
        std::vector<double> d;
        for (std::size_t i : perm) d.push_back(gains[i]);
        out.push_back(CMatrix::diag(d));
    } while (std::next_permutation(perm.begin(), perm.end()));
    return out;
}

CMatrix dft_precoder(std::size_t k) {
    if (k != 2 && k != 3) throw Error(ErrorCode::BadK, "DFT precoder is defined for K = 2 and K = 3");
    CMatrix v(k, k);
    const double s = 1.0 / std::sqrt(static_cast<double>(k));
    for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = 0; j < k; ++j) {
            const double ang = 2.0 * M_PI * static_cast<double>((i * j) % k) / static_cast<double>(k);
            v(i, j) = s * std::polar(1.0, ang);
        }
    if (k == 2) v(1, 1) = -s;  // exact Hadamard entry
    return v;
}

DofExample dof_mismatch_example(double c, DofVariant variant) {
    if (!(c > 0.0)) throw Error(ErrorCode::NonPositiveEntry, "capacity must be positive");
    DofExample out;
    out.problem.power = 1.0;
    out.problem.cov = 0.5 * CMatrix::identity(2);
    // White input with power 1/2 per antenna: 1 + a^2 / 2 sets each user's rate to c.
    const double a_pair = std::sqrt(2.0 * (std::exp2(c / 2.0) - 1.0));
    const double a_single = std::sqrt(2.0 * (std::exp2(c) - 1.0));
    const double q = std::exp2(c / 4.0);
    if (variant == DofVariant::TwoUser) {
        out.problem.users = {CMatrix{{a_single, 0.0}}, a_pair * CMatrix::identity(2)};
    } else {
        out.problem.users = {a_pair * CMatrix::identity(2), CMatrix{{a_single, 0.0}}, CMatrix{{0.0, a_single}}};
    }
    for (const auto& h : out.problem.users) out.canonical.push_back(canonical_matrix(h, out.problem.cov));
    const double s = std::sqrt(1.0 / (std::exp2(c / 2.0) + 1.0));
    out.v = CMatrix{{s, s * q}, {s * q, -s}};
    if (variant == DofVariant::ThreeUser) {
        const double off = (std::exp2(c) - 1.0) / (std::exp2(c / 2.0) + 1.0);
        out.t = {q * CMatrix::identity(2), CMatrix{{q, off}, {0.0, q}}, CMatrix{{q, 0.0}, {-off, q}}};
    }
    return out;
}

std::pair<double, double> example1_gains(double c, double power) {
    if (!(c > 0.0) || !(power > 0.0)) throw Error(ErrorCode::NonPositiveEntry, "rate and power must be positive");
    const double a1 = std::sqrt((std::exp2(c) - 1.0) / power);
    const double a2 = std::sqrt(2.0 * (std::exp2(c / 2.0) - 1.0) / power);
    return {a1, a2};
}

nlohmann::json sic_reports_to_json(const std::vector<SicReport>& reports) {
    auto num = [](double x) { return std::isfinite(x) ? nlohmann::json(x) : nlohmann::json(nullptr); };
    nlohmann::json users = nlohmann::json::array();
    for (const auto& rep : reports) {
        nlohmann::json streams = nlohmann::json::array();
        for (const auto& s : rep.streams) {
            const double rate = std::isfinite(s.predicted_snr) ? std::log2(1.0 + s.predicted_snr) : 0.0;
            streams.push_back({{"predicted_snr", num(s.predicted_snr)},
                               {"nominal_snr", num(s.nominal_snr)},
                               {"measured_snr", num(s.measured_snr)},
                               {"std_error", num(s.std_error)},
                               {"infinite", s.infinite},
                               {"rate_bits", rate}});
        }
        users.push_back({{"streams", streams},
                         {"total_rate", rep.total_rate},
                         {"n_ext", rep.n_ext},
                         {"seed", rep.seed},
                         {"trials", rep.trials}});
    }
    return {{"users", users}};
}

}  // namespace jtri
