#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "jtri/error.hpp"
#include "jtri/gtd.hpp"
#include "jtri/io.hpp"
#include "jtri/joint.hpp"
#include "jtri/linalg.hpp"
#include "jtri/multicast.hpp"
#include "jtri/spacetime.hpp"

using nlohmann::json;
using namespace jtri;

namespace {

struct RunConfig {
    std::string input_path;
    std::string inline_json;
    std::string out_path;
    std::string format = "json";
    std::uint64_t seed = 0;
    std::size_t trials = 100000;
    double tol = 1e-8;
};

std::string fmt12(double x) {
    if (!std::isfinite(x)) return std::isnan(x) ? "nan" : (x > 0 ? "inf" : "-inf");
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.12g", x);
    return buf;
}

json read_input(const RunConfig& cfg) {
    if (cfg.input_path.empty() == cfg.inline_json.empty())
        throw Error(ErrorCode::ParseError, "give exactly one of --input and --inline");
    std::string text = cfg.inline_json;
    if (!cfg.input_path.empty()) {
        std::ifstream in(cfg.input_path);
        if (!in) throw Error(ErrorCode::ParseError, "cannot open " + cfg.input_path);
        std::stringstream ss;
        ss << in.rdbuf();
        text = ss.str();
    }
    try {
        return json::parse(text);
    } catch (const json::exception& e) {
        throw Error(ErrorCode::ParseError, e.what());
    }
}

void emit(const RunConfig& cfg, const std::string& text) {
    if (cfg.out_path.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream out(cfg.out_path, std::ios::binary);
    if (!out) throw Error(ErrorCode::ParseError, "cannot write " + cfg.out_path);
    out << text;
}

void emit_json(const RunConfig& cfg, const json& j) { emit(cfg, j.dump(2) + "\n"); }

std::vector<double> parse_list(const std::string& s) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            out.push_back(std::stod(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw Error(ErrorCode::ParseError, "bad number '" + item + "'");
        }
    }
    return out;
}

double diag_spread(const std::vector<CMatrix>& rs) {
    double worst = 0.0;
    for (const auto& r : rs)
        for (std::size_t j = 0; j < r.rows(); ++j) worst = std::max(worst, std::abs(r(j, j) - rs.front()(j, j)));
    return worst;
}

json joint_json(const std::vector<CMatrix>& inputs, const CMatrix& v, const std::vector<JointUser>& users,
                const std::vector<double>& diag, double tol) {
    json ju = json::array();
    double recon = 0.0, lower = 0.0, ortho = orthonormality_residual(v);
    std::vector<CMatrix> rs;
    for (std::size_t k = 0; k < users.size(); ++k) {
        const CMatrix& a = inputs[k];
        recon = std::max(recon, (users[k].u * users[k].r * v.adjoint() - a).frobenius_norm() /
                                    std::max(a.frobenius_norm(), 1e-300));
        lower = std::max(lower, lower_residual(users[k].r));
        ortho = std::max(ortho, orthonormality_residual(users[k].u));
        rs.push_back(users[k].r);
        ju.push_back({{"u", matrix_to_json(users[k].u)}, {"r", matrix_to_json(users[k].r)}});
    }
    const double spread = diag_spread(rs);
    json inj = json::array();
    for (const auto& a : inputs) inj.push_back(matrix_to_json(a));
    return {{"inputs", inj},
            {"v", matrix_to_json(v)},
            {"users", ju},
            {"diag", vector_to_json(diag)},
            {"residuals",
             {{"reconstruction", recon},
              {"lower_triangle", lower},
              {"orthonormality", ortho},
              {"diag_spread", spread},
              {"ok", recon <= tol && lower <= tol && ortho <= tol && spread <= tol}}}};
}

std::string joint_csv(const json& j) {
    std::ostringstream out;
    out << "index,diag\n";
    std::size_t idx = 1;
    for (const auto& d : j["diag"]) out << idx++ << "," << fmt12(d.get<double>()) << "\n";
    for (const auto& [name, value] : j["residuals"].items())
        if (value.is_number()) out << name << "," << fmt12(value.get<double>()) << "\n";
    return out.str();
}

void output_joint(const RunConfig& cfg, json j) {
    if (cfg.format == "csv")
        emit(cfg, joint_csv(j));
    else
        emit_json(cfg, j);
}

std::vector<CMatrix> input_matrices(const RunConfig& cfg, json* raw = nullptr) {
    const json j = read_input(cfg);
    if (raw) *raw = j;
    return matrices_from_json(j);
}

int cmd_decompose(const RunConfig& cfg, const std::string& kind, const std::string& target_s,
                  const std::string& blocks_s, const std::string& dets_s) {
    json raw;
    const std::vector<CMatrix> m = input_matrices(cfg, &raw);
    auto need = [&](std::size_t count) {
        if (m.size() != count)
            throw Error(ErrorCode::DimensionMismatch,
                        kind + " needs " + std::to_string(count) + " matrices, got " + std::to_string(m.size()));
    };
    if (kind == "gtd" || kind == "gmd" || kind == "block") {
        need(1);
        GtdFactors f;
        json extra = json::object();
        if (kind == "gmd") {
            f = gmd(m[0]);
        } else if (kind == "gtd") {
            std::vector<double> target = parse_list(target_s);
            if (target.empty() && raw.is_object() && raw.contains("target"))
                target = raw["target"].get<std::vector<double>>();
            f = gtd(m[0], target);
        } else {
            const std::vector<double> sizes = parse_list(blocks_s);
            const std::vector<double> dets = parse_list(dets_s);
            BlockSpec spec;
            for (double s : sizes) {
                if (!(s >= 1.0) || std::floor(s) != s) throw Error(ErrorCode::ParseError, "block sizes must be counts");
                spec.block_sizes.push_back(static_cast<std::size_t>(s));
            }
            for (double d : dets) spec.block_dets.push_back(d);
            const BlockGtdFactors b = block_gtd(m[0], spec);
            f = b.factors;
            extra["boundaries"] = b.boundaries;
        }
        json j = joint_json(m, f.v, {{f.u, f.r}}, f.diag, cfg.tol);
        j["kind"] = kind;
        j.update(extra);
        output_joint(cfg, j);
        return 0;
    }
    if (kind == "jet") {
        if (m.size() == 2) {
            const JointFactors f = jet2(m[0], m[1]);
            json j = joint_json(m, f.v, f.users, f.diag, cfg.tol);
            j["kind"] = kind;
            output_joint(cfg, j);
        } else {
            const JointFactors f = kgmd_to_kjet(m);
            json j = joint_json(m, f.v, f.users, f.diag, cfg.tol);
            j["kind"] = kind;
            output_joint(cfg, j);
        }
        return 0;
    }
    if (kind == "kgmd") {
        const JointFactors f = kgmd_exact(m);
        json j = joint_json(m, f.v, f.users, f.diag, cfg.tol);
        j["kind"] = kind;
        if (m.size() == 2 && m[0].rows() == 2) {
            const ExistenceReport rep = check_2gmd(m[0], m[1]);
            j["f1"] = rep.f_value;
        }
        output_joint(cfg, j);
        return 0;
    }
    if (kind == "upper-lower") {
        need(2);
        const UpperLowerFactors f = construct_upper_lower(m[0], m[1]);
        json j = joint_json({m[0]}, f.v, {{f.u1, f.r1_upper}}, {}, cfg.tol);
        const double upper = upper_residual(f.r2_lower);
        const double recon2 = (f.u2 * f.r2_lower * f.v.adjoint() - m[1]).frobenius_norm() / m[1].frobenius_norm();
        j["users"].push_back({{"u", matrix_to_json(f.u2)}, {"r", matrix_to_json(f.r2_lower)}, {"lower", true}});
        j["inputs"].push_back(matrix_to_json(m[1]));
        j["kind"] = kind;
        std::vector<double> d1, d2;
        for (std::size_t i = 0; i < 2; ++i) {
            d1.push_back(f.r1_upper(i, i).real());
            d2.push_back(f.r2_lower(i, i).real());
        }
        j["diag"] = d1;
        j["diag_lower"] = d2;
        j["witness"] = {{"case", f.witness.case_id}, {"residual", f.witness.residual}};
        auto& res = j["residuals"];
        res["reconstruction"] = std::max(res["reconstruction"].get<double>(), recon2);
        res["upper_triangle_of_lower"] = upper;
        res["orthonormality"] = std::max(res["orthonormality"].get<double>(), orthonormality_residual(f.u2));
        res["ok"] = res["ok"].get<bool>() && upper <= cfg.tol && recon2 <= cfg.tol;
        output_joint(cfg, j);
        return 0;
    }
    throw Error(ErrorCode::ParseError, "unknown kind " + kind);
}

int cmd_spacetime(const RunConfig& cfg, std::size_t n_ext, const std::string& mode) {
    const std::vector<CMatrix> m = input_matrices(cfg);
    SpaceTimeFactors f;
    std::vector<double> scales(m.size(), 1.0);
    std::size_t exponent = 0;
    if (mode == "gmd") {
        const NormalizedSet ns = normalize_equal_det(m);
        scales = ns.scales;
        f = nearly_kgmd(ns.matrices, n_ext);
        exponent = m.size() - 1;
    } else if (mode == "jet") {
        f = nearly_kjet(m, n_ext);
        exponent = m.size() >= 2 ? m.size() - 2 : 0;
    } else {
        throw Error(ErrorCode::ParseError, "mode must be gmd or jet");
    }
    const std::size_t kept = f.v.cols();
    const double fraction = extension_efficiency(f.n, exponent, n_ext);
    double lower = 0.0, recon = 0.0, ortho = orthonormality_residual(f.v), diag = 0.0;
    json users = json::array();
    for (std::size_t k = 0; k < f.users.size(); ++k) {
        const auto& u = f.users[k];
        const CMatrix ext = time_extend((1.0 / scales[k]) * m[k], n_ext);
        recon = std::max(recon, (u.u.adjoint() * ext * f.v - u.t).frobenius_norm() / ext.frobenius_norm());
        lower = std::max(lower, lower_residual(u.t));
        ortho = std::max(ortho, orthonormality_residual(u.u));
        for (std::size_t j = 0; j < u.t.rows(); ++j) diag = std::max(diag, std::abs(u.t(j, j) - f.users[0].t(j, j)));
        users.push_back({{"u", matrix_to_json(u.u)}, {"t", matrix_to_json(u.t)}, {"scale", scales[k]}});
    }
    json report = {{"n", f.n},
                   {"k_users", f.k_users},
                   {"n_ext", n_ext},
                   {"kept_dimension", kept},
                   {"fraction", fraction},
                   {"kept_indices", f.kept_indices},
                   {"discarded_products", f.discarded_products},
                   {"residuals",
                    {{"reconstruction", recon}, {"lower_triangle", lower}, {"orthonormality", ortho}, {"diag_spread", diag}}}};
    if (cfg.format == "csv") {
        std::ostringstream out;
        out << "n,k_users,n_ext,kept_dimension,fraction\n"
            << f.n << "," << f.k_users << "," << n_ext << "," << kept << "," << fmt12(fraction) << "\n";
        emit(cfg, out.str());
    } else {
        report["mode"] = mode;
        report["v"] = matrix_to_json(f.v);
        report["users"] = users;
        emit_json(cfg, report);
    }
    return 0;
}

int cmd_tables(const RunConfig& cfg) {
    const auto table = extension_table();
    if (cfg.format == "json") {
        json rows = json::array();
        for (const auto& c : table)
            rows.push_back({{"percent", c.label},
                            {"gmd_n", c.n_gmd},
                            {"gmd_fraction", extension_efficiency(2, 2, c.n_gmd)},
                            {"jet_n", c.n_jet},
                            {"jet_fraction", extension_efficiency(2, 1, c.n_jet)}});
        emit_json(cfg, {{"n", 2}, {"k_matrices", 3}, {"rows", rows}});
        return 0;
    }
    std::ostringstream out;
    out << "percent,gmd_n,gmd_fraction,jet_n,jet_fraction\n";
    for (const auto& c : table)
        out << c.label << "," << c.n_gmd << "," << fmt12(extension_efficiency(2, 2, c.n_gmd)) << "," << c.n_jet << ","
            << fmt12(extension_efficiency(2, 1, c.n_jet)) << "\n";
    emit(cfg, out.str());
    return 0;
}

json matrices_json(const std::vector<CMatrix>& ms) {
    json out = json::array();
    for (const auto& m : ms) out.push_back(matrix_to_json(m));
    return out;
}

int cmd_examples(const RunConfig& cfg, const std::string& name, double rate, const std::string& gains_s) {
    json out = {{"example", name}, {"rate", rate}};
    if (name == "rateless2") {
        const auto hs = rateless_channels(2, rate);
        const CMatrix cov = CMatrix::identity(2);
        std::vector<CMatrix> g;
        for (const auto& h : hs) g.push_back(canonical_matrix(h, cov));
        const NormalizedSet ns = normalize_equal_det(g);
        const JointFactors f = jet2(ns.matrices[0], ns.matrices[1]);
        const double q = std::exp2(rate / 4.0), s = std::sqrt(1.0 / (std::exp2(rate / 2.0) + 1.0));
        out["channels"] = matrices_json(hs);
        out["canonical"] = matrices_json(g);
        out["v"] = matrix_to_json(f.v);
        out["v_closed_form"] = matrix_to_json(CMatrix{{s, s * q}, {s * q, -s}});
        out["diag"] = f.diag;
    } else if (name == "rateless3") {
        const auto [a1, a2] = rateless3_reduce(rate);
        const ExistenceReport rep = check_2gmd(a1, a2);
        out["reduced"] = matrices_json({a1, a2});
        out["f1"] = rep.f_value;
        out["feasible"] = rep.feasible;
        out["critical_rate"] = rateless3_critical_rate();
        if (rep.feasible) {
            QuadraticWitness w;
            construct_2gmd(a1, a2, w);
            out["witness"] = {{"v1", {{w.v1[0].real(), w.v1[0].imag()}, {w.v1[1].real(), w.v1[1].imag()}}},
                              {"case", w.case_id},
                              {"residual", w.residual}};
        } else {
            out["reason"] = rep.failing;
        }
    } else if (name == "permuted") {
        std::vector<double> gains = parse_list(gains_s);
        if (gains.empty()) gains = {1.0, 2.0, 3.0};
        const auto hs = permuted_channels(gains);
        const CMatrix cov = CMatrix::identity(gains.size());
        const CMatrix v = dft_precoder(gains.size());
        json diags = json::array();
        for (const auto& h : hs) {
            const QrFactors f = qr(canonical_matrix(h, cov) * v);
            std::vector<double> d;
            for (std::size_t j = 0; j < f.r.rows(); ++j) d.push_back(f.r(j, j).real());
            diags.push_back(d);
        }
        MulticastProblem p{hs, cov, static_cast<double>(gains.size())};
        out["users"] = hs.size();
        out["precoder"] = matrix_to_json(v);
        out["diagonals"] = diags;
        out["multicast_rate"] = multicast_rate(p);
    } else if (name == "dof2" || name == "dof3") {
        const DofExample ex = dof_mismatch_example(rate, name == "dof2" ? DofVariant::TwoUser : DofVariant::ThreeUser);
        out["channels"] = matrices_json(ex.problem.users);
        out["canonical"] = matrices_json(ex.canonical);
        out["v_closed_form"] = matrix_to_json(ex.v);
        json mi = json::array();
        for (const auto& h : ex.problem.users) mi.push_back(mutual_info(h, ex.problem.cov));
        out["mutual_info"] = mi;
        if (name == "dof3") {
            out["t_closed_form"] = matrices_json(ex.t);
            const double scale = std::exp2(rate / 4.0);
            const UpperLowerFactors f =
                construct_upper_lower((1.0 / scale) * ex.canonical[1], (1.0 / scale) * ex.canonical[2]);
            out["v"] = matrix_to_json(f.v);
            out["t"] = matrices_json({f.v.adjoint() * ex.canonical[0] * f.v, scale * f.r1_upper, scale * f.r2_lower});
        } else {
            const NormalizedSet ns = normalize_equal_det(ex.canonical);
            const JointFactors f = jet2(ns.matrices[0], ns.matrices[1]);
            out["v"] = matrix_to_json(f.v);
        }
    } else {
        throw Error(ErrorCode::ParseError, "unknown example " + name);
    }
    emit_json(cfg, out);
    return 0;
}

MulticastProblem problem_from_json(const json& j) {
    if (!j.is_object() || !j.contains("users") || !j.contains("cov"))
        throw Error(ErrorCode::ParseError, "problem needs users and cov");
    MulticastProblem p;
    p.users = matrices_from_json(j["users"]);
    p.cov = matrix_from_json(j["cov"]);
    p.power = j.value("power", 0.0);
    if (p.power == 0.0)
        for (std::size_t i = 0; i < p.cov.rows(); ++i) p.power += p.cov(i, i).real();
    return p;
}

int cmd_simulate(const RunConfig& cfg, const std::string& factors_kind, std::size_t n_ext, bool noiseless) {
    const MulticastProblem p = problem_from_json(read_input(cfg));
    validate_problem(p);
    std::vector<CMatrix> g;
    for (const auto& h : p.users) g.push_back(canonical_matrix(h, p.cov));
    SicOptions opt;
    opt.trials = cfg.trials;
    opt.seed = cfg.seed;
    opt.noiseless = noiseless;
    std::vector<SicReport> reports;
    if (factors_kind == "svd" || factors_kind == "gmd") {
        if (g.size() != 1) throw Error(ErrorCode::DimensionMismatch, factors_kind + " factors need a single user");
        JointFactors f;
        if (factors_kind == "svd") {
            const SvdFactors s = svd(g[0]);
            f.v = s.v;
            f.users.push_back({s.u, CMatrix::diag(s.sigma)});
        } else {
            const GtdFactors s = gmd(g[0]);
            f.v = s.v;
            f.users.push_back({s.u, s.r});
        }
        reports = simulate_sic(p, f, opt);
    } else if (factors_kind == "jet") {
        const NormalizedSet ns = normalize_equal_det(g);
        const JointFactors f = ns.matrices.size() == 2 ? jet2(ns.matrices[0], ns.matrices[1])
                                                       : kgmd_to_kjet(ns.matrices);
        reports = simulate_sic(p, f, opt);
    } else if (factors_kind == "kgmd") {
        reports = simulate_sic(p, kgmd_exact(normalize_equal_det(g).matrices), opt);
    } else if (factors_kind == "spacetime") {
        reports = simulate_sic(p, nearly_kjet(normalize_equal_det(g).matrices, n_ext), opt);
    } else {
        throw Error(ErrorCode::ParseError, "unknown factors source " + factors_kind);
    }
    if (cfg.format == "csv") {
        std::ostringstream out;
        out << "user,stream,predicted_snr,measured_snr,std_error\n";
        for (std::size_t k = 0; k < reports.size(); ++k)
            for (std::size_t s = 0; s < reports[k].streams.size(); ++s) {
                const auto& st = reports[k].streams[s];
                out << k + 1 << "," << s + 1 << "," << fmt12(st.predicted_snr) << "," << fmt12(st.measured_snr) << ","
                    << fmt12(st.std_error) << "\n";
            }
        emit(cfg, out.str());
    } else {
        emit_json(cfg, sic_reports_to_json(reports));
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Joint triangularization toolkit for MIMO multicast"};
    app.fallthrough();
    app.require_subcommand(1);
    RunConfig cfg;
    auto* in_opt = app.add_option("--input", cfg.input_path, "JSON input file");
    auto* inl_opt = app.add_option("--inline", cfg.inline_json, "JSON input text");
    in_opt->excludes(inl_opt);
    app.add_option("--out", cfg.out_path, "output file (stdout when absent)");
    app.add_option("--format", cfg.format, "output format")->check(CLI::IsMember({"json", "csv"}));
    app.add_option("--seed", cfg.seed, "random seed");
    app.add_option("--trials", cfg.trials, "Monte-Carlo trials")->check(CLI::PositiveNumber);
    app.add_option("--tol", cfg.tol, "residual threshold for the ok flag")->check(CLI::PositiveNumber);

    std::string kind = "gmd", target, blocks, dets;
    auto* dec = app.add_subcommand("decompose", "single and joint decompositions");
    dec->add_option("--kind", kind, "gtd|gmd|jet|kgmd|upper-lower|block")
        ->check(CLI::IsMember({"gtd", "gmd", "jet", "kgmd", "upper-lower", "block"}));
    dec->add_option("--target", target, "comma-separated target diagonal (gtd)");
    dec->add_option("--blocks", blocks, "comma-separated block sizes (block)");
    dec->add_option("--dets", dets, "comma-separated block |det| values (block)");

    std::size_t n_ext = 1;
    std::string mode = "gmd";
    auto* st = app.add_subcommand("spacetime", "nearly-optimal space-time decompositions");
    st->add_option("--n-ext", n_ext, "number of channel uses N")->required()->check(CLI::PositiveNumber);
    st->add_option("--mode", mode, "gmd|jet")->check(CLI::IsMember({"gmd", "jet"}));

    auto* tab = app.add_subcommand("tables", "channel uses needed per capacity fraction");

    std::string example = "rateless3", gains;
    double rate = 4.0;
    auto* ex = app.add_subcommand("examples", "worked channel examples");
    ex->add_option("--name", example, "rateless2|rateless3|permuted|dof2|dof3")
        ->check(CLI::IsMember({"rateless2", "rateless3", "permuted", "dof2", "dof3"}));
    ex->add_option("--rate", rate, "point-to-point capacity C in bits")->check(CLI::PositiveNumber);
    ex->add_option("--gains", gains, "comma-separated gains (permuted)");

    std::string factors = "gmd";
    bool noiseless = false;
    auto* sim = app.add_subcommand("simulate", "SIC Monte-Carlo over a multicast problem");
    sim->add_option("--factors", factors, "svd|gmd|jet|kgmd|spacetime")
        ->check(CLI::IsMember({"svd", "gmd", "jet", "kgmd", "spacetime"}));
    sim->add_option("--n-ext", n_ext, "channel uses for spacetime factors")->check(CLI::PositiveNumber);
    sim->add_flag("--noiseless", noiseless, "suppress receiver noise");

    auto* fmt_opt = app.get_option("--format");
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }
    // Tables default to CSV, everything else to JSON.
    if (tab->parsed() && fmt_opt->count() == 0) cfg.format = "csv";

    try {
        if (dec->parsed()) return cmd_decompose(cfg, kind, target, blocks, dets);
        if (st->parsed()) return cmd_spacetime(cfg, n_ext, mode);
        if (tab->parsed()) return cmd_tables(cfg);
        if (ex->parsed()) return cmd_examples(cfg, example, rate, gains);
        if (sim->parsed()) return cmd_simulate(cfg, factors, n_ext, noiseless);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code(e.code());
    } catch (const json::exception& e) {
        std::cerr << "error: ParseError: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
