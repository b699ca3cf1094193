#pragma once

#include "plap/cli/config.hpp"
#include "plap/parallel.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <functional>

#ifndef PLAP_VERSION
#define PLAP_VERSION "unknown"
#endif

namespace plap::cli {

// ----------------------------------------------------------------------------
// Formatting
// ----------------------------------------------------------------------------

inline std::string fmt(double v)
{
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

/// Short form for identifiers and file names.
inline std::string short_fmt(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

inline std::uint64_t fnv1a(std::string_view s)
{
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

inline std::string hex64(std::uint64_t v)
{
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

/// Comma-separated table with a fixed column order.
class CsvTable {
public:
    explicit CsvTable(std::vector<std::string> columns) : columns_(std::move(columns)) {}

    void add(std::vector<std::string> row)
    {
        if (row.size() != columns_.size()) throw std::logic_error("CsvTable: row width mismatch");
        rows_.push_back(std::move(row));
    }
    void add(const std::vector<double>& row)
    {
        std::vector<std::string> s;
        for (double v : row) s.push_back(fmt(v));
        add(std::move(s));
    }
    [[nodiscard]] std::size_t rows() const { return rows_.size(); }
    [[nodiscard]] std::string str() const
    {
        std::string out;
        auto line = [&](const std::vector<std::string>& r) {
            for (std::size_t i = 0; i < r.size(); ++i) out += (i ? "," : "") + r[i];
            out += '\n';
        };
        line(columns_);
        for (const auto& r : rows_) line(r);
        return out;
    }

private:
    std::vector<std::string> columns_;
    std::vector<std::vector<std::string>> rows_;
};

// ----------------------------------------------------------------------------
// Block results
// ----------------------------------------------------------------------------

struct OutputFile {
    std::string name;
    std::string content;
};

/// One checked claim as listed in the summary.
struct ClaimLine {
    std::string name;
    Verdict verdict = Verdict::skipped;
    std::string detail;
};

struct BlockResult {
    std::string kind;
    std::string name;
    std::vector<OutputFile> files;
    std::vector<ClaimLine> claims;
    std::vector<std::pair<std::string, std::string>> fields;
    double seconds = 0.0;

    void field(std::string k, std::string v) { fields.emplace_back(std::move(k), std::move(v)); }
    void field(std::string k, double v) { fields.emplace_back(std::move(k), fmt(v)); }
    void claim(std::string n, Verdict v, std::string d = {}) { claims.push_back({std::move(n), v, std::move(d)}); }
    void skip(const std::string& why) { claim("preconditions", Verdict::skipped, why); }
};

enum class Command { constants, sweep, fit, threshold, dominance, fem, report };

inline const char* to_string(Command c)
{
    switch (c) {
    case Command::constants: return "constants";
    case Command::sweep: return "sweep";
    case Command::fit: return "fit";
    case Command::threshold: return "threshold";
    case Command::dominance: return "dominance";
    case Command::fem: return "fem";
    case Command::report: return "report";
    }
    return "?";
}

inline std::optional<Command> parse_command(const std::string& s)
{
    for (Command c : {Command::constants, Command::sweep, Command::fit, Command::threshold, Command::dominance,
                      Command::fem, Command::report})
        if (s == to_string(c)) return c;
    return std::nullopt;
}

struct RunOptions {
    std::string out_dir;
    bool reproducible = false;
    int workers = 1;
    std::optional<double> quadrature_tol;
};

// ----------------------------------------------------------------------------
// Block runners
// ----------------------------------------------------------------------------

namespace detail {

inline void add_checks(BlockResult& r, const ExpansionReport& rep)
{
    for (const auto& c : rep.checks) {
        std::string d = c.detail;
        if (c.expected != 0.0 || c.observed != 0.0)
            d = "observed=" + fmt(c.observed) + " expected=" + fmt(c.expected) + (d.empty() ? "" : " " + d);
        r.claim(c.name, c.verdict, d);
    }
    for (const auto& [k, v] : rep.metrics) r.field("metric." + k, v);
}

inline BlockResult run_constants(const ConstantsBlock& b, const ExperimentConfig& cfg)
{
    BlockResult r{"constants", "n" + std::to_string(b.n) + "_p" + short_fmt(b.p)};
    const ProblemParams pp(b.n, b.p);
    const auto k = compute_constants(pp, cfg.quadrature);
    const auto o = closed_form_constants(pp);
    const auto sc = sobolev_constant(pp, cfg.quadrature);
    auto rel = [](double a, double e) { return std::abs(a - e) / std::abs(e); };
    const auto& tol = cfg.tolerances;
    CsvTable t({"n", "p", "Sigma", "c1", "c2", "c_tilde", "S", "threshold", "d_Sigma", "d_c1", "d_c2", "d_c_tilde",
                "sigma_identity_residual"});
    const std::string c1s = k.c1 ? fmt(*k.c1) : to_string(k.c1_status);
    const std::string cts = k.c_tilde ? fmt(*k.c_tilde) : to_string(k.c_tilde_status);
    const std::string d1 = k.c1 ? fmt(rel(*k.c1, *o.c1)) : "";
    const std::string dt = k.c_tilde ? fmt(rel(*k.c_tilde, *o.c_tilde)) : "";
    t.add({std::to_string(b.n), fmt(b.p), fmt(k.sigma), c1s, fmt(k.c2), cts, fmt(k.S), fmt(k.threshold),
           fmt(rel(k.sigma, o.sigma)), d1, fmt(rel(k.c2, o.c2)), dt, fmt(sc.sigma_identity_residual)});
    r.files.push_back({"constants_" + r.name + ".csv", t.str()});

    auto check = [&](const std::string& name, double d, double lim) {
        r.claim(name, d < lim ? Verdict::pass : Verdict::fail, "relative deviation " + fmt(d));
    };
    check("Sigma matches Beta closed form", rel(k.sigma, o.sigma), tol.constants);
    check("c2 matches Beta closed form", rel(k.c2, o.c2), tol.constants);
    if (k.c1)
        check("c1 matches Beta closed form", rel(*k.c1, *o.c1), tol.constants);
    else
        r.claim("c1 matches Beta closed form", Verdict::skipped, std::string("c1 ") + to_string(k.c1_status));
    if (k.c_tilde)
        check("c_tilde matches Beta closed form", rel(*k.c_tilde, *o.c_tilde), tol.constants);
    else
        r.claim("c_tilde matches Beta closed form", Verdict::skipped,
                std::string("(p-1)^2 >= n-p: c_tilde ") + to_string(k.c_tilde_status));
    check("Sigma-S identity", sc.sigma_identity_residual, tol.identity);
    check("half-bubble level equals S/2^{p/n}", rel(half_bubble_level(pp, k.sigma), k.threshold), tol.identity);
    return r;
}

inline std::string sweep_table(const std::vector<EnergyComponents>& s, double threshold)
{
    CsvTable t({"lambda", "grad_term", "alpha_term", "beta_term", "mass", "norm_p", "J", "threshold"});
    for (const auto& e : s) t.add(std::vector<double>{e.lambda, e.grad_term, e.alpha_term, e.beta_term, e.mass,
                                                      e.norm_p, e.J, threshold});
    return t.str();
}

inline BlockResult run_sweep(const SweepBlock& b, const ExperimentConfig& cfg, bool verify)
{
    BlockResult r{verify ? "fit" : "sweep", b.name};
    const ProblemParams pp(b.domain.n, b.p);
    const auto dom = b.domain.build();
    r.field("claim", to_string(b.claim));
    r.field("n", std::to_string(pp.n));
    r.field("p", b.p);
    r.field("H", dom.mean_curvature());
    SweepOptions so;
    so.quadrature = cfg.quadrature;
    try {
        const auto s = sweep(dom, b.potential, pp, b.lambda_grid, so);
        r.files.push_back({"sweep_" + b.name + ".csv", sweep_table(s, threshold_level(pp, cfg.quadrature))});
    } catch (const std::invalid_argument& e) {
        r.skip(e.what());
        return r;
    }
    if (!verify) return r;

    VerifyOptions vo;
    vo.sweep = so;
    vo.coefficient_tol = cfg.tolerances.coefficient;
    vo.flat_noise_fraction = cfg.tolerances.flat_noise_fraction;
    vo.leading_tol = cfg.tolerances.leading;
    try {
        ExpansionReport rep;
        switch (b.claim) {
        case Claim::gradient: rep = verify_gradient_expansion(dom, pp, b.lambda_grid, vo); break;
        case Claim::mass: rep = verify_mass_expansion(dom, pp, b.lambda_grid, vo); break;
        case Claim::alpha: rep = verify_alpha_smallness(dom, pp, b.potential.alpha, b.lambda_grid, vo); break;
        case Claim::beta: rep = verify_beta_expansion(dom, pp, b.potential.beta, b.lambda_grid, vo); break;
        case Claim::quotient: rep = verify_quotient_expansion(dom, pp, b.lambda_grid, vo); break;
        }
        r.field("report", rep.claim);
        add_checks(r, rep);
        if (rep.fit) {
            const auto& f = *rep.fit;
            r.field("fit.model", to_string(f.model));
            r.field("fit.exponent", f.e);
            r.field("fit.K", f.K);
            if (f.model == FitModel::power_log) r.field("fit.K0", f.K0);
            r.field("fit.rms_residual", f.rms_residual);
        }
        CsvTable t({"lambda", "value", "baseline"});
        for (std::size_t i = 0; i < rep.lambda_grid.size(); ++i)
            t.add(std::vector<double>{rep.lambda_grid[i], rep.values[i],
                                      i < rep.baseline.size() ? rep.baseline[i] : std::nan("")});
        r.files.push_back({"fit_" + b.name + ".csv", t.str()});
    } catch (const PreconditionFailed& e) {
        r.skip(e.what());
    } catch (const FitDegenerate& e) {
        r.claim("fit", Verdict::fail, std::string("degenerate fit: ") + e.what());
    }
    return r;
}

inline BlockResult run_threshold(const ThresholdBlock& b, const ExperimentConfig& cfg)
{
    BlockResult r{"threshold", b.name};
    const ProblemParams pp(b.domain.n, b.p);
    SweepOptions so;
    so.quadrature = cfg.quadrature;
    const auto t = threshold_check(b.domain.build(), b.potential, pp, b.lambda, so);
    r.field("lambda", b.lambda);
    r.field("J", t.J);
    r.field("threshold", t.threshold);
    r.field("below", t.below ? "true" : "false");
    CsvTable tab({"lambda", "J", "threshold", "below"});
    tab.add({fmt(b.lambda), fmt(t.J), fmt(t.threshold), t.below ? "1" : "0"});
    r.files.push_back({"threshold_" + b.name + ".csv", tab.str()});
    if (b.expect_below)
        r.claim(*b.expect_below ? "J below S/2^{p/n}" : "J at or above S/2^{p/n}",
                t.below == *b.expect_below ? Verdict::pass : Verdict::fail, "J=" + fmt(t.J) + " threshold=" + fmt(t.threshold));
    return r;
}

inline BlockResult run_dominance(const DominanceBlock& b, const ExperimentConfig& cfg)
{
    BlockResult r{"dominance", b.name};
    const ProblemParams pp(b.domain.n, b.p);
    DominanceOptions opt;
    opt.sweep.quadrature = cfg.quadrature;
    opt.balance_tol = cfg.tolerances.balance;
    try {
        const auto d = dominance_report(pp, b.domain.build(), b.beta, b.lambda_grid, opt);
        CsvTable t({"channel", "exponent"});
        t.add({"H", fmt(d.h_fit.exponent)});
        t.add({"beta", fmt(d.beta_fit.exponent)});
        std::string text = t.str() + "verdict," + to_string(d.dominant) + "\n";
        r.files.push_back({"dominance_" + b.name + ".csv", text});
        CsvTable ch({"lambda", "h_channel", "beta_channel"});
        for (std::size_t i = 0; i < d.lambda_grid.size(); ++i)
            ch.add(std::vector<double>{d.lambda_grid[i], d.h_channel[i], d.beta_channel[i]});
        r.files.push_back({"dominance_" + b.name + "_channels.csv", ch.str()});
        const double tol = cfg.tolerances.exponent;
        r.claim("H exponent near p-1", std::abs(d.h_fit.exponent - d.expected_h) <= tol ? Verdict::pass : Verdict::fail,
                "observed=" + fmt(d.h_fit.exponent) + " expected=" + fmt(d.expected_h));
        r.claim("beta exponent near (p-1)^2",
                std::abs(d.beta_fit.exponent - d.expected_beta) <= tol ? Verdict::pass : Verdict::fail,
                "observed=" + fmt(d.beta_fit.exponent) + " expected=" + fmt(d.expected_beta));
        r.claim("dominance verdict", d.dominant == d.expected ? Verdict::pass : Verdict::fail,
                std::string("observed=") + to_string(d.dominant) + " expected=" + to_string(d.expected));
        r.field("verdict", to_string(d.dominant));
    } catch (const PreconditionFailed& e) {
        r.skip(e.what());
    }
    return r;
}

inline BlockResult run_fem(const FemBlock& b, const ExperimentConfig& cfg)
{
    BlockResult r{"fem", b.name};
    const auto mesh = fem::triangulate(b.outline, b.h);
    std::ostringstream ms;
    fem::write_mesh(ms, mesh);
    r.files.push_back({"fem_" + b.name + "_mesh.txt", ms.str()});
    try {
        const auto rep = fem::quotient_vs_threshold(mesh, b.levels, b.p, b.potential, b.schedule,
                                                    cfg.tolerances.refinement);
        CsvTable t({"h", "q_used", "Q_estimate", "threshold", "below", "iterations"});
        for (const auto& row : rep.rows)
            t.add({fmt(row.h), fmt(row.q_used), fmt(row.Q_estimate), fmt(row.threshold), row.below ? "1" : "0",
                   std::to_string(row.iterations)});
        r.files.push_back({"fem_" + b.name + ".csv", t.str()});
        r.field("Q_estimate", rep.rows.back().Q_estimate);
        r.field("threshold", rep.threshold);
        r.field("converged", rep.rows.back().converged ? "true" : "false");
        if (b.levels > 0)
            r.claim("refinement monotone", rep.monotone ? Verdict::pass : Verdict::fail,
                    "max increase " + fmt(rep.max_increase));
        if (b.expect_below)
            r.claim(*b.expect_below ? "Q below S/2^{p/n}" : "Q at or above S/2^{p/n}",
                    rep.final_below() == *b.expect_below ? Verdict::pass : Verdict::fail,
                    "Q=" + fmt(rep.rows.back().Q_estimate) + " threshold=" + fmt(rep.threshold));
    } catch (const NonCoercive& e) {
        r.skip(std::string("non-coercive: ") + e.what());
    }
    return r;
}

} // namespace detail

// ----------------------------------------------------------------------------
// Orchestration
// ----------------------------------------------------------------------------

struct RunOutcome {
    int exit_code = 0;
    std::vector<BlockResult> blocks;
    std::string summary;
    std::size_t pass = 0, fail = 0, skipped = 0;
};

inline std::string usage()
{
    return "usage: plap_cli <constants|sweep|fit|threshold|dominance|fem|report> --config <path>\n"
           "                [--out <dir>] [--reproducible] [--workers <k>] [--tol <x>]\n"
           "\n"
           "The config is a JSON document with any of the blocks\n"
           "  constants, sweeps, thresholds, dominance, fem\n"
           "plus optional output, reproducible, workers, tolerances and quadrature settings.\n";
}

/// Runs the blocks selected by `cmd`, writes one file set per block and a
/// summary last. Exit code 0: every claim passed or was skipped; 1: a claim failed.
inline RunOutcome run(const ExperimentConfig& cfg_in, Command cmd, const RunOptions& ro)
{
    ExperimentConfig cfg = cfg_in;
    if (ro.quadrature_tol) cfg.quadrature.rel_tol = *ro.quadrature_tol;
    const bool reproducible = ro.reproducible || cfg.reproducible;
    const std::string out_dir = ro.out_dir.empty() ? cfg.output : ro.out_dir;
    const int workers = std::max(ro.workers, 1);

    using Job = std::function<BlockResult()>;
    std::vector<Job> jobs;
    auto want = [&](Command c) { return cmd == c || cmd == Command::report; };
    if (want(Command::constants))
        for (const auto& b : cfg.constants) jobs.push_back([&cfg, b] { return detail::run_constants(b, cfg); });
    if (cmd == Command::sweep)
        for (const auto& b : cfg.sweeps) jobs.push_back([&cfg, b] { return detail::run_sweep(b, cfg, false); });
    if (want(Command::fit))
        for (const auto& b : cfg.sweeps) jobs.push_back([&cfg, b] { return detail::run_sweep(b, cfg, true); });
    if (want(Command::threshold))
        for (const auto& b : cfg.thresholds) jobs.push_back([&cfg, b] { return detail::run_threshold(b, cfg); });
    if (want(Command::dominance))
        for (const auto& b : cfg.dominance) jobs.push_back([&cfg, b] { return detail::run_dominance(b, cfg); });
    if (want(Command::fem))
        for (const auto& b : cfg.fem) jobs.push_back([&cfg, b] { return detail::run_fem(b, cfg); });
    if (jobs.empty()) throw ConfigError(std::string("config has no blocks for command '") + to_string(cmd) + "'");

    RunOutcome out;
    out.blocks.resize(jobs.size());
    parallel_for(jobs.size(), workers, [&](std::size_t i) {
        const auto t0 = std::chrono::steady_clock::now();
        out.blocks[i] = jobs[i]();
        out.blocks[i].seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    });

    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw std::runtime_error(out_dir + ": cannot create output directory: " + ec.message());
    auto write = [&](const std::string& name, const std::string& content) {
        const auto path = fs::path(out_dir) / name;
        std::ofstream f(path, std::ios::binary);
        if (!f) throw std::runtime_error(path.string() + ": cannot open for writing");
        f << content;
        if (!f) throw std::runtime_error(path.string() + ": write failed");
    };

    std::ostringstream s;
    const auto& q = cfg.quadrature;
    s << "version = " << PLAP_VERSION << '\n'
      << "command = " << to_string(cmd) << '\n'
      << "config_hash = fnv1a64:" << hex64(fnv1a(cfg.canonical)) << '\n'
      << "reproducible = " << (reproducible ? "true" : "false") << '\n'
      << "quadrature.nodes_radial = " << q.nodes_radial << '\n'
      << "quadrature.nodes_angular = " << q.nodes_angular << '\n'
      << "quadrature.nodes_normal = " << q.nodes_normal << '\n'
      << "quadrature.rel_tol = " << fmt(q.rel_tol) << '\n'
      << "quadrature.abs_tol = " << fmt(q.abs_tol) << '\n'
      << "quadrature.grading_levels = " << q.grading_levels << '\n'
      << "quadrature.max_intervals = " << q.max_intervals << '\n'
      << "fem.triangle_rule = 7-point degree 5\n"
      << "fem.edge_rule = 4-point Gauss-Legendre\n";
    if (!reproducible) s << "workers = " << workers << '\n';
    for (const auto& b : out.blocks) {
        for (const auto& f : b.files) write(f.name, f.content);
        s << "\n[" << b.kind << ' ' << b.name << "]\n";
        for (const auto& [k, v] : b.fields) s << k << " = " << v << '\n';
        for (const auto& f : b.files) s << "file = " << f.name << '\n';
        Verdict overall = b.claims.empty() ? Verdict::skipped : Verdict::pass;
        bool any_pass = false;
        for (const auto& c : b.claims) {
            s << "claim \"" << c.name << "\" = " << to_string(c.verdict);
            if (!c.detail.empty()) s << " (" << c.detail << ')';
            s << '\n';
            if (c.verdict == Verdict::pass) ++out.pass, any_pass = true;
            if (c.verdict == Verdict::fail) ++out.fail, overall = Verdict::fail;
            if (c.verdict == Verdict::skipped) ++out.skipped;
        }
        if (overall != Verdict::fail) overall = any_pass ? Verdict::pass : Verdict::skipped;
        s << "status = " << (b.claims.empty() ? "RAN" : to_string(overall)) << '\n';
        if (!reproducible) s << "elapsed_seconds = " << fmt(b.seconds) << '\n';
    }
    s << "\n[totals]\npass = " << out.pass << "\nfail = " << out.fail << "\nskipped = " << out.skipped << '\n';
    out.summary = s.str();
    write("summary.txt", out.summary);
    out.exit_code = out.fail ? 1 : 0;
    return out;
}

} // namespace plap::cli
