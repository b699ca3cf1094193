#pragma once

#include "plap/asymptotics.hpp"
#include "plap/fem2d.hpp"

#include <json.hpp>

#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace plap::cli {

using json = nlohmann::json;

/// PASS/FAIL thresholds; defaults follow the acceptance targets.
struct Tolerances {
    double constants = 1e-8;
    double identity = 1e-6;
    double coefficient = 0.05;
    double quotient_coefficient = 0.07;
    double leading = 1e-6;
    double flat_noise_fraction = 1e-2;
    double log_stability = 0.1;
    double exponent = 0.05;
    double balance = 0.1;
    double refinement = 1e-3;
};

struct DomainSpec {
    int n = 2;
    double r_out = 1.0;
    std::vector<double> gamma;
    double cubic_bound = 0.0;
    std::uint64_t seed = 0;

    [[nodiscard]] ModelDomain build() const { return ModelDomain(n, r_out, gamma, cubic_bound, seed); }
};

struct ConstantsBlock {
    int n = 2;
    double p = 1.5;
};

enum class Claim { gradient, mass, alpha, beta, quotient };

inline const char* to_string(Claim c)
{
    switch (c) {
    case Claim::gradient: return "gradient";
    case Claim::mass: return "mass";
    case Claim::alpha: return "alpha";
    case Claim::beta: return "beta";
    case Claim::quotient: return "quotient";
    }
    return "?";
}

struct SweepBlock {
    std::string name;
    Claim claim = Claim::gradient;
    double p = 1.5;
    DomainSpec domain;
    PotentialSpec potential;
    std::vector<double> lambda_grid;
};

struct ThresholdBlock {
    std::string name;
    double p = 1.5;
    DomainSpec domain;
    PotentialSpec potential;
    double lambda = 100.0;
    std::optional<bool> expect_below;
};

struct DominanceBlock {
    std::string name;
    double p = 1.5;
    DomainSpec domain;
    double beta = 1.0;
    std::vector<double> lambda_grid;
};

struct FemBlock {
    std::string name;
    fem::LabeledPolygon outline;
    double h = 0.1;
    int levels = 0;
    double p = 1.4;
    PotentialSpec potential;
    fem::ContinuationSchedule schedule;
    std::optional<bool> expect_below;
};

struct ExperimentConfig {
    std::string output = "out";
    bool reproducible = false;
    int workers = 1;
    Tolerances tolerances;
    QuadratureConfig quadrature;
    std::vector<ConstantsBlock> constants;
    std::vector<SweepBlock> sweeps;
    std::vector<ThresholdBlock> thresholds;
    std::vector<DominanceBlock> dominance;
    std::vector<FemBlock> fem;
    std::string canonical; ///< normalised JSON text, the input of the config hash

    [[nodiscard]] bool empty() const
    {
        return constants.empty() && sweeps.empty() && thresholds.empty() && dominance.empty() && fem.empty();
    }
};

namespace detail {

class Reader {
public:
    Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {}

    [[noreturn]] void fail(const std::string& what) const { throw ConfigError(path_ + ": " + what); }

    [[nodiscard]] Reader at(const std::string& key) const
    {
        if (!j_.is_object() || !j_.contains(key)) fail("missing field '" + key + "'");
        return Reader(j_.at(key), path_ + "." + key);
    }
    [[nodiscard]] Reader at(std::size_t i) const { return Reader(j_.at(i), path_ + "[" + std::to_string(i) + "]"); }
    [[nodiscard]] bool has(const std::string& key) const { return j_.is_object() && j_.contains(key); }
    [[nodiscard]] const json& raw() const { return j_; }
    [[nodiscard]] const std::string& path() const { return path_; }

    [[nodiscard]] double number() const
    {
        if (!j_.is_number()) fail("expected a number");
        return j_.get<double>();
    }
    [[nodiscard]] int integer() const
    {
        if (!j_.is_number_integer()) fail("expected an integer");
        return j_.get<int>();
    }
    [[nodiscard]] bool boolean() const
    {
        if (!j_.is_boolean()) fail("expected true or false");
        return j_.get<bool>();
    }
    [[nodiscard]] std::string string() const
    {
        if (!j_.is_string()) fail("expected a string");
        return j_.get<std::string>();
    }
    [[nodiscard]] std::size_t size() const
    {
        if (!j_.is_array()) fail("expected an array");
        return j_.size();
    }
    [[nodiscard]] std::vector<double> numbers() const
    {
        std::vector<double> v;
        for (std::size_t i = 0; i < size(); ++i) v.push_back(at(i).number());
        return v;
    }

    double number_or(const std::string& key, double d) const { return has(key) ? at(key).number() : d; }
    int integer_or(const std::string& key, int d) const { return has(key) ? at(key).integer() : d; }
    bool boolean_or(const std::string& key, bool d) const { return has(key) ? at(key).boolean() : d; }
    std::string string_or(const std::string& key, std::string d) const { return has(key) ? at(key).string() : d; }

    void only(std::initializer_list<const char*> allowed) const
    {
        if (!j_.is_object()) fail("expected an object");
        for (const auto& [k, v] : j_.items()) {
            bool ok = false;
            for (const char* a : allowed) ok = ok || k == a;
            if (!ok) fail("unknown field '" + k + "'");
        }
    }

private:
    const json& j_;
    std::string path_;
};

inline Polynomial read_polynomial(const Reader& r)
{
    if (r.raw().is_number()) return Polynomial::constant(r.number());
    Polynomial poly;
    for (std::size_t i = 0; i < r.size(); ++i) {
        const auto t = r.at(i);
        t.only({"coef", "powers"});
        Monomial m;
        m.coef = t.at("coef").number();
        if (t.has("powers")) {
            const auto pw = t.at("powers");
            for (std::size_t k = 0; k < pw.size(); ++k) {
                const int e = pw.at(k).integer();
                if (e < 0) pw.at(k).fail("exponents must be non-negative");
                m.powers.push_back(e);
            }
        }
        poly.terms.push_back(m);
    }
    return poly;
}

inline PotentialSpec read_potential(const Reader& r)
{
    PotentialSpec pot;
    if (r.has("alpha")) pot.alpha = read_polynomial(r.at("alpha"));
    if (r.has("beta")) pot.beta = read_polynomial(r.at("beta"));
    return pot;
}

inline double read_p(const Reader& r, int n)
{
    const double p = r.at("p").number();
    if (!(p > 1.0 && p < n)) r.at("p").fail("need 1 < p < n (n = " + std::to_string(n) + ")");
    return p;
}

inline DomainSpec read_domain(const Reader& r)
{
    DomainSpec d;
    d.n = r.at("n").integer();
    if (d.n < 2) r.at("n").fail("dimension must be >= 2");
    d.r_out = r.number_or("r_out", 1.0);
    d.gamma = r.has("gamma") ? r.at("gamma").numbers() : std::vector<double>(d.n - 1, 0.0);
    if (static_cast<int>(d.gamma.size()) != d.n - 1) r.at("gamma").fail("expected n - 1 curvatures");
    d.cubic_bound = r.number_or("cubic_bound", 0.0);
    d.seed = static_cast<std::uint64_t>(r.integer_or("seed", 0));
    return d;
}

inline std::vector<double> read_grid(const Reader& r, const std::string& key, std::vector<double> fallback)
{
    if (!r.has(key)) return fallback;
    const auto g = r.at(key).numbers();
    if (g.size() < 2) r.at(key).fail("need at least two lambda values");
    for (std::size_t i = 0; i < g.size(); ++i)
        if (!(g[i] > 0.0) || (i && !(g[i] > g[i - 1]))) r.at(key).fail("lambda values must be positive and increasing");
    return g;
}

inline fem::BoundaryLabel read_label(const Reader& r)
{
    const auto s = r.string();
    if (s == "G0") return fem::BoundaryLabel::gamma0;
    if (s == "G1") return fem::BoundaryLabel::gamma1;
    r.fail("label must be \"G0\" or \"G1\"");
}

inline fem::LabeledPolygon read_outline(const Reader& r)
{
    const auto type = r.at("type").string();
    if (type == "half_disk") {
        r.only({"type", "segments", "radius", "arc", "flat"});
        const int seg = r.integer_or("segments", 64);
        if (seg < 2) r.at("segments").fail("need at least two arc segments");
        const auto arc = r.has("arc") ? read_label(r.at("arc")) : fem::BoundaryLabel::gamma0;
        const auto flat = r.has("flat") ? read_label(r.at("flat")) : fem::BoundaryLabel::gamma1;
        return fem::half_disk_outline(seg, arc, flat, r.number_or("radius", 1.0));
    }
    if (type == "polygon") {
        r.only({"type", "points", "labels"});
        fem::LabeledPolygon poly;
        const auto pts = r.at("points");
        for (std::size_t i = 0; i < pts.size(); ++i) {
            const auto xy = pts.at(i).numbers();
            if (xy.size() != 2) pts.at(i).fail("expected [x, y]");
            poly.points.push_back({xy[0], xy[1]});
        }
        const auto labs = r.at("labels");
        for (std::size_t i = 0; i < labs.size(); ++i) poly.labels.push_back(read_label(labs.at(i)));
        if (poly.labels.size() != poly.points.size()) labs.fail("need one label per segment");
        return poly;
    }
    r.at("type").fail("outline type must be \"half_disk\" or \"polygon\"");
}

inline fem::ContinuationSchedule read_schedule(const Reader& r)
{
    r.only({"stages", "q_margin", "exact_critical", "eps_start", "eps_end", "max_iterations", "tolerance", "seed"});
    fem::ContinuationSchedule s;
    s.stages = r.integer_or("stages", s.stages);
    s.q_margin = r.number_or("q_margin", s.q_margin);
    s.exact_critical = r.boolean_or("exact_critical", s.exact_critical);
    s.eps_start = r.number_or("eps_start", s.eps_start);
    s.eps_end = r.number_or("eps_end", s.eps_end);
    s.max_iterations_per_stage = r.integer_or("max_iterations", s.max_iterations_per_stage);
    s.tolerance = r.number_or("tolerance", s.tolerance);
    if (r.has("seed")) s.seed = static_cast<std::uint64_t>(r.at("seed").integer());
    if (s.stages < 1) r.at("stages").fail("need at least one stage");
    if (!(s.eps_start >= s.eps_end && s.eps_end >= 0.0)) r.fail("need eps_start >= eps_end >= 0");
    if (!(s.q_margin >= 0.0)) r.at("q_margin").fail("margin must be non-negative");
    return s;
}

template <class F>
void for_each_block(const Reader& root, const char* key, F&& f)
{
    if (!root.has(key)) return;
    const auto arr = root.at(key);
    for (std::size_t i = 0; i < arr.size(); ++i) f(arr.at(i), i);
}

inline std::string block_name(const Reader& r, const char* kind, std::size_t i)
{
    auto name = r.string_or("name", std::string(kind) + "_" + std::to_string(i));
    for (char c : name)
        if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.'))
            r.at("name").fail("names may only use letters, digits, '_', '-' and '.'");
    return name;
}

inline std::pair<int, int> line_column(const std::string& text, std::size_t byte)
{
    int line = 1, col = 1;
    for (std::size_t i = 0; i + 1 < byte && i < text.size(); ++i) {
        if (text[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    return {line, col};
}

} // namespace detail

/// Parses and validates a JSON experiment config; errors name the offending
/// line or field path.
inline ExperimentConfig parse_config(const std::string& text, const std::string& source = "config")
{
    if (text.find_first_not_of(" \t\r\n") == std::string::npos) return {};
    json j;
    try {
        j = json::parse(text, nullptr, true, true);
    } catch (const json::parse_error& e) {
        const auto [line, col] = detail::line_column(text, e.byte);
        throw ConfigError(source + ":" + std::to_string(line) + ":" + std::to_string(col) + ": parse error: " +
                          e.what());
    }
    ExperimentConfig c;
    if (j.is_null()) return c;
    const detail::Reader root(j, source);
    root.only({"output", "reproducible", "workers", "tolerances", "quadrature", "constants", "sweeps", "thresholds",
               "dominance", "fem"});
    c.output = root.string_or("output", c.output);
    c.reproducible = root.boolean_or("reproducible", false);
    c.workers = root.integer_or("workers", 1);
    if (c.workers < 1) root.at("workers").fail("need at least one worker");

    if (root.has("tolerances")) {
        const auto t = root.at("tolerances");
        t.only({"constants", "identity", "coefficient", "quotient_coefficient", "leading", "flat_noise_fraction",
                "log_stability", "exponent", "balance", "refinement"});
        auto& T = c.tolerances;
        T.constants = t.number_or("constants", T.constants);
        T.identity = t.number_or("identity", T.identity);
        T.coefficient = t.number_or("coefficient", T.coefficient);
        T.quotient_coefficient = t.number_or("quotient_coefficient", T.quotient_coefficient);
        T.leading = t.number_or("leading", T.leading);
        T.flat_noise_fraction = t.number_or("flat_noise_fraction", T.flat_noise_fraction);
        T.log_stability = t.number_or("log_stability", T.log_stability);
        T.exponent = t.number_or("exponent", T.exponent);
        T.balance = t.number_or("balance", T.balance);
        T.refinement = t.number_or("refinement", T.refinement);
    }
    if (root.has("quadrature")) {
        const auto q = root.at("quadrature");
        q.only({"nodes_radial", "nodes_angular", "nodes_normal", "rel_tol", "abs_tol", "grading_levels",
                "max_intervals"});
        auto& Q = c.quadrature;
        Q.nodes_radial = q.integer_or("nodes_radial", Q.nodes_radial);
        Q.nodes_angular = q.integer_or("nodes_angular", Q.nodes_angular);
        Q.nodes_normal = q.integer_or("nodes_normal", Q.nodes_normal);
        Q.rel_tol = q.number_or("rel_tol", Q.rel_tol);
        Q.abs_tol = q.number_or("abs_tol", Q.abs_tol);
        Q.grading_levels = q.integer_or("grading_levels", Q.grading_levels);
        Q.max_intervals = q.integer_or("max_intervals", Q.max_intervals);
        try {
            Q.validate();
        } catch (const std::invalid_argument& e) {
            q.fail(e.what());
        }
    }

    detail::for_each_block(root, "constants", [&](const detail::Reader& r, std::size_t) {
        r.only({"n", "p"});
        ConstantsBlock b;
        b.n = r.at("n").integer();
        if (b.n < 2) r.at("n").fail("dimension must be >= 2");
        b.p = detail::read_p(r, b.n);
        c.constants.push_back(b);
    });
    detail::for_each_block(root, "sweeps", [&](const detail::Reader& r, std::size_t i) {
        r.only({"name", "claim", "n", "p", "r_out", "gamma", "cubic_bound", "seed", "alpha", "beta", "lambda_grid"});
        SweepBlock b;
        b.name = detail::block_name(r, "sweep", i);
        const auto claim = r.string_or("claim", "gradient");
        if (claim == "gradient") b.claim = Claim::gradient;
        else if (claim == "mass") b.claim = Claim::mass;
        else if (claim == "alpha") b.claim = Claim::alpha;
        else if (claim == "beta") b.claim = Claim::beta;
        else if (claim == "quotient") b.claim = Claim::quotient;
        else r.at("claim").fail("claim must be gradient, mass, alpha, beta or quotient");
        b.domain = detail::read_domain(r);
        b.p = detail::read_p(r, b.domain.n);
        b.potential = detail::read_potential(r);
        b.lambda_grid = detail::read_grid(r, "lambda_grid", default_lambda_grid());
        c.sweeps.push_back(std::move(b));
    });
    detail::for_each_block(root, "thresholds", [&](const detail::Reader& r, std::size_t i) {
        r.only({"name", "n", "p", "r_out", "gamma", "cubic_bound", "seed", "alpha", "beta", "lambda", "expect_below"});
        ThresholdBlock b;
        b.name = detail::block_name(r, "threshold", i);
        b.domain = detail::read_domain(r);
        b.p = detail::read_p(r, b.domain.n);
        b.potential = detail::read_potential(r);
        b.lambda = r.at("lambda").number();
        if (!(b.lambda > 0.0)) r.at("lambda").fail("lambda must be positive");
        if (r.has("expect_below")) b.expect_below = r.at("expect_below").boolean();
        c.thresholds.push_back(std::move(b));
    });
    detail::for_each_block(root, "dominance", [&](const detail::Reader& r, std::size_t i) {
        r.only({"name", "n", "p", "r_out", "gamma", "cubic_bound", "seed", "beta", "lambda_grid"});
        DominanceBlock b;
        b.name = detail::block_name(r, "dominance", i);
        b.domain = detail::read_domain(r);
        b.p = detail::read_p(r, b.domain.n);
        b.beta = r.number_or("beta", 1.0);
        b.lambda_grid = detail::read_grid(r, "lambda_grid", default_dominance_grid());
        c.dominance.push_back(std::move(b));
    });
    detail::for_each_block(root, "fem", [&](const detail::Reader& r, std::size_t i) {
        r.only({"name", "outline", "h", "levels", "p", "alpha", "beta", "schedule", "expect_below"});
        FemBlock b;
        b.name = detail::block_name(r, "fem", i);
        b.outline = detail::read_outline(r.at("outline"));
        b.h = r.at("h").number();
        if (!(b.h > 0.0)) r.at("h").fail("h must be positive");
        b.levels = r.integer_or("levels", 0);
        if (b.levels < 0 || b.levels > 5) r.at("levels").fail("levels must lie in [0, 5]");
        b.p = r.at("p").number();
        if (!(b.p > 1.0 && b.p < 2.0)) r.at("p").fail("planar runs need 1 < p < 2");
        b.potential = detail::read_potential(r);
        if (r.has("schedule")) b.schedule = detail::read_schedule(r.at("schedule"));
        if (r.has("expect_below")) b.expect_below = r.at("expect_below").boolean();
        c.fem.push_back(std::move(b));
    });
    c.canonical = j.dump();
    return c;
}

inline ExperimentConfig load_config(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError(path + ": cannot open config");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), path);
}

} // namespace plap::cli
