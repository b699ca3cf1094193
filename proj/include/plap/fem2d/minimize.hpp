#pragma once

#include "plap/fem2d/energy.hpp"
#include "plap/special_constants.hpp"

#include <deque>
#include <optional>
#include <random>

namespace plap::fem {

/// Continuation plan: q runs linearly from p to the final exponent and the
/// regularisation ε geometrically from eps_start to eps_end.
struct ContinuationSchedule {
    int stages = 6;
    double q_margin = 0.05;
    bool exact_critical = false;
    double eps_start = 1e-2;
    double eps_end = 1e-8;
    int max_iterations_per_stage = 500;
    double tolerance = 1e-10;
    int lbfgs_memory = 8;
    bool check_coercivity = true;
    std::optional<std::uint64_t> seed; ///< random positive start instead of the all-ones start
    std::optional<double> fixed_q;     ///< hold q constant instead of continuing towards p*
    AssemblyOptions assembly;

    [[nodiscard]] double final_q(double p) const
    {
        if (fixed_q) return *fixed_q;
        const double ps = 2.0 * p / (2.0 - p);
        return exact_critical ? ps : ps - q_margin;
    }
};

struct HistoryEntry {
    int stage = 0;
    double q = 0.0;
    double eps = 0.0;
    double J = 0.0;
};

struct MinimizeResult {
    std::vector<double> coefficients;
    double q_used = 0.0;
    double eps_used = 0.0;
    double J_value = 0.0;
    double Q_estimate = 0.0;
    int iterations = 0;
    bool converged = false;
    std::vector<HistoryEntry> history;
    std::string diagnostics;
};

/// Value and gradient of F(u) = E(u / M(u)^{1/q}); F equals J for ε = 0 and
/// is exactly zero-homogeneous for every ε.
struct NormalizedQuotient {
    double value = 0.0;
    double mass = 0.0;
    std::vector<double> gradient;
};

inline NormalizedQuotient normalized_quotient(const Mesh& mesh, std::span<const double> u, double p,
                                              const PotentialSpec& pot, double q, double eps,
                                              const AssemblyOptions& opt = {})
{
    const PotentialSpec none;
    const double M = assemble_energy(mesh, u, p, none, q, 0.0, opt).M;
    if (!(M > 0.0)) throw std::invalid_argument("normalized_quotient: u vanishes");
    const double c = std::pow(M, -1.0 / q);
    std::vector<double> v(u.begin(), u.end());
    for (double& x : v) x *= c;
    const auto a = assemble_energy(mesh, v, p, pot, q, eps, opt);
    NormalizedQuotient r;
    r.value = a.E;
    r.mass = M;
    double dEu = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) dEu += a.dE[i] * u[i];
    // ∇M(u) = c^{1-q} ∇M(v)
    const double cm = std::pow(c, 1.0 - q);
    r.gradient.resize(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) r.gradient[i] = c * a.dE[i] - (c / q) * dEu * cm * a.dM[i] / M;
    return r;
}

namespace detail {

inline double dot(const std::vector<double>& a, const std::vector<double>& b)
{
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

struct StageOutcome {
    int iterations = 0;
    bool converged = false;
    double value = 0.0;
    std::string note;
};

/// L-BFGS on F with Γ₀ entries frozen at zero, Armijo backtracking that only
/// accepts decreasing steps, and rescaling to M = 1 after each step.
inline StageOutcome descend(const Mesh& mesh, std::vector<double>& u, const std::vector<char>& fixed, double p,
                            const PotentialSpec& pot, double q, double eps, const ContinuationSchedule& sch,
                            std::vector<HistoryEntry>& history, int stage)
{
    auto project = [&](std::vector<double>& g) {
        for (std::size_t i = 0; i < g.size(); ++i)
            if (fixed[i]) g[i] = 0.0;
    };
    auto eval = [&](const std::vector<double>& x) {
        auto r = normalized_quotient(mesh, x, p, pot, q, eps, sch.assembly);
        project(r.gradient);
        return r;
    };
    auto normalize = [&](std::vector<double>& x, double M) {
        const double c = std::pow(M, -1.0 / q);
        for (double& v : x) v *= c;
        return c;
    };

    StageOutcome out;
    auto cur = eval(u);
    {
        const double c = normalize(u, cur.mass);
        for (double& g : cur.gradient) g /= c;
    }
    history.push_back({stage, q, eps, cur.value});

    std::deque<std::pair<std::vector<double>, std::vector<double>>> mem;
    int quiet = 0;
    bool reset_once = false;
    for (int it = 0; it < sch.max_iterations_per_stage; ++it) {
        const double gnorm = std::sqrt(dot(cur.gradient, cur.gradient));
        const double unorm = std::sqrt(dot(u, u));
        if (gnorm * unorm <= sch.tolerance * std::max(1.0, std::abs(cur.value))) {
            out.converged = true;
            break;
        }
        // two-loop recursion
        std::vector<double> d = cur.gradient;
        std::vector<double> alphas(mem.size());
        for (std::size_t k = mem.size(); k-- > 0;) {
            const auto& [s, y] = mem[k];
            alphas[k] = dot(s, d) / dot(s, y);
            for (std::size_t i = 0; i < d.size(); ++i) d[i] -= alphas[k] * y[i];
        }
        double gamma = 1.0;
        if (!mem.empty()) gamma = dot(mem.back().first, mem.back().second) / dot(mem.back().second, mem.back().second);
        else gamma = 1e-2 * unorm / std::max(gnorm, 1e-300);
        for (double& v : d) v *= gamma;
        for (std::size_t k = 0; k < mem.size(); ++k) {
            const auto& [s, y] = mem[k];
            const double b = dot(y, d) / dot(s, y);
            for (std::size_t i = 0; i < d.size(); ++i) d[i] += (alphas[k] - b) * s[i];
        }
        for (double& v : d) v = -v;
        project(d);
        double slope = dot(d, cur.gradient);
        if (!(slope < 0.0)) {
            d = cur.gradient;
            for (double& v : d) v = -v * 1e-2 * unorm / gnorm;
            slope = dot(d, cur.gradient);
            mem.clear();
        }

        double step = 1.0;
        bool accepted = false;
        std::vector<double> trial(u.size());
        NormalizedQuotient next;
        for (int ls = 0; ls < 60; ++ls) {
            for (std::size_t i = 0; i < u.size(); ++i) trial[i] = u[i] + step * d[i];
            bool ok = true;
            try {
                next = eval(trial);
            } catch (const std::invalid_argument&) {
                ok = false;
            }
            if (ok && std::isfinite(next.value) && next.value <= cur.value + 1e-4 * step * slope &&
                next.value < cur.value) {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        ++out.iterations;
        if (!accepted) {
            if (!mem.empty() && !reset_once) {
                mem.clear();
                reset_once = true;
                continue;
            }
            out.note = "line search stalled at stage " + std::to_string(stage);
            out.converged = gnorm * unorm <= 1e3 * sch.tolerance * std::max(1.0, std::abs(cur.value));
            break;
        }
        reset_once = false;
        const double c = normalize(trial, next.mass);
        for (double& g : next.gradient) g /= c;
        for (auto& [s, y] : mem) {
            for (double& v : s) v *= c;
            for (double& v : y) v /= c;
        }
        std::vector<double> s(u.size()), y(u.size());
        for (std::size_t i = 0; i < u.size(); ++i) {
            s[i] = trial[i] - c * u[i];
            y[i] = next.gradient[i] - cur.gradient[i] / c;
        }
        if (dot(s, y) > 1e-300) {
            mem.emplace_back(std::move(s), std::move(y));
            if (static_cast<int>(mem.size()) > sch.lbfgs_memory) mem.pop_front();
        }
        const double rel_drop = (cur.value - next.value) / std::max(1.0, std::abs(cur.value));
        u.swap(trial);
        cur = std::move(next);
        history.push_back({stage, q, eps, cur.value});
        quiet = rel_drop < sch.tolerance ? quiet + 1 : 0;
        if (quiet >= 5) {
            out.converged = true;
            break;
        }
    }
    out.value = cur.value;
    return out;
}

inline std::vector<double> initial_field(const Mesh& mesh, const std::vector<char>& fixed,
                                         const std::optional<std::uint64_t>& seed)
{
    std::vector<double> u(mesh.vertices.size(), 1.0);
    if (seed) {
        std::mt19937_64 rng(*seed);
        std::uniform_real_distribution<double> dist(0.5, 1.5);
        for (double& v : u) v = dist(rng);
    }
    for (std::size_t i = 0; i < u.size(); ++i)
        if (fixed[i]) u[i] = 0.0;
    return u;
}

} // namespace detail

/// Best constant c in ‖u‖^p ≥ c∫|u|^p over the discrete space; a value ≤ 0
/// means the configuration is not coercive.
inline double coercivity_estimate(const Mesh& mesh, double p, const PotentialSpec& pot,
                                  const ContinuationSchedule& sch = {})
{
    mesh.validate();
    const auto fixed = mesh.dirichlet_mask();
    if (std::all_of(fixed.begin(), fixed.end(), [](char f) { return f != 0; }))
        throw InvalidGeometry("every node lies on Gamma_0");
    auto u = detail::initial_field(mesh, fixed, sch.seed);
    std::vector<HistoryEntry> hist;
    double val = 0.0;
    for (double eps : {sch.eps_start, sch.eps_end})
        val = detail::descend(mesh, u, fixed, p, pot, p, eps, sch, hist, 0).value;
    return val;
}

inline bool is_coercive(double estimate) { return estimate > 0.0; }

/// Minimises J(u) = ‖u‖^p / (∫|u|^q)^{p/q} with q driven from p to p* − margin.
/// The warm-start overload skips the continuation and runs the final stage only.
inline MinimizeResult minimize_quotient(const Mesh& mesh, double p, const PotentialSpec& pot,
                                        const ContinuationSchedule& sch = {},
                                        const std::vector<double>* warm_start = nullptr)
{
    mesh.validate();
    if (!(p > 1.0 && p < 2.0)) throw std::invalid_argument("minimize_quotient: planar runs need 1 < p < 2");
    if (sch.stages < 1) throw std::invalid_argument("minimize_quotient: at least one stage");
    const auto fixed = mesh.dirichlet_mask();
    if (sch.check_coercivity) {
        const double c = coercivity_estimate(mesh, p, pot, sch);
        if (!is_coercive(c)) throw NonCoercive("coercivity estimate " + std::to_string(c) + " <= 0");
    }
    MinimizeResult r;
    std::vector<double> u;
    if (warm_start) {
        if (warm_start->size() != mesh.vertices.size()) throw std::invalid_argument("warm start size mismatch");
        u = *warm_start;
        for (std::size_t i = 0; i < u.size(); ++i)
            if (fixed[i]) u[i] = 0.0;
    } else {
        u = detail::initial_field(mesh, fixed, sch.seed);
    }
    const double qf = sch.final_q(p);
    const int first = warm_start ? sch.stages - 1 : 0;
    bool converged = true;
    std::string notes;
    for (int s = first; s < sch.stages; ++s) {
        const double t = sch.stages == 1 ? 1.0 : double(s) / (sch.stages - 1);
        const double q = sch.fixed_q ? *sch.fixed_q : p + t * (qf - p);
        const double eps = sch.eps_start * std::pow(sch.eps_end / sch.eps_start, t);
        const auto o = detail::descend(mesh, u, fixed, p, pot, q, eps, sch, r.history, s);
        r.iterations += o.iterations;
        r.q_used = q;
        r.eps_used = eps;
        if (s == sch.stages - 1) converged = o.converged;
        if (!o.note.empty()) notes += o.note + "; ";
    }
    // J(|u|) is reported when it does not exceed J(u)
    std::vector<double> au(u);
    for (double& v : au) v = std::abs(v);
    const double ju = normalized_quotient(mesh, u, p, pot, r.q_used, r.eps_used, sch.assembly).value;
    const double jau = normalized_quotient(mesh, au, p, pot, r.q_used, r.eps_used, sch.assembly).value;
    r.coefficients = jau <= ju ? au : u;
    r.J_value = std::min(ju, jau);
    r.Q_estimate = r.J_value;
    r.converged = converged;
    r.diagnostics = notes;
    return r;
}

struct RefinementRow {
    int level = 0;
    double h = 0.0;
    std::size_t vertices = 0;
    double q_used = 0.0;
    double Q_estimate = 0.0;
    double threshold = 0.0;
    bool below = false;
    int iterations = 0;
    bool converged = false;
};

struct RefinementReport {
    std::vector<RefinementRow> rows;
    double threshold = 0.0;
    bool monotone = true;
    double max_increase = 0.0;
    [[nodiscard]] bool final_below() const { return !rows.empty() && rows.back().below; }
};

/// Minimises on `coarse` and on `levels` successive four-way refinements, each
/// warm-started from the prolonged previous minimiser.
inline RefinementReport quotient_vs_threshold(const Mesh& coarse, int levels, double p, const PotentialSpec& pot,
                                              const ContinuationSchedule& sch = {}, double monotone_tol = 1e-3)
{
    RefinementReport rep;
    rep.threshold = threshold_level(ProblemParams(2, p));
    Mesh mesh = coarse;
    std::vector<double> prev;
    for (int l = 0; l <= levels; ++l) {
        ContinuationSchedule s = sch;
        if (l > 0) s.check_coercivity = false;
        const auto res = minimize_quotient(mesh, p, pot, s, l == 0 ? nullptr : &prev);
        RefinementRow row;
        row.level = l;
        row.h = mesh.max_edge_length();
        row.vertices = mesh.vertices.size();
        row.q_used = res.q_used;
        row.Q_estimate = res.Q_estimate;
        row.threshold = rep.threshold;
        row.below = res.Q_estimate < rep.threshold;
        row.iterations = res.iterations;
        row.converged = res.converged;
        if (!rep.rows.empty()) {
            const double inc = row.Q_estimate - rep.rows.back().Q_estimate;
            rep.max_increase = std::max(rep.max_increase, inc);
            if (inc > monotone_tol) rep.monotone = false;
        }
        rep.rows.push_back(row);
        if (l < levels) {
            const auto ref = refine(mesh);
            prev = ref.prolong(res.coefficients);
            mesh = ref.mesh;
        }
    }
    return rep;
}

} // namespace plap::fem
