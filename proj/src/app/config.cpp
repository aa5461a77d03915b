#include "npgmo/config.hpp"

#include <json.hpp>

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace npgmo {
namespace {

using json = nlohmann::json;

std::string join(const std::string& path, const std::string& key) {
    return path.empty() ? key : path + "." + key;
}

// Walks one JSON object, remembering which keys were read so that leftovers
// can be reported as unknown.
class Section {
public:
    Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw ConfigError(path_, "must be an object");
    }

    bool has(const std::string& key) const { return j_.contains(key); }
    std::string path(const std::string& key) const { return join(path_, key); }

    const json& raw(const std::string& key) {
        seen_.insert(key);
        return j_.at(key);
    }

    double number(const std::string& key, double fallback) {
        if (!has(key)) return fallback;
        return as_number(raw(key), path(key));
    }

    std::size_t count(const std::string& key, std::size_t fallback) {
        if (!has(key)) return fallback;
        const json& v = raw(key);
        if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0))
            throw ConfigError(path(key), "must be a nonnegative integer");
        return v.get<std::size_t>();
    }

    std::uint64_t seed(const std::string& key, std::uint64_t fallback) {
        if (!has(key)) return fallback;
        return as_seed(raw(key), path(key));
    }

    std::string text(const std::string& key, const std::string& fallback) {
        if (!has(key)) return fallback;
        const json& v = raw(key);
        if (!v.is_string()) throw ConfigError(path(key), "must be a string");
        return v.get<std::string>();
    }

    bool flag(const std::string& key, bool fallback) {
        if (!has(key)) return fallback;
        const json& v = raw(key);
        if (!v.is_boolean()) throw ConfigError(path(key), "must be true or false");
        return v.get<bool>();
    }

    void finish() const {
        for (auto it = j_.begin(); it != j_.end(); ++it)
            if (!seen_.count(it.key())) throw ConfigError(path(it.key()), "unknown key");
    }

    static double as_number(const json& v, const std::string& path) {
        if (!v.is_number()) throw ConfigError(path, "must be a number");
        return v.get<double>();
    }

    static std::uint64_t as_seed(const json& v, const std::string& path) {
        if (v.is_number_unsigned()) return v.get<std::uint64_t>();
        if (v.is_number_integer() && v.get<long long>() >= 0) return v.get<std::uint64_t>();
        throw ConfigError(path, "must be a nonnegative integer");
    }

private:
    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

Vector parse_vector(const json& v, const std::string& path) {
    if (!v.is_array() || v.empty()) throw ConfigError(path, "must be a nonempty array of numbers");
    Vector out(static_cast<Eigen::Index>(v.size()));
    for (std::size_t i = 0; i < v.size(); ++i)
        out[static_cast<Eigen::Index>(i)] = Section::as_number(v[i], path + "[" + std::to_string(i) + "]");
    if (!out.allFinite()) throw ConfigError(path, "entries must be finite");
    return out;
}

Matrix parse_matrix(const json& v, const std::string& path) {
    if (!v.is_array() || v.empty()) throw ConfigError(path, "must be a nonempty array of rows");
    const auto rows = static_cast<Eigen::Index>(v.size());
    Matrix out(rows, rows);
    for (Eigen::Index r = 0; r < rows; ++r) {
        const std::string row_path = path + "[" + std::to_string(r) + "]";
        const Vector row = parse_vector(v[static_cast<std::size_t>(r)], row_path);
        if (row.size() != rows) throw ConfigError(row_path, "matrix must be square");
        out.row(r) = row.transpose();
    }
    return out;
}

NonsmoothTerm parse_nonsmooth(const json& v, const std::string& path, std::size_t n) {
    Section s(v, path);
    const std::string kind = s.text("kind", "zero");
    NonsmoothTerm term;
    if (kind == "zero") {
        term = ZeroTerm{};
    } else if (kind == "l1") {
        const double rho = s.number("rho", 0.0);
        if (!(rho >= 0.0)) throw ConfigError(s.path("rho"), "must be >= 0");
        term = ScaledL1{rho};
    } else if (kind == "box") {
        if (!s.has("lo") || !s.has("hi")) throw ConfigError(path, "box needs lo and hi");
        Vector lo = parse_vector(s.raw("lo"), s.path("lo"));
        Vector hi = parse_vector(s.raw("hi"), s.path("hi"));
        if (static_cast<std::size_t>(lo.size()) != n) throw ConfigError(s.path("lo"), "needs n entries");
        if (static_cast<std::size_t>(hi.size()) != n) throw ConfigError(s.path("hi"), "needs n entries");
        if (!(lo.array() <= hi.array()).all()) throw ConfigError(s.path("hi"), "must be >= lo entrywise");
        term = BoxIndicator{std::move(lo), std::move(hi)};
    } else {
        throw ConfigError(s.path("kind"), "must be one of zero, l1, box");
    }
    s.finish();
    return term;
}

InlineQuadratic parse_inline(const json& v, const std::string& path) {
    Section s(v, path);
    InlineQuadratic q;
    if (!s.has("objectives")) throw ConfigError(s.path("objectives"), "required");
    const json& objs = s.raw("objectives");
    if (!objs.is_array() || objs.empty()) throw ConfigError(s.path("objectives"), "must be a nonempty array");
    std::size_t n = 0;
    for (std::size_t i = 0; i < objs.size(); ++i) {
        Section o(objs[i], s.path("objectives") + "[" + std::to_string(i) + "]");
        if (!o.has("A")) throw ConfigError(o.path("A"), "required");
        Matrix a = parse_matrix(o.raw("A"), o.path("A"));
        if (i == 0) n = static_cast<std::size_t>(a.rows());
        if (static_cast<std::size_t>(a.rows()) != n) throw ConfigError(o.path("A"), "dimension differs from objective 0");
        Vector b = o.has("b") ? parse_vector(o.raw("b"), o.path("b")) : Vector::Zero(a.rows());
        if (b.size() != a.rows()) throw ConfigError(o.path("b"), "needs n entries");
        q.c.push_back(o.number("c", 0.0));
        q.a.push_back(std::move(a));
        q.b.push_back(std::move(b));
        o.finish();
    }
    if (s.has("nonsmooth")) q.nonsmooth = parse_nonsmooth(s.raw("nonsmooth"), s.path("nonsmooth"), n);
    if (s.has("mu")) {
        const double mu = s.number("mu", 0.0);
        if (!(mu > 0.0)) throw ConfigError(s.path("mu"), "must be > 0");
        q.mu = mu;
    }
    s.finish();
    return q;
}

InstanceSpec parse_instance_spec(Section& s) {
    InstanceSpec spec;
    const std::string family = s.text("family", "quadratic");
    const auto f = parse_family(family);
    if (!f) throw ConfigError(s.path("family"), "unknown family '" + family + "'");
    spec.family = *f;
    spec.n = s.count("n", spec.n);
    spec.m = s.count("m", spec.m);
    spec.cond = s.number("cond", spec.cond);
    spec.mu = s.number("mu", spec.mu);
    spec.rho = s.number("rho", spec.rho);
    spec.seed = s.seed("seed", spec.seed);
    spec.box_lo = s.number("box_lo", spec.box_lo);
    spec.box_hi = s.number("box_hi", spec.box_hi);
    spec.rows = s.count("rows", spec.rows);
    if (s.has("shifts")) {
        const json& v = s.raw("shifts");
        if (!v.is_array()) throw ConfigError(s.path("shifts"), "must be an array of vectors");
        std::vector<Vector> shifts;
        for (std::size_t i = 0; i < v.size(); ++i)
            shifts.push_back(parse_vector(v[i], s.path("shifts") + "[" + std::to_string(i) + "]"));
        spec.shifts = std::move(shifts);
    }
    spec.validate();
    return spec;
}

void parse_solver(Section& s, RunConfig& cfg) {
    SolverConfig& c = cfg.solver;
    const std::string variant = s.text("variant", "npgmo");
    if (variant == "pgmo") {
        c.variant = ProxGradientVariant{};
    } else if (variant != "npgmo") {
        throw ConfigError(s.path("variant"), "must be npgmo or pgmo");
    }
    c.eps = s.number("eps", c.eps);
    c.sigma = s.number("sigma", c.sigma);
    c.gamma = s.number("gamma", c.gamma);
    c.max_outer = s.count("max_outer", c.max_outer);
    c.tol_gap = s.number("tol_gap", c.tol_gap);
    c.max_dual_iters = s.count("max_dual_iters", c.max_dual_iters);
    c.max_inner_iters = s.count("max_inner_iters", c.max_inner_iters);
    c.max_halvings = s.count("max_halvings", c.max_halvings);
    if (s.has("ell")) {
        cfg.ell = s.number("ell", 0.0);
        if (!(*cfg.ell > 0.0)) throw ConfigError(s.path("ell"), "must be > 0");
    }
    c.validate();
}

std::vector<std::uint64_t> parse_seeds(const json& v, const std::string& path) {
    if (!v.is_array()) throw ConfigError(path, "must be an array of seeds");
    std::vector<std::uint64_t> out;
    for (std::size_t i = 0; i < v.size(); ++i)
        out.push_back(Section::as_seed(v[i], path + "[" + std::to_string(i) + "]"));
    return out;
}

SweepSpec parse_sweep(const json& v, const std::string& path, Family default_family) {
    Section s(v, path);
    SweepSpec sweep;
    if (s.has("families")) {
        const json& f = s.raw("families");
        if (!f.is_array()) throw ConfigError(s.path("families"), "must be an array of names");
        for (std::size_t i = 0; i < f.size(); ++i) {
            const std::string p = s.path("families") + "[" + std::to_string(i) + "]";
            if (!f[i].is_string()) throw ConfigError(p, "must be a family name");
            const auto fam = parse_family(f[i].get<std::string>());
            if (!fam) throw ConfigError(p, "unknown family");
            sweep.families.push_back(*fam);
        }
        if (sweep.families.empty()) throw ConfigError(s.path("families"), "must not be empty");
    } else {
        sweep.families.push_back(default_family);
    }
    if (!s.has("cond")) throw ConfigError(s.path("cond"), "required");
    const json& c = s.raw("cond");
    if (!c.is_array() || c.empty()) throw ConfigError(s.path("cond"), "must be a nonempty array");
    for (std::size_t i = 0; i < c.size(); ++i) {
        const std::string p = s.path("cond") + "[" + std::to_string(i) + "]";
        const double v_i = Section::as_number(c[i], p);
        if (!(v_i >= 1.0) || !std::isfinite(v_i)) throw ConfigError(p, "must be a finite value >= 1");
        sweep.cond.push_back(v_i);
    }
    if (!s.has("seeds")) throw ConfigError(s.path("seeds"), "required");
    sweep.seeds = parse_seeds(s.raw("seeds"), s.path("seeds"));
    if (sweep.seeds.empty()) throw ConfigError(s.path("seeds"), "must not be empty");
    s.finish();
    return sweep;
}

std::string parse_path_field(Section& s, const std::string& key, const std::string& fallback) {
    std::string v = s.text(key, fallback);
    if (v.empty()) throw ConfigError(s.path(key), "must not be empty");
    return v;
}

void parse_run(Section& s, RunConfig& cfg, std::size_t n) {
    RunSection& r = cfg.run;
    if (s.has("x0")) {
        const json& v = s.raw("x0");
        if (v.is_array()) {
            r.x0.value = parse_vector(v, s.path("x0"));
            if (n != 0 && static_cast<std::size_t>(r.x0.value->size()) != n)
                throw ConfigError(s.path("x0"), "needs n entries");
        } else {
            Section x(v, s.path("x0"));
            r.x0.seed = x.seed("seed", r.x0.seed);
            r.x0.scale = x.number("scale", r.x0.scale);
            if (!(r.x0.scale >= 0.0) || !std::isfinite(r.x0.scale))
                throw ConfigError(x.path("scale"), "must be a finite value >= 0");
            x.finish();
        }
    }
    r.x0_batch = s.count("x0_batch", r.x0_batch);
    if (r.x0_batch == 0) throw ConfigError(s.path("x0_batch"), "must be >= 1");
    r.probes_per_iteration = s.count("probes_per_iteration", r.probes_per_iteration);
    if (s.has("tau_eps")) {
        const json& v = s.raw("tau_eps");
        if (!v.is_array()) throw ConfigError(s.path("tau_eps"), "must be an array of numbers");
        for (std::size_t i = 0; i < v.size(); ++i) {
            const std::string p = s.path("tau_eps") + "[" + std::to_string(i) + "]";
            const double e = Section::as_number(v[i], p);
            if (!(e > 0.0)) throw ConfigError(p, "must be > 0");
            r.tau_eps.push_back(e);
        }
    }
    if (s.has("check_seeds")) r.check_seeds = parse_seeds(s.raw("check_seeds"), s.path("check_seeds"));
    r.trace_csv = parse_path_field(s, "trace_csv", r.trace_csv);
    r.report = parse_path_field(s, "report", r.report);
    r.bench_csv = parse_path_field(s, "bench_csv", r.bench_csv);
    r.record_wall_time = s.flag("record_wall_time", r.record_wall_time);
    if (s.has("sweep")) {
        const Family fam = cfg.is_inline() ? Family::Quadratic : std::get<InstanceSpec>(cfg.instance).family;
        r.sweep = parse_sweep(s.raw("sweep"), s.path("sweep"), fam);
    }
}

}  // namespace

const std::vector<std::string>& check_registry() {
    static const std::vector<std::string> names = {
        "quadratic_termination", "tau_bracket",         "order_fit",      "fundamental_ineq_quadratic",
        "descent_bound",         "sufficient_decrease", "quadratic_rate",
    };
    return names;
}

RunConfig parse_config(std::string_view json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ConfigError("(document)", std::string("invalid JSON: ") + e.what());
    }
    Section top(doc, "");
    RunConfig cfg;

    std::size_t n = 0;
    if (!top.has("instance")) throw ConfigError("instance", "required");
    {
        Section s(top.raw("instance"), "instance");
        if (s.has("inline")) {
            InlineQuadratic q = parse_inline(s.raw("inline"), s.path("inline"));
            n = static_cast<std::size_t>(q.a.front().rows());
            cfg.instance = std::move(q);
        } else {
            InstanceSpec spec = parse_instance_spec(s);
            n = spec.n;
            cfg.instance = std::move(spec);
        }
        s.finish();
    }
    if (top.has("solver")) {
        Section s(top.raw("solver"), "solver");
        parse_solver(s, cfg);
        s.finish();
    }
    if (top.has("run")) {
        Section s(top.raw("run"), "run");
        parse_run(s, cfg, n);
        s.finish();
    }
    if (top.has("checks")) {
        const json& v = top.raw("checks");
        if (!v.is_array()) throw ConfigError("checks", "must be an array of check names");
        const auto& reg = check_registry();
        for (std::size_t i = 0; i < v.size(); ++i) {
            const std::string p = "checks[" + std::to_string(i) + "]";
            if (!v[i].is_string()) throw ConfigError(p, "must be a check name");
            std::string name = v[i].get<std::string>();
            if (std::find(reg.begin(), reg.end(), name) == reg.end())
                throw ConfigError(p, "unknown check '" + name + "'");
            cfg.checks.push_back(std::move(name));
        }
    }
    top.finish();
    return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("(document)", "cannot read " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

ProblemInstance build_instance(const RunConfig& config, std::optional<std::uint64_t> seed) {
    if (const auto* spec = std::get_if<InstanceSpec>(&config.instance)) {
        InstanceSpec s = *spec;
        if (seed) s.seed = *seed;
        return generate(s);
    }
    const auto& q = std::get<InlineQuadratic>(config.instance);
    ProblemInstance p;
    p.n = static_cast<std::size_t>(q.a.front().rows());
    p.m = q.a.size();
    double lmin = kInf;
    double lmax = 0.0;
    for (std::size_t i = 0; i < p.m; ++i) {
        auto f = std::make_shared<QuadraticObjective>(q.a[i], q.b[i], q.c[i]);
        const Eigen::SelfAdjointEigenSolver<Matrix> es(f->matrix(), Eigen::EigenvaluesOnly);
        lmin = std::min(lmin, es.eigenvalues().minCoeff());
        lmax = std::max(lmax, es.eigenvalues().maxCoeff());
        p.smooth.push_back(std::move(f));
    }
    p.nonsmooth.assign(p.m, q.nonsmooth);
    if (q.mu) {
        if (*q.mu > lmin * (1.0 + 1e-12))
            throw ConfigError("instance.inline.mu", "exceeds the smallest eigenvalue of the A_i");
        p.mu = *q.mu;
    } else {
        if (!(lmin > 0.0)) throw ConfigError("instance.inline.objectives", "every A_i must be positive definite");
        p.mu = lmin;
    }
    p.lip_grad = lmax;
    p.lip_hess = 0.0;
    return p;
}

SolverConfig resolve_solver(const RunConfig& config, const ProblemInstance& problem) {
    SolverConfig c = config.solver;
    if (c.is_pgmo()) {
        double ell = 0.0;
        if (config.ell) {
            ell = *config.ell;
        } else if (problem.lip_grad) {
            ell = *problem.lip_grad;
        } else {
            throw ConfigError("solver.ell", "required: the instance has no gradient Lipschitz bound");
        }
        c.variant = ProxGradientVariant{ell};
    }
    c.validate();
    return c;
}

Vector make_x0(const X0Spec& spec, const ProblemInstance& problem, std::uint64_t instance_seed,
               std::size_t index) {
    if (spec.value && index == 0) return *spec.value;
    // Mix the seeds so that different instances get unrelated starting points.
    SplitMix64 mix(spec.seed ^ (0x9E3779B97F4A7C15ULL * (instance_seed + 1)));
    for (std::size_t i = 0; i < index; ++i) mix.next();
    SplitMix64 rng(mix.next());
    Vector x = random_normal_vector(rng, static_cast<Eigen::Index>(problem.n), spec.scale);
    if (spec.value) x += *spec.value;
    return x;
}

}  // namespace npgmo
