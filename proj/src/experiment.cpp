#include "a2p/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <limits>
#include <random>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

#include "a2p/parallel.hpp"
#include "a2p/records.hpp"
#include "a2p/rng.hpp"

namespace a2p {

const char* kCodeVersion = "anderson2p 1.0.0";

namespace {

using nlohmann::json;

constexpr const char* kSeedRule =
    "record i is drawn from rng stream derive_stream(seed, i); "
    "streams do not depend on the worker count";

[[noreturn]] void cfg_error(const Config& c, const std::string& what) {
    throw std::runtime_error(c.origin() + ": " + what);
}

double positive_double(const Config& c, const std::string& key) {
    double v = c.get_double(key);
    if (!(v > 0.0)) cfg_error(c, "key '" + key + "' must be positive");
    return v;
}

Cube parse_cube(const Config& c, const std::string& section, const char* idx) {
    Point center = c.get_doubles(section + ".center" + idx);
    double hs = positive_double(c, section + ".half_side" + idx);
    return Cube{center, hs};
}

Box parse_box(const Config& c, const std::string& section) {
    Cube a = parse_cube(c, section, "1");
    Cube b = parse_cube(c, section, "2");
    if (a.center.size() != b.center.size())
        cfg_error(c, "[" + section + "] center1 and center2 differ in dimension");
    return Box{a, b};
}

CovarianceKernel parse_kernel(const Config& c) {
    CovarianceKernel k;
    const std::string fam = c.get_string("kernel.family", "exponential");
    if (fam == "exponential") {
        k.family = CovarianceKernel::Family::Exponential;
    } else if (fam == "squared-exponential") {
        k.family = CovarianceKernel::Family::SquaredExponential;
    } else if (fam == "white") {
        k.family = CovarianceKernel::Family::Exponential;
        k.scale = 0.0;
    } else {
        cfg_error(c, "kernel.family must be exponential, squared-exponential or white");
    }
    if (fam == "white") {
        if (c.get_double("kernel.scale", 0.0) != 0.0)
            cfg_error(c, "a white kernel carries no smooth part; drop kernel.scale");
    } else {
        k.scale = c.get_double("kernel.scale", 1.0);
        k.corr_length = c.get_double("kernel.length", 1.0);
        if (!(k.scale >= 0.0)) cfg_error(c, "kernel.scale must be nonnegative");
        if (!(k.corr_length > 0.0)) cfg_error(c, "kernel.length must be positive");
    }
    k.nugget = c.get_double("kernel.nugget", 0.0);
    if (!(k.nugget >= 0.0)) cfg_error(c, "kernel.nugget must be nonnegative");
    if (fam == "white" && !(k.nugget > 0.0))
        cfg_error(c, "a white kernel needs a positive kernel.nugget");
    return k;
}

InteractionPotential parse_interaction(const Config& c) {
    InteractionPotential u;
    const std::string prof = c.get_string("interaction.profile", "none");
    if (prof == "none") {
        u.profile = InteractionPotential::Profile::Square;
        u.range = 0.0;
        u.amplitude = 0.0;
    } else if (prof == "square") {
        u.profile = InteractionPotential::Profile::Square;
        u.range = positive_double(c, "interaction.range");
        u.amplitude = c.get_double("interaction.amplitude");
    } else if (prof == "tabulated") {
        u.profile = InteractionPotential::Profile::Tabulated;
        std::string raw = c.get_string("interaction.table");
        for (char& ch : raw)
            if (ch == ',') ch = ' ';
        std::istringstream in(raw);
        std::string tok;
        while (in >> tok) {
            const size_t colon = tok.find(':');
            if (colon == std::string::npos)
                cfg_error(c, "interaction.table entries look like separation:value");
            try {
                const double s = std::stod(tok.substr(0, colon));
                const double v = std::stod(tok.substr(colon + 1));
                u.table.emplace_back(s, v);
            } catch (const std::exception&) {
                cfg_error(c, "interaction.table entry is not numeric: '" + tok + "'");
            }
        }
        if (u.table.empty()) cfg_error(c, "interaction.table is empty");
        u.range = c.get_double("interaction.range", u.table.back().first);
    } else {
        cfg_error(c, "interaction.profile must be none, square or tabulated");
    }
    if (c.has("interaction.core")) u.core_radius = c.get_double("interaction.core");
    u.validate();
    return u;
}

SolverOptions parse_solver(const Config& c, int* eigen_count) {
    SolverOptions s;
    const std::string m = c.get_string("solver.method", "auto");
    if (m == "auto")
        s.method = SolverOptions::Method::Auto;
    else if (m == "dense")
        s.method = SolverOptions::Method::Dense;
    else if (m == "lanczos")
        s.method = SolverOptions::Method::Lanczos;
    else
        cfg_error(c, "solver.method must be auto, dense or lanczos");
    s.dense_limit = static_cast<int>(c.get_long("solver.dense_limit", s.dense_limit));
    s.max_iterations =
        static_cast<int>(c.get_long("solver.max_iterations", s.max_iterations));
    s.residual_tol = c.get_double("solver.residual_tol", s.residual_tol);
    *eigen_count = static_cast<int>(c.get_long("solver.count", -1));
    return s;
}

ModulusMode parse_estimator(const Config& c, const std::string& key,
                            const std::string& fallback) {
    const std::string m = c.get_string(key, fallback);
    if (m == "closed-form") return ModulusMode::GaussianClosedForm;
    if (m == "empirical") return ModulusMode::Empirical;
    cfg_error(c, "key '" + key + "' must be closed-form or empirical");
}

int resolve_workers(const Config& c) {
    const long w = c.get_long("workers", 0);
    if (w < 0) cfg_error(c, "workers must be nonnegative (0 picks the hardware count)");
    return w == 0 ? hardware_workers() : static_cast<int>(w);
}

long required_samples(const Config& c) {
    const long s = c.get_long("samples");
    if (s < 1) cfg_error(c, "samples must be positive");
    return s;
}

std::vector<int> parse_dims(const Config& c) {
    std::vector<int> dims = {1, 2};
    if (!c.has("geometry.dims")) return dims;
    dims.clear();
    for (double v : c.get_doubles("geometry.dims")) {
        const int d = static_cast<int>(std::llround(v));
        if (v != d || d < 1 || d > 3)
            cfg_error(c, "geometry.dims entries must be 1, 2 or 3");
        dims.push_back(d);
    }
    return dims;
}

std::string timestamp_utc() {
    const std::time_t t = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

const double kRoot2Pi = std::sqrt(2.0 * std::acos(-1.0));

// ---------------------------------------------------------------- payloads

struct RunPayload {
    std::string records;
    std::string summary;
    std::string phat;
    std::string rhs;
    std::string extra_name;
    std::string extra;
    long samples = 0;
    long failures = 0;
    std::uint64_t seed = 0;
    int workers = 1;
};

std::string stats_json(const std::vector<EpsilonStat>& stats) {
    std::string out = "[";
    for (size_t i = 0; i < stats.size(); ++i) {
        const EpsilonStat& s = stats[i];
        if (i) out += ',';
        JsonRecord r;
        r.field("epsilon", s.epsilon)
            .field("hits", s.hits)
            .field("samples", s.samples)
            .field("p_hat", s.p_hat)
            .field("wilson_lo", s.wilson.lo)
            .field("wilson_hi", s.wilson.hi)
            .field("mu", s.mu)
            .field("rhs", s.rhs);
        out += r.str();
    }
    return out + "]";
}

std::string phat_table(const std::vector<EpsilonStat>& stats) {
    std::string out = "# epsilon p_hat wilson_lo wilson_hi\n";
    for (const EpsilonStat& s : stats) {
        out += json_number(s.epsilon) + " " + json_number(s.p_hat) + " " +
               json_number(s.wilson.lo) + " " + json_number(s.wilson.hi) + "\n";
    }
    return out;
}

std::string rhs_table(const std::vector<EpsilonStat>& stats) {
    std::string out = "# epsilon mu rhs p_hat\n";
    for (const EpsilonStat& s : stats) {
        out += json_number(s.epsilon) + " " + json_number(s.mu) + " " +
               json_number(s.rhs) + " " + json_number(s.p_hat) + "\n";
    }
    return out;
}

RunPayload run_one(const ExperimentConfig& cfg) {
    const WegnerOneReport r = wegner_one(cfg.one);
    RunPayload p;
    p.samples = cfg.one.samples;
    p.failures = r.failures;
    p.seed = cfg.one.seed;
    p.workers = cfg.one.workers;
    for (size_t k = 0; k < r.sample_failed.size(); ++k) {
        JsonRecord row;
        row.field("i", static_cast<long>(k));
        if (r.sample_failed[k])
            row.field("failed", true).field("error", r.sample_errors[k]);
        else
            row.field("dmin", r.sample_dmin[k]).field("wsup", r.sample_wsup[k]);
        p.records += row.str();
        p.records += '\n';
    }
    JsonRecord s;
    s.field("kind", "one-volume")
        .field("volume", r.volume)
        .field("norm_z", r.norm_z)
        .field("moment", r.moment)
        .field("c_hat", r.c_hat)
        .field("slope", r.slope)
        .field("w_sup_mean", r.w_sup_mean)
        .field("w_sup_max", r.w_sup_max)
        .field("samples", r.samples)
        .field("failures", r.failures)
        .field_raw("stats", stats_json(r.stats));
    p.summary = s.str();
    p.phat = phat_table(r.stats);
    p.rhs = rhs_table(r.stats);
    return p;
}

RunPayload run_two(const ExperimentConfig& cfg) {
    const WegnerTwoReport r = wegner_two(cfg.two);
    RunPayload p;
    p.samples = cfg.two.samples;
    p.failures = r.failures;
    p.seed = cfg.two.seed;
    p.workers = cfg.two.workers;
    for (size_t k = 0; k < r.sample_failed.size(); ++k) {
        JsonRecord row;
        row.field("i", static_cast<long>(k));
        if (r.sample_failed[k])
            row.field("failed", true).field("error", r.sample_errors[k]);
        else
            row.field("dist", r.sample_dist[k])
                .field("n1", r.sample_count1[k])
                .field("n2", r.sample_count2[k])
                .field("wsup1", r.sample_wsup1[k])
                .field("wsup2", r.sample_wsup2[k]);
        p.records += row.str();
        p.records += '\n';
    }
    JsonRecord sep;
    sep.field("complete", r.separation.complete)
        .field("p1_isolated", r.separation.p1_isolated)
        .field("p2_isolated", r.separation.p2_isolated)
        .field("p1_prime_isolated", r.separation.p1_prime_isolated)
        .field("p2_prime_isolated", r.separation.p2_prime_isolated);
    JsonRecord s;
    s.field("kind", "two-volume")
        .field("volume1", r.volume1)
        .field("volume2", r.volume2)
        .field("z1", r.z1)
        .field("z2", r.z2)
        .field("moment", r.moment)
        .field("c_hat", r.c_hat)
        .field("slope", r.slope)
        .field("count_correlation", r.count_correlation)
        .field("mean_count1", r.mean_count1)
        .field("mean_count2", r.mean_count2)
        .field_raw("separation", sep.str())
        .field("samples", r.samples)
        .field("failures", r.failures)
        .field_raw("stats", stats_json(r.stats));
    p.summary = s.str();
    p.phat = phat_table(r.stats);
    p.rhs = rhs_table(r.stats);
    return p;
}

RunPayload run_geometry(const ExperimentConfig& cfg) {
    const GeometryCheckConfig& g = cfg.geometry;
    RunPayload p;
    p.samples = g.pairs;
    p.seed = g.seed;
    long generated = 0, violations = 0, complete_pairs = 0, partial_pairs = 0;
    for (long i = 0; i < g.pairs; ++i) {
        std::mt19937_64 eng(derive_stream(g.seed, static_cast<std::uint64_t>(i)));
        const int d = g.dims[static_cast<size_t>(i) % g.dims.size()];
        std::uniform_real_distribution<double> ctr(-30.0, 30.0);
        std::uniform_real_distribution<double> half(0.2, 2.0);
        auto random_box = [&]() {
            Point c1(d), c2(d);
            for (int k = 0; k < d; ++k) c1[k] = ctr(eng);
            for (int k = 0; k < d; ++k) c2[k] = ctr(eng);
            const double h1 = half(eng), h2 = half(eng);
            return Box{Cube{c1, h1}, Cube{c2, h2}};
        };
        Box a = random_box();
        Box b = random_box();
        bool made = distance_condition(a, b);
        for (int t = 0; !made && t < 500; ++t) {
            a = random_box();
            b = random_box();
            made = distance_condition(a, b);
        }
        JsonRecord row;
        row.field("i", i).field("dim", d);
        if (!made) {
            row.field("generated", false);
            p.records += row.str();
            p.records += '\n';
            continue;
        }
        ++generated;
        std::string err;
        SeparationVerdict v{};
        try {
            v = classify_separation(a, b);
            const CellularSet sa = shadow(a);
            const CellularSet sb = shadow(b);
            auto one = [](const Cube& c) { return CellularSet{{c}}; };
            if (!(v.complete || v.partial())) {
                err = "no separation case applies";
            } else if (v.complete != (set_distance(sa, sb) > 0.0)) {
                err = "complete flag disagrees with the shadow distance";
            } else {
                auto check = [&](bool flag, const Cube& own, const Cube& mate,
                                 const CellularSet& other) {
                    if (!flag || !err.empty()) return;
                    if (!(set_distance(one(own), set_union(one(mate), other)) > 0.0))
                        err = "claimed isolation has zero set distance";
                };
                check(v.p1_isolated, a.particle1, a.particle2, sb);
                check(v.p2_isolated, a.particle2, a.particle1, sb);
                check(v.p1_prime_isolated, b.particle1, b.particle2, sa);
                check(v.p2_prime_isolated, b.particle2, b.particle1, sa);
            }
        } catch (const std::exception& e) {
            err = e.what();
        }
        if (!err.empty())
            ++violations;
        else if (v.complete)
            ++complete_pairs;
        else
            ++partial_pairs;
        row.field("complete", v.complete)
            .field("p1", v.p1_isolated)
            .field("p2", v.p2_isolated)
            .field("p1p", v.p1_prime_isolated)
            .field("p2p", v.p2_prime_isolated)
            .field("ok", err.empty());
        if (!err.empty()) row.field("error", err);
        p.records += row.str();
        p.records += '\n';
    }
    p.failures = violations + (g.pairs - generated);
    JsonRecord s;
    s.field("kind", "geometry-check")
        .field("pairs", g.pairs)
        .field("generated", generated)
        .field("violations", violations)
        .field("complete_pairs", complete_pairs)
        .field("partial_pairs", partial_pairs);
    p.summary = s.str();
    return p;
}

RunPayload run_diagnostics(const ExperimentConfig& cfg) {
    const DiagnosticsConfig& dg = cfg.diagnostics;
    const CellularSet dom = shadow(dg.box);
    GridPtr grid = build_grid(dom, dg.spacing);
    const KernelSpace space = gram_assemble(dg.kernel, grid, &dom, dg.basis);
    const int nb = static_cast<int>(space.basis.cols());
    const size_t n = static_cast<size_t>(dg.samples);

    std::vector<std::vector<double>> coeff(n, std::vector<double>(nb, 0.0));
    std::vector<double> sup(n, 0.0);
    std::vector<unsigned char> fail(n, 0);
    std::vector<std::string> errs(n);
    for_each_index(dg.samples, dg.workers, [&](std::int64_t i) {
        const size_t k = static_cast<size_t>(i);
        try {
            FieldSample f = sample_field(space, dg.seed, static_cast<std::uint64_t>(i));
            for (int j = 0; j < nb; ++j)
                coeff[k][static_cast<size_t>(j)] =
                    coefficient(space, space.basis.col(j), f);
            sup[k] = sup_field(f, dom);
        } catch (const std::exception& e) {
            fail[k] = 1;
            errs[k] = e.what();
        }
    });
    for (size_t k = 0; k < n; ++k)
        if (fail[k]) throw std::runtime_error("field draw " + std::to_string(k) +
                                              " failed: " + errs[k]);

    // Raw second moment of the coefficient vector against the identity.
    double moment_dev = 0.0;
    for (int a = 0; a < nb; ++a) {
        for (int b = a; b < nb; ++b) {
            double m = 0.0;
            for (size_t k = 0; k < n; ++k)
                m += coeff[k][static_cast<size_t>(a)] * coeff[k][static_cast<size_t>(b)];
            m /= static_cast<double>(n);
            moment_dev = std::max(moment_dev, std::abs(m - (a == b ? 1.0 : 0.0)));
        }
    }
    double ortho_residual = 0.0;
    for (int a = 0; a < nb; ++a) {
        for (int b = a; b < nb; ++b) {
            const double g = space.inner(space.basis.col(a), space.basis.col(b));
            ortho_residual = std::max(ortho_residual, std::abs(g - (a == b ? 1.0 : 0.0)));
        }
    }
    double sup_mean = 0.0;
    for (size_t k = 0; k < n; ++k) sup_mean += sup[k];
    sup_mean /= static_cast<double>(n);

    RunPayload p;
    p.samples = dg.samples;
    p.seed = dg.seed;
    p.workers = dg.workers;
    for (size_t k = 0; k < n; ++k) {
        JsonRecord row;
        row.field("i", static_cast<long>(k))
            .field_raw("coeff", json_array(coeff[k]))
            .field("sup", sup[k]);
        p.records += row.str();
        p.records += '\n';
    }
    JsonRecord s;
    s.field("kind", "field-diagnostics")
        .field("cells", static_cast<long>(grid->size()))
        .field("gram_min_eig", space.gram_min_eig)
        .field("gram_max_eig", space.gram_max_eig)
        .field("norm_z", space.norm_z)
        .field("basis", static_cast<long>(nb))
        .field("ortho_residual", ortho_residual)
        .field("coeff_moment_dev", moment_dev)
        .field("sup_mean", sup_mean)
        .field("samples", dg.samples)
        .field("failures", 0L);
    p.summary = s.str();

    const FieldSample f0 = sample_field(space, dg.seed, 0);
    std::string csv;
    const int d = grid->dim();
    for (int k = 1; k <= d; ++k) csv += "x" + std::to_string(k) + ",";
    csv += "value\n";
    for (int cell = 0; cell < grid->size(); ++cell) {
        for (double x : grid->centers[static_cast<size_t>(cell)])
            csv += json_number(x) + ",";
        csv += json_number(f0.values(cell)) + "\n";
    }
    p.extra_name = "sample0.csv";
    p.extra = std::move(csv);
    return p;
}

RunPayload run_modulus(const ExperimentConfig& cfg) {
    const ModulusRunConfig& m = cfg.modulus;
    const CellularSet dom = shadow(m.box);
    RunPayload p;
    p.samples = static_cast<long>(m.widths.size());
    p.seed = m.seed;
    std::string rows = "[";
    for (size_t j = 0; j < m.widths.size(); ++j) {
        const double w = m.widths[j];
        const double closed = gaussian_window_mass(w);
        const double linear = w / kRoot2Pi;
        ModulusEstimate est;
        if (m.mode == ModulusMode::GaussianClosedForm) {
            est.value = closed;
            est.outer_mean = closed;
        } else if (m.probes.empty()) {
            est = modulus_empirical(m.kernel, dom, CellularSet{}, m.spacing, w, m.outer,
                                    m.inner, derive_stream(m.seed, j));
        } else {
            est = modulus_bar(m.kernel, m.box, m.spacing, w, ModulusMode::Empirical,
                              m.probes, m.outer, m.inner, derive_stream(m.seed, j));
        }
        JsonRecord row;
        row.field("width", w)
            .field("estimate", est.value)
            .field("outer_mean", est.outer_mean)
            .field("rel_std", est.outer_rel_std)
            .field("n_outer", static_cast<long>(est.n_outer))
            .field("n_inner", static_cast<long>(est.n_inner))
            .field("closed_form", closed)
            .field("linear_bound", linear);
        p.records += row.str();
        p.records += '\n';
        if (j) rows += ',';
        rows += row.str();
    }
    rows += ']';
    JsonRecord s;
    s.field("kind", "modulus")
        .field("mode", m.mode == ModulusMode::GaussianClosedForm ? "closed-form"
                                                                 : "empirical")
        .field("rows", static_cast<long>(m.widths.size()));
    p.summary = s.field_raw("table", rows).str();
    return p;
}

// ---------------------------------------------------------------- reporting

double jnum(const json& v) {
    if (v.is_string()) {
        const std::string s = v.get<std::string>();
        if (s == "inf") return std::numeric_limits<double>::infinity();
        if (s == "-inf") return -std::numeric_limits<double>::infinity();
        if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
        throw std::runtime_error("unexpected string where a number was recorded: " + s);
    }
    return v.get<double>();
}

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

[[noreturn]] void report_mismatch(const std::string& run_dir, const std::string& what) {
    throw std::runtime_error("records.jsonl does not reproduce summary.json (" + what +
                             ") in " + run_dir);
}

void render_concentration(std::ostringstream& os, const json& summary,
                          const std::vector<json>& recs, bool two,
                          const std::string& run_dir) {
    long ok_rows = 0;
    std::vector<double> val;
    for (const json& r : recs) {
        if (r.contains("failed")) continue;
        ++ok_rows;
        val.push_back(jnum(r.at(two ? "dist" : "dmin")));
    }
    os << "  samples " << summary.at("samples") << ", failures "
       << summary.at("failures") << "\n";
    os << "    epsilon       p_hat   wilson95 (lo, hi)        mu            rhs\n";
    for (const json& st : summary.at("stats")) {
        const double eps = st.at("epsilon").get<double>();
        long hits = 0;
        for (double v : val)
            if (v <= eps) ++hits;
        if (hits != st.at("hits").get<long>() ||
            ok_rows != st.at("samples").get<long>())
            report_mismatch(run_dir, "hit counts");
        char line[160];
        std::snprintf(line, sizeof line, "    %-10g  %-8g  (%-8g, %-8g)  %-12g  %-g\n",
                      eps, st.at("p_hat").get<double>(),
                      st.at("wilson_lo").get<double>(),
                      st.at("wilson_hi").get<double>(), st.at("mu").get<double>(),
                      st.at("rhs").get<double>());
        os << line;
    }
    if (!two) {
        os << "  volume " << fmt(summary.at("volume").get<double>()) << ", Z "
           << fmt(summary.at("norm_z").get<double>()) << ", moment "
           << fmt(summary.at("moment").get<double>()) << "\n";
        os << "  c_hat " << fmt(summary.at("c_hat").get<double>()) << ", slope "
           << fmt(summary.at("slope").get<double>()) << ", w_sup mean "
           << fmt(summary.at("w_sup_mean").get<double>()) << " max "
           << fmt(summary.at("w_sup_max").get<double>()) << "\n";
        return;
    }
    // Window counts and their correlation, recomputed from the records.
    double m1 = 0.0, m2 = 0.0;
    for (const json& r : recs) {
        if (r.contains("failed")) continue;
        m1 += r.at("n1").get<double>();
        m2 += r.at("n2").get<double>();
    }
    m1 /= static_cast<double>(ok_rows);
    m2 /= static_cast<double>(ok_rows);
    double v1 = 0.0, v2 = 0.0, cv = 0.0;
    for (const json& r : recs) {
        if (r.contains("failed")) continue;
        const double a = r.at("n1").get<double>() - m1;
        const double b = r.at("n2").get<double>() - m2;
        v1 += a * a;
        v2 += b * b;
        cv += a * b;
    }
    const double corr = (v1 > 0.0 && v2 > 0.0) ? cv / std::sqrt(v1 * v2) : 0.0;
    if (std::abs(corr - summary.at("count_correlation").get<double>()) > 1e-12)
        report_mismatch(run_dir, "count correlation");
    os << "  volumes " << fmt(summary.at("volume1").get<double>()) << " and "
       << fmt(summary.at("volume2").get<double>()) << ", Z1 "
       << fmt(summary.at("z1").get<double>()) << ", Z2 "
       << fmt(summary.at("z2").get<double>()) << ", moment "
       << fmt(summary.at("moment").get<double>()) << "\n";
    os << "  c_hat " << fmt(summary.at("c_hat").get<double>()) << ", slope "
       << fmt(summary.at("slope").get<double>()) << "\n";
    os << "  window counts: mean " << fmt(m1) << " / " << fmt(m2) << ", correlation "
       << fmt(corr) << "\n";
    const json& sep = summary.at("separation");
    os << "  separation: "
       << (sep.at("complete").get<bool>() ? "complete" : "partial") << " (p1 "
       << sep.at("p1_isolated").get<bool>() << ", p2 "
       << sep.at("p2_isolated").get<bool>() << ", p1' "
       << sep.at("p1_prime_isolated").get<bool>() << ", p2' "
       << sep.at("p2_prime_isolated").get<bool>() << ")\n";
}

void render_geometry(std::ostringstream& os, const json& summary,
                     const std::vector<json>& recs, const std::string& run_dir) {
    long generated = 0, violations = 0, complete_pairs = 0, partial_pairs = 0;
    for (const json& r : recs) {
        if (r.contains("generated") && !r.at("generated").get<bool>()) continue;
        ++generated;
        if (!r.at("ok").get<bool>())
            ++violations;
        else if (r.at("complete").get<bool>())
            ++complete_pairs;
        else
            ++partial_pairs;
    }
    if (generated != summary.at("generated").get<long>() ||
        violations != summary.at("violations").get<long>() ||
        complete_pairs != summary.at("complete_pairs").get<long>() ||
        partial_pairs != summary.at("partial_pairs").get<long>())
        report_mismatch(run_dir, "separation tallies");
    os << "  separation-exhaustiveness: " << (generated - violations) << "/"
       << generated << " classified, " << violations << " violations\n";
    os << "  complete " << complete_pairs << ", partial " << partial_pairs
       << ", generator misses " << (summary.at("pairs").get<long>() - generated)
       << "\n";
}

void render_diagnostics(std::ostringstream& os, const json& summary,
                        const std::vector<json>& recs, const std::string& run_dir) {
    const long nb = summary.at("basis").get<long>();
    const size_t n = recs.size();
    double moment_dev = 0.0;
    for (long a = 0; a < nb; ++a) {
        for (long b = a; b < nb; ++b) {
            double m = 0.0;
            for (const json& r : recs)
                m += r.at("coeff")[static_cast<size_t>(a)].get<double>() *
                     r.at("coeff")[static_cast<size_t>(b)].get<double>();
            m /= static_cast<double>(n);
            moment_dev = std::max(moment_dev, std::abs(m - (a == b ? 1.0 : 0.0)));
        }
    }
    if (std::abs(moment_dev - summary.at("coeff_moment_dev").get<double>()) > 1e-12)
        report_mismatch(run_dir, "coefficient moments");
    os << "  cells " << summary.at("cells") << ", gram eigenvalues ["
       << fmt(summary.at("gram_min_eig").get<double>()) << ", "
       << fmt(summary.at("gram_max_eig").get<double>()) << "], Z "
       << fmt(summary.at("norm_z").get<double>()) << "\n";
    os << "  basis " << nb << ", orthonormality residual "
       << fmt(summary.at("ortho_residual").get<double>()) << "\n";
    os << "  coefficient second moment deviates from identity by " << fmt(moment_dev)
       << " over " << n << " draws (sup mean "
       << fmt(summary.at("sup_mean").get<double>()) << ")\n";
}

void render_modulus(std::ostringstream& os, const json& summary) {
    os << "  mode " << summary.at("mode").get<std::string>() << "\n";
    os << "    width      estimate    rel_std    closed_form  linear_bound\n";
    for (const json& r : summary.at("table")) {
        char line[160];
        std::snprintf(line, sizeof line, "    %-9g  %-10g  %-9g  %-11g  %-g\n",
                      r.at("width").get<double>(), r.at("estimate").get<double>(),
                      r.at("rel_std").get<double>(), r.at("closed_form").get<double>(),
                      r.at("linear_bound").get<double>());
        os << line;
    }
}

}  // namespace

ExperimentConfig experiment_from(const Config& c) {
    ExperimentConfig e;
    e.kind = c.get_string("kind");
    const bool known = e.kind == "one-volume" || e.kind == "two-volume" ||
                       e.kind == "field-diagnostics" || e.kind == "geometry-check" ||
                       e.kind == "modulus";
    if (!known)
        cfg_error(c, "unknown kind '" + e.kind +
                         "'; expected one-volume, two-volume, field-diagnostics, "
                         "geometry-check or modulus");
    e.canonical = c.canonical();
    e.config_hash = fnv1a_hex(e.canonical);
    e.out_dir =
        c.get_string("out", "run-" + e.kind + "-" + e.config_hash.substr(0, 8));

    if (e.kind == "one-volume") {
        WegnerOneConfig& w = e.one;
        w.box = parse_box(c, "box");
        w.spacing = positive_double(c, "spacing");
        w.kernel = parse_kernel(c);
        w.interaction = parse_interaction(c);
        w.coupling = c.get_double("coupling", 1.0);
        w.energy = c.get_double("energy");
        w.epsilons = validate_epsilons(c.get_doubles("epsilons"));
        w.samples = required_samples(c);
        w.seed = c.get_u64("seed", 1);
        w.workers = resolve_workers(c);
        w.modulus = parse_estimator(c, "estimator", "closed-form");
        w.modulus_outer = static_cast<int>(c.get_long("modulus.outer", 8));
        w.modulus_inner = static_cast<int>(c.get_long("modulus.inner", 10000));
        w.solver = parse_solver(c, &w.eigen_count);
        const CellularSet dom = shadow(w.box);
        gram_assemble(w.kernel, build_grid(dom, w.spacing), &dom, 1);
    } else if (e.kind == "two-volume") {
        WegnerTwoConfig& w = e.two;
        w.box1 = parse_box(c, "box");
        w.box2 = parse_box(c, "box2");
        w.spacing = positive_double(c, "spacing");
        w.kernel = parse_kernel(c);
        w.interaction = parse_interaction(c);
        w.coupling = c.get_double("coupling", 1.0);
        w.window_center = c.get_double("window.center");
        w.window_half_width = positive_double(c, "window.half_width");
        w.epsilons = validate_epsilons(c.get_doubles("epsilons"));
        w.samples = required_samples(c);
        w.seed = c.get_u64("seed", 1);
        w.workers = resolve_workers(c);
        w.modulus = parse_estimator(c, "estimator", "closed-form");
        w.modulus_outer = static_cast<int>(c.get_long("modulus.outer", 8));
        w.modulus_inner = static_cast<int>(c.get_long("modulus.inner", 10000));
        w.solver = parse_solver(c, &w.eigen_count);
        classify_separation(w.box1, w.box2);
        const CellularSet dom = set_union(shadow(w.box1), shadow(w.box2));
        const CellularSet lead = shadow(w.box1);
        gram_assemble(w.kernel, build_grid(dom, w.spacing), &lead, 1);
    } else if (e.kind == "field-diagnostics") {
        DiagnosticsConfig& dg = e.diagnostics;
        dg.box = parse_box(c, "box");
        dg.spacing = positive_double(c, "spacing");
        dg.kernel = parse_kernel(c);
        dg.basis = static_cast<int>(c.get_long("diagnostics.basis", 5));
        if (dg.basis < 1) cfg_error(c, "diagnostics.basis must be positive");
        dg.samples = c.get_long("samples", 200);
        if (dg.samples < 1) cfg_error(c, "samples must be positive");
        dg.seed = c.get_u64("seed", 1);
        dg.workers = resolve_workers(c);
        const CellularSet dom = shadow(dg.box);
        gram_assemble(dg.kernel, build_grid(dom, dg.spacing), &dom, dg.basis);
    } else if (e.kind == "geometry-check") {
        GeometryCheckConfig& g = e.geometry;
        g.pairs = c.get_long("geometry.pairs", 10000);
        if (g.pairs < 1) cfg_error(c, "geometry.pairs must be positive");
        g.dims = parse_dims(c);
        g.seed = c.get_u64("seed", 1);
    } else {
        ModulusRunConfig& m = e.modulus;
        m.box = parse_box(c, "box");
        m.spacing = positive_double(c, "spacing");
        m.kernel = parse_kernel(c);
        m.widths = c.get_doubles("modulus.widths");
        for (double w : m.widths)
            if (!(w > 0.0)) cfg_error(c, "modulus.widths entries must be positive");
        m.mode = parse_estimator(c, "modulus.mode", "empirical");
        m.outer = static_cast<int>(c.get_long("modulus.outer", 8));
        m.inner = static_cast<int>(c.get_long("modulus.inner", 10000));
        m.seed = c.get_u64("seed", 1);
        if (c.has("box2.center1")) m.probes.push_back(parse_box(c, "box2"));
        const CellularSet dom = shadow(m.box);
        gram_assemble(m.kernel, build_grid(dom, m.spacing), &dom, 1);
        for (const Box& probe : m.probes) classify_separation(m.box, probe);
    }

    const std::vector<std::string> leftover = c.unread_keys();
    if (!leftover.empty()) {
        std::string list;
        for (const std::string& k : leftover) {
            if (!list.empty()) list += ", ";
            list += k;
        }
        cfg_error(c, "unrecognized key(s): " + list);
    }
    return e;
}

ExperimentConfig load_experiment(const std::string& path) {
    const Config c = Config::parse_file(path);
    return experiment_from(c);
}

void run_experiment(const ExperimentConfig& cfg) {
    namespace fs = std::filesystem;
    fs::create_directories(cfg.out_dir);
    const auto t0 = std::chrono::steady_clock::now();

    RunPayload p;
    if (cfg.kind == "one-volume")
        p = run_one(cfg);
    else if (cfg.kind == "two-volume")
        p = run_two(cfg);
    else if (cfg.kind == "geometry-check")
        p = run_geometry(cfg);
    else if (cfg.kind == "field-diagnostics")
        p = run_diagnostics(cfg);
    else
        p = run_modulus(cfg);

    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    JsonRecord manifest;
    manifest.field("kind", cfg.kind)
        .field("code_version", kCodeVersion)
        .field("config_hash", cfg.config_hash)
        .field("seed", p.seed)
        .field("seed_rule", kSeedRule)
        .field("workers", p.workers)
        .field("samples", p.samples)
        .field("failures", p.failures)
        .field("elapsed_seconds", elapsed)
        .field("created", timestamp_utc());

    const std::string dir = cfg.out_dir + "/";
    write_file(dir + "config.ini", cfg.canonical);
    write_file(dir + "records.jsonl", p.records);
    write_file(dir + "summary.json", p.summary + "\n");
    write_file(dir + "manifest.json", manifest.str() + "\n");
    if (!p.phat.empty()) write_file(dir + "phat.dat", p.phat);
    if (!p.rhs.empty()) write_file(dir + "rhs.dat", p.rhs);
    if (!p.extra_name.empty()) write_file(dir + p.extra_name, p.extra);
    write_file(dir + "report.txt", render_report(cfg.out_dir));
}

std::string render_report(const std::string& run_dir) {
    const json manifest = json::parse(read_file(run_dir + "/manifest.json"));
    const json summary = json::parse(read_file(run_dir + "/summary.json"));
    std::vector<json> recs;
    {
        std::istringstream in(read_file(run_dir + "/records.jsonl"));
        std::string line;
        while (std::getline(in, line))
            if (!line.empty()) recs.push_back(json::parse(line));
    }
    const std::string kind = manifest.at("kind").get<std::string>();
    std::ostringstream os;
    os << kind << " run " << manifest.at("config_hash").get<std::string>() << "\n";
    os << "  " << manifest.at("code_version").get<std::string>() << ", seed "
       << manifest.at("seed") << ", workers " << manifest.at("workers")
       << ", elapsed " << fmt(manifest.at("elapsed_seconds").get<double>()) << " s\n";
    if (kind == "one-volume" || kind == "two-volume")
        render_concentration(os, summary, recs, kind == "two-volume", run_dir);
    else if (kind == "geometry-check")
        render_geometry(os, summary, recs, run_dir);
    else if (kind == "field-diagnostics")
        render_diagnostics(os, summary, recs, run_dir);
    else if (kind == "modulus")
        render_modulus(os, summary);
    else
        throw std::runtime_error("unknown kind in manifest: " + kind);
    return os.str();
}

}  // namespace a2p
