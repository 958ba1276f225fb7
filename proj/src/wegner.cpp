#include "a2p/wegner.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <limits>
#include <stdexcept>

#include "a2p/parallel.hpp"
#include "a2p/rng.hpp"

namespace a2p {

namespace {

constexpr double kZ95 = 1.959963984540054;

void check_run_sizes(long samples, int workers) {
    if (samples < 1) throw std::invalid_argument("samples must be positive");
    if (workers < 1) throw std::invalid_argument("workers must be positive");
}

/// Kernel norm of the indicator of a cell subset: spacing^d sqrt(sum of the
/// covariance sub-block), the square root of its Gram mass.
double indicator_norm(const KernelSpace& space, const std::vector<int>& cells) {
    double mass = 0.0;
    for (int p : cells)
        for (int q : cells) mass += space.cell_cov(p, q);
    return space.grid->cell_measure * std::sqrt(std::max(mass, 0.0));
}

struct FailureTally {
    long failures = 0;
    std::string first_error;
};

FailureTally tally_failures(const std::vector<unsigned char>& fail,
                            const std::vector<std::string>& errs, long samples) {
    FailureTally t;
    for (long i = 0; i < samples; ++i) {
        if (!fail[static_cast<size_t>(i)]) continue;
        ++t.failures;
        if (t.first_error.empty()) t.first_error = errs[static_cast<size_t>(i)];
    }
    if (t.failures * 100 > samples) {
        char buf[96];
        std::snprintf(buf, sizeof buf, "%ld of %ld samples failed (above the 1%% budget)",
                      t.failures, samples);
        throw std::runtime_error(std::string(buf) + ": " + t.first_error);
    }
    return t;
}

double slope_through_origin(const std::vector<EpsilonStat>& stats) {
    double num = 0.0, den = 0.0;
    for (const auto& s : stats) {
        num += s.p_hat * s.mu;
        den += s.mu * s.mu;
    }
    return den > 0.0 ? num / den : 0.0;
}

}  // namespace

std::vector<double> validate_epsilons(const std::vector<double>& eps) {
    if (eps.empty()) throw std::invalid_argument("at least one epsilon is required");
    for (double e : eps) {
        if (!(e > 0.0 && e < 1.0)) {
            char buf[64];
            std::snprintf(buf, sizeof buf, "%g", e);
            throw std::invalid_argument(std::string("epsilon must lie in (0,1); got ") +
                                        buf);
        }
    }
    std::vector<double> sorted = eps;
    std::sort(sorted.begin(), sorted.end());
    return sorted;
}

WilsonInterval wilson95(long hits, long n) {
    if (n < 1) throw std::invalid_argument("Wilson interval needs at least one trial");
    if (hits < 0 || hits > n)
        throw std::invalid_argument("hit count outside [0, n] in Wilson interval");
    const double z2 = kZ95 * kZ95;
    const double h = static_cast<double>(hits);
    const double m = static_cast<double>(n);
    const double center = (h + z2 / 2.0) / (m + z2);
    const double half =
        kZ95 * std::sqrt(h * (m - h) / m + z2 / 4.0) / (m + z2);
    return {std::max(0.0, center - half), std::min(1.0, center + half)};
}

double rhs_bound_one(double c, double volume, double moment, double mu) {
    return c * volume * moment * mu;
}

double rhs_bound_two(double c, double volume1, double volume2, double moment,
                     double mu_bar) {
    return c * volume1 * volume2 * moment * mu_bar;
}

WegnerOneReport wegner_one(const WegnerOneConfig& cfg) {
    const std::vector<double> eps = validate_epsilons(cfg.epsilons);
    check_run_sizes(cfg.samples, cfg.workers);
    cfg.interaction.validate();

    const CellularSet domain = shadow(cfg.box);
    GridPtr grid = build_grid(domain, cfg.spacing);
    const KernelSpace space = gram_assemble(cfg.kernel, grid, &domain, 1);
    const double eps_max = eps.back();
    const int d = cfg.box.dim();
    const size_t n = static_cast<size_t>(cfg.samples);

    std::vector<double> dmin(n, 0.0), wsup(n, 0.0);
    std::vector<unsigned char> fail(n, 0);
    std::vector<std::string> errs(n);

    for_each_index(cfg.samples, cfg.workers, [&](std::int64_t i) {
        const size_t k = static_cast<size_t>(i);
        try {
            FieldSample field =
                sample_field(space, cfg.seed, static_cast<std::uint64_t>(i));
            DiscreteHamiltonian h =
                assemble(cfg.box, cfg.spacing, cfg.interaction, field, cfg.coupling);
            Spectrum s = eigensolve(h, cfg.eigen_count, cfg.solver);
            if (!s.complete && s.coverage_upper < cfg.energy + eps_max)
                throw std::runtime_error(
                    "certified spectral coverage ends below the widest window; "
                    "raise the eigenvalue count");
            double best = std::numeric_limits<double>::infinity();
            for (double e : s.eigenvalues)
                best = std::min(best, std::abs(e - cfg.energy));
            dmin[k] = best;
            wsup[k] = h.w_sup;
        } catch (const std::exception& e) {
            fail[k] = 1;
            errs[k] = e.what();
        }
    });

    const FailureTally tally = tally_failures(fail, errs, cfg.samples);
    const long n_ok = cfg.samples - tally.failures;

    WegnerOneReport rep;
    rep.failures = tally.failures;
    rep.first_error = tally.first_error;
    rep.samples = n_ok;
    rep.volume = cfg.box.particle1.volume() * cfg.box.particle2.volume();
    rep.norm_z = space.norm_z;

    double mom_sum = 0.0, w_sum = 0.0, w_max = 0.0;
    for (size_t k = 0; k < n; ++k) {
        if (fail[k]) continue;
        mom_sum += std::pow(cfg.energy + 2.0 + wsup[k], d);
        w_sum += wsup[k];
        w_max = std::max(w_max, wsup[k]);
    }
    rep.moment = mom_sum / static_cast<double>(n_ok);
    rep.w_sup_mean = w_sum / static_cast<double>(n_ok);
    rep.w_sup_max = w_max;

    for (size_t j = 0; j < eps.size(); ++j) {
        EpsilonStat st;
        st.epsilon = eps[j];
        st.samples = n_ok;
        for (size_t k = 0; k < n; ++k)
            if (!fail[k] && dmin[k] <= eps[j]) ++st.hits;
        st.p_hat = static_cast<double>(st.hits) / static_cast<double>(n_ok);
        st.wilson = wilson95(st.hits, n_ok);
        const double width = 4.0 * rep.norm_z * eps[j];
        if (cfg.modulus == ModulusMode::GaussianClosedForm) {
            st.mu = gaussian_window_mass(width);
        } else {
            st.mu = modulus_empirical(cfg.kernel, domain, CellularSet{}, cfg.spacing,
                                      width, cfg.modulus_outer, cfg.modulus_inner,
                                      derive_stream(cfg.seed, 1000 + j))
                        .value;
        }
        rep.stats.push_back(st);
    }

    for (const auto& st : rep.stats) {
        const double denom = rep.volume * rep.moment * st.mu;
        if (denom > 0.0) rep.c_hat = std::max(rep.c_hat, st.p_hat / denom);
    }
    rep.slope = slope_through_origin(rep.stats);
    for (auto& st : rep.stats)
        st.rhs = rhs_bound_one(rep.c_hat, rep.volume, rep.moment, st.mu);

    rep.sample_dmin = std::move(dmin);
    rep.sample_wsup = std::move(wsup);
    rep.sample_failed = std::move(fail);
    rep.sample_errors = std::move(errs);
    return rep;
}

WegnerTwoReport wegner_two(const WegnerTwoConfig& cfg) {
    const std::vector<double> eps = validate_epsilons(cfg.epsilons);
    check_run_sizes(cfg.samples, cfg.workers);
    cfg.interaction.validate();
    if (!(cfg.window_half_width > 0.0))
        throw std::invalid_argument("window half-width must be positive");

    WegnerTwoReport rep;
    rep.separation = classify_separation(cfg.box1, cfg.box2);

    const CellularSet sh1 = shadow(cfg.box1);
    const CellularSet sh2 = shadow(cfg.box2);
    GridPtr grid = build_grid(set_union(sh1, sh2), cfg.spacing);
    const KernelSpace space = gram_assemble(cfg.kernel, grid, &sh1, 1);
    rep.z1 = space.norm_z;
    rep.z2 = indicator_norm(space, grid->cells_in(sh2));

    const double b = cfg.window_center;
    const double delta = cfg.window_half_width;
    const Interval window{b - delta, b + delta};
    const int d = cfg.box1.dim();
    const size_t n = static_cast<size_t>(cfg.samples);

    std::vector<double> dist(n, 0.0), momterm(n, 0.0), wsup1(n, 0.0), wsup2(n, 0.0);
    std::vector<long> count1(n, 0), count2(n, 0);
    std::vector<unsigned char> fail(n, 0);
    std::vector<std::string> errs(n);

    for_each_index(cfg.samples, cfg.workers, [&](std::int64_t i) {
        const size_t k = static_cast<size_t>(i);
        try {
            FieldSample field =
                sample_field(space, cfg.seed, static_cast<std::uint64_t>(i));
            DiscreteHamiltonian h1 =
                assemble(cfg.box1, cfg.spacing, cfg.interaction, field, cfg.coupling);
            DiscreteHamiltonian h2 =
                assemble(cfg.box2, cfg.spacing, cfg.interaction, field, cfg.coupling);
            Spectrum s1 = eigensolve(h1, cfg.eigen_count, cfg.solver);
            Spectrum s2 = eigensolve(h2, cfg.eigen_count, cfg.solver);
            dist[k] = spectral_distance(s1, s2, window);
            count1[k] = count_in_window(s1, window);
            count2[k] = count_in_window(s2, window);
            wsup1[k] = h1.w_sup;
            wsup2[k] = h2.w_sup;
            momterm[k] = std::pow(
                (b + delta + 1.0 + h1.w_sup) * (b + delta + 1.0 + h2.w_sup), d);
        } catch (const std::exception& e) {
            fail[k] = 1;
            errs[k] = e.what();
        }
    });

    const FailureTally tally = tally_failures(fail, errs, cfg.samples);
    const long n_ok = cfg.samples - tally.failures;
    rep.failures = tally.failures;
    rep.first_error = tally.first_error;
    rep.samples = n_ok;
    rep.volume1 = cfg.box1.particle1.volume() * cfg.box1.particle2.volume();
    rep.volume2 = cfg.box2.particle1.volume() * cfg.box2.particle2.volume();

    double mom_sum = 0.0, c1_sum = 0.0, c2_sum = 0.0;
    for (size_t k = 0; k < n; ++k) {
        if (fail[k]) continue;
        mom_sum += momterm[k];
        c1_sum += static_cast<double>(count1[k]);
        c2_sum += static_cast<double>(count2[k]);
    }
    rep.moment = mom_sum / static_cast<double>(n_ok);
    rep.mean_count1 = c1_sum / static_cast<double>(n_ok);
    rep.mean_count2 = c2_sum / static_cast<double>(n_ok);

    double v1 = 0.0, v2 = 0.0, cov = 0.0;
    for (size_t k = 0; k < n; ++k) {
        if (fail[k]) continue;
        const double a = static_cast<double>(count1[k]) - rep.mean_count1;
        const double c = static_cast<double>(count2[k]) - rep.mean_count2;
        v1 += a * a;
        v2 += c * c;
        cov += a * c;
    }
    rep.count_correlation = (v1 > 0.0 && v2 > 0.0) ? cov / std::sqrt(v1 * v2) : 0.0;

    for (size_t j = 0; j < eps.size(); ++j) {
        EpsilonStat st;
        st.epsilon = eps[j];
        st.samples = n_ok;
        for (size_t k = 0; k < n; ++k)
            if (!fail[k] && dist[k] <= eps[j]) ++st.hits;
        st.p_hat = static_cast<double>(st.hits) / static_cast<double>(n_ok);
        st.wilson = wilson95(st.hits, n_ok);
        if (cfg.modulus == ModulusMode::GaussianClosedForm) {
            st.mu = std::max(gaussian_window_mass(4.0 * rep.z1 * eps[j]),
                             gaussian_window_mass(4.0 * rep.z2 * eps[j]));
        } else {
            const double m1 =
                modulus_bar(cfg.kernel, cfg.box1, cfg.spacing, 4.0 * rep.z1 * eps[j],
                            ModulusMode::Empirical, {cfg.box2}, cfg.modulus_outer,
                            cfg.modulus_inner, derive_stream(cfg.seed, 2000 + 2 * j))
                    .value;
            const double m2 =
                modulus_bar(cfg.kernel, cfg.box2, cfg.spacing, 4.0 * rep.z2 * eps[j],
                            ModulusMode::Empirical, {cfg.box1}, cfg.modulus_outer,
                            cfg.modulus_inner,
                            derive_stream(cfg.seed, 2000 + 2 * j + 1))
                    .value;
            st.mu = std::max(m1, m2);
        }
        rep.stats.push_back(st);
    }

    for (const auto& st : rep.stats) {
        const double denom = rep.volume1 * rep.volume2 * rep.moment * st.mu;
        if (denom > 0.0) rep.c_hat = std::max(rep.c_hat, st.p_hat / denom);
    }
    rep.slope = slope_through_origin(rep.stats);
    for (auto& st : rep.stats)
        st.rhs = rhs_bound_two(rep.c_hat, rep.volume1, rep.volume2, rep.moment, st.mu);

    rep.sample_dist = std::move(dist);
    rep.sample_count1 = std::move(count1);
    rep.sample_count2 = std::move(count2);
    rep.sample_wsup1 = std::move(wsup1);
    rep.sample_wsup2 = std::move(wsup2);
    rep.sample_failed = std::move(fail);
    rep.sample_errors = std::move(errs);
    return rep;
}

}  // namespace a2p
