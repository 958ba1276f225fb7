// Times the one-volume estimator at several worker counts on a fixed
// workload and verifies that every run reproduces the serial results bit
// for bit.  The sample loop is the parallel axis; each sample owns a
// derived rng stream, so the worker count must not change any record.

#include <chrono>
#include <cstdio>
#include <vector>

#include "a2p/parallel.hpp"
#include "a2p/wegner.hpp"

using namespace a2p;

namespace {

WegnerOneConfig workload() {
    WegnerOneConfig cfg;
    cfg.box = Box{Cube{{0.0}, 1.0}, Cube{{0.0}, 1.0}};
    cfg.spacing = 1.0 / 16.0;  // 31 interior nodes per particle, operator dim 961
    cfg.kernel.family = CovarianceKernel::Family::Exponential;
    cfg.kernel.scale = 1.0;
    cfg.kernel.corr_length = 1.0;
    cfg.energy = 5.0;
    cfg.epsilons = {0.02, 0.05, 0.1};
    cfg.samples = 64;
    cfg.seed = 7;
    return cfg;
}

double timed_run(int workers, WegnerOneReport* out) {
    WegnerOneConfig cfg = workload();
    cfg.workers = workers;
    const auto t0 = std::chrono::steady_clock::now();
    *out = wegner_one(cfg);
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
        .count();
}

bool identical(const WegnerOneReport& a, const WegnerOneReport& b) {
    if (a.sample_dmin != b.sample_dmin) return false;
    if (a.sample_wsup != b.sample_wsup) return false;
    if (a.stats.size() != b.stats.size()) return false;
    for (size_t i = 0; i < a.stats.size(); ++i)
        if (a.stats[i].hits != b.stats[i].hits) return false;
    return true;
}

}  // namespace

int main() {
    const int hw = hardware_workers();
    std::printf("one-volume workload: 64 samples, operator dim 961, hardware %d\n\n",
                hw);

    WegnerOneReport serial;
    const double t1 = timed_run(1, &serial);
    std::printf("  %-8s  %-10s  %-8s  %s\n", "workers", "seconds", "speedup",
                "matches serial");
    std::printf("  %-8d  %-10.3f  %-8s  %s\n", 1, t1, "1.00", "-");

    // Always exercise 2 and 4 workers (oversubscribed on small machines, which
    // still probes scheduling independence), plus the full hardware count.
    std::vector<int> counts;
    for (int w : {2, 4, hw})
        if (w > 1 && (counts.empty() || counts.back() != w)) counts.push_back(w);

    bool all_match = true;
    for (int w : counts) {
        WegnerOneReport rep;
        const double t = timed_run(w, &rep);
        const bool same = identical(serial, rep);
        all_match = all_match && same;
        std::printf("  %-8d  %-10.3f  %-8.2f  %s\n", w, t, t1 / t,
                    same ? "yes" : "NO");
    }
    if (!all_match) {
        std::printf("\nresults drifted across worker counts\n");
        return 1;
    }
    std::printf("\nall worker counts reproduce the serial records\n");
    return 0;
}
