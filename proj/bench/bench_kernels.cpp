// Serial vs OpenMP timings for the batch kernels. Also checks the two agree.
// Usage: bench_kernels [repeats]

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <random>

#include "dreamforge/kernels.hpp"
#include "dreamforge/rle.hpp"

using namespace dreamforge;
using Clock = std::chrono::steady_clock;

namespace {

template <class F>
double best_of(int repeats, F&& f) {
    double best = 1e300;
    for (int i = 0; i < repeats; ++i) {
        const auto t0 = Clock::now();
        f();
        best = std::min(best, std::chrono::duration<double, std::milli>(Clock::now() - t0).count());
    }
    return best;
}

void row(const char* name, double serial, double parallel, bool same) {
    std::printf("%-14s serial %9.2f ms  parallel %9.2f ms  speedup %5.2fx  %s\n", name, serial, parallel,
                serial / parallel, same ? "identical" : "MISMATCH");
}

}  // namespace

int main(int argc, char** argv) {
    const int repeats = argc > 1 ? std::atoi(argv[1]) : 5;
    std::mt19937_64 rng(42);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::normal_distribution<double> n(0.0, 1.0);

    std::vector<BitGrid> grids;
    for (int i = 0; i < 400; ++i) {
        BitGrid g(256, 256);
        const double cx = 40 + u(rng) * 176, cy = 40 + u(rng) * 176, r = 10 + u(rng) * 30;
        for (int y = 0; y < 256; ++y)
            for (int x = 0; x < 256; ++x)
                if ((x - cx) * (x - cx) + (y - cy) * (y - cy) < r * r || u(rng) < 0.01) g.set(x, y);
        grids.push_back(std::move(g));
    }
    std::printf("%d OpenMP threads, best of %d\n", kernels::max_threads(), repeats);

    std::vector<Mask> ms, mp;
    const double es = best_of(repeats, [&] { ms = kernels::serial::encode(grids); });
    const double ep = best_of(repeats, [&] { mp = kernels::parallel::encode(grids); });
    row("encode", es, ep, ms == mp);

    std::vector<BitGrid> ds, dp;
    const double dss = best_of(repeats, [&] { ds = kernels::serial::decode(ms); });
    const double dsp = best_of(repeats, [&] { dp = kernels::parallel::decode(ms); });
    row("decode", dss, dsp, ds == dp && ds == grids);

    std::vector<ConfidenceMap> confs;
    std::vector<kernels::UncertaintyInput> items;
    const BBox full{0, 0, 256, 256};
    for (std::size_t i = 0; i < ms.size(); ++i) {
        ConfidenceMap c{256, 256, std::vector<double>(256 * 256)};
        for (auto& v : c.values) v = u(rng);
        confs.push_back(std::move(c));
    }
    for (std::size_t i = 0; i < ms.size(); ++i) items.push_back({&ms[i], full, &confs[i]});
    std::vector<double> us, up;
    const double us_t = best_of(repeats, [&] { us = kernels::serial::uncertainties(items); });
    const double up_t = best_of(repeats, [&] { up = kernels::parallel::uncertainties(items); });
    row("uncertainty", us_t, up_t, us == up);

    std::vector<std::vector<double>> rows(4096, std::vector<double>(256));
    for (auto& r : rows)
        for (auto& v : r) v = n(rng);
    std::vector<std::span<const double>> views(rows.begin(), rows.end());
    std::vector<double> cs, cp;
    const double cs_t = best_of(repeats, [&] { cs = kernels::serial::column_mean(views); });
    const double cp_t = best_of(repeats, [&] { cp = kernels::parallel::column_mean(views); });
    row("column_mean", cs_t, cp_t, cs == cp);

    std::vector<kernels::SraItem> sra;
    for (std::size_t i = 0; i + 1 < rows.size(); i += 2) sra.push_back({rows[i], rows[i + 1]});
    kernels::SraResult ss, sp;
    const double ss_t = best_of(repeats, [&] { ss = kernels::serial::sra(sra); });
    const double sp_t = best_of(repeats, [&] { sp = kernels::parallel::sra(sra); });
    row("sra", ss_t, sp_t, ss.losses == sp.losses && ss.grads == sp.grads);
    return 0;
}
