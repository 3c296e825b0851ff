// Compares the serial reference kernels against the OpenMP paths: KMeans
// assignment and ADC search. Results must agree exactly; timings show the
// parallel speedup (or lack of it on a single core).

#include <chrono>
#include <cstdio>
#include <cstring>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "simprov/eval.hpp"
#include "simprov/index.hpp"
#include "simprov/kmeans.hpp"

using namespace simprov;
using Clock = std::chrono::steady_clock;

namespace {

double ms_since(Clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

void bench_assignment(size_t n, int dim, int k, int reps) {
    auto vectors = gen_synthetic(n, dim, 1, SynthMode::clustered);
    auto centroids = gen_synthetic(k, dim, 2, SynthMode::clustered);

    std::vector<int> assign_serial(n), assign_parallel(n);
    std::vector<float> d2_serial(n), d2_parallel(n);

    auto t0 = Clock::now();
    for (int r = 0; r < reps; ++r)
        ref::assign_serial(vectors.data(), n, dim, centroids.data(), k, assign_serial.data(),
                           d2_serial.data());
    double serial_ms = ms_since(t0) / reps;

    t0 = Clock::now();
    for (int r = 0; r < reps; ++r) {
#pragma omp parallel for schedule(static)
        for (long long i = 0; i < static_cast<long long>(n); ++i) {
            const float* v = vectors.data() + i * static_cast<size_t>(dim);
            int best = nearest_centroid(v, centroids.data(), k, dim);
            const float* c = centroids.data() + static_cast<size_t>(best) * dim;
            float acc = 0.0f;
            for (int j = 0; j < dim; ++j) {
                float d = v[j] - c[j];
                acc += d * d;
            }
            assign_parallel[i] = best;
            d2_parallel[i] = acc;
        }
    }
    double parallel_ms = ms_since(t0) / reps;

    bool match = assign_serial == assign_parallel &&
                 std::memcmp(d2_serial.data(), d2_parallel.data(), n * sizeof(float)) == 0;
    std::printf("kmeans-assign   n=%zu dim=%d k=%d   serial %.2f ms   parallel %.2f ms   "
                "speedup %.2fx   %s\n",
                n, dim, k, serial_ms, parallel_ms, serial_ms / parallel_ms,
                match ? "identical" : "MISMATCH");
}

void bench_search(size_t n, int dim, int k, int reps) {
    auto base = gen_synthetic(n, dim, 3, SynthMode::clustered);
    auto queries = gen_synthetic(static_cast<size_t>(reps), dim, 4, SynthMode::clustered);

    PqTrainConfig cfg;
    cfg.coarse_k = 64;
    cfg.pq_m = dim % 16 == 0 ? 16 : 8;
    cfg.iters = 5;
    cfg.seed = 5;
    Index index(train_codebook(base.data(), n, dim, cfg));
    std::vector<int64_t> ids(n);
    for (size_t i = 0; i < n; ++i) ids[i] = static_cast<int64_t>(i);
    index.add(base.data(), n, ids.data());

    bool match = true;
    auto t0 = Clock::now();
    std::vector<std::vector<SearchHit>> serial(reps);
    for (int q = 0; q < reps; ++q)
        serial[q] = ref::search_exhaustive_adc(index, queries.data() + q * dim, k);
    double serial_ms = ms_since(t0) / reps;

    t0 = Clock::now();
    for (int q = 0; q < reps; ++q) {
        auto probed = index.search(queries.data() + q * dim, k, cfg.coarse_k);
        if (probed.size() != serial[q].size()) match = false;
        for (size_t r = 0; match && r < probed.size(); ++r)
            if (probed[r].id != serial[q][r].id || probed[r].distance != serial[q][r].distance)
                match = false;
    }
    double probed_ms = ms_since(t0) / reps;

    std::printf("adc-search      n=%zu dim=%d k=%d   exhaustive %.2f ms   full-probe %.2f ms   "
                "%s\n",
                n, dim, k, serial_ms, probed_ms, match ? "identical" : "MISMATCH");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"serial-vs-parallel kernel benchmark"};
    size_t n = 100000;
    int dim = 256, k = 100, reps = 5;
    app.add_option("--n", n, "vectors");
    app.add_option("--dim", dim, "dimension");
    app.add_option("--k", k, "results per query / clusters");
    app.add_option("--reps", reps, "repetitions");
    CLI11_PARSE(app, argc, argv);

    bench_assignment(n, dim, std::min(k, 256), reps);
    bench_search(n, dim, k, reps);
    return 0;
}
