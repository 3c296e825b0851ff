#include "simprov/kmeans.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <random>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace simprov {

namespace {

inline float dist2(const float* a, const float* b, int dim) {
    float acc = 0.0f;
    for (int j = 0; j < dim; ++j) {
        float d = a[j] - b[j];
        acc += d * d;
    }
    return acc;
}

// kmeans++ seeding: first center uniform, then D^2-weighted picks.
std::vector<float> init_plusplus(const float* vectors, size_t n, int dim, int k,
                                 std::mt19937_64& rng) {
    std::vector<float> centroids(static_cast<size_t>(k) * dim);
    std::uniform_int_distribution<size_t> uni(0, n - 1);
    size_t first = uni(rng);
    std::memcpy(centroids.data(), vectors + first * dim, dim * sizeof(float));

    std::vector<double> mind2(n);
#pragma omp parallel for schedule(static)
    for (long long i = 0; i < static_cast<long long>(n); ++i)
        mind2[i] = dist2(vectors + i * dim, centroids.data(), dim);

    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int c = 1; c < k; ++c) {
        double total = 0.0;
        for (size_t i = 0; i < n; ++i) total += mind2[i];
        size_t pick;
        if (total <= 0.0) {
            pick = uni(rng);  // all points coincide with existing centers
        } else {
            double target = unit(rng) * total;
            double run = 0.0;
            pick = n - 1;
            for (size_t i = 0; i < n; ++i) {
                run += mind2[i];
                if (run >= target) {
                    pick = i;
                    break;
                }
            }
        }
        float* dst = centroids.data() + static_cast<size_t>(c) * dim;
        std::memcpy(dst, vectors + pick * dim, dim * sizeof(float));
#pragma omp parallel for schedule(static)
        for (long long i = 0; i < static_cast<long long>(n); ++i) {
            double d = dist2(vectors + i * dim, dst, dim);
            if (d < mind2[i]) mind2[i] = d;
        }
    }
    return centroids;
}

}  // namespace

int nearest_centroid(const float* v, const float* centroids, int k, int dim) {
    int best = 0;
    float best_d = dist2(v, centroids, dim);
    for (int c = 1; c < k; ++c) {
        float d = dist2(v, centroids + static_cast<size_t>(c) * dim, dim);
        if (d < best_d) {
            best_d = d;
            best = c;
        }
    }
    return best;
}

namespace ref {

void assign_serial(const float* vectors, size_t n, int dim, const float* centroids,
                   int k, int* out_assign, float* out_dist2) {
    for (size_t i = 0; i < n; ++i) {
        const float* v = vectors + i * dim;
        int best = 0;
        float best_d = dist2(v, centroids, dim);
        for (int c = 1; c < k; ++c) {
            float d = dist2(v, centroids + static_cast<size_t>(c) * dim, dim);
            if (d < best_d) {
                best_d = d;
                best = c;
            }
        }
        out_assign[i] = best;
        if (out_dist2) out_dist2[i] = best_d;
    }
}

}  // namespace ref

KmeansResult kmeans_train(const float* vectors, size_t n, int dim, int k, int iters,
                          uint64_t seed) {
    if (k < 1) throw ParamError("kmeans: k must be >= 1");
    if (n < static_cast<size_t>(k))
        throw ParamError("kmeans: need at least k=" + std::to_string(k) + " vectors, got " +
                         std::to_string(n));
    if (dim < 1) throw ParamError("kmeans: dim must be >= 1");

    std::mt19937_64 rng(seed);
    KmeansResult res;
    res.centroids = init_plusplus(vectors, n, dim, k, rng);
    res.assignment.assign(n, 0);

    std::vector<float> point_d2(n);
    std::vector<double> sums(static_cast<size_t>(k) * dim);
    std::vector<size_t> counts(k);
    double prev_sse = std::numeric_limits<double>::infinity();

    for (int iter = 0; iter <= iters; ++iter) {
        // assignment: parallel over points, no cross-point state
#pragma omp parallel for schedule(static)
        for (long long i = 0; i < static_cast<long long>(n); ++i) {
            const float* v = vectors + i * dim;
            int best = nearest_centroid(v, res.centroids.data(), k, dim);
            res.assignment[i] = best;
            point_d2[i] = dist2(v, res.centroids.data() + static_cast<size_t>(best) * dim, dim);
        }
        // serial reductions keep the result independent of thread count
        double sse = 0.0;
        for (size_t i = 0; i < n; ++i) sse += point_d2[i];
        if (sse > prev_sse * (1.0 + 1e-9) + 1e-12)
            throw StateError("kmeans SSE increased between iterations");
        prev_sse = sse;
        res.sse = sse;
        if (iter == iters) break;

        std::fill(sums.begin(), sums.end(), 0.0);
        std::fill(counts.begin(), counts.end(), 0);
        for (size_t i = 0; i < n; ++i) {
            int c = res.assignment[i];
            counts[c]++;
            double* s = sums.data() + static_cast<size_t>(c) * dim;
            const float* v = vectors + i * dim;
            for (int j = 0; j < dim; ++j) s[j] += v[j];
        }
        for (int c = 0; c < k; ++c) {
            if (counts[c] == 0) continue;
            float* dst = res.centroids.data() + static_cast<size_t>(c) * dim;
            const double* s = sums.data() + static_cast<size_t>(c) * dim;
            for (int j = 0; j < dim; ++j) dst[j] = static_cast<float>(s[j] / counts[c]);
        }

        // empty-cluster repair: split the largest cluster at its farthest member
        for (int c = 0; c < k; ++c) {
            if (counts[c] != 0) continue;
            int biggest = static_cast<int>(std::max_element(counts.begin(), counts.end()) -
                                           counts.begin());
            size_t far_i = 0;
            float far_d = -1.0f;
            for (size_t i = 0; i < n; ++i) {
                if (res.assignment[i] != biggest) continue;
                float d = dist2(vectors + i * dim,
                                res.centroids.data() + static_cast<size_t>(biggest) * dim, dim);
                if (d > far_d) {
                    far_d = d;
                    far_i = i;
                }
            }
            std::memcpy(res.centroids.data() + static_cast<size_t>(c) * dim,
                        vectors + far_i * dim, dim * sizeof(float));
            res.assignment[far_i] = c;
            counts[c] = 1;
            counts[biggest]--;
        }
    }
    return res;
}

}  // namespace simprov
