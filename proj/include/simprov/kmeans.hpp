#pragma once

#include <cstdint>
#include <vector>

#include "simprov/common.hpp"

namespace simprov {

struct KmeansResult {
    std::vector<float> centroids;  // k * dim, row-major
    std::vector<int> assignment;   // per input vector
    double sse = 0.0;              // final within-cluster sum of squares
};

// Lloyd's algorithm with seeded kmeans++ initialization. Empty clusters are
// repaired by splitting the largest cluster at its farthest member. SSE is
// non-increasing across iterations. Output is independent of thread count.
KmeansResult kmeans_train(const float* vectors, size_t n, int dim, int k, int iters,
                          uint64_t seed);

inline KmeansResult kmeans_train(const std::vector<float>& vectors, int dim, int k,
                                 int iters, uint64_t seed) {
    return kmeans_train(vectors.data(), vectors.size() / dim, dim, k, iters, seed);
}

// Index of the nearest centroid by squared L2, ties to the lowest index.
int nearest_centroid(const float* v, const float* centroids, int k, int dim);

namespace ref {
// Serial assignment kernel kept as the oracle for the OpenMP path.
void assign_serial(const float* vectors, size_t n, int dim, const float* centroids,
                   int k, int* out_assign, float* out_dist2);
}  // namespace ref

}  // namespace simprov
