#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "simprov/common.hpp"

namespace simprov {

// Coarse cluster id plus product-quantization sub-codes. With the default
// configuration (1024 coarse cells, M=16 subspaces of 256 centroids) the PQ
// payload is 16 x 8 = 128 bits.
struct BinaryCode {
    uint32_t coarse_id = 0;
    std::vector<uint8_t> pq_code;
};

// Two-level codebook: coarse KMeans centroids and per-subspace codebooks
// trained on coarse residuals.
struct Codebook {
    int dim = 0;
    int coarse_k = 0;
    int pq_m = 0;
    int pq_k = 256;                     // sub-codebook size (rows per subspace)
    std::vector<float> coarse;          // coarse_k * dim
    std::vector<float> pq;              // pq_m * pq_k * sub_dim
    uint64_t trained_on = 0;

    bool trained() const { return coarse_k > 0 && pq_m > 0 && !coarse.empty() && !pq.empty(); }
    int sub_dim() const { return dim / pq_m; }
    const float* sub_centroid(int m, int j) const {
        return pq.data() + (static_cast<size_t>(m) * pq_k + j) * sub_dim();
    }

    void validate() const;
};

struct PqTrainConfig {
    int coarse_k = 1024;
    int pq_m = 16;
    int iters = 25;
    uint64_t seed = 0;
    // coarse training subsample cap; keeps codebook training bounded at scale
    size_t train_cap = 262144;
};

// Trains the coarse quantizer then per-subspace codebooks on coarse residuals.
// Sub-codebooks always hold pq_k rows; when fewer than pq_k training vectors
// exist the trained rows are padded with copies of row 0 (tie rule makes the
// padding inert).
Codebook train_codebook(const float* vectors, size_t n, int dim, const PqTrainConfig& cfg);

// PQ part only, on already-residualized vectors (toy/test entry point).
std::vector<float> pq_train(const float* residuals, size_t n, int dim, int m, int k,
                            int iters, uint64_t seed);

// Nearest coarse centroid, then per-block nearest sub-centroid on the
// residual; ties break to the lowest index.
BinaryCode encode(const float* v, const Codebook& cb);
void encode_batch(const float* vectors, size_t n, const Codebook& cb, BinaryCode* out);

// Coarse centroid plus concatenated sub-centroids.
std::vector<float> reconstruct(const BinaryCode& code, const Codebook& cb);

// table[m*pq_k + j] = squared L2 between residual block m and sub-centroid j.
// Summing table entries over a code's sub-indices gives the exact squared
// distance between the query residual and the code's PQ reconstruction.
std::vector<float> adc_table(const float* query, const Codebook& cb, uint32_t coarse_id);

void write_codebook(std::ostream& out, const Codebook& cb);
Codebook read_codebook(std::istream& in, const std::string& path);

}  // namespace simprov
