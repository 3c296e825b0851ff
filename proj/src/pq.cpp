#include "simprov/pq.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <istream>
#include <ostream>
#include <random>

#include "simprov/kmeans.hpp"

namespace simprov {

void Codebook::validate() const {
    if (!trained()) throw StateError("codebook is untrained");
    if (pq_m < 1 || dim % pq_m != 0)
        throw ParamError("pq_m=" + std::to_string(pq_m) + " does not divide dim=" +
                         std::to_string(dim));
    if (coarse.size() != static_cast<size_t>(coarse_k) * dim)
        throw FormatError("coarse centroid block has wrong size");
    if (pq.size() != static_cast<size_t>(pq_m) * pq_k * sub_dim())
        throw FormatError("pq codebook block has wrong size");
    for (float v : coarse)
        if (!std::isfinite(v)) throw FormatError("non-finite coarse centroid value");
    for (float v : pq)
        if (!std::isfinite(v)) throw FormatError("non-finite pq centroid value");
}

std::vector<float> pq_train(const float* residuals, size_t n, int dim, int m, int k,
                            int iters, uint64_t seed) {
    if (m < 1 || dim % m != 0)
        throw ParamError("pq_train: m=" + std::to_string(m) + " does not divide dim=" +
                         std::to_string(dim));
    const int sub = dim / m;
    const int k_eff = static_cast<int>(std::min<size_t>(k, n));
    std::vector<float> out(static_cast<size_t>(m) * k * sub);
    std::vector<float> block(n * sub);
    for (int b = 0; b < m; ++b) {
        for (size_t i = 0; i < n; ++i)
            std::memcpy(block.data() + i * sub, residuals + i * dim + b * sub,
                        sub * sizeof(float));
        KmeansResult km = kmeans_train(block.data(), n, sub, k_eff, iters, seed + b);
        float* dst = out.data() + static_cast<size_t>(b) * k * sub;
        std::memcpy(dst, km.centroids.data(), static_cast<size_t>(k_eff) * sub * sizeof(float));
        // pad unused rows with copies of row 0; lowest-index ties keep them inert
        for (int j = k_eff; j < k; ++j)
            std::memcpy(dst + static_cast<size_t>(j) * sub, dst, sub * sizeof(float));
    }
    return out;
}

Codebook train_codebook(const float* vectors, size_t n, int dim, const PqTrainConfig& cfg) {
    if (n == 0) throw ParamError("train_codebook: no training vectors");
    Codebook cb;
    cb.dim = dim;
    cb.coarse_k = cfg.coarse_k;
    cb.pq_m = cfg.pq_m;
    cb.pq_k = 256;
    cb.trained_on = n;
    if (dim % cfg.pq_m != 0)
        throw ParamError("pq_m=" + std::to_string(cfg.pq_m) + " does not divide dim");

    // uniform seeded subsample for coarse training at large n
    const float* train = vectors;
    size_t train_n = n;
    std::vector<float> sample;
    if (n > cfg.train_cap) {
        std::mt19937_64 rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
        std::vector<size_t> ids(n);
        for (size_t i = 0; i < n; ++i) ids[i] = i;
        std::shuffle(ids.begin(), ids.end(), rng);
        ids.resize(cfg.train_cap);
        std::sort(ids.begin(), ids.end());
        sample.resize(cfg.train_cap * dim);
        for (size_t i = 0; i < ids.size(); ++i)
            std::memcpy(sample.data() + i * dim, vectors + ids[i] * dim, dim * sizeof(float));
        train = sample.data();
        train_n = cfg.train_cap;
    }

    KmeansResult coarse = kmeans_train(train, train_n, dim, cfg.coarse_k, cfg.iters, cfg.seed);
    cb.coarse = std::move(coarse.centroids);

    // residualize the training set against its coarse assignment
    std::vector<float> residuals(train_n * dim);
#pragma omp parallel for schedule(static)
    for (long long i = 0; i < static_cast<long long>(train_n); ++i) {
        const float* v = train + i * dim;
        int c = nearest_centroid(v, cb.coarse.data(), cb.coarse_k, dim);
        const float* cen = cb.coarse.data() + static_cast<size_t>(c) * dim;
        for (int j = 0; j < dim; ++j) residuals[i * dim + j] = v[j] - cen[j];
    }
    cb.pq = pq_train(residuals.data(), train_n, dim, cfg.pq_m, cb.pq_k, cfg.iters,
                     cfg.seed + 1);
    return cb;
}

BinaryCode encode(const float* v, const Codebook& cb) {
    if (!cb.trained()) throw StateError("encode: untrained codebook");
    BinaryCode code;
    code.coarse_id = static_cast<uint32_t>(
        nearest_centroid(v, cb.coarse.data(), cb.coarse_k, cb.dim));
    const float* cen = cb.coarse.data() + static_cast<size_t>(code.coarse_id) * cb.dim;
    const int sub = cb.sub_dim();
    code.pq_code.resize(cb.pq_m);
    std::vector<float> res(sub);
    for (int m = 0; m < cb.pq_m; ++m) {
        for (int j = 0; j < sub; ++j) res[j] = v[m * sub + j] - cen[m * sub + j];
        code.pq_code[m] = static_cast<uint8_t>(
            nearest_centroid(res.data(), cb.sub_centroid(m, 0), cb.pq_k, sub));
    }
    return code;
}

void encode_batch(const float* vectors, size_t n, const Codebook& cb, BinaryCode* out) {
#pragma omp parallel for schedule(static)
    for (long long i = 0; i < static_cast<long long>(n); ++i)
        out[i] = encode(vectors + i * static_cast<size_t>(cb.dim), cb);
}

std::vector<float> reconstruct(const BinaryCode& code, const Codebook& cb) {
    if (!cb.trained()) throw StateError("reconstruct: untrained codebook");
    if (code.coarse_id >= static_cast<uint32_t>(cb.coarse_k))
        throw FormatError("coarse_id out of range");
    if (static_cast<int>(code.pq_code.size()) != cb.pq_m)
        throw FormatError("pq code length mismatch");
    const int sub = cb.sub_dim();
    std::vector<float> out(cb.coarse.begin() + static_cast<size_t>(code.coarse_id) * cb.dim,
                           cb.coarse.begin() + (static_cast<size_t>(code.coarse_id) + 1) * cb.dim);
    for (int m = 0; m < cb.pq_m; ++m) {
        int j = code.pq_code[m];
        if (j >= cb.pq_k) throw FormatError("pq sub-code out of range");
        const float* c = cb.sub_centroid(m, j);
        for (int d = 0; d < sub; ++d) out[m * sub + d] += c[d];
    }
    return out;
}

std::vector<float> adc_table(const float* query, const Codebook& cb, uint32_t coarse_id) {
    if (!cb.trained()) throw StateError("adc_table: untrained codebook");
    if (coarse_id >= static_cast<uint32_t>(cb.coarse_k))
        throw ParamError("adc_table: coarse_id out of range");
    const int sub = cb.sub_dim();
    const float* cen = cb.coarse.data() + static_cast<size_t>(coarse_id) * cb.dim;
    std::vector<float> table(static_cast<size_t>(cb.pq_m) * cb.pq_k);
    std::vector<float> res(sub);
    for (int m = 0; m < cb.pq_m; ++m) {
        for (int d = 0; d < sub; ++d) res[d] = query[m * sub + d] - cen[m * sub + d];
        for (int j = 0; j < cb.pq_k; ++j) {
            const float* c = cb.sub_centroid(m, j);
            float acc = 0.0f;
            for (int d = 0; d < sub; ++d) {
                float diff = res[d] - c[d];
                acc += diff * diff;
            }
            table[static_cast<size_t>(m) * cb.pq_k + j] = acc;
        }
    }
    return table;
}

namespace {

void put_u32(std::ostream& out, uint32_t v) {
    uint8_t b[4] = {static_cast<uint8_t>(v), static_cast<uint8_t>(v >> 8),
                    static_cast<uint8_t>(v >> 16), static_cast<uint8_t>(v >> 24)};
    out.write(reinterpret_cast<const char*>(b), 4);
}

void put_u64(std::ostream& out, uint64_t v) {
    put_u32(out, static_cast<uint32_t>(v));
    put_u32(out, static_cast<uint32_t>(v >> 32));
}

void put_f32(std::ostream& out, float v) {
    uint32_t bits;
    std::memcpy(&bits, &v, 4);
    put_u32(out, bits);
}

uint32_t get_u32(std::istream& in, const std::string& path) {
    uint8_t b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    if (in.gcount() != 4) throw FormatError("truncated codebook in " + path);
    return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
           (static_cast<uint32_t>(b[2]) << 16) | (static_cast<uint32_t>(b[3]) << 24);
}

uint64_t get_u64(std::istream& in, const std::string& path) {
    uint64_t lo = get_u32(in, path);
    uint64_t hi = get_u32(in, path);
    return lo | (hi << 32);
}

float get_f32(std::istream& in, const std::string& path) {
    uint32_t bits = get_u32(in, path);
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
}

}  // namespace

void write_codebook(std::ostream& out, const Codebook& cb) {
    put_u32(out, static_cast<uint32_t>(cb.coarse_k));
    put_u32(out, static_cast<uint32_t>(cb.dim));
    put_u32(out, static_cast<uint32_t>(cb.pq_m));
    put_u32(out, static_cast<uint32_t>(cb.pq_k));
    put_u64(out, cb.trained_on);
    for (float v : cb.coarse) put_f32(out, v);
    for (float v : cb.pq) put_f32(out, v);
}

Codebook read_codebook(std::istream& in, const std::string& path) {
    Codebook cb;
    cb.coarse_k = static_cast<int>(get_u32(in, path));
    cb.dim = static_cast<int>(get_u32(in, path));
    cb.pq_m = static_cast<int>(get_u32(in, path));
    cb.pq_k = static_cast<int>(get_u32(in, path));
    cb.trained_on = get_u64(in, path);
    if (cb.coarse_k < 1 || cb.dim < 1 || cb.pq_m < 1 || cb.pq_k < 1 ||
        cb.dim % cb.pq_m != 0)
        throw FormatError("inconsistent codebook header in " + path);
    cb.coarse.resize(static_cast<size_t>(cb.coarse_k) * cb.dim);
    for (auto& v : cb.coarse) v = get_f32(in, path);
    cb.pq.resize(static_cast<size_t>(cb.pq_m) * cb.pq_k * cb.sub_dim());
    for (auto& v : cb.pq) v = get_f32(in, path);
    return cb;
}

}  // namespace simprov
