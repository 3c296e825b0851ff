#include "simprov/eval.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <unordered_set>

namespace simprov {

double ir_at_k(const std::vector<std::vector<int64_t>>& results,
               const std::vector<int64_t>& truth, int k) {
    if (k < 1) throw ParamError("ir_at_k: k must be >= 1");
    if (results.size() != truth.size())
        throw ParamError("ir_at_k: results and truth sizes differ");
    if (results.empty()) return 0.0;
    size_t hits = 0;
    for (size_t q = 0; q < results.size(); ++q) {
        const auto& r = results[q];
        size_t upto = std::min<size_t>(k, r.size());
        for (size_t j = 0; j < upto; ++j)
            if (r[j] == truth[q]) {
                ++hits;
                break;
            }
    }
    return static_cast<double>(hits) / results.size();
}

double average_precision(const std::vector<float>& scores, const std::vector<int>& labels) {
    if (scores.size() != labels.size())
        throw ParamError("average_precision: scores and labels sizes differ");
    size_t positives = std::count(labels.begin(), labels.end(), 1);
    if (positives == 0) throw std::domain_error("average_precision: no positive labels");

    std::vector<size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](size_t a, size_t b) { return scores[a] > scores[b]; });
    double ap = 0.0;
    size_t tp = 0;
    for (size_t rank = 0; rank < order.size(); ++rank) {
        if (labels[order[rank]] == 1) {
            ++tp;
            ap += static_cast<double>(tp) / (rank + 1);
        }
    }
    return ap / positives;
}

double iou_adjusted(const PairScore& score, const std::vector<uint8_t>& gt_mask, int h, int w,
                    const ComparatorParams& params) {
    if (gt_mask.size() != static_cast<size_t>(h) * w)
        throw DimensionError("iou_adjusted: mask dimensions mismatch");
    std::vector<uint8_t> pred = adjusted_mask(score, h, w, params);
    size_t inter = 0, uni = 0;
    for (size_t i = 0; i < pred.size(); ++i) {
        bool p = pred[i] != 0, g = gt_mask[i] != 0;
        inter += (p && g);
        uni += (p || g);
    }
    if (uni == 0) return 1.0;  // correctly predicted "nothing manipulated"
    return static_cast<double>(inter) / uni;
}

std::vector<SearchHit> brute_force_search(const float* descriptors, size_t n, int dim,
                                          const float* query, int k, const int64_t* ids) {
    std::vector<SearchHit> all(n);
#pragma omp parallel for schedule(static)
    for (long long i = 0; i < static_cast<long long>(n); ++i) {
        const float* v = descriptors + i * static_cast<size_t>(dim);
        float acc = 0.0f;
        for (int j = 0; j < dim; ++j) {
            float d = query[j] - v[j];
            acc += d * d;
        }
        all[i] = SearchHit{ids ? ids[i] : static_cast<int64_t>(i), acc};
    }
    auto less = [](const SearchHit& a, const SearchHit& b) {
        if (a.distance != b.distance) return a.distance < b.distance;
        return a.id < b.id;
    };
    if (static_cast<size_t>(k) < n) {
        std::partial_sort(all.begin(), all.begin() + k, all.end(), less);
        all.resize(k);
    } else {
        std::sort(all.begin(), all.end(), less);
    }
    return all;
}

std::vector<float> gen_synthetic(size_t n, int dim, uint64_t seed, SynthMode mode) {
    if (n < 1) throw ParamError("gen_synthetic: n must be >= 1");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);

    auto normalize = [dim](float* v) {
        double s = 0.0;
        for (int j = 0; j < dim; ++j) s += static_cast<double>(v[j]) * v[j];
        s = std::sqrt(s);
        if (s > 0)
            for (int j = 0; j < dim; ++j) v[j] = static_cast<float>(v[j] / s);
        else
            v[0] = 1.0f;
    };

    std::vector<float> out(n * dim);
    if (mode == SynthMode::gaussian_unit) {
        for (size_t i = 0; i < n; ++i) {
            float* v = out.data() + i * dim;
            for (int j = 0; j < dim; ++j) v[j] = static_cast<float>(normal(rng));
            normalize(v);
        }
    } else {
        constexpr int kCenters = 1024;
        std::vector<float> centers(static_cast<size_t>(kCenters) * dim);
        for (int c = 0; c < kCenters; ++c) {
            float* v = centers.data() + static_cast<size_t>(c) * dim;
            for (int j = 0; j < dim; ++j) v[j] = static_cast<float>(normal(rng));
            normalize(v);
        }
        // cluster radius ~0.1 regardless of dimension; round-robin assignment
        // keeps cluster populations balanced
        const double kSigma = 0.1 / std::sqrt(static_cast<double>(dim));
        for (size_t i = 0; i < n; ++i) {
            float* v = out.data() + i * dim;
            const float* c = centers.data() + (i % kCenters) * static_cast<size_t>(dim);
            for (int j = 0; j < dim; ++j)
                v[j] = c[j] + static_cast<float>(normal(rng) * kSigma);
            normalize(v);
        }
    }
    return out;
}

std::vector<BenchRow> bench_recall_latency(const Index& index, const float* queries,
                                           size_t n_queries,
                                           const std::vector<std::vector<int64_t>>& oracle,
                                           int k, const std::vector<int>& nprobe_sweep) {
    if (oracle.size() != n_queries)
        throw ParamError("bench: oracle size does not match query count");
    const int dim = index.codebook().dim;

    std::vector<BenchRow> rows;
    for (int nprobe : nprobe_sweep) {
        // warm-up pass, then timed single-threaded measurement
        for (size_t q = 0; q < std::min<size_t>(n_queries, 8); ++q)
            index.search(queries + q * dim, k, nprobe);

        std::vector<double> lat(n_queries);
        size_t hits = 0, wanted = 0;
        for (size_t q = 0; q < n_queries; ++q) {
            auto t0 = std::chrono::steady_clock::now();
            auto res = index.search(queries + q * dim, k, nprobe);
            auto t1 = std::chrono::steady_clock::now();
            lat[q] = std::chrono::duration<double, std::milli>(t1 - t0).count();
            std::unordered_set<int64_t> got;
            for (const auto& h : res) got.insert(h.id);
            for (int64_t id : oracle[q]) {
                ++wanted;
                hits += got.count(id);
            }
        }
        std::sort(lat.begin(), lat.end());
        BenchRow row;
        row.nprobe = nprobe;
        row.recall = wanted ? static_cast<double>(hits) / wanted : 1.0;
        row.mean_ms = std::accumulate(lat.begin(), lat.end(), 0.0) / n_queries;
        row.median_ms = lat[n_queries / 2];
        row.p99_ms = lat[std::min(n_queries - 1, static_cast<size_t>(n_queries * 0.99))];
        rows.push_back(row);
    }
    return rows;
}

void write_bench_report(const std::vector<BenchRow>& rows, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw FormatError("cannot open for writing: " + path);
    out << "nprobe\trecall\tmean_ms\tmedian_ms\tp99_ms\n";
    for (const auto& r : rows)
        out << r.nprobe << "\t" << r.recall << "\t" << r.mean_ms << "\t" << r.median_ms
            << "\t" << r.p99_ms << "\n";
    if (!out) throw FormatError("write failed: " + path);
}

}  // namespace simprov
