#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "simprov/comparator.hpp"
#include "simprov/index.hpp"

namespace simprov {

// Fraction of queries whose single relevant id appears at rank <= k.
double ir_at_k(const std::vector<std::vector<int64_t>>& results,
               const std::vector<int64_t>& truth, int k);

// AP over descending-score order; ties keep input order. Throws on no positives.
double average_precision(const std::vector<float>& scores, const std::vector<int>& labels);

// Classification-adjusted IoU of the predicted mask against ground truth;
// empty-union-empty counts as a perfect 1.0.
double iou_adjusted(const PairScore& score, const std::vector<uint8_t>& gt_mask, int h, int w,
                    const ComparatorParams& params = {});

// Exact exhaustive scan, squared L2, ties by ascending id.
std::vector<SearchHit> brute_force_search(const float* descriptors, size_t n, int dim,
                                          const float* query, int k,
                                          const int64_t* ids = nullptr);

enum class SynthMode { gaussian_unit, clustered };

// Seeded reproducible unit-norm vectors; clustered mode perturbs 1024 random
// cluster centers, mimicking a corpus with coarse structure.
std::vector<float> gen_synthetic(size_t n, int dim, uint64_t seed, SynthMode mode);

struct BenchRow {
    int nprobe;
    double recall;
    double mean_ms;
    double median_ms;
    double p99_ms;
};

// Recall vs the supplied oracle top-k ids plus single-threaded per-query
// wall-clock latency, one row per nprobe value, after a warm-up pass.
std::vector<BenchRow> bench_recall_latency(const Index& index, const float* queries,
                                           size_t n_queries,
                                           const std::vector<std::vector<int64_t>>& oracle,
                                           int k, const std::vector<int>& nprobe_sweep);

void write_bench_report(const std::vector<BenchRow>& rows, const std::string& path);

}  // namespace simprov
