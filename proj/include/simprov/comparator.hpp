#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "simprov/formats.hpp"
#include "simprov/image.hpp"

namespace simprov {

struct PairScore {
    float same_score = 0.0f;  // in [0,1]
    Verdict verdict = Verdict::distinct;
    Heatmap heatmap;          // raw SSD grid; verdict mirrored into heatmap.verdict
};

// Thresholds for the classical pairwise classifier; these stand in for the
// trained heads and are tunable per corpus.
struct ComparatorParams {
    double tau_desc = 0.3;   // cosine-distance scale for same_score
    double tau_same = 0.5;   // same/distinct cut on same_score
    double theta = 0.35;     // heatmap threshold
    double area_cap = 0.5;   // above this hot-cell fraction the pair is distinct
    int t = 7;               // heatmap grid resolution
    double gem_p = 3.0;
    int grid = 16;           // feature-map cells for descriptors
};

// Per-pixel squared difference summed over channels, average-pooled onto a
// t x t grid. Cells partition the image as evenly as possible, remainder
// pixels going to the trailing cells.
std::vector<float> ssd_heatmap(const ImageBuffer& q_aligned, const ImageBuffer& c, int t = 7);

// Min-max normalization onto [0,1]; a constant grid maps to all zeros.
std::vector<float> normalize_heatmap(const std::vector<float>& grid);

// Bicubic (Catmull-Rom, a = -0.5) upsampling with edge clamping, clipped to [0,1].
std::vector<float> upsample_heatmap(const std::vector<float>& grid, int t, int out_h, int out_w);

std::vector<uint8_t> threshold_mask(const std::vector<float>& map, double theta = 0.35);

PairScore classify_pair_classical(const ImageBuffer& q, const ImageBuffer& c,
                                  const FlowField* flow = nullptr,
                                  const ComparatorParams& params = {});

// The classification-adjusted localization mask: the thresholded upsampled
// heatmap when manipulated, all zeros when benign, all ones when distinct.
std::vector<uint8_t> adjusted_mask(const PairScore& score, int h, int w,
                                   const ComparatorParams& params = {});

// Pluggable pairwise scorer; the classical implementation computes from
// pixels, the file-backed one replays precomputed scores keyed by id pair.
class PairScorer {
public:
    virtual ~PairScorer() = default;
    virtual PairScore score(int64_t query_id, int64_t candidate_id, const ImageBuffer& q,
                            const ImageBuffer& c, const FlowField* flow) const = 0;
};

class ClassicalScorer : public PairScorer {
public:
    explicit ClassicalScorer(ComparatorParams params = {}) : params_(params) {}
    PairScore score(int64_t, int64_t, const ImageBuffer& q, const ImageBuffer& c,
                    const FlowField* flow) const override {
        return classify_pair_classical(q, c, flow, params_);
    }

private:
    ComparatorParams params_;
};

// Reads a TSV of (query_id, candidate_id, same_score, verdict, t*t grid
// values); lets externally computed scores drive re-ranking unchanged.
class FileBackedScorer : public PairScorer {
public:
    explicit FileBackedScorer(const std::string& path, int t = 7);
    PairScore score(int64_t query_id, int64_t candidate_id, const ImageBuffer&,
                    const ImageBuffer&, const FlowField*) const override;

private:
    struct Key {
        int64_t q, c;
        bool operator==(const Key&) const = default;
    };
    struct KeyHash {
        size_t operator()(const Key& k) const {
            return std::hash<int64_t>()(k.q) * 1000003u ^ std::hash<int64_t>()(k.c);
        }
    };
    std::unordered_map<Key, PairScore, KeyHash> scores_;
};

}  // namespace simprov
