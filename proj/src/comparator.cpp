#include "simprov/comparator.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "simprov/features.hpp"
#include "simprov/geometry.hpp"

namespace simprov {

std::vector<float> ssd_heatmap(const ImageBuffer& q_aligned, const ImageBuffer& c, int t) {
    if (!q_aligned.same_shape(c)) throw DimensionError("ssd_heatmap: image shapes differ");
    if (t < 1) throw ParamError("ssd_heatmap: t must be >= 1");

    // even partition, remainder pixels to the trailing cells
    auto bound = [](int extent, int cells, int i) {
        int base = extent / cells, rem = extent % cells;
        int lead = cells - rem;  // first `lead` cells have size base
        if (i <= lead) return base * i;
        return base * lead + (base + 1) * (i - lead);
    };

    std::vector<float> grid(static_cast<size_t>(t) * t, 0.0f);
    for (int cy = 0; cy < t; ++cy) {
        int y0 = bound(q_aligned.height, t, cy), y1 = bound(q_aligned.height, t, cy + 1);
        for (int cx = 0; cx < t; ++cx) {
            int x0 = bound(q_aligned.width, t, cx), x1 = bound(q_aligned.width, t, cx + 1);
            double acc = 0.0;
            long long count = 0;
            for (int y = y0; y < y1; ++y)
                for (int x = x0; x < x1; ++x) {
                    for (int ch = 0; ch < q_aligned.channels; ++ch) {
                        double d = static_cast<double>(q_aligned.at(y, x, ch)) - c.at(y, x, ch);
                        acc += d * d;
                    }
                    ++count;
                }
            grid[static_cast<size_t>(cy) * t + cx] =
                count > 0 ? static_cast<float>(acc / count) : 0.0f;
        }
    }
    return grid;
}

std::vector<float> normalize_heatmap(const std::vector<float>& grid) {
    if (grid.empty()) return {};
    float mn = grid[0], mx = grid[0];
    for (float v : grid) {
        if (!std::isfinite(v)) throw ParamError("normalize_heatmap: non-finite value");
        mn = std::min(mn, v);
        mx = std::max(mx, v);
    }
    std::vector<float> out(grid.size(), 0.0f);
    if (mx > mn)
        for (size_t i = 0; i < grid.size(); ++i) out[i] = (grid[i] - mn) / (mx - mn);
    return out;  // constant grid carries no localization signal: all zeros
}

namespace {

// Catmull-Rom kernel, a = -0.5
double cubic_weight(double x) {
    x = std::abs(x);
    if (x < 1.0) return 1.5 * x * x * x - 2.5 * x * x + 1.0;
    if (x < 2.0) return -0.5 * x * x * x + 2.5 * x * x - 4.0 * x + 2.0;
    return 0.0;
}

}  // namespace

std::vector<float> upsample_heatmap(const std::vector<float>& grid, int t, int out_h,
                                    int out_w) {
    if (static_cast<size_t>(t) * t != grid.size())
        throw ParamError("upsample_heatmap: grid size does not match t");
    if (out_h < t || out_w < t) throw ParamError("upsample_heatmap: target smaller than grid");

    auto sample = [&](int gy, int gx) {
        gy = std::clamp(gy, 0, t - 1);
        gx = std::clamp(gx, 0, t - 1);
        return static_cast<double>(grid[static_cast<size_t>(gy) * t + gx]);
    };

    std::vector<float> out(static_cast<size_t>(out_h) * out_w);
    const double sy = static_cast<double>(t) / out_h;
    const double sx = static_cast<double>(t) / out_w;
    for (int y = 0; y < out_h; ++y) {
        double fy = (y + 0.5) * sy - 0.5;
        int y0 = static_cast<int>(std::floor(fy));
        double dy = fy - y0;
        double wy[4];
        for (int i = 0; i < 4; ++i) wy[i] = cubic_weight(dy - (i - 1));
        for (int x = 0; x < out_w; ++x) {
            double fx = (x + 0.5) * sx - 0.5;
            int x0 = static_cast<int>(std::floor(fx));
            double dx = fx - x0;
            double wx[4];
            for (int i = 0; i < 4; ++i) wx[i] = cubic_weight(dx - (i - 1));
            double acc = 0.0;
            for (int i = 0; i < 4; ++i)
                for (int j = 0; j < 4; ++j)
                    acc += wy[i] * wx[j] * sample(y0 + i - 1, x0 + j - 1);
            out[static_cast<size_t>(y) * out_w + x] =
                static_cast<float>(std::clamp(acc, 0.0, 1.0));
        }
    }
    return out;
}

std::vector<uint8_t> threshold_mask(const std::vector<float>& map, double theta) {
    std::vector<uint8_t> mask(map.size());
    for (size_t i = 0; i < map.size(); ++i) mask[i] = map[i] > theta ? 1 : 0;
    return mask;
}

PairScore classify_pair_classical(const ImageBuffer& q, const ImageBuffer& c,
                                  const FlowField* flow, const ComparatorParams& params) {
    ImageBuffer aligned = flow ? dewarp(q, *flow) : q;
    if (!aligned.same_shape(c))
        throw DimensionError("classify_pair_classical: image shapes differ");

    Descriptor dq = extract_descriptor(aligned, params.gem_p, params.grid).descriptor;
    Descriptor dc = extract_descriptor(c, params.gem_p, params.grid).descriptor;
    double dot = 0.0;
    for (int i = 0; i < kDescriptorDim; ++i)
        dot += static_cast<double>(dq.values[i]) * dc.values[i];
    double d_desc = 1.0 - dot;

    PairScore score;
    score.heatmap = Heatmap(params.t);
    score.heatmap.grid = ssd_heatmap(aligned, c, params.t);
    score.same_score =
        static_cast<float>(1.0 - std::clamp(d_desc / params.tau_desc, 0.0, 1.0));

    std::vector<float> norm = normalize_heatmap(score.heatmap.grid);
    size_t hot = 0;
    for (float v : norm)
        if (v > params.theta) ++hot;
    double hot_frac = static_cast<double>(hot) / norm.size();

    if (score.same_score < params.tau_same) score.verdict = Verdict::distinct;
    else if (hot == 0) score.verdict = Verdict::benign;
    else if (hot_frac <= params.area_cap) score.verdict = Verdict::manipulated;
    else score.verdict = Verdict::distinct;  // majority of the image differs

    score.heatmap.verdict = score.verdict;
    return score;
}

std::vector<uint8_t> adjusted_mask(const PairScore& score, int h, int w,
                                   const ComparatorParams& params) {
    size_t n = static_cast<size_t>(h) * w;
    switch (score.verdict) {
        case Verdict::benign: return std::vector<uint8_t>(n, 0);
        case Verdict::distinct: return std::vector<uint8_t>(n, 1);
        case Verdict::manipulated: {
            std::vector<float> norm = normalize_heatmap(score.heatmap.grid);
            std::vector<float> up = upsample_heatmap(norm, score.heatmap.t, h, w);
            return threshold_mask(up, params.theta);
        }
    }
    return std::vector<uint8_t>(n, 0);
}

FileBackedScorer::FileBackedScorer(const std::string& path, int t) {
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open score file: " + path);
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::istringstream ss(line);
        Key key{};
        PairScore ps;
        ps.heatmap = Heatmap(t);
        std::string verdict;
        if (!(ss >> key.q >> key.c >> ps.same_score >> verdict))
            throw FormatError("malformed score row at " + path + ":" + std::to_string(lineno));
        ps.verdict = verdict_from_string(verdict);
        for (int i = 0; i < t * t; ++i)
            if (!(ss >> ps.heatmap.grid[i]))
                throw FormatError("missing grid value at " + path + ":" + std::to_string(lineno));
        ps.heatmap.verdict = ps.verdict;
        scores_[key] = std::move(ps);
    }
}

PairScore FileBackedScorer::score(int64_t query_id, int64_t candidate_id, const ImageBuffer&,
                                  const ImageBuffer&, const FlowField*) const {
    auto it = scores_.find(Key{query_id, candidate_id});
    if (it == scores_.end())
        throw LookupError("no precomputed score for pair (" + std::to_string(query_id) +
                          ", " + std::to_string(candidate_id) + ")");
    return it->second;
}

}  // namespace simprov
