#include "simprov/features.hpp"

#include <algorithm>
#include <cmath>

namespace simprov {

namespace {

struct Hsv {
    float h;  // [0,1), wraps
    float s;  // [0,1]
    float v;  // [0,1]
};

Hsv rgb_to_hsv(float r, float g, float b) {
    float mx = std::max({r, g, b});
    float mn = std::min({r, g, b});
    float d = mx - mn;
    Hsv out{0.0f, 0.0f, mx};
    if (mx > 0.0f) out.s = d / mx;
    if (d > 0.0f) {
        float h;
        if (mx == r) h = (g - b) / d;
        else if (mx == g) h = 2.0f + (b - r) / d;
        else h = 4.0f + (r - g) / d;
        h /= 6.0f;
        if (h < 0.0f) h += 1.0f;
        out.h = h;
    }
    return out;
}

// Linear soft assignment of v in [0,1] onto nbins bins. Returns the two
// adjacent bins and weights; `wrap` selects circular (hue) vs clamped axes.
struct SoftBin {
    int b0, b1;
    float w0, w1;
};

SoftBin soft_assign(float v, int nbins, bool wrap) {
    float pos = v * nbins - 0.5f;
    int i0 = static_cast<int>(std::floor(pos));
    float frac = pos - i0;
    SoftBin sb{i0, i0 + 1, 1.0f - frac, frac};
    if (wrap) {
        sb.b0 = ((sb.b0 % nbins) + nbins) % nbins;
        sb.b1 = ((sb.b1 % nbins) + nbins) % nbins;
    } else {
        sb.b0 = std::clamp(sb.b0, 0, nbins - 1);
        sb.b1 = std::clamp(sb.b1, 0, nbins - 1);
    }
    return sb;
}

constexpr int kHueBins = 8;
constexpr int kSatBins = 4;
constexpr int kValBins = 8;
constexpr int kChannels = kHueBins * kSatBins * kValBins;  // 256

}  // namespace

FeatureMap extract_feature_map(const ImageBuffer& image, int grid) {
    image.validate();
    if (grid < 1) throw ParamError("grid must be >= 1");
    if (image.height < grid || image.width < grid)
        throw DimensionError("image smaller than one cell");

    FeatureMap map;
    map.grid_h = grid;
    map.grid_w = grid;
    map.channels = kChannels;
    map.activations.assign(static_cast<size_t>(grid) * grid * kChannels, 0.0f);

    // Cells overlap by half: cell i spans [i*s, (i+2)*s) with s = extent/(grid+1),
    // so cell boundaries scale proportionally with image size.
    auto cell_range = [grid](int i, int extent, int& lo, int& hi) {
        double s = static_cast<double>(extent) / (grid + 1);
        lo = static_cast<int>(std::floor(i * s));
        hi = static_cast<int>(std::floor((i + 2) * s));
        hi = std::min(std::max(hi, lo + 1), extent);
        lo = std::min(lo, extent - 1);
    };

    std::vector<double> hist(kChannels);
    for (int cy = 0; cy < grid; ++cy) {
        int y0, y1;
        cell_range(cy, image.height, y0, y1);
        for (int cx = 0; cx < grid; ++cx) {
            int x0, x1;
            cell_range(cx, image.width, x0, x1);
            std::fill(hist.begin(), hist.end(), 0.0);
            double total = 0.0;
            for (int y = y0; y < y1; ++y) {
                for (int x = x0; x < x1; ++x) {
                    if (image.channels == 3) {
                        Hsv hsv = rgb_to_hsv(image.at(y, x, 0), image.at(y, x, 1),
                                             image.at(y, x, 2));
                        SoftBin hb = soft_assign(hsv.h, kHueBins, true);
                        SoftBin sb = soft_assign(hsv.s, kSatBins, false);
                        SoftBin vb = soft_assign(hsv.v, kValBins, false);
                        const int hs[2] = {hb.b0, hb.b1};
                        const float hw[2] = {hb.w0, hb.w1};
                        const int ss[2] = {sb.b0, sb.b1};
                        const float sw[2] = {sb.w0, sb.w1};
                        const int vs[2] = {vb.b0, vb.b1};
                        const float vw[2] = {vb.w0, vb.w1};
                        for (int a = 0; a < 2; ++a)
                            for (int b = 0; b < 2; ++b)
                                for (int c = 0; c < 2; ++c)
                                    hist[(hs[a] * kSatBins + ss[b]) * kValBins + vs[c]] +=
                                        static_cast<double>(hw[a]) * sw[b] * vw[c];
                    } else {
                        SoftBin vb = soft_assign(image.at(y, x, 0), kValBins, false);
                        // intensity-only histogram tiled over all 256 channels
                        for (int rep = 0; rep < kChannels / kValBins; ++rep) {
                            hist[rep * kValBins + vb.b0] += vb.w0 / (kChannels / kValBins);
                            hist[rep * kValBins + vb.b1] += vb.w1 / (kChannels / kValBins);
                        }
                    }
                    total += 1.0;
                }
            }
            float* out = map.cell(cy, cx);
            for (int k = 0; k < kChannels; ++k)
                out[k] = static_cast<float>(hist[k] / total);
        }
    }
    return map;
}

std::vector<double> gem_pool(const FeatureMap& map, double p) {
    if (p < 1.0) throw ParamError("GeM exponent p must be >= 1");
    const size_t cells = static_cast<size_t>(map.grid_h) * map.grid_w;
    if (cells == 0) throw ParamError("empty feature map");
    std::vector<double> pooled(map.channels);
    for (int k = 0; k < map.channels; ++k) {
        double acc = 0.0;
        for (size_t c = 0; c < cells; ++c) {
            float x = map.activations[c * map.channels + k];
            if (x < 0.0f) throw ParamError("negative activation in GeM pooling");
            acc += std::pow(static_cast<double>(x), p);
        }
        pooled[k] = std::pow(acc / cells, 1.0 / p);
    }
    return pooled;
}

DescriptorResult extract_descriptor(const ImageBuffer& image, double p, int grid) {
    FeatureMap map = extract_feature_map(image, grid);
    std::vector<double> pooled = gem_pool(map, p);
    DescriptorResult res;
    double norm = 0.0;
    for (float v : pooled) norm += static_cast<double>(v) * v;
    norm = std::sqrt(norm);
    if (norm == 0.0) {
        res.descriptor.values[0] = 1.0f;
        res.blank_fallback = true;
        return res;
    }
    for (int k = 0; k < kDescriptorDim; ++k)
        res.descriptor.values[k] = static_cast<float>(pooled[k] / norm);
    return res;
}

namespace {

constexpr int kDctSize = 32;

// Separable 2-D DCT-II of a 32x32 block, unnormalized basis cos(pi*(i+0.5)*u/N).
void dct2d(const std::vector<double>& in, std::vector<double>& out) {
    static std::vector<double> table = [] {
        std::vector<double> t(kDctSize * kDctSize);
        for (int u = 0; u < kDctSize; ++u)
            for (int i = 0; i < kDctSize; ++i)
                t[u * kDctSize + i] = std::cos(M_PI * (i + 0.5) * u / kDctSize);
        return t;
    }();
    std::vector<double> tmp(kDctSize * kDctSize);
    for (int y = 0; y < kDctSize; ++y)
        for (int u = 0; u < kDctSize; ++u) {
            double acc = 0.0;
            for (int x = 0; x < kDctSize; ++x)
                acc += in[y * kDctSize + x] * table[u * kDctSize + x];
            tmp[y * kDctSize + u] = acc;
        }
    for (int u = 0; u < kDctSize; ++u)
        for (int v = 0; v < kDctSize; ++v) {
            double acc = 0.0;
            for (int y = 0; y < kDctSize; ++y)
                acc += tmp[y * kDctSize + v] * table[u * kDctSize + y];
            out[u * kDctSize + v] = acc;
        }
}

}  // namespace

uint64_t phash64(const ImageBuffer& image) {
    image.validate();
    ImageBuffer gray = to_grayscale(image);
    ImageBuffer small = resize_bilinear(gray, kDctSize, kDctSize);
    std::vector<double> pixels(kDctSize * kDctSize);
    for (size_t i = 0; i < pixels.size(); ++i) pixels[i] = small.data[i];
    // removing the mean leaves the AC terms unchanged and makes them exactly
    // zero for a constant image (the DC term is discarded anyway)
    double mean = 0.0;
    for (double p : pixels) mean += p;
    mean /= pixels.size();
    for (double& p : pixels) p -= mean;
    std::vector<double> coeffs(kDctSize * kDctSize);
    dct2d(pixels, coeffs);

    // 8x8 low-frequency block in row-major scan, skipping DC; (0,8) tops it
    // up to 64 coefficients.
    std::vector<double> sel;
    sel.reserve(64);
    for (int u = 0; u < 8; ++u)
        for (int v = 0; v < 8; ++v) {
            if (u == 0 && v == 0) continue;
            sel.push_back(coeffs[u * kDctSize + v]);
        }
    sel.push_back(coeffs[0 * kDctSize + 8]);

    std::vector<double> sorted = sel;
    std::sort(sorted.begin(), sorted.end());
    double median = 0.5 * (sorted[31] + sorted[32]);

    uint64_t hash = 0;
    for (int i = 0; i < 64; ++i)
        if (sel[i] > median) hash |= (1ULL << i);
    return hash;
}

int hamming(const BitCode& a, const BitCode& b) {
    if (a.width_bits != b.width_bits)
        throw ParamError("hamming: code widths differ (" + std::to_string(a.width_bits) +
                         " vs " + std::to_string(b.width_bits) + ")");
    int d = 0;
    for (size_t i = 0; i < a.words.size(); ++i)
        d += __builtin_popcountll(a.words[i] ^ b.words[i]);
    return d;
}

}  // namespace simprov
