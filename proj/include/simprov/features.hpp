#pragma once

#include <cstdint>
#include <vector>

#include "simprov/formats.hpp"
#include "simprov/image.hpp"

namespace simprov {

// H' x W' grid of K-channel activation vectors, all non-negative.
struct FeatureMap {
    int grid_h = 0;
    int grid_w = 0;
    int channels = 0;
    std::vector<float> activations;  // [cell_y][cell_x][channel]

    const float* cell(int cy, int cx) const {
        return activations.data() + (static_cast<size_t>(cy) * grid_w + cx) * channels;
    }
    float* cell(int cy, int cx) {
        return activations.data() + (static_cast<size_t>(cy) * grid_w + cx) * channels;
    }
};

// Tiles the image into a grid of overlapping cells (half-cell overlap) and
// computes a soft-assigned HSV joint histogram (8 hue x 4 sat x 8 intensity
// = 256 channels) per cell. Grayscale inputs use the intensity axis only,
// replicated across the 256 channels. Each cell vector sums to 1.
FeatureMap extract_feature_map(const ImageBuffer& image, int grid = 16);

// Generalized mean over each channel's activations with exponent p.
// Double precision so p=1 matches the arithmetic mean to 1e-9.
std::vector<double> gem_pool(const FeatureMap& map, double p);

struct DescriptorResult {
    Descriptor descriptor;
    bool blank_fallback = false;  // pooled vector was all-zero, e_0 substituted
};

DescriptorResult extract_descriptor(const ImageBuffer& image, double p = 3.0, int grid = 16);

// Classical DCT hash: grayscale -> 32x32 bilinear -> 2-D DCT-II -> 64
// low-frequency coefficients (8x8 block minus DC, plus the next coefficient
// in scan order) thresholded strictly above their median.
uint64_t phash64(const ImageBuffer& image);

// Fixed-width bit string for Hamming comparisons.
struct BitCode {
    int width_bits = 0;
    std::vector<uint64_t> words;

    static BitCode from_u64(uint64_t v) { return BitCode{64, {v}}; }
};

int hamming(const BitCode& a, const BitCode& b);
inline int hamming64(uint64_t a, uint64_t b) { return __builtin_popcountll(a ^ b); }

}  // namespace simprov
