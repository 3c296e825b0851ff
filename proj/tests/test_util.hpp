#pragma once

#include <random>

#include "simprov/image.hpp"

namespace simprov::testutil {

// Smooth random RGB image: a seeded low-resolution color grid upsampled
// bilinearly, so each seed gives a distinct dominant palette and structure.
inline ImageBuffer make_test_image(uint64_t seed, int h = 128, int w = 128) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<float> unit(0.0f, 1.0f);
    ImageBuffer coarse(8, 8, 3);
    for (auto& v : coarse.data) v = unit(rng);
    return resize_bilinear(coarse, h, w);
}

inline ImageBuffer add_noise(const ImageBuffer& img, double sigma, uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, sigma);
    ImageBuffer out = img;
    for (auto& v : out.data)
        v = static_cast<float>(std::clamp(v + noise(rng), 0.0, 1.0));
    return out;
}

// Inverts a rectangular region: an unmistakable editorial change.
inline ImageBuffer plant_patch(const ImageBuffer& img, int y0, int x0, int ph, int pw) {
    ImageBuffer out = img;
    for (int y = y0; y < y0 + ph; ++y)
        for (int x = x0; x < x0 + pw; ++x)
            for (int c = 0; c < img.channels; ++c) out.at(y, x, c) = 1.0f - out.at(y, x, c);
    return out;
}

// Resize down and back up: redistribution-style benign degradation.
inline ImageBuffer resize_roundtrip(const ImageBuffer& img, int mid_h, int mid_w) {
    return resize_bilinear(resize_bilinear(img, mid_h, mid_w), img.height, img.width);
}

}  // namespace simprov::testutil
