#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "simprov/geometry.hpp"
#include "test_util.hpp"

using namespace simprov;
using namespace simprov::testutil;

TEST_CASE("zero flow is the identity, bit for bit") {
    ImageBuffer img = make_test_image(1, 32, 48);
    ImageBuffer out = dewarp(img, identity_flow(32, 48));
    CHECK(out.data == img.data);
}

TEST_CASE("dimension mismatch is rejected") {
    ImageBuffer img = make_test_image(2, 16, 16);
    CHECK_THROWS_AS(dewarp(img, identity_flow(16, 17)), DimensionError);
}

TEST_CASE("constant integer flow is a pure gather with edge clamp") {
    ImageBuffer img = make_test_image(3, 20, 20);
    FlowField flow(20, 20);
    std::fill(flow.dx.begin(), flow.dx.end(), 1.0f);
    ImageBuffer out = dewarp(img, flow);
    for (int y = 0; y < 20; ++y) {
        for (int x = 0; x < 19; ++x)
            for (int c = 0; c < 3; ++c) CHECK(out.at(y, x, c) == img.at(y, x + 1, c));
        for (int c = 0; c < 3; ++c) CHECK(out.at(y, 19, c) == img.at(y, 19, c));
    }
}

TEST_CASE("half-pixel shift on a linear ramp is exact") {
    const int w = 32, h = 8;
    ImageBuffer ramp(h, w, 1);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) ramp.at(y, x, 0) = static_cast<float>(x) / w;
    FlowField flow(h, w);
    std::fill(flow.dx.begin(), flow.dx.end(), 0.5f);
    ImageBuffer out = dewarp(ramp, flow);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w - 1; ++x)
            CHECK(std::abs(out.at(y, x, 0) - (x + 0.5f) / w) <= 1e-6f);
}

TEST_CASE("identity flow is idempotent under composition") {
    ImageBuffer img = make_test_image(4, 24, 24);
    FlowField id = identity_flow(24, 24);
    ImageBuffer once = dewarp(img, id);
    ImageBuffer twice = dewarp(once, id);
    CHECK(once.data == twice.data);
}

TEST_CASE("bilinear sampling preserves value bounds") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<float> disp(-3.0f, 3.0f);
    ImageBuffer img = make_test_image(6, 30, 30);
    float mn = *std::min_element(img.data.begin(), img.data.end());
    float mx = *std::max_element(img.data.begin(), img.data.end());
    FlowField flow(30, 30);
    for (auto& v : flow.dx) v = disp(rng);
    for (auto& v : flow.dy) v = disp(rng);
    ImageBuffer out = dewarp(img, flow);
    for (float v : out.data) {
        CHECK(v >= mn - 1e-6f);
        CHECK(v <= mx + 1e-6f);
    }
}

TEST_CASE("sampling is linear in pixel values") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<float> disp(-2.0f, 2.0f);
    std::uniform_real_distribution<float> unit(0.0f, 1.0f);
    ImageBuffer a(16, 16, 1), b(16, 16, 1);
    for (auto& v : a.data) v = unit(rng);
    for (auto& v : b.data) v = unit(rng);
    FlowField flow(16, 16);
    for (auto& v : flow.dx) v = disp(rng);
    for (auto& v : flow.dy) v = disp(rng);

    const float alpha = 0.3f, beta = 0.6f;
    ImageBuffer mix(16, 16, 1);
    for (size_t i = 0; i < mix.data.size(); ++i)
        mix.data[i] = alpha * a.data[i] + beta * b.data[i];

    ImageBuffer wa = dewarp(a, flow), wb = dewarp(b, flow), wmix = dewarp(mix, flow);
    for (size_t i = 0; i < wmix.data.size(); ++i)
        CHECK(std::abs(wmix.data[i] - (alpha * wa.data[i] + beta * wb.data[i])) <= 1e-6f);
}
