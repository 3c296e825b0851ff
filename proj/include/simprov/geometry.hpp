#pragma once

#include "simprov/formats.hpp"
#include "simprov/image.hpp"

namespace simprov {

// De-warping unit: resamples q at (x + dx(x,y), y + dy(x,y)) with bilinear
// interpolation; out-of-bounds source coordinates clamp to the nearest edge
// pixel. Output is bitwise-deterministic regardless of row partitioning.
ImageBuffer dewarp(const ImageBuffer& q, const FlowField& flow);

FlowField identity_flow(int h, int w);

}  // namespace simprov
