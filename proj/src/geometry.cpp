#include "simprov/geometry.hpp"

#include <algorithm>
#include <cmath>

namespace simprov {

ImageBuffer dewarp(const ImageBuffer& q, const FlowField& flow) {
    q.validate();
    if (flow.height != q.height || flow.width != q.width)
        throw DimensionError("flow dimensions do not match image");

    ImageBuffer out(q.height, q.width, q.channels);
#pragma omp parallel for schedule(static)
    for (long long y = 0; y < q.height; ++y) {
        for (int x = 0; x < q.width; ++x) {
            size_t i = flow.idx(static_cast<int>(y), x);
            double sx = x + static_cast<double>(flow.dx[i]);
            double sy = y + static_cast<double>(flow.dy[i]);
            int x0 = static_cast<int>(std::floor(sx));
            int y0 = static_cast<int>(std::floor(sy));
            double wx = sx - x0;
            double wy = sy - y0;
            int xa = std::clamp(x0, 0, q.width - 1);
            int xb = std::clamp(x0 + 1, 0, q.width - 1);
            int ya = std::clamp(y0, 0, q.height - 1);
            int yb = std::clamp(y0 + 1, 0, q.height - 1);
            for (int c = 0; c < q.channels; ++c) {
                double top = q.at(ya, xa, c) * (1 - wx) + q.at(ya, xb, c) * wx;
                double bot = q.at(yb, xa, c) * (1 - wx) + q.at(yb, xb, c) * wx;
                out.at(static_cast<int>(y), x, c) =
                    static_cast<float>(top * (1 - wy) + bot * wy);
            }
        }
    }
    return out;
}

FlowField identity_flow(int h, int w) {
    if (h < 1 || w < 1) throw ParamError("identity_flow: dimensions must be >= 1");
    return FlowField(h, w);
}

}  // namespace simprov
