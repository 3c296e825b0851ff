#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "simprov/common.hpp"

namespace simprov {

// H x W x C raster, values in [0,1], row-major, channel-interleaved.
struct ImageBuffer {
    int height = 0;
    int width = 0;
    int channels = 0;  // 1 or 3
    std::vector<float> data;

    ImageBuffer() = default;
    ImageBuffer(int h, int w, int c, float fill = 0.0f);

    float& at(int y, int x, int c) { return data[(static_cast<size_t>(y) * width + x) * channels + c]; }
    float at(int y, int x, int c) const { return data[(static_cast<size_t>(y) * width + x) * channels + c]; }

    size_t pixel_count() const { return static_cast<size_t>(height) * width; }
    bool same_shape(const ImageBuffer& o) const {
        return height == o.height && width == o.width && channels == o.channels;
    }

    void validate() const;  // throws DimensionError / ParamError on bad fields
};

// Binary PGM (P5) / PPM (P6), 8-bit only. Pixel p maps to p/255.
ImageBuffer read_image(const std::string& path);
void write_image(const ImageBuffer& img, const std::string& path);

ImageBuffer to_grayscale(const ImageBuffer& img);

// Bilinear resample to the given size (used by pHash and test corpora).
ImageBuffer resize_bilinear(const ImageBuffer& img, int out_h, int out_w);

}  // namespace simprov
