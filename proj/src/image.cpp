#include "simprov/image.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

namespace simprov {

ImageBuffer::ImageBuffer(int h, int w, int c, float fill)
    : height(h), width(w), channels(c),
      data(static_cast<size_t>(h) * w * c, fill) {}

void ImageBuffer::validate() const {
    if (height <= 0 || width <= 0) throw DimensionError("image dimensions must be positive");
    if (channels != 1 && channels != 3) throw ParamError("image must have 1 or 3 channels");
    if (data.size() != static_cast<size_t>(height) * width * channels)
        throw DimensionError("image data length does not match dimensions");
    for (float v : data)
        if (!(v >= 0.0f && v <= 1.0f)) throw ParamError("image values must be finite and in [0,1]");
}

namespace {

int read_pnm_int(std::istream& in) {
    // skips whitespace and '#' comments
    int c = in.get();
    while (c != EOF) {
        if (c == '#') {
            while (c != EOF && c != '\n') c = in.get();
        } else if (std::isspace(c)) {
            c = in.get();
        } else {
            break;
        }
    }
    if (c == EOF || !std::isdigit(c)) throw FormatError("malformed PNM header");
    int val = 0;
    while (c != EOF && std::isdigit(c)) {
        val = val * 10 + (c - '0');
        c = in.get();
    }
    return val;
}

}  // namespace

ImageBuffer read_image(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open image file: " + path);
    char m0 = 0, m1 = 0;
    in.get(m0);
    in.get(m1);
    int channels;
    if (m0 == 'P' && m1 == '5') channels = 1;
    else if (m0 == 'P' && m1 == '6') channels = 3;
    else throw FormatError("unsupported magic in " + path + " (expected P5 or P6)");

    int w = read_pnm_int(in);
    int h = read_pnm_int(in);
    int maxval = read_pnm_int(in);
    if (maxval != 255) throw FormatError("unsupported maxval " + std::to_string(maxval) + " in " + path);
    // header ends with exactly one whitespace byte, already consumed by read_pnm_int

    ImageBuffer img(h, w, channels);
    size_t n = img.data.size();
    std::vector<uint8_t> raw(n);
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(n));
    if (static_cast<size_t>(in.gcount()) != n)
        throw FormatError("truncated pixel data in " + path);
    for (size_t i = 0; i < n; ++i) img.data[i] = raw[i] / 255.0f;
    return img;
}

void write_image(const ImageBuffer& img, const std::string& path) {
    img.validate();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FormatError("cannot open for writing: " + path);
    out << (img.channels == 1 ? "P5" : "P6") << "\n"
        << img.width << " " << img.height << "\n255\n";
    std::vector<uint8_t> raw(img.data.size());
    for (size_t i = 0; i < raw.size(); ++i)
        raw[i] = static_cast<uint8_t>(std::lround(std::clamp(img.data[i], 0.0f, 1.0f) * 255.0f));
    out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (!out) throw FormatError("write failed: " + path);
}

ImageBuffer to_grayscale(const ImageBuffer& img) {
    if (img.channels == 1) return img;
    ImageBuffer out(img.height, img.width, 1);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            out.at(y, x, 0) = 0.299f * img.at(y, x, 0) + 0.587f * img.at(y, x, 1) +
                              0.114f * img.at(y, x, 2);
    return out;
}

ImageBuffer resize_bilinear(const ImageBuffer& img, int out_h, int out_w) {
    if (out_h < 1 || out_w < 1) throw ParamError("resize target must be positive");
    ImageBuffer out(out_h, out_w, img.channels);
    const double sy = static_cast<double>(img.height) / out_h;
    const double sx = static_cast<double>(img.width) / out_w;
    for (int y = 0; y < out_h; ++y) {
        double fy = (y + 0.5) * sy - 0.5;
        int y0 = static_cast<int>(std::floor(fy));
        double wy = fy - y0;
        int ya = std::clamp(y0, 0, img.height - 1);
        int yb = std::clamp(y0 + 1, 0, img.height - 1);
        for (int x = 0; x < out_w; ++x) {
            double fx = (x + 0.5) * sx - 0.5;
            int x0 = static_cast<int>(std::floor(fx));
            double wx = fx - x0;
            int xa = std::clamp(x0, 0, img.width - 1);
            int xb = std::clamp(x0 + 1, 0, img.width - 1);
            for (int c = 0; c < img.channels; ++c) {
                // lerp form keeps constant regions exactly constant
                double a = img.at(ya, xa, c), b = img.at(ya, xb, c);
                double top = a + (b - a) * wx;
                a = img.at(yb, xa, c);
                b = img.at(yb, xb, c);
                double bot = a + (b - a) * wx;
                out.at(y, x, c) = static_cast<float>(top + (bot - top) * wy);
            }
        }
    }
    return out;
}

Verdict verdict_from_string(const std::string& s) {
    if (s == "benign") return Verdict::benign;
    if (s == "manipulated") return Verdict::manipulated;
    if (s == "distinct") return Verdict::distinct;
    throw FormatError("unknown verdict: " + s);
}

}  // namespace simprov
