#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "simprov/common.hpp"

namespace simprov {

constexpr int kDescriptorDim = 256;

// 256-D unit-norm fingerprint (stage-1 representation).
struct Descriptor {
    std::vector<float> values;

    Descriptor() : values(kDescriptorDim, 0.0f) {}
    explicit Descriptor(std::vector<float> v) : values(std::move(v)) {}

    int dim() const { return static_cast<int>(values.size()); }
    double norm() const;
};

// Dense per-pixel displacement field (dx, dy), same size as the image it warps.
struct FlowField {
    int height = 0;
    int width = 0;
    std::vector<float> dx;  // row-major
    std::vector<float> dy;

    FlowField() = default;
    FlowField(int h, int w)
        : height(h), width(w),
          dx(static_cast<size_t>(h) * w, 0.0f),
          dy(static_cast<size_t>(h) * w, 0.0f) {}

    size_t idx(int y, int x) const { return static_cast<size_t>(y) * width + x; }
};

// t x t manipulation grid plus the pair classification verdict.
struct Heatmap {
    int t = 7;
    std::vector<float> grid;  // raw (un-normalized) values, row-major
    Verdict verdict = Verdict::benign;

    Heatmap() : grid(49, 0.0f) {}
    explicit Heatmap(int t_) : t(t_), grid(static_cast<size_t>(t_) * t_, 0.0f) {}
};

struct ManifestRow {
    int64_t id = 0;
    std::string path;
    std::string group;
};

// Tab-separated corpus listing: one header line, then id \t path \t group.
struct Manifest {
    std::vector<ManifestRow> rows;

    // throws LookupError if the id is absent
    const ManifestRow& by_id(int64_t id) const;
};

// "SIPD" descriptor files: magic, version u32 LE, count u64 LE, dim u32 LE,
// then count*dim float32 LE.
void write_descriptors(const std::string& path, const std::vector<Descriptor>& descriptors);
std::vector<Descriptor> read_descriptors(const std::string& path);

// "SIPH" 64-bit hash files: same header scheme, dim records the bit width (64).
void write_hashes64(const std::string& path, const std::vector<uint64_t>& codes);
std::vector<uint64_t> read_hashes64(const std::string& path);

// "SIPF" flow files: magic, H u32 LE, W u32 LE, then H*W (dx, dy) float32 LE pairs.
void write_flow(const FlowField& flow, const std::string& path);
FlowField read_flow(const std::string& path);

Manifest read_manifest(const std::string& path);
void write_manifest(const Manifest& m, const std::string& path);

}  // namespace simprov
