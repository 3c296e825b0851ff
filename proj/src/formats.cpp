#include "simprov/formats.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <unordered_map>

namespace simprov {

double Descriptor::norm() const {
    double s = 0;
    for (float v : values) s += static_cast<double>(v) * v;
    return std::sqrt(s);
}

namespace {

// All file fields are little-endian regardless of host byte order.
void put_u32(std::ostream& out, uint32_t v) {
    uint8_t b[4] = {static_cast<uint8_t>(v), static_cast<uint8_t>(v >> 8),
                    static_cast<uint8_t>(v >> 16), static_cast<uint8_t>(v >> 24)};
    out.write(reinterpret_cast<const char*>(b), 4);
}

void put_u64(std::ostream& out, uint64_t v) {
    put_u32(out, static_cast<uint32_t>(v));
    put_u32(out, static_cast<uint32_t>(v >> 32));
}

void put_f32(std::ostream& out, float v) {
    uint32_t bits;
    std::memcpy(&bits, &v, 4);
    put_u32(out, bits);
}

uint32_t get_u32(std::istream& in, const std::string& path, const char* field) {
    uint8_t b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    if (in.gcount() != 4) throw FormatError("truncated " + std::string(field) + " in " + path);
    return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
           (static_cast<uint32_t>(b[2]) << 16) | (static_cast<uint32_t>(b[3]) << 24);
}

uint64_t get_u64(std::istream& in, const std::string& path, const char* field) {
    uint64_t lo = get_u32(in, path, field);
    uint64_t hi = get_u32(in, path, field);
    return lo | (hi << 32);
}

float get_f32(std::istream& in, const std::string& path, const char* field) {
    uint32_t bits = get_u32(in, path, field);
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
}

void check_magic(std::istream& in, const char* expect, const std::string& path) {
    char m[4];
    in.read(m, 4);
    if (in.gcount() != 4 || std::memcmp(m, expect, 4) != 0)
        throw FormatError("bad magic in " + path + " (expected " + expect + ")");
}

constexpr uint32_t kFormatVersion = 1;

}  // namespace

void write_descriptors(const std::string& path, const std::vector<Descriptor>& descriptors) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FormatError("cannot open for writing: " + path);
    out.write("SIPD", 4);
    put_u32(out, kFormatVersion);
    put_u64(out, descriptors.size());
    put_u32(out, kDescriptorDim);
    for (const auto& d : descriptors) {
        if (d.dim() != kDescriptorDim)
            throw FormatError("descriptor dim " + std::to_string(d.dim()) + " != 256");
        for (float v : d.values) put_f32(out, v);
    }
    if (!out) throw FormatError("write failed: " + path);
}

std::vector<Descriptor> read_descriptors(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open: " + path);
    check_magic(in, "SIPD", path);
    uint32_t version = get_u32(in, path, "version");
    if (version != kFormatVersion)
        throw FormatError("unsupported version " + std::to_string(version) + " in " + path);
    uint64_t count = get_u64(in, path, "count");
    uint32_t dim = get_u32(in, path, "dim");
    if (dim != kDescriptorDim)
        throw FormatError("dim field is " + std::to_string(dim) + ", expected 256, in " + path);
    std::vector<Descriptor> out;
    out.reserve(count);
    for (uint64_t i = 0; i < count; ++i) {
        Descriptor d;
        for (uint32_t j = 0; j < dim; ++j) d.values[j] = get_f32(in, path, "payload");
        out.push_back(std::move(d));
    }
    return out;
}

void write_hashes64(const std::string& path, const std::vector<uint64_t>& codes) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FormatError("cannot open for writing: " + path);
    out.write("SIPH", 4);
    put_u32(out, kFormatVersion);
    put_u64(out, codes.size());
    put_u32(out, 64);  // bit width
    for (uint64_t c : codes) put_u64(out, c);
    if (!out) throw FormatError("write failed: " + path);
}

std::vector<uint64_t> read_hashes64(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open: " + path);
    check_magic(in, "SIPH", path);
    uint32_t version = get_u32(in, path, "version");
    if (version != kFormatVersion)
        throw FormatError("unsupported version " + std::to_string(version) + " in " + path);
    uint64_t count = get_u64(in, path, "count");
    uint32_t bits = get_u32(in, path, "dim");
    if (bits != 64) throw FormatError("dim field is " + std::to_string(bits) + ", expected 64, in " + path);
    std::vector<uint64_t> codes(count);
    for (auto& c : codes) c = get_u64(in, path, "payload");
    return codes;
}

void write_flow(const FlowField& flow, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FormatError("cannot open for writing: " + path);
    out.write("SIPF", 4);
    put_u32(out, static_cast<uint32_t>(flow.height));
    put_u32(out, static_cast<uint32_t>(flow.width));
    for (size_t i = 0; i < flow.dx.size(); ++i) {
        put_f32(out, flow.dx[i]);
        put_f32(out, flow.dy[i]);
    }
    if (!out) throw FormatError("write failed: " + path);
}

FlowField read_flow(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open: " + path);
    check_magic(in, "SIPF", path);
    uint32_t h = get_u32(in, path, "height");
    uint32_t w = get_u32(in, path, "width");
    FlowField flow(static_cast<int>(h), static_cast<int>(w));
    for (size_t i = 0; i < flow.dx.size(); ++i) {
        flow.dx[i] = get_f32(in, path, "displacement");
        flow.dy[i] = get_f32(in, path, "displacement");
    }
    return flow;
}

const ManifestRow& Manifest::by_id(int64_t id) const {
    for (const auto& r : rows)
        if (r.id == id) return r;
    throw LookupError("id " + std::to_string(id) + " not found in manifest");
}

Manifest read_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open: " + path);
    Manifest m;
    std::string line;
    if (!std::getline(in, line)) throw FormatError("empty manifest: " + path);
    std::unordered_map<int64_t, bool> seen;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ss(line);
        ManifestRow row;
        std::string id_str;
        if (!std::getline(ss, id_str, '\t') || !std::getline(ss, row.path, '\t'))
            throw FormatError("malformed manifest row in " + path + ": " + line);
        std::getline(ss, row.group, '\t');
        try {
            row.id = std::stoll(id_str);
        } catch (const std::exception&) {
            throw FormatError("bad id '" + id_str + "' in " + path);
        }
        if (seen.count(row.id)) throw FormatError("duplicate id " + id_str + " in " + path);
        seen[row.id] = true;
        m.rows.push_back(std::move(row));
    }
    return m;
}

void write_manifest(const Manifest& m, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw FormatError("cannot open for writing: " + path);
    out << "id\tpath\tgroup\n";
    for (const auto& r : m.rows) out << r.id << "\t" << r.path << "\t" << r.group << "\n";
    if (!out) throw FormatError("write failed: " + path);
}

}  // namespace simprov
