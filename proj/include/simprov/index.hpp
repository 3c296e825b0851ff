#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "simprov/pq.hpp"

namespace simprov {

struct SearchHit {
    int64_t id;
    float distance;  // squared L2 in residual space (ADC approximation)
};

// Inverted-file index: one posting list per coarse cell, entries carry the
// caller-assigned id and the PQ code. Append-only, then frozen; search never
// mutates state so concurrent queries need no locking.
class Index {
public:
    Index() = default;
    explicit Index(Codebook cb);

    void add(const float* vectors, size_t n, const int64_t* ids);

    std::vector<SearchHit> search(const float* query, int k, int nprobe) const;

    size_t size() const { return size_; }
    const Codebook& codebook() const { return cb_; }

    struct Entry {
        int64_t id;
        std::vector<uint8_t> code;
    };
    const std::vector<std::vector<Entry>>& lists() const { return lists_; }

    // "SIPX" file: magic, version, codebook, then per-list entries. Round-trip
    // yields a search-identical index.
    void save(const std::string& path) const;
    static Index load(const std::string& path);

private:
    Codebook cb_;
    std::vector<std::vector<Entry>> lists_;
    size_t size_ = 0;
};

namespace ref {
// Serial exhaustive ADC scan over every list; oracle for the probed search.
std::vector<SearchHit> search_exhaustive_adc(const Index& index, const float* query, int k);
}  // namespace ref

}  // namespace simprov
