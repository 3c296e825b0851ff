#include "simprov/index.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <numeric>
#include <unordered_set>

#include "simprov/kmeans.hpp"

namespace simprov {

namespace {

constexpr uint32_t kIndexVersion = 1;

bool hit_less(const SearchHit& a, const SearchHit& b) {
    if (a.distance != b.distance) return a.distance < b.distance;
    return a.id < b.id;
}

void put_u32(std::ostream& out, uint32_t v) {
    uint8_t b[4] = {static_cast<uint8_t>(v), static_cast<uint8_t>(v >> 8),
                    static_cast<uint8_t>(v >> 16), static_cast<uint8_t>(v >> 24)};
    out.write(reinterpret_cast<const char*>(b), 4);
}

void put_u64(std::ostream& out, uint64_t v) {
    put_u32(out, static_cast<uint32_t>(v));
    put_u32(out, static_cast<uint32_t>(v >> 32));
}

uint32_t get_u32(std::istream& in, const std::string& path) {
    uint8_t b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    if (in.gcount() != 4) throw FormatError("truncated index file " + path);
    return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
           (static_cast<uint32_t>(b[2]) << 16) | (static_cast<uint32_t>(b[3]) << 24);
}

uint64_t get_u64(std::istream& in, const std::string& path) {
    uint64_t lo = get_u32(in, path);
    uint64_t hi = get_u32(in, path);
    return lo | (hi << 32);
}

}  // namespace

Index::Index(Codebook cb) : cb_(std::move(cb)) {
    cb_.validate();
    lists_.resize(cb_.coarse_k);
}

void Index::add(const float* vectors, size_t n, const int64_t* ids) {
    if (lists_.empty()) throw StateError("index has no codebook");
    std::unordered_set<int64_t> present;
    present.reserve(size_ + n);
    for (const auto& list : lists_)
        for (const auto& e : list) present.insert(e.id);
    for (size_t i = 0; i < n; ++i)
        if (!present.insert(ids[i]).second)
            throw ParamError("duplicate id " + std::to_string(ids[i]));

    std::vector<BinaryCode> codes(n);
    encode_batch(vectors, n, cb_, codes.data());
    for (size_t i = 0; i < n; ++i) {
        lists_[codes[i].coarse_id].push_back(Entry{ids[i], std::move(codes[i].pq_code)});
    }
    size_ += n;
}

std::vector<SearchHit> Index::search(const float* query, int k, int nprobe) const {
    if (lists_.empty()) throw StateError("search on untrained index");
    if (k < 1) throw ParamError("search: k must be >= 1");
    if (nprobe < 1 || nprobe > cb_.coarse_k)
        throw ParamError("search: nprobe must be in [1, coarse_k]");

    // rank coarse cells by distance to the query, ties by cell index
    std::vector<float> cell_d(cb_.coarse_k);
    for (int c = 0; c < cb_.coarse_k; ++c) {
        const float* cen = cb_.coarse.data() + static_cast<size_t>(c) * cb_.dim;
        float acc = 0.0f;
        for (int j = 0; j < cb_.dim; ++j) {
            float d = query[j] - cen[j];
            acc += d * d;
        }
        cell_d[c] = acc;
    }
    std::vector<int> order(cb_.coarse_k);
    std::iota(order.begin(), order.end(), 0);
    std::partial_sort(order.begin(), order.begin() + nprobe, order.end(),
                      [&](int a, int b) {
                          if (cell_d[a] != cell_d[b]) return cell_d[a] < cell_d[b];
                          return a < b;
                      });

    std::vector<SearchHit> heap;  // max-heap on (distance, id), size <= k
    heap.reserve(k + 1);
    for (int p = 0; p < nprobe; ++p) {
        int c = order[p];
        const auto& list = lists_[c];
        if (list.empty()) continue;
        std::vector<float> table = adc_table(query, cb_, static_cast<uint32_t>(c));
        for (const auto& e : list) {
            float d = 0.0f;
            for (int m = 0; m < cb_.pq_m; ++m)
                d += table[static_cast<size_t>(m) * cb_.pq_k + e.code[m]];
            SearchHit hit{e.id, d};
            if (static_cast<int>(heap.size()) < k) {
                heap.push_back(hit);
                std::push_heap(heap.begin(), heap.end(), hit_less);
            } else if (hit_less(hit, heap.front())) {
                std::pop_heap(heap.begin(), heap.end(), hit_less);
                heap.back() = hit;
                std::push_heap(heap.begin(), heap.end(), hit_less);
            }
        }
    }
    std::sort_heap(heap.begin(), heap.end(), hit_less);
    return heap;
}

void Index::save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FormatError("cannot open for writing: " + path);
    out.write("SIPX", 4);
    put_u32(out, kIndexVersion);
    write_codebook(out, cb_);
    for (const auto& list : lists_) {
        put_u64(out, list.size());
        for (const auto& e : list) {
            put_u64(out, static_cast<uint64_t>(e.id));
            out.write(reinterpret_cast<const char*>(e.code.data()),
                      static_cast<std::streamsize>(e.code.size()));
        }
    }
    if (!out) throw FormatError("write failed: " + path);
}

Index Index::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open: " + path);
    char magic[4];
    in.read(magic, 4);
    if (in.gcount() != 4 || std::memcmp(magic, "SIPX", 4) != 0)
        throw FormatError("bad magic in " + path + " (expected SIPX)");
    uint32_t version = get_u32(in, path);
    if (version != kIndexVersion)
        throw FormatError("unsupported index version " + std::to_string(version) + " in " + path);
    Index idx(read_codebook(in, path));
    for (auto& list : idx.lists_) {
        uint64_t len = get_u64(in, path);
        list.resize(len);
        for (auto& e : list) {
            e.id = static_cast<int64_t>(get_u64(in, path));
            e.code.resize(idx.cb_.pq_m);
            in.read(reinterpret_cast<char*>(e.code.data()), idx.cb_.pq_m);
            if (in.gcount() != idx.cb_.pq_m)
                throw FormatError("truncated posting list in " + path);
            idx.size_++;
        }
    }
    return idx;
}

namespace ref {

std::vector<SearchHit> search_exhaustive_adc(const Index& index, const float* query, int k) {
    const Codebook& cb = index.codebook();
    std::vector<SearchHit> all;
    all.reserve(index.size());
    for (int c = 0; c < cb.coarse_k; ++c) {
        const auto& list = index.lists()[c];
        if (list.empty()) continue;
        std::vector<float> table = adc_table(query, cb, static_cast<uint32_t>(c));
        for (const auto& e : list) {
            float d = 0.0f;
            for (int m = 0; m < cb.pq_m; ++m)
                d += table[static_cast<size_t>(m) * cb.pq_k + e.code[m]];
            all.push_back(SearchHit{e.id, d});
        }
    }
    std::sort(all.begin(), all.end(), hit_less);
    if (static_cast<int>(all.size()) > k) all.resize(k);
    return all;
}

}  // namespace ref

}  // namespace simprov
