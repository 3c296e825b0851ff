// Acceptance gate: one pass/fail line per criterion, nonzero exit on any
// failure. Optional argv[1] is the CLI binary used by the determinism run.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "simprov/comparator.hpp"
#include "simprov/eval.hpp"
#include "simprov/features.hpp"
#include "simprov/geometry.hpp"
#include "simprov/index.hpp"
#include "simprov/rerank.hpp"
#include "test_util.hpp"

using namespace simprov;
using namespace simprov::testutil;
namespace fs = std::filesystem;

namespace {

int failures = 0;

void report(const std::string& name, bool ok, const std::string& detail = "") {
    std::printf("[%s] %s%s%s\n", ok ? "PASS" : "FAIL", name.c_str(),
                detail.empty() ? "" : ": ", detail.c_str());
    std::fflush(stdout);
    if (!ok) ++failures;
}

// ---------------------------------------------------------------- criterion 1
bool gem_correctness(std::string& detail) {
    FeatureMap map;
    map.grid_h = 2;
    map.grid_w = 2;
    map.channels = 1;
    map.activations = {1.0f, 2.0f, 4.0f, 8.0f};

    double p1 = gem_pool(map, 1.0)[0];
    if (std::abs(p1 - 3.75) > 1e-9) {
        detail = "p=1 gave " + std::to_string(p1);
        return false;
    }
    double p3 = gem_pool(map, 3.0)[0];
    double expected = std::cbrt((1.0 + 8.0 + 64.0 + 512.0) / 4.0);
    if (std::abs(p3 - 5.2690) > 1e-4 * 5.2690 || std::abs(p3 - expected) > 1e-6) {
        detail = "p=3 gave " + std::to_string(p3);
        return false;
    }
    double p100 = gem_pool(map, 100.0)[0];
    if (std::abs(p100 - 8.0) > 0.2) {
        detail = "p=100 gave " + std::to_string(p100);
        return false;
    }

    // p=1 equals the arithmetic mean on arbitrary data too
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<float> unit(0.0f, 1.0f);
    FeatureMap rnd;
    rnd.grid_h = 4;
    rnd.grid_w = 4;
    rnd.channels = 8;
    rnd.activations.resize(4 * 4 * 8);
    for (auto& v : rnd.activations) v = unit(rng);
    auto pooled = gem_pool(rnd, 1.0);
    for (int ch = 0; ch < 8; ++ch) {
        double mean = 0.0;
        for (int cell = 0; cell < 16; ++cell) mean += rnd.activations[cell * 8 + ch];
        mean /= 16.0;
        if (std::abs(pooled[ch] - mean) > 1e-9) {
            detail = "p=1 mean mismatch on random map";
            return false;
        }
    }
    return true;
}

// ---------------------------------------------------------------- criterion 2
bool adc_identity(std::string& detail) {
    const int dim = kDescriptorDim;
    auto base = gen_synthetic(5000, dim, 11, SynthMode::clustered);
    PqTrainConfig cfg;
    cfg.coarse_k = 64;
    cfg.pq_m = 16;
    cfg.iters = 8;
    cfg.seed = 3;
    Codebook cb = train_codebook(base.data(), 5000, dim, cfg);

    auto queries = gen_synthetic(1000, dim, 12, SynthMode::clustered);
    std::mt19937_64 rng(13);
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
        const float* q = queries.data() + static_cast<size_t>(i) * dim;
        const float* v = base.data() + (rng() % 5000) * static_cast<size_t>(dim);
        BinaryCode code = encode(v, cb);

        auto table = adc_table(q, cb, code.coarse_id);
        double table_sum = 0.0;
        for (int m = 0; m < cb.pq_m; ++m) table_sum += table[m * cb.pq_k + code.pq_code[m]];

        std::vector<float> recon = reconstruct(code, cb);
        double exact = 0.0;
        for (int j = 0; j < dim; ++j) {
            double d = static_cast<double>(q[j]) - recon[j];
            exact += d * d;
        }
        double rel = std::abs(table_sum - exact) / std::max(exact, 1e-12);
        worst = std::max(worst, rel);
    }
    detail = "worst relative error " + std::to_string(worst) + " over 1000 pairs";
    return worst <= 1e-5;
}

// ---------------------------------------------------------------- criterion 3
bool index_recall(std::string& detail) {
    const size_t n = 100000;
    const int dim = kDescriptorDim, k = 100;
    // database and queries share one clustered pool
    auto pool = gen_synthetic(n + 1000, dim, 21, SynthMode::clustered);
    std::vector<float> base(pool.begin(), pool.begin() + n * dim);
    std::vector<float> queries(pool.begin() + n * dim, pool.end());
    std::vector<float>().swap(pool);

    PqTrainConfig cfg;
    cfg.coarse_k = 1024;
    cfg.pq_m = 16;
    cfg.iters = 3;
    cfg.seed = 5;
    Index index(train_codebook(base.data(), n, dim, cfg));
    std::vector<int64_t> ids(n);
    for (size_t i = 0; i < n; ++i) ids[i] = static_cast<int64_t>(i);
    index.add(base.data(), n, ids.data());

    std::vector<std::vector<int64_t>> oracle(1000);
#pragma omp parallel for schedule(dynamic)
    for (long long q = 0; q < 1000; ++q) {
        auto hits = brute_force_search(base.data(), n, dim, queries.data() + q * dim, k);
        for (const auto& h : hits) oracle[q].push_back(h.id);
    }

    auto recall_at = [&](int nprobe) {
        size_t hit = 0;
        for (size_t q = 0; q < 1000; ++q) {
            auto res = index.search(queries.data() + q * dim, k, nprobe);
            std::vector<int64_t> got;
            for (const auto& h : res) got.push_back(h.id);
            std::sort(got.begin(), got.end());
            for (int64_t id : oracle[q])
                if (std::binary_search(got.begin(), got.end(), id)) ++hit;
        }
        return static_cast<double>(hit) / (1000.0 * k);
    };

    double r1 = recall_at(1), r8 = recall_at(8), r64 = recall_at(64), r1024 = recall_at(1024);
    char buf[160];
    std::snprintf(buf, sizeof(buf), "recall@nprobe 1/8/64/1024 = %.4f/%.4f/%.4f/%.4f", r1, r8,
                  r64, r1024);
    detail = buf;

    if (r64 < 0.95) return false;
    if (!(r1 <= r8 && r8 <= r64 && r64 <= r1024)) {
        detail += " (not monotone)";
        return false;
    }
    for (size_t q = 0; q < 200; ++q) {
        auto full = index.search(queries.data() + q * dim, k, 1024);
        auto exhaustive = ref::search_exhaustive_adc(index, queries.data() + q * dim, k);
        if (full.size() != exhaustive.size()) {
            detail += " (full-probe size mismatch)";
            return false;
        }
        for (size_t r = 0; r < full.size(); ++r)
            if (full[r].id != exhaustive[r].id || full[r].distance != exhaustive[r].distance) {
                detail += " (full probe != exhaustive ADC at query " + std::to_string(q) + ")";
                return false;
            }
    }
    return true;
}

// ---------------------------------------------------------------- criterion 4
bool latency_budget(std::string& detail) {
    const size_t n = 1000000;
    const int dim = kDescriptorDim, k = 100, nprobe = 32;
    auto pool = gen_synthetic(n + 200, dim, 31, SynthMode::clustered);
    std::vector<float> base(pool.begin(), pool.begin() + n * dim);
    std::vector<float> queries(pool.begin() + n * dim, pool.end());
    std::vector<float>().swap(pool);

    PqTrainConfig cfg;
    cfg.coarse_k = 1024;
    cfg.pq_m = 16;
    cfg.iters = 2;
    cfg.seed = 7;
    Index index(train_codebook(base.data(), n, dim, cfg));
    std::vector<int64_t> ids(n);
    for (size_t i = 0; i < n; ++i) ids[i] = static_cast<int64_t>(i);
    index.add(base.data(), n, ids.data());
    std::vector<float>().swap(base);

    for (int q = 0; q < 8; ++q) index.search(queries.data() + q * dim, k, nprobe);

    std::vector<double> lat(200);
    for (int q = 0; q < 200; ++q) {
        auto t0 = std::chrono::steady_clock::now();
        auto res = index.search(queries.data() + q * dim, k, nprobe);
        auto t1 = std::chrono::steady_clock::now();
        lat[q] = std::chrono::duration<double, std::milli>(t1 - t0).count();
        if (res.size() != static_cast<size_t>(k)) {
            detail = "short result list";
            return false;
        }
    }
    std::sort(lat.begin(), lat.end());
    double median = lat[100];
    char buf[96];
    std::snprintf(buf, sizeof(buf), "median %.3f ms (p99 %.3f ms) over 200 queries at nprobe=32",
                  median, lat[198]);
    detail = buf;
    return median < 50.0;
}

// ---------------------------------------------------------------- criterion 5
bool dewarp_exactness(std::string& detail) {
    ImageBuffer img = make_test_image(41, 48, 64);

    FlowField zero = identity_flow(48, 64);
    ImageBuffer same = dewarp(img, zero);
    if (std::memcmp(same.data.data(), img.data.data(), img.data.size() * sizeof(float)) != 0) {
        detail = "zero flow is not bit-identical";
        return false;
    }

    FlowField shift = identity_flow(48, 64);
    for (auto& v : shift.dx) v = 3.0f;
    for (auto& v : shift.dy) v = -2.0f;
    ImageBuffer gathered = dewarp(img, shift);
    for (int y = 0; y < 48; ++y)
        for (int x = 0; x < 64; ++x)
            for (int c = 0; c < 3; ++c) {
                float expected = img.at(std::clamp(y - 2, 0, 47), std::clamp(x + 3, 0, 63), c);
                if (gathered.at(y, x, c) != expected) {
                    detail = "integer flow differs from pure gather";
                    return false;
                }
            }

    ImageBuffer ramp(8, 32, 1);
    for (int y = 0; y < 8; ++y)
        for (int x = 0; x < 32; ++x) ramp.at(y, x, 0) = x / 31.0f;
    FlowField half = identity_flow(8, 32);
    for (auto& v : half.dx) v = 0.5f;
    ImageBuffer shifted = dewarp(ramp, half);
    for (int y = 0; y < 8; ++y)
        for (int x = 0; x < 30; ++x) {
            float expected = (x + 0.5f) / 31.0f;
            if (std::abs(shifted.at(y, x, 0) - expected) > 1e-6f) {
                detail = "half-pixel ramp shift off at x=" + std::to_string(x);
                return false;
            }
        }
    return true;
}

// ---------------------------------------------------------------- criterion 6
bool metric_rules(std::string& detail) {
    const int h = 28, w = 28;
    std::vector<uint8_t> gt(h * w, 0);
    for (int y = 0; y < 14; ++y)
        for (int x = 0; x < 14; ++x) gt[y * w + x] = 1;

    PairScore s;
    s.heatmap = Heatmap(7);
    std::mt19937_64 rng(61);
    std::uniform_real_distribution<float> unit(0.0f, 1.0f);
    for (auto& v : s.heatmap.grid) v = unit(rng);

    s.verdict = Verdict::benign;
    if (iou_adjusted(s, gt, h, w) != 0.0) {
        detail = "benign verdict must zero the mask";
        return false;
    }
    std::vector<uint8_t> empty(h * w, 0);
    if (iou_adjusted(s, empty, h, w) != 1.0) {
        detail = "empty-vs-empty must score 1.0";
        return false;
    }
    s.verdict = Verdict::distinct;
    if (std::abs(iou_adjusted(s, gt, h, w) - 0.25) > 1e-12) {
        detail = "distinct verdict must use the all-ones mask";
        return false;
    }
    s.verdict = Verdict::manipulated;
    auto expected =
        threshold_mask(upsample_heatmap(normalize_heatmap(s.heatmap.grid), 7, h, w), 0.35);
    if (adjusted_mask(s, h, w) != expected) {
        detail = "manipulated mask is not the thresholded upsampled heatmap";
        return false;
    }

    std::vector<std::vector<int64_t>> results(40);
    std::vector<int64_t> truth(40);
    for (int q = 0; q < 40; ++q) {
        for (int r = 0; r < 25; ++r) results[q].push_back(static_cast<int64_t>(rng() % 60));
        truth[q] = static_cast<int64_t>(rng() % 60);
    }
    double prev = 0.0;
    for (int k = 1; k <= 25; ++k) {
        double ir = ir_at_k(results, truth, k);
        if (ir < prev) {
            detail = "IR@k not monotone at k=" + std::to_string(k);
            return false;
        }
        prev = ir;
    }

    double ap = average_precision({0.9f, 0.8f, 0.7f}, {1, 0, 1});
    char buf[64];
    std::snprintf(buf, sizeof(buf), "AP hand case = %.6f", ap);
    detail = buf;
    return std::abs(ap - 0.8333333333) <= 1e-6;
}

// ---------------------------------------------------------------- criterion 7
struct DrillCorpus {
    std::vector<ImageBuffer> originals;      // 50
    std::vector<ImageBuffer> queries;        // 150, 3 per original
    std::vector<int64_t> truth;              // relevant original id per query
    std::vector<bool> manipulated;           // per query
    std::vector<uint8_t> gt_mask;            // shared planted-patch mask
    int h = 70, w = 70;
    int patch_y = 20, patch_x = 30, patch = 20;
};

DrillCorpus build_drill_corpus() {
    DrillCorpus c;
    c.gt_mask.assign(static_cast<size_t>(c.h) * c.w, 0);
    for (int y = c.patch_y; y < c.patch_y + c.patch; ++y)
        for (int x = c.patch_x; x < c.patch_x + c.patch; ++x) c.gt_mask[y * c.w + x] = 1;

    for (int i = 0; i < 50; ++i) {
        ImageBuffer orig = make_test_image(100 + i, c.h, c.w);
        ImageBuffer patched = plant_patch(orig, c.patch_y, c.patch_x, c.patch, c.patch);
        c.originals.push_back(orig);

        c.queries.push_back(add_noise(resize_roundtrip(orig, 50, 50), 0.01, 500 + i));
        c.truth.push_back(i);
        c.manipulated.push_back(false);

        c.queries.push_back(patched);
        c.truth.push_back(i);
        c.manipulated.push_back(true);

        c.queries.push_back(add_noise(resize_roundtrip(patched, 50, 50), 0.01, 600 + i));
        c.truth.push_back(i);
        c.manipulated.push_back(true);
    }
    return c;
}

bool end_to_end_drill(std::string& detail) {
    DrillCorpus corpus = build_drill_corpus();
    const int dim = kDescriptorDim;

    std::vector<float> db(50 * static_cast<size_t>(dim));
    for (int i = 0; i < 50; ++i) {
        Descriptor d = extract_descriptor(corpus.originals[i]).descriptor;
        std::copy(d.values.begin(), d.values.end(), db.begin() + i * static_cast<size_t>(dim));
    }
    std::vector<float> qd(corpus.queries.size() * static_cast<size_t>(dim));
    for (size_t q = 0; q < corpus.queries.size(); ++q) {
        Descriptor d = extract_descriptor(corpus.queries[q]).descriptor;
        std::copy(d.values.begin(), d.values.end(), qd.begin() + q * dim);
    }

    PqTrainConfig cfg;
    cfg.coarse_k = 8;
    cfg.pq_m = 16;
    cfg.iters = 10;
    cfg.seed = 1;
    Index index(train_codebook(db.data(), 50, dim, cfg));
    std::vector<int64_t> ids(50);
    for (int i = 0; i < 50; ++i) ids[i] = i;
    index.add(db.data(), 50, ids.data());

    // stage 1: top-100 candidates (the whole corpus here)
    std::vector<std::vector<int64_t>> stage1(corpus.queries.size());
    for (size_t q = 0; q < corpus.queries.size(); ++q)
        for (const auto& h : index.search(qd.data() + q * dim, 100, 8))
            stage1[q].push_back(h.id);

    double ir100 = ir_at_k(stage1, corpus.truth, 100);
    double ir1_stage1 = ir_at_k(stage1, corpus.truth, 1);
    if (ir100 != 1.0) {
        detail = "stage-1 IR@100 = " + std::to_string(ir100);
        return false;
    }

    // stage 2: classical pairwise re-ranking
    ClassicalScorer scorer;
    auto resolver = [&corpus](int64_t id) { return corpus.originals[id]; };
    std::vector<std::vector<int64_t>> reranked(corpus.queries.size());
    for (size_t q = 0; q < corpus.queries.size(); ++q) {
        auto scored = score_candidates(corpus.queries[q], static_cast<int64_t>(q), stage1[q],
                                       resolver, scorer);
        std::vector<float> scores;
        for (const auto& [id, ps] : scored) scores.push_back(ps.same_score);
        reranked[q] = reorder(scores, stage1[q]).reordered;
    }
    double ir1_rerank = ir_at_k(reranked, corpus.truth, 1);
    char buf[128];
    std::snprintf(buf, sizeof(buf), "IR@100=1.0, IR@1 stage1=%.3f rerank=%.3f", ir1_stage1,
                  ir1_rerank);
    detail = buf;
    if (ir1_rerank < ir1_stage1) return false;

    // stage 3: manipulated queries localize against their originals
    double worst_iou = 1.0;
    for (size_t q = 0; q < corpus.queries.size(); ++q) {
        if (!corpus.manipulated[q]) continue;
        PairScore s =
            classify_pair_classical(corpus.queries[q], corpus.originals[corpus.truth[q]]);
        if (s.verdict != Verdict::manipulated) {
            detail = std::string(buf) + "; query " + std::to_string(q) + " verdict " +
                     to_string(s.verdict);
            return false;
        }
        worst_iou = std::min(worst_iou, iou_adjusted(s, corpus.gt_mask, corpus.h, corpus.w));
    }
    std::snprintf(buf, sizeof(buf), "%s, worst localization IoU=%.3f", detail.c_str(),
                  worst_iou);
    detail = buf;
    return worst_iou >= 0.3;
}

// ---------------------------------------------------------------- criterion 8
std::string shell_quote(const std::string& s) { return "'" + s + "'"; }

bool run_cli(const std::string& cli, const std::string& args) {
    std::string cmd = shell_quote(cli) + " --quiet " + args + " 2>/dev/null";
    return std::system(cmd.c_str()) == 0;
}

std::vector<char> slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::vector<char>(std::istreambuf_iterator<char>(in),
                             std::istreambuf_iterator<char>());
}

bool determinism(const std::string& cli, std::string& detail) {
    if (cli.empty()) {
        detail = "CLI binary path not supplied";
        return false;
    }
    fs::path root = fs::temp_directory_path() / "simprov_acceptance";
    fs::remove_all(root);
    fs::path data = root / "data";
    fs::create_directories(data);

    // shared corpus: 10 originals, 10 derived queries (benign, manipulated alternating)
    std::ofstream manifest(data / "corpus.tsv"), qmanifest(data / "queries.tsv");
    manifest << "id\tpath\tgroup\n";
    qmanifest << "id\tpath\tgroup\n";
    for (int i = 0; i < 10; ++i) {
        ImageBuffer orig = make_test_image(700 + i, 70, 70);
        fs::path opath = data / ("orig_" + std::to_string(i) + ".ppm");
        write_image(orig, opath.string());
        manifest << i << "\t" << opath.string() << "\tcorpus\n";

        ImageBuffer query = (i % 2 == 0)
                                ? add_noise(resize_roundtrip(orig, 50, 50), 0.01, 800 + i)
                                : plant_patch(orig, 20, 30, 20, 20);
        fs::path qpath = data / ("query_" + std::to_string(i) + ".ppm");
        write_image(query, qpath.string());
        qmanifest << 1000 + i << "\t" << qpath.string() << "\tquery\n";
    }
    manifest.close();
    qmanifest.close();

    auto pipeline = [&](const fs::path& dir) {
        fs::create_directories(dir);
        auto p = [&](const char* f) { return shell_quote((dir / f).string()); };
        std::string m = shell_quote((data / "corpus.tsv").string());
        std::string qm = shell_quote((data / "queries.tsv").string());
        return run_cli(cli, "describe --images " + m + " --out " + p("desc.sipd")) &&
               run_cli(cli, "describe --images " + qm + " --out " + p("qdesc.sipd")) &&
               run_cli(cli, "--seed 9 train-index --descriptors " + p("desc.sipd") +
                                " --coarse-k 4 --pq-m 16 --iters 10 --manifest " + m +
                                " --out " + p("index.sipx")) &&
               run_cli(cli, "search --index " + p("index.sipx") + " --queries " +
                                p("qdesc.sipd") + " --k 100 --nprobe 4 --out " +
                                p("results.tsv")) &&
               run_cli(cli, "rerank --results " + p("results.tsv") + " --manifest " + m +
                                " --query-manifest " + qm + " --scorer classical --out " +
                                p("decisions.tsv")) &&
               run_cli(cli, "heatmap --query " +
                                shell_quote((data / "query_1.ppm").string()) +
                                " --candidate " +
                                shell_quote((data / "orig_1.ppm").string()) + " --out " +
                                p("heat.pgm") + " --mask " + p("mask.pgm"));
    };

    if (!pipeline(root / "run_a") || !pipeline(root / "run_b")) {
        detail = "pipeline run failed";
        return false;
    }

    for (const char* f :
         {"desc.sipd", "qdesc.sipd", "index.sipx", "results.tsv", "decisions.tsv", "heat.pgm",
          "mask.pgm"}) {
        auto a = slurp(root / "run_a" / f), b = slurp(root / "run_b" / f);
        if (a.empty() || a != b) {
            detail = std::string(f) + " differs between identical-seed runs";
            return false;
        }
    }

    // smoke: 3-image corpus with a deliberately tiny codebook still searches
    fs::path tiny = root / "tiny";
    fs::create_directories(tiny);
    std::ofstream tm(tiny / "corpus.tsv");
    tm << "id\tpath\tgroup\n";
    for (int i = 0; i < 3; ++i)
        tm << i << "\t" << (data / ("orig_" + std::to_string(i) + ".ppm")).string()
           << "\tcorpus\n";
    tm.close();
    auto tp = [&](const char* f) { return shell_quote((tiny / f).string()); };
    std::string tms = shell_quote((tiny / "corpus.tsv").string());
    bool ok = run_cli(cli, "describe --images " + tms + " --out " + tp("desc.sipd")) &&
              run_cli(cli, "train-index --descriptors " + tp("desc.sipd") +
                               " --coarse-k 2 --pq-m 2 --iters 5 --manifest " + tms +
                               " --out " + tp("index.sipx")) &&
              run_cli(cli, "search --index " + tp("index.sipx") + " --queries " +
                               tp("desc.sipd") + " --k 100 --nprobe 2 --out " +
                               tp("results.tsv"));
    if (!ok) {
        detail = "tiny-index smoke run failed";
        return false;
    }
    std::ifstream rin(tiny / "results.tsv");
    std::string line;
    std::getline(rin, line);  // header
    int rows = 0;
    while (std::getline(rin, line))
        if (!line.empty()) ++rows;
    if (rows != 9) {  // 3 queries x 3 hits
        detail = "tiny-index search returned " + std::to_string(rows) + " rows, expected 9";
        return false;
    }

    fs::remove_all(root);
    detail = "all pipeline artifacts byte-identical across runs";
    return true;
}

}  // namespace

int main(int argc, char** argv) {
    std::string cli = argc > 1 ? argv[1] : "";
    std::string detail;

    detail.clear();
    report("gem-correctness", gem_correctness(detail), detail);
    detail.clear();
    report("adc-identity", adc_identity(detail), detail);
    detail.clear();
    report("dewarp-exactness", dewarp_exactness(detail), detail);
    detail.clear();
    report("metric-rules", metric_rules(detail), detail);
    detail.clear();
    report("end-to-end-drill", end_to_end_drill(detail), detail);
    detail.clear();
    report("determinism", determinism(cli, detail), detail);
    detail.clear();
    report("index-recall", index_recall(detail), detail);
    detail.clear();
    report("latency-budget", latency_budget(detail), detail);

    if (failures) std::printf("%d criterion(s) failed\n", failures);
    return failures == 0 ? 0 : 1;
}
