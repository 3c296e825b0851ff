#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include <CLI11.hpp>

#include "simprov/comparator.hpp"
#include "simprov/eval.hpp"
#include "simprov/features.hpp"
#include "simprov/geometry.hpp"
#include "simprov/index.hpp"
#include "simprov/rerank.hpp"

namespace {

constexpr const char* kVersion = "simprov 1.0.0 (formats: SIPD v1, SIPH v1, SIPF, SIPX v1)";

using namespace simprov;

struct GlobalOpts {
    uint64_t seed = 0;
    int threads = 0;
    bool quiet = false;
};

void apply_threads(int threads) {
#ifdef _OPENMP
    if (threads > 0) omp_set_num_threads(threads);
#else
    (void)threads;
#endif
}

void log(const GlobalOpts& g, const std::string& msg) {
    if (!g.quiet) std::cerr << msg << "\n";
}

std::vector<float> flatten(const std::vector<Descriptor>& ds) {
    std::vector<float> out;
    out.reserve(ds.size() * kDescriptorDim);
    for (const auto& d : ds) out.insert(out.end(), d.values.begin(), d.values.end());
    return out;
}

// results.tsv: header then query_row \t rank \t id \t distance
void write_results(const std::string& path,
                   const std::vector<std::vector<SearchHit>>& per_query) {
    std::ofstream out(path);
    if (!out) throw FormatError("cannot open for writing: " + path);
    out << "query_row\trank\tid\tdistance\n";
    char buf[64];
    for (size_t q = 0; q < per_query.size(); ++q)
        for (size_t r = 0; r < per_query[q].size(); ++r) {
            std::snprintf(buf, sizeof(buf), "%.9g", per_query[q][r].distance);
            out << q << "\t" << r << "\t" << per_query[q][r].id << "\t" << buf << "\n";
        }
    if (!out) throw FormatError("write failed: " + path);
}

std::vector<std::vector<int64_t>> read_results_ids(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open: " + path);
    std::string line;
    if (!std::getline(in, line)) throw FormatError("empty results file: " + path);
    std::vector<std::vector<int64_t>> out;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ss(line);
        size_t query_row, rank;
        int64_t id;
        double dist;
        if (!(ss >> query_row >> rank >> id >> dist))
            throw FormatError("malformed results row in " + path + ": " + line);
        if (query_row >= out.size()) out.resize(query_row + 1);
        out[query_row].push_back(id);
    }
    return out;
}

int cmd_describe(const GlobalOpts& g, const std::string& manifest_path,
                 const std::string& method, double p, int grid, const std::string& out_path) {
    Manifest manifest = read_manifest(manifest_path);
    const size_t n = manifest.rows.size();
    std::exception_ptr failure;
    if (method == "gem") {
        std::vector<Descriptor> descriptors(n);
#pragma omp parallel for schedule(dynamic)
        for (long long i = 0; i < static_cast<long long>(n); ++i) {
            try {
                ImageBuffer img = read_image(manifest.rows[i].path);
                descriptors[i] = extract_descriptor(img, p, grid).descriptor;
            } catch (...) {
#pragma omp critical
                if (!failure) failure = std::current_exception();
            }
        }
        if (failure) std::rethrow_exception(failure);
        write_descriptors(out_path, descriptors);
    } else if (method == "phash") {
        std::vector<uint64_t> codes(n);
#pragma omp parallel for schedule(dynamic)
        for (long long i = 0; i < static_cast<long long>(n); ++i) {
            try {
                ImageBuffer img = read_image(manifest.rows[i].path);
                codes[i] = phash64(img);
            } catch (...) {
#pragma omp critical
                if (!failure) failure = std::current_exception();
            }
        }
        if (failure) std::rethrow_exception(failure);
        write_hashes64(out_path, codes);
    } else {
        throw ParamError("unknown method: " + method + " (expected gem or phash)");
    }
    log(g, "described " + std::to_string(n) + " images -> " + out_path);
    return 0;
}

std::vector<int64_t> ids_for(const std::string& manifest_path, size_t n) {
    std::vector<int64_t> ids(n);
    if (!manifest_path.empty()) {
        Manifest m = read_manifest(manifest_path);
        if (m.rows.size() != n)
            throw ParamError("manifest row count does not match descriptor count");
        for (size_t i = 0; i < n; ++i) ids[i] = m.rows[i].id;
    } else {
        for (size_t i = 0; i < n; ++i) ids[i] = static_cast<int64_t>(i);
    }
    return ids;
}

int cmd_train_index(const GlobalOpts& g, const std::string& desc_path, int coarse_k,
                    int pq_m, int iters, const std::string& manifest_path,
                    const std::string& out_path) {
    std::vector<Descriptor> descriptors = read_descriptors(desc_path);
    std::vector<float> flat = flatten(descriptors);
    PqTrainConfig cfg;
    cfg.coarse_k = coarse_k;
    cfg.pq_m = pq_m;
    cfg.iters = iters;
    cfg.seed = g.seed;
    Codebook cb = train_codebook(flat.data(), descriptors.size(), kDescriptorDim, cfg);
    Index index(std::move(cb));
    std::vector<int64_t> ids = ids_for(manifest_path, descriptors.size());
    index.add(flat.data(), descriptors.size(), ids.data());
    index.save(out_path);
    log(g, "trained index on " + std::to_string(descriptors.size()) + " vectors -> " + out_path);
    return 0;
}

int cmd_add(const GlobalOpts& g, const std::string& index_path, const std::string& desc_path,
            const std::string& manifest_path, const std::string& out_path) {
    Index index = Index::load(index_path);
    std::vector<Descriptor> descriptors = read_descriptors(desc_path);
    std::vector<float> flat = flatten(descriptors);
    std::vector<int64_t> ids = ids_for(manifest_path, descriptors.size());
    index.add(flat.data(), descriptors.size(), ids.data());
    index.save(out_path);
    log(g, "added " + std::to_string(descriptors.size()) + " vectors -> " + out_path);
    return 0;
}

int cmd_search(const GlobalOpts& g, const std::string& index_path,
               const std::string& queries_path, int k, int nprobe,
               const std::string& out_path) {
    Index index = Index::load(index_path);
    std::vector<Descriptor> queries = read_descriptors(queries_path);
    std::vector<std::vector<SearchHit>> per_query(queries.size());
    std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic)
    for (long long q = 0; q < static_cast<long long>(queries.size()); ++q) {
        try {
            per_query[q] = index.search(queries[q].values.data(), k, nprobe);
        } catch (...) {
#pragma omp critical
            if (!failure) failure = std::current_exception();
        }
    }
    if (failure) std::rethrow_exception(failure);
    write_results(out_path, per_query);
    log(g, "searched " + std::to_string(queries.size()) + " queries -> " + out_path);
    return 0;
}

int cmd_rerank(const GlobalOpts& g, const std::string& results_path,
               const std::string& manifest_path, const std::string& query_manifest_path,
               const std::string& scorer_spec, const std::string& out_path) {
    std::vector<std::vector<int64_t>> candidates = read_results_ids(results_path);
    Manifest corpus = read_manifest(manifest_path);
    Manifest queries = read_manifest(query_manifest_path);
    if (candidates.size() > queries.rows.size())
        throw ParamError("results reference more query rows than the query manifest has");

    std::unique_ptr<PairScorer> scorer;
    if (scorer_spec == "classical") {
        scorer = std::make_unique<ClassicalScorer>();
    } else if (scorer_spec.rfind("file:", 0) == 0) {
        scorer = std::make_unique<FileBackedScorer>(scorer_spec.substr(5));
    } else {
        throw ParamError("unknown scorer: " + scorer_spec +
                         " (expected classical or file:<scores.tsv>)");
    }

    ImageResolver resolver = [&corpus](int64_t id) {
        return read_image(corpus.by_id(id).path);
    };

    std::ofstream out(out_path);
    if (!out) throw FormatError("cannot open for writing: " + out_path);
    out << "query_id\tmatch_id\tsame_score\tverdict\n";
    char buf[64];
    for (size_t q = 0; q < candidates.size(); ++q) {
        int64_t query_id = queries.rows[q].id;
        ImageBuffer query_img = read_image(queries.rows[q].path);
        auto scored = score_candidates(query_img, query_id, candidates[q], resolver, *scorer);
        std::vector<float> scores;
        scores.reserve(scored.size());
        for (const auto& [id, ps] : scored) scores.push_back(ps.same_score);
        RerankDecision decision = reorder(scores, candidates[q]);

        if (decision.matched()) {
            const auto& [mid, ps] = scored[decision.match_index];
            std::snprintf(buf, sizeof(buf), "%.6g", static_cast<double>(ps.same_score));
            out << query_id << "\t" << mid << "\t" << buf << "\t" << to_string(ps.verdict)
                << "\n";
        } else {
            float top = scores.empty() ? 0.0f : *std::max_element(scores.begin(), scores.end());
            std::snprintf(buf, sizeof(buf), "%.6g", static_cast<double>(top));
            out << query_id << "\tNONE\t" << buf << "\tdistinct\n";
        }
    }
    if (!out) throw FormatError("write failed: " + out_path);
    log(g, "reranked " + std::to_string(candidates.size()) + " queries -> " + out_path);
    return 0;
}

int cmd_dewarp(const GlobalOpts& g, const std::string& image_path,
               const std::string& flow_path, const std::string& out_path) {
    ImageBuffer img = read_image(image_path);
    FlowField flow = read_flow(flow_path);
    write_image(dewarp(img, flow), out_path);
    log(g, "dewarped " + image_path + " -> " + out_path);
    return 0;
}

int cmd_heatmap(const GlobalOpts& g, const std::string& query_path,
                const std::string& candidate_path, const std::string& flow_path,
                const std::string& heat_path, const std::string& mask_path) {
    ImageBuffer q = read_image(query_path);
    ImageBuffer c = read_image(candidate_path);
    FlowField flow;
    const FlowField* flow_ptr = nullptr;
    if (!flow_path.empty()) {
        flow = read_flow(flow_path);
        flow_ptr = &flow;
    }
    ComparatorParams params;
    PairScore score = classify_pair_classical(q, c, flow_ptr, params);

    std::vector<float> norm = normalize_heatmap(score.heatmap.grid);
    std::vector<float> up = upsample_heatmap(norm, params.t, c.height, c.width);
    ImageBuffer heat(c.height, c.width, 1);
    heat.data.assign(up.begin(), up.end());
    write_image(heat, heat_path);

    if (!mask_path.empty()) {
        std::vector<uint8_t> mask = adjusted_mask(score, c.height, c.width, params);
        ImageBuffer mask_img(c.height, c.width, 1);
        for (size_t i = 0; i < mask.size(); ++i) mask_img.data[i] = mask[i] ? 1.0f : 0.0f;
        write_image(mask_img, mask_path);
    }
    log(g, std::string("verdict ") + to_string(score.verdict) + ", heatmap -> " + heat_path);
    return 0;
}

int cmd_eval_ir(const std::string& results_path, const std::string& truth_path, int k) {
    std::vector<std::vector<int64_t>> results = read_results_ids(results_path);
    std::ifstream in(truth_path);
    if (!in) throw FormatError("cannot open: " + truth_path);
    std::vector<int64_t> truth(results.size(), -1);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ss(line);
        size_t row;
        int64_t id;
        if (!(ss >> row >> id)) throw FormatError("malformed truth row: " + line);
        if (row >= truth.size()) truth.resize(row + 1, -1);
        truth[row] = id;
    }
    results.resize(truth.size());
    std::printf("IR@%d\t%.6f\n", k, ir_at_k(results, truth, k));
    return 0;
}

int cmd_eval_ap(const std::string& scores_path) {
    std::ifstream in(scores_path);
    if (!in) throw FormatError("cannot open: " + scores_path);
    std::vector<float> scores;
    std::vector<int> labels;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ss(line);
        float s;
        int l;
        if (!(ss >> s >> l)) throw FormatError("malformed score row: " + line);
        scores.push_back(s);
        labels.push_back(l);
    }
    std::printf("AP\t%.6f\n", average_precision(scores, labels));
    return 0;
}

int cmd_eval_iou(const std::string& query_path, const std::string& candidate_path,
                 const std::string& flow_path, const std::string& gt_path) {
    ImageBuffer q = read_image(query_path);
    ImageBuffer c = read_image(candidate_path);
    FlowField flow;
    const FlowField* flow_ptr = nullptr;
    if (!flow_path.empty()) {
        flow = read_flow(flow_path);
        flow_ptr = &flow;
    }
    ImageBuffer gt = read_image(gt_path);
    if (gt.height != c.height || gt.width != c.width)
        throw DimensionError("ground-truth mask dimensions do not match candidate");
    std::vector<uint8_t> gt_mask(gt.pixel_count());
    for (size_t i = 0; i < gt_mask.size(); ++i)
        gt_mask[i] = gt.data[i * gt.channels] > 0.5f ? 1 : 0;

    PairScore score = classify_pair_classical(q, c, flow_ptr);
    std::printf("IoU\t%.6f\tverdict\t%s\n",
                iou_adjusted(score, gt_mask, c.height, c.width), to_string(score.verdict));
    return 0;
}

int cmd_bench(const GlobalOpts& g, size_t n, int dim, const std::string& nprobe_csv, int k,
              size_t n_queries, int coarse_k, int pq_m, int iters,
              const std::string& out_path) {
    if (dim != kDescriptorDim) throw ParamError("bench: dim must be 256");
    std::vector<int> sweep;
    std::stringstream ss(nprobe_csv);
    std::string tok;
    while (std::getline(ss, tok, ',')) sweep.push_back(std::stoi(tok));

    log(g, "generating " + std::to_string(n) + " clustered vectors");
    std::vector<float> base = gen_synthetic(n, dim, g.seed, SynthMode::clustered);
    std::vector<float> queries = gen_synthetic(n_queries, dim, g.seed + 1, SynthMode::clustered);

    log(g, "training codebook");
    PqTrainConfig cfg;
    cfg.coarse_k = coarse_k;
    cfg.pq_m = pq_m;
    cfg.iters = iters;
    cfg.seed = g.seed;
    Index index(train_codebook(base.data(), n, dim, cfg));
    log(g, "encoding database");
    std::vector<int64_t> ids(n);
    for (size_t i = 0; i < n; ++i) ids[i] = static_cast<int64_t>(i);
    index.add(base.data(), n, ids.data());

    log(g, "computing brute-force oracle");
    std::vector<std::vector<int64_t>> oracle(n_queries);
    for (size_t q = 0; q < n_queries; ++q) {
        auto hits = brute_force_search(base.data(), n, dim, queries.data() + q * dim, k);
        for (const auto& h : hits) oracle[q].push_back(h.id);
    }

    log(g, "running sweep");
    auto rows = bench_recall_latency(index, queries.data(), n_queries, oracle, k, sweep);
    write_bench_report(rows, out_path);
    for (const auto& r : rows)
        std::printf("nprobe=%d\trecall=%.4f\tmedian=%.3fms\n", r.nprobe, r.recall, r.median_ms);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"SImProv image provenance pipeline"};
    app.set_config("--config");
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    GlobalOpts g;
    app.add_option("--seed", g.seed, "seed for all stochastic components");
    app.add_option("--threads", g.threads, "worker threads (0 = library default)");
    app.add_flag("--quiet", g.quiet, "suppress progress output");

    // describe
    auto* describe = app.add_subcommand("describe", "extract descriptors or pHashes");
    std::string d_manifest, d_method = "gem", d_out;
    double d_p = 3.0;
    int d_grid = 16;
    describe->add_option("--images", d_manifest, "image manifest TSV")->required();
    describe->add_option("--method", d_method, "gem | phash");
    describe->add_option("--p", d_p, "GeM exponent");
    describe->add_option("--grid", d_grid, "feature-map grid cells");
    describe->add_option("--out", d_out, "output SIPD/SIPH file")->required();

    // train-index
    auto* train = app.add_subcommand("train-index", "train codebook and build index");
    std::string t_desc, t_manifest, t_out;
    int t_coarse = 1024, t_m = 16, t_iters = 25;
    train->add_option("--descriptors", t_desc, "SIPD file")->required();
    train->add_option("--coarse-k", t_coarse, "coarse clusters");
    train->add_option("--pq-m", t_m, "PQ subspaces");
    train->add_option("--iters", t_iters, "Lloyd iterations");
    train->add_option("--manifest", t_manifest, "manifest supplying ids");
    train->add_option("--out", t_out, "output SIPX index")->required();

    // add
    auto* add = app.add_subcommand("add", "add descriptors to an existing index");
    std::string a_index, a_desc, a_manifest, a_out;
    add->add_option("--index", a_index, "input SIPX index")->required();
    add->add_option("--descriptors", a_desc, "SIPD file")->required();
    add->add_option("--manifest", a_manifest, "manifest supplying ids");
    add->add_option("--out", a_out, "output SIPX index")->required();

    // search
    auto* search = app.add_subcommand("search", "query the index");
    std::string s_index, s_queries, s_out;
    int s_k = 100, s_nprobe = 32;
    search->add_option("--index", s_index, "SIPX index")->required();
    search->add_option("--queries", s_queries, "query SIPD file")->required();
    search->add_option("--k", s_k, "results per query");
    search->add_option("--nprobe", s_nprobe, "coarse cells to probe");
    search->add_option("--out", s_out, "results TSV")->required();

    // rerank
    auto* rerank = app.add_subcommand("rerank", "pairwise re-rank of top-k candidates");
    std::string r_results, r_manifest, r_qmanifest, r_scorer = "classical", r_out;
    rerank->add_option("--results", r_results, "stage-1 results TSV")->required();
    rerank->add_option("--manifest", r_manifest, "corpus manifest")->required();
    rerank->add_option("--query-manifest", r_qmanifest, "query manifest")->required();
    rerank->add_option("--scorer", r_scorer, "classical | file:<scores.tsv>");
    rerank->add_option("--out", r_out, "decisions TSV")->required();

    // dewarp
    auto* dw = app.add_subcommand("dewarp", "apply a flow field to an image");
    std::string w_image, w_flow, w_out;
    dw->add_option("--image", w_image, "input PGM/PPM")->required();
    dw->add_option("--flow", w_flow, "SIPF flow field")->required();
    dw->add_option("--out", w_out, "output image")->required();

    // heatmap
    auto* hm = app.add_subcommand("heatmap", "pairwise manipulation heatmap");
    std::string h_query, h_candidate, h_flow, h_out, h_mask;
    hm->add_option("--query", h_query, "query image")->required();
    hm->add_option("--candidate", h_candidate, "candidate image")->required();
    hm->add_option("--flow", h_flow, "optional SIPF flow field");
    hm->add_option("--out", h_out, "upsampled heatmap PGM")->required();
    hm->add_option("--mask", h_mask, "binary mask PGM");

    // eval
    auto* eval = app.add_subcommand("eval", "metrics");
    eval->require_subcommand(1);
    auto* eval_ir = eval->add_subcommand("ir", "instance retrieval IR@k");
    std::string ei_results, ei_truth;
    int ei_k = 100;
    eval_ir->add_option("--results", ei_results, "results TSV")->required();
    eval_ir->add_option("--truth", ei_truth, "truth TSV (query_row, relevant id)")->required();
    eval_ir->add_option("--k", ei_k, "rank cutoff");
    auto* eval_ap = eval->add_subcommand("ap", "average precision");
    std::string ea_scores;
    eval_ap->add_option("--scores", ea_scores, "TSV of (score, label)")->required();
    auto* eval_iou = eval->add_subcommand("iou", "classification-adjusted IoU");
    std::string eu_query, eu_candidate, eu_flow, eu_gt;
    eval_iou->add_option("--query", eu_query, "query image")->required();
    eval_iou->add_option("--candidate", eu_candidate, "candidate image")->required();
    eval_iou->add_option("--flow", eu_flow, "optional flow field");
    eval_iou->add_option("--gt", eu_gt, "ground-truth mask PGM")->required();

    // bench
    auto* bench = app.add_subcommand("bench", "recall/latency sweep on synthetic data");
    size_t b_n = 1000000, b_queries = 1000;
    int b_dim = 256, b_k = 100, b_coarse = 1024, b_m = 16, b_iters = 25;
    std::string b_nprobe = "1,8,32,128,1024", b_out = "report.tsv";
    bench->add_option("--n", b_n, "database size");
    bench->add_option("--dim", b_dim, "vector dimension");
    bench->add_option("--queries", b_queries, "query count");
    bench->add_option("--nprobe", b_nprobe, "comma-separated nprobe sweep");
    bench->add_option("--k", b_k, "results per query");
    bench->add_option("--coarse-k", b_coarse, "coarse clusters");
    bench->add_option("--pq-m", b_m, "PQ subspaces");
    bench->add_option("--iters", b_iters, "Lloyd iterations");
    bench->add_option("--out", b_out, "report TSV");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    apply_threads(g.threads);

    try {
        if (*describe) return cmd_describe(g, d_manifest, d_method, d_p, d_grid, d_out);
        if (*train) return cmd_train_index(g, t_desc, t_coarse, t_m, t_iters, t_manifest, t_out);
        if (*add) return cmd_add(g, a_index, a_desc, a_manifest, a_out);
        if (*search) return cmd_search(g, s_index, s_queries, s_k, s_nprobe, s_out);
        if (*rerank) return cmd_rerank(g, r_results, r_manifest, r_qmanifest, r_scorer, r_out);
        if (*dw) return cmd_dewarp(g, w_image, w_flow, w_out);
        if (*hm) return cmd_heatmap(g, h_query, h_candidate, h_flow, h_out, h_mask);
        if (*eval_ir) return cmd_eval_ir(ei_results, ei_truth, ei_k);
        if (*eval_ap) return cmd_eval_ap(ea_scores);
        if (*eval_iou) return cmd_eval_iou(eu_query, eu_candidate, eu_flow, eu_gt);
        if (*bench)
            return cmd_bench(g, b_n, b_dim, b_nprobe, b_k, b_queries, b_coarse, b_m, b_iters,
                             b_out);
    } catch (const FormatError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
