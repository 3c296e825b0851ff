#include "simprov/rerank.hpp"

#include <algorithm>
#include <numeric>

namespace simprov {

std::vector<std::pair<int64_t, PairScore>> score_candidates(
    const ImageBuffer& query_image, int64_t query_id,
    const std::vector<int64_t>& candidate_ids, const ImageResolver& resolver,
    const PairScorer& scorer, const FlowField* flow) {
    std::vector<std::pair<int64_t, PairScore>> out(candidate_ids.size());
    std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic)
    for (long long i = 0; i < static_cast<long long>(candidate_ids.size()); ++i) {
        try {
            int64_t cid = candidate_ids[i];
            ImageBuffer candidate = resolver(cid);
            out[i] = {cid, scorer.score(query_id, cid, query_image, candidate, flow)};
        } catch (...) {
#pragma omp critical
            if (!failure) failure = std::current_exception();
        }
    }
    if (failure) std::rethrow_exception(failure);
    return out;
}

RerankDecision reorder(const std::vector<float>& scores,
                       const std::vector<int64_t>& initial_ranking, double tau_same) {
    if (scores.size() != initial_ranking.size())
        throw ParamError("reorder: scores and ranking lengths differ");

    RerankDecision d;
    d.scores = scores;

    std::vector<size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    // descending score, ties by better (lower) initial rank
    std::stable_sort(order.begin(), order.end(),
                     [&](size_t a, size_t b) { return scores[a] > scores[b]; });
    d.reordered.reserve(order.size());
    for (size_t i : order) d.reordered.push_back(initial_ranking[i]);

    d.match_index = scores.size();
    if (!order.empty() && scores[order[0]] >= tau_same) d.match_index = order[0];
    return d;
}

}  // namespace simprov
