#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "simprov/comparator.hpp"

namespace simprov {

// Final stage-2 decision: match_index == scores.size() means no candidate
// cleared the same-threshold; otherwise it points at the argmax score.
struct RerankDecision {
    size_t match_index = 0;
    std::vector<float> scores;        // aligned with the initial ranking
    std::vector<int64_t> reordered;   // candidate ids by descending score

    bool matched() const { return match_index < scores.size(); }
};

using ImageResolver = std::function<ImageBuffer(int64_t id)>;

// Applies the scorer to every (query, candidate) pair, preserving candidate order.
std::vector<std::pair<int64_t, PairScore>> score_candidates(
    const ImageBuffer& query_image, int64_t query_id,
    const std::vector<int64_t>& candidate_ids, const ImageResolver& resolver,
    const PairScorer& scorer, const FlowField* flow = nullptr);

// Argmax-with-threshold over the pair scores; ties go to the better initial
// rank. Candidates are re-sorted by descending score (stable on ties).
RerankDecision reorder(const std::vector<float>& scores,
                       const std::vector<int64_t>& initial_ranking,
                       double tau_same = 0.5);

}  // namespace simprov
