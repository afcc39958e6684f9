#pragma once

#include <algorithm>
#include <cstddef>
#include <string>
#include <vector>

namespace clir {

/// A document (or passage) key with its retrieval score.
struct ScoredDoc {
    std::string id;
    double score = 0.0;

    friend bool operator==(const ScoredDoc&, const ScoredDoc&) = default;
};

using Ranking = std::vector<ScoredDoc>;

/// Descending score, ascending id on ties.
inline bool ranks_before(const ScoredDoc& a, const ScoredDoc& b) noexcept {
    if (a.score != b.score) return a.score > b.score;
    return a.id < b.id;
}

inline void sort_ranking(Ranking& ranking) {
    std::sort(ranking.begin(), ranking.end(), ranks_before);
}

/// Sorts and keeps the first k entries. Uses partial sort when k is small.
inline void truncate_ranking(Ranking& ranking, std::size_t k) {
    if (k < ranking.size()) {
        std::partial_sort(ranking.begin(), ranking.begin() + static_cast<std::ptrdiff_t>(k),
                          ranking.end(), ranks_before);
        ranking.resize(k);
    } else {
        sort_ranking(ranking);
    }
}

}  // namespace clir
