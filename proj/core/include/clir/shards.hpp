#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "clir/corpus.hpp"
#include "clir/date.hpp"
#include "clir/lexical.hpp"
#include "clir/ranking.hpp"

namespace clir {

/// [start, end) calendar window.
struct DateWindow {
    Date start;
    Date end;

    bool contains(const Date& d) const noexcept { return start <= d && d < end; }
    friend bool operator==(const DateWindow&, const DateWindow&) = default;
};

/// Inclusive date range; a missing side is unbounded.
struct DateFilter {
    std::optional<Date> start;
    std::optional<Date> end;

    static DateFilter from_topic(const Topic& topic);
    bool empty() const noexcept { return !start && !end; }
    /// Throws ValidationError when start > end.
    void validate() const;
};

class ShardPlan {
  public:
    ShardPlan() = default;
    ShardPlan(int window_months, std::vector<DateWindow> windows, std::map<std::string, std::size_t> assignment);

    int window_months() const noexcept { return window_months_; }
    const std::vector<DateWindow>& windows() const noexcept { return windows_; }
    std::size_t size() const noexcept { return windows_.size(); }
    const std::map<std::string, std::size_t>& assignment() const noexcept { return assignment_; }

    /// Throws ValidationError for an unknown document.
    std::size_t shard_of(const std::string& doc_id) const;
    /// Window holding `date`, or nullopt when it falls outside the plan.
    std::optional<std::size_t> window_of(const Date& date) const;
    /// Doc ids per shard, each list ascending.
    std::vector<std::vector<std::string>> members() const;

    void save(const std::filesystem::path& path) const;
    static ShardPlan load(const std::filesystem::path& path);

    friend bool operator==(const ShardPlan&, const ShardPlan&) = default;

  private:
    int window_months_ = 3;
    std::vector<DateWindow> windows_;
    std::map<std::string, std::size_t> assignment_;
};

inline constexpr int kDefaultWindowMonths = 3;

/// Contiguous windows of `window_months` calendar months starting at the first
/// day of the earliest document month. Undated documents go to the last window.
/// Throws ValidationError when no document is dated.
ShardPlan plan_shards(std::span<const Document> docs, int window_months = kDefaultWindowMonths);

/// Ordinals of shards whose window intersects the filter, ascending. An
/// empty filter selects every shard.
std::vector<std::size_t> select_shards(const ShardPlan& plan, const DateFilter& filter);

/// Concatenates per-shard rankings, keeps the maximum score for a document seen
/// in several shards, sorts (ties by doc_id) and truncates to k.
Ranking merge_shard_results(std::span<const Ranking> per_shard, std::size_t k);

enum class FusionNormalization { Raw, MinMax };

FusionNormalization parse_fusion_normalization(std::string_view name);

/// Merges rankings over disjoint per-language subcollections by score. Raw
/// scores are compared directly; MinMax rescales each run to [0, 1] first.
/// Throws ValidationError when a doc id appears in more than one run.
Ranking fuse_multilingual(std::span<const Ranking> per_language, std::size_t k,
                          FusionNormalization normalization = FusionNormalization::Raw);

/// Builds one inverted index per shard, each carrying the statistics of the
/// whole collection.
std::vector<InvertedIndex> build_sharded_lexical(std::span<const DocBag> bags, const ShardPlan& plan);

/// Searches the selected shards and merges. With rm3, the first pass is the
/// merged ranking and the relevance model reads documents from their shards,
/// so the result equals an unsharded search over global statistics.
Ranking search_sharded_lexical(std::span<const InvertedIndex> shards, std::span<const std::size_t> selected,
                               const WeightedQuery& query, LexicalScorer scorer, bool rm3, std::size_t k,
                               const LexicalParams& params = {});

}  // namespace clir
