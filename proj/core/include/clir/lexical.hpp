#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "clir/psq.hpp"
#include "clir/ranking.hpp"

namespace clir {

struct LexicalParams {
    double k1 = 0.9;
    double b = 0.4;
    double lambda = 0.5;
    std::size_t rm3_fb_docs = 10;
    std::size_t rm3_fb_terms = 10;
    double rm3_alpha = 0.5;

    /// Throws ValidationError when a field is out of range.
    void validate() const;
};

enum class LexicalScorer { Bm25, Hmm };

LexicalScorer parse_lexical_scorer(std::string_view name);
std::string_view to_string(LexicalScorer scorer) noexcept;

/// Query terms with weights, sorted by term and merged. Plain token queries
/// carry their multiplicity as the weight.
using WeightedQuery = std::vector<std::pair<std::string, double>>;

WeightedQuery make_query(std::span<const std::string> terms);
/// Merges duplicate terms, drops non-positive weights and sorts by term.
WeightedQuery normalize_query(WeightedQuery query);

struct DocBag {
    std::string doc_id;
    WeightedBag bag;
};

struct TermStats {
    std::uint64_t df = 0;
    double cf = 0.0;
};

/// Statistics the scorers read from the collection. A sharded deployment
/// hands every shard the statistics of the whole collection so per-shard
/// scores are comparable.
struct CollectionStats {
    std::uint64_t num_docs = 0;
    double total_weight = 0.0;
    std::unordered_map<std::string, TermStats> terms;

    /// Weights are rounded to float (the index storage type) before summing,
    /// and documents are visited in doc_id order, so the result does not
    /// depend on input order.
    static CollectionStats from_bags(std::span<const DocBag> bags);

    double average_length() const noexcept { return num_docs ? total_weight / static_cast<double>(num_docs) : 0.0; }
    const TermStats* find(const std::string& term) const;
};

/// Immutable inverted index over real-valued term weights. Documents are
/// numbered in ascending doc_id order and postings are sorted by that number.
class InvertedIndex {
  public:
    struct Posting {
        std::uint32_t doc = 0;
        float weight = 0.0F;
    };

    InvertedIndex() = default;

    /// Throws ValidationError on duplicate doc ids. When `global` is given it
    /// replaces the locally computed collection statistics.
    static InvertedIndex build(std::span<const DocBag> bags, std::optional<CollectionStats> global = std::nullopt);

    std::size_t num_docs() const noexcept { return doc_ids_.size(); }
    std::size_t num_terms() const noexcept { return terms_.size(); }
    const CollectionStats& stats() const noexcept { return stats_; }
    bool has_global_stats() const noexcept { return global_stats_; }

    const std::vector<std::string>& doc_ids() const noexcept { return doc_ids_; }
    std::optional<std::uint32_t> doc_ordinal(const std::string& doc_id) const;
    double doc_length(std::uint32_t doc) const { return doc_lengths_.at(doc); }

    const std::vector<std::string>& terms() const noexcept { return terms_; }
    /// Empty span when the term is not indexed.
    std::span<const Posting> postings(const std::string& term) const;
    std::span<const std::pair<std::uint32_t, float>> doc_terms(std::uint32_t doc) const { return forward_.at(doc); }
    double term_weight(std::uint32_t doc, const std::string& term) const;

    void save(const std::filesystem::path& dir) const;
    static InvertedIndex load(const std::filesystem::path& dir);

  private:
    void build_forward();

    std::vector<std::string> doc_ids_;
    std::vector<double> doc_lengths_;
    std::vector<std::string> terms_;
    std::unordered_map<std::string, std::uint32_t> term_ids_;
    std::vector<std::vector<Posting>> postings_;
    std::vector<std::vector<std::pair<std::uint32_t, float>>> forward_;
    CollectionStats stats_;
    bool global_stats_ = false;
};

/// Okapi BM25 with idf = ln(1 + (N - df + 0.5) / (df + 0.5)). Each query term
/// contributes its weight times the per-term score.
double bm25_score(const InvertedIndex& index, const WeightedQuery& query, const std::string& doc_id,
                  const LexicalParams& params);

/// Query likelihood with linear interpolation of the document and collection
/// models: sum over terms of weight * ln(lambda P(t|D) + (1 - lambda) P(t|C)).
/// Returns -infinity when some term has zero probability under the mixture.
double hmm_score(const InvertedIndex& index, const WeightedQuery& query, const std::string& doc_id,
                 const LexicalParams& params);

/// RM3 expansion from the first `rm3_fb_docs` entries of a first-pass
/// ranking. Feedback documents are weighted by a softmax of their scores.
/// Returns the original query untouched when `feedback` is empty.
WeightedQuery rm3_expand(const InvertedIndex& index, const WeightedQuery& query, const Ranking& feedback,
                         const LexicalParams& params);
/// Same, with feedback documents spread over several indexes (shards). Each
/// feedback document is looked up in the first index that holds it.
WeightedQuery rm3_expand(std::span<const InvertedIndex* const> indexes, const WeightedQuery& query,
                         const Ranking& feedback, const LexicalParams& params);

/// Top-k documents containing at least one query term, by score descending
/// with ties broken by doc_id. HMM drops query terms unknown to the collection
/// statistics and any document scoring -infinity. Throws on an empty query.
Ranking search_lexical(const InvertedIndex& index, const WeightedQuery& query, LexicalScorer scorer, bool rm3,
                       std::size_t k, const LexicalParams& params = {});

}  // namespace clir
