#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "clir/ranking.hpp"

namespace clir {

struct RunEntry {
    std::string topic_id;
    std::string doc_id;
    std::size_t rank = 0;
    double score = 0.0;
    std::string run_tag;

    friend bool operator==(const RunEntry&, const RunEntry&) = default;
};

/// topic -> doc -> grade.
using Qrels = std::map<std::string, std::map<std::string, int>>;

inline constexpr std::size_t kDefaultNdcgDepth = 20;
inline constexpr std::size_t kDefaultRecallDepth = 1000;

/// Exponential gain (2^rel - 1) with a log2(rank + 1) discount; unjudged
/// documents have grade 0. `judgments` are the qrels of one topic.
double ndcg_at_k(std::span<const std::string> ranked, const std::map<std::string, int>& judgments,
                 std::size_t k = kDefaultNdcgDepth);

/// Fraction of documents with grade > 0 found in the first k.
double recall_at_k(std::span<const std::string> ranked, const std::map<std::string, int>& judgments,
                   std::size_t k = kDefaultRecallDepth);

/// Throws ValidationError unless, per topic, ranks run 1..n in file order and
/// scores never increase with rank.
void validate_run(std::span<const RunEntry> entries);

/// "topic Q0 doc rank score tag" lines. Scores use the shortest decimal that
/// round-trips.
void write_run(const std::filesystem::path& path, std::span<const RunEntry> entries);
std::string format_run_line(const RunEntry& entry);
std::vector<RunEntry> read_run(const std::filesystem::path& path);

/// Converts ranked lists (already sorted) into run entries with ranks 1..n.
std::vector<RunEntry> to_run_entries(const std::string& topic_id, const Ranking& ranking, const std::string& tag);
/// Groups entries by topic, preserving rank order.
std::map<std::string, Ranking> run_by_topic(std::span<const RunEntry> entries);

/// "topic_id iteration doc_id grade" lines.
Qrels read_qrels(const std::filesystem::path& path);

struct TopicMetrics {
    std::string topic_id;
    double ndcg = 0.0;
    double recall = 0.0;
};

struct EvalReport {
    std::vector<TopicMetrics> topics;
    double mean_ndcg = 0.0;
    double mean_recall = 0.0;
    /// Topics in the run that are absent from the qrels.
    std::vector<std::string> unjudged_topics;
    /// Topics in the qrels without any relevant document; excluded from means.
    std::vector<std::string> no_relevant_topics;
};

EvalReport evaluate(std::span<const RunEntry> run, const Qrels& qrels, std::size_t ndcg_depth = kDefaultNdcgDepth,
                    std::size_t recall_depth = kDefaultRecallDepth);
EvalReport evaluate(const std::filesystem::path& run_path, const std::filesystem::path& qrels_path);

/// Tab-separated table: one "topic ndcg@k recall@k" line per topic, then "all".
std::string format_report(const EvalReport& report, std::size_t ndcg_depth = kDefaultNdcgDepth,
                          std::size_t recall_depth = kDefaultRecallDepth);

}  // namespace clir
