#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "config.hpp"

namespace clir::cli {

/// Flags shared by every subcommand. Values set on the command line win over
/// the config file; the config wins over built-in defaults.
struct CommonOptions {
    std::optional<std::filesystem::path> config_path;
    std::optional<std::uint64_t> seed;
    std::optional<unsigned> threads;
};

struct ShardPlanOptions {
    std::optional<std::filesystem::path> docs;
    std::filesystem::path out;
    std::optional<int> window_months;
};

struct PsqTranslateOptions {
    std::optional<std::filesystem::path> docs;
    std::optional<std::filesystem::path> table;
    std::filesystem::path out;
    std::optional<double> cum_mass;
    std::optional<std::size_t> max_alts;
    std::optional<std::string> tokenizer;
};

struct IndexLexicalOptions {
    std::optional<std::filesystem::path> docs;
    std::optional<std::filesystem::path> bags;
    std::optional<std::filesystem::path> shard_plan;
    std::filesystem::path out;
    std::optional<std::string> tokenizer;
};

struct IndexDenseOptions {
    std::filesystem::path embeddings;
    std::optional<std::filesystem::path> shard_plan;
    std::filesystem::path out;
    std::optional<std::uint32_t> bits;
    std::optional<std::uint32_t> centroids;
    std::optional<std::uint32_t> kmeans_iters;
};

struct SearchOptions {
    std::filesystem::path index;
    std::optional<std::filesystem::path> topics;
    std::optional<std::filesystem::path> query_embeddings;
    std::filesystem::path out;
    std::optional<std::string> scorer;
    std::optional<std::string> variant;
    std::optional<bool> rm3;
    std::optional<std::size_t> k;
    std::optional<std::string> tag;
    std::optional<bool> use_dates;
    std::optional<std::string> tokenizer;
    std::optional<double> k1, b, lambda, rm3_alpha;
    std::optional<std::size_t> rm3_fb_docs, rm3_fb_terms;
    std::optional<std::uint32_t> nprobe;
    std::optional<std::size_t> candidate_cap;
};

struct FuseOptions {
    std::vector<std::filesystem::path> runs;
    std::filesystem::path out;
    std::optional<std::size_t> k;
    std::string normalize = "raw";
    std::optional<std::string> tag;
};

struct MineDistillOptions {
    std::filesystem::path index;
    std::filesystem::path queries;
    std::filesystem::path teacher;
    std::filesystem::path out;
    std::size_t k = 50;
    std::optional<std::uint32_t> nprobe;
    std::optional<std::size_t> candidate_cap;
};

struct EvaluateOptions {
    std::filesystem::path run;
    std::optional<std::filesystem::path> qrels;
    std::optional<std::filesystem::path> out;
    std::size_t ndcg_depth = 20;
    std::size_t recall_depth = 1000;
};

/// Each command validates and loads every input before creating any output.
/// They throw clir::Error on failure.
void run_shard_plan(const CommonOptions& common, const ShardPlanOptions& options);
void run_psq_translate(const CommonOptions& common, const PsqTranslateOptions& options);
void run_index_lexical(const CommonOptions& common, const IndexLexicalOptions& options);
void run_index_dense(const CommonOptions& common, const IndexDenseOptions& options);
void run_search(const CommonOptions& common, const SearchOptions& options);
void run_fuse(const CommonOptions& common, const FuseOptions& options);
void run_mine_distill(const CommonOptions& common, const MineDistillOptions& options);
void run_evaluate(const CommonOptions& common, const EvaluateOptions& options);

}  // namespace clir::cli
