#include <iostream>

#include <CLI11.hpp>

#include "cli/commands.hpp"
#include "cli/config.hpp"
#include "clir/error.hpp"

namespace {

using clir::cli::CommonOptions;

template <typename T>
void optional_flag(CLI::App* app, const std::string& name, std::optional<T>& target, const std::string& help) {
    app->add_option_function<T>(name, [&target](const T& v) { target = v; }, help);
}

void bool_flag(CLI::App* app, const std::string& name, std::optional<bool>& target, const std::string& help) {
    app->add_flag_function(name, [&target](std::int64_t count) { target = count > 0; }, help);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"clir: cross-language retrieval experiments"};
    app.footer("Config file keys (values given as flags override the config):\n\n" + clir::cli::describe_keys());
    app.require_subcommand(1);

    CommonOptions common;
    optional_flag(&app, "--config", common.config_path, "Experiment config file");
    optional_flag(&app, "--seed", common.seed, "Seed for every random choice (default 42)");
    optional_flag(&app, "--threads", common.threads, "Maximum worker threads (default 1)");

    clir::cli::ShardPlanOptions shard_plan;
    auto* shard_cmd = app.add_subcommand("shard-plan", "Assign documents to date windows");
    optional_flag(shard_cmd, "--docs", shard_plan.docs, "Collection JSONL");
    shard_cmd->add_option("--out", shard_plan.out, "Output plan JSON")->required();
    optional_flag(shard_cmd, "--window-months", shard_plan.window_months, "Window width in months (default 3)");

    clir::cli::PsqTranslateOptions psq;
    auto* psq_cmd = app.add_subcommand("psq-translate", "Map documents into query-language expected-count bags");
    optional_flag(psq_cmd, "--docs", psq.docs, "Collection JSONL");
    optional_flag(psq_cmd, "--table", psq.table, "Translation table TSV (source target prob)");
    psq_cmd->add_option("--out", psq.out, "Output bags JSONL")->required();
    optional_flag(psq_cmd, "--cum-mass", psq.cum_mass, "Cumulative probability kept per source (default 0.99)");
    optional_flag(psq_cmd, "--max-alts", psq.max_alts, "Alternatives kept per source (default 64)");
    optional_flag(psq_cmd, "--tokenizer", psq.tokenizer, "default | whitespace");

    clir::cli::IndexLexicalOptions lexical;
    auto* lex_cmd = app.add_subcommand("index-lexical", "Build an inverted index from documents or PSQ bags");
    optional_flag(lex_cmd, "--docs", lexical.docs, "Collection JSONL (tokenized as-is)");
    optional_flag(lex_cmd, "--bags", lexical.bags, "Bags JSONL from psq-translate");
    optional_flag(lex_cmd, "--shard-plan", lexical.shard_plan, "Build one index per date shard with global stats");
    lex_cmd->add_option("--out", lexical.out, "Output index directory")->required();
    optional_flag(lex_cmd, "--tokenizer", lexical.tokenizer, "default | whitespace");

    clir::cli::IndexDenseOptions dense;
    auto* dense_cmd = app.add_subcommand("index-dense", "Train a codebook and compress passage embeddings");
    dense_cmd->add_option("--embeddings", dense.embeddings, "Passage embeddings (binary)")->required();
    optional_flag(dense_cmd, "--shard-plan", dense.shard_plan, "Build one index per date shard");
    dense_cmd->add_option("--out", dense.out, "Output index directory")->required();
    optional_flag(dense_cmd, "--bits", dense.bits, "Residual bits per dimension (1 or 2)");
    optional_flag(dense_cmd, "--centroids", dense.centroids, "Number of centroids (default from token count)");
    optional_flag(dense_cmd, "--kmeans-iters", dense.kmeans_iters, "k-means iterations (default 20)");

    clir::cli::SearchOptions search;
    auto* search_cmd = app.add_subcommand("search", "Rank documents for every topic and write a TREC run");
    search_cmd->add_option("--index", search.index, "Index directory")->required();
    optional_flag(search_cmd, "--topics", search.topics, "Topics JSONL");
    optional_flag(search_cmd, "--query-embeddings", search.query_embeddings, "Query embeddings (dense only)");
    search_cmd->add_option("--out", search.out, "Output run file")->required();
    optional_flag(search_cmd, "--scorer", search.scorer, "bm25 | hmm | dense");
    optional_flag(search_cmd, "--variant", search.variant, "T | D | TD (default TD)");
    bool_flag(search_cmd, "--rm3", search.rm3, "Expand queries with RM3");
    optional_flag(search_cmd, "--k", search.k, "Results per topic (default 1000)");
    optional_flag(search_cmd, "--tag", search.tag, "Run tag");
    bool_flag(search_cmd, "--use-dates", search.use_dates, "Search only shards overlapping the topic date range");
    optional_flag(search_cmd, "--tokenizer", search.tokenizer, "default | whitespace");
    optional_flag(search_cmd, "--k1", search.k1, "BM25 k1 (default 0.9)");
    optional_flag(search_cmd, "--b", search.b, "BM25 b (default 0.4)");
    optional_flag(search_cmd, "--lambda", search.lambda, "HMM document weight (default 0.5)");
    optional_flag(search_cmd, "--rm3-fb-docs", search.rm3_fb_docs, "RM3 feedback documents (default 10)");
    optional_flag(search_cmd, "--rm3-fb-terms", search.rm3_fb_terms, "RM3 expansion terms (default 10)");
    optional_flag(search_cmd, "--rm3-alpha", search.rm3_alpha, "RM3 original query weight (default 0.5)");
    optional_flag(search_cmd, "--nprobe", search.nprobe, "Centroids probed per query token (default 4)");
    optional_flag(search_cmd, "--candidate-cap", search.candidate_cap, "Passages kept after stage 2 (default 2500)");

    clir::cli::FuseOptions fuse;
    auto* fuse_cmd = app.add_subcommand("fuse", "Merge per-language runs into one ranking per topic");
    fuse_cmd->add_option("runs", fuse.runs, "Run files")->required();
    fuse_cmd->add_option("--out", fuse.out, "Output run file")->required();
    optional_flag(fuse_cmd, "--k", fuse.k, "Results per topic (default 1000)");
    fuse_cmd->add_option("--normalize", fuse.normalize, "raw | minmax")->capture_default_str();
    optional_flag(fuse_cmd, "--tag", fuse.tag, "Run tag");

    clir::cli::MineDistillOptions mine;
    auto* mine_cmd = app.add_subcommand("mine-distill", "Mine dense top-k passages and attach teacher scores");
    mine_cmd->add_option("--index", mine.index, "Dense index directory")->required();
    mine_cmd->add_option("--queries", mine.queries, "Training query embeddings")->required();
    mine_cmd->add_option("--teacher", mine.teacher, "Teacher scores TSV (query pid score)")->required();
    mine_cmd->add_option("--out", mine.out, "Output JSONL")->required();
    mine_cmd->add_option("--k", mine.k, "Passages mined per query")->capture_default_str();
    optional_flag(mine_cmd, "--nprobe", mine.nprobe, "Centroids probed per query token");
    optional_flag(mine_cmd, "--candidate-cap", mine.candidate_cap, "Passages kept after stage 2");

    clir::cli::EvaluateOptions eval;
    auto* eval_cmd = app.add_subcommand("evaluate", "Score a run against qrels");
    eval_cmd->add_option("--run", eval.run, "Run file")->required();
    optional_flag(eval_cmd, "--qrels", eval.qrels, "Qrels file");
    optional_flag(eval_cmd, "--out", eval.out, "Also write the report here");
    eval_cmd->add_option("--ndcg-depth", eval.ndcg_depth, "nDCG cutoff")->capture_default_str();
    eval_cmd->add_option("--recall-depth", eval.recall_depth, "Recall cutoff")->capture_default_str();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*shard_cmd) clir::cli::run_shard_plan(common, shard_plan);
        if (*psq_cmd) clir::cli::run_psq_translate(common, psq);
        if (*lex_cmd) clir::cli::run_index_lexical(common, lexical);
        if (*dense_cmd) clir::cli::run_index_dense(common, dense);
        if (*search_cmd) clir::cli::run_search(common, search);
        if (*fuse_cmd) clir::cli::run_fuse(common, fuse);
        if (*mine_cmd) clir::cli::run_mine_distill(common, mine);
        if (*eval_cmd) clir::cli::run_evaluate(common, eval);
    } catch (const clir::Error& e) {
        std::cerr << "clir: error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "clir: internal error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
