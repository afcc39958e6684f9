#include <gtest/gtest.h>

#include "cli/commands.hpp"
#include "cli/config.hpp"
#include "clir/dense.hpp"
#include "clir/error.hpp"
#include "clir/eval.hpp"
#include "test_support.hpp"

using namespace clir;
using namespace clir::cli;

namespace {

void write_collection(const test::TempDir& dir) {
    test::write_file(dir / "docs.jsonl",
                     R"({"id":"f1","title":"Rain","text":"rain falls on the city","lang":"fas","date":"2021-01-10"})" "\n"
                     R"({"id":"f2","text":"the sun and the rain","lang":"fas","date":"2021-05-02"})" "\n"
                     R"({"id":"f3","text":"markets fall on sun news","lang":"fas","date":"2021-08-30"})" "\n"
                     R"({"id":"f4","text":"city council meets","lang":"fas"})" "\n");
    test::write_file(dir / "topics.jsonl",
                     R"({"topic_id":"1","title":"rain city","description":"rain in the city"})" "\n"
                     R"({"topic_id":"2","title":"sun","description":"sun news","start_date":"2021-07-01"})" "\n");
    test::write_file(dir / "qrels.txt", "1 0 f1 2\n1 0 f2 1\n2 0 f3 1\n");
    test::write_file(dir / "table.tsv", "rain\train\t0.9\nrain\twet\t0.1\nsun\tsun\t1.0\ncity\tcity\t1.0\n");
    test::write_file(dir / "exp.ini", "[collection]\ndocs = docs.jsonl\ntopics = topics.jsonl\nqrels = qrels.txt\n"
                                      "[run]\nvariant = TD\nk = 10\n");
}

CommonOptions with_config(const test::TempDir& dir, unsigned threads = 1) {
    CommonOptions c;
    c.config_path = dir / "exp.ini";
    c.threads = threads;
    return c;
}

}  // namespace

TEST(Config, ParsesTypedValues) {
    const auto cfg = ExperimentConfig::parse("# comment\n[lexical]\nk1 = 1.2  # inline\nrm3 = true\n[run]\nk=50\n");
    EXPECT_EQ(cfg.get_double("lexical", "k1"), 1.2);
    EXPECT_EQ(cfg.get_bool("lexical", "rm3"), true);
    EXPECT_EQ(cfg.get_int("run", "k"), 50);
    EXPECT_FALSE(cfg.get("run", "tag"));
    EXPECT_NE(describe_keys().find("rm3_fb_terms"), std::string::npos);
}

TEST(Config, RejectsUnknownAndMalformed) {
    EXPECT_THROW(ExperimentConfig::parse("[lexical]\nk3 = 1\n"), ParseError);
    EXPECT_THROW(ExperimentConfig::parse("[nope]\n"), ParseError);
    EXPECT_THROW(ExperimentConfig::parse("[run]\nk = many\n"), ParseError);
    EXPECT_THROW(ExperimentConfig::parse("[run]\nk = 1\nk = 2\n"), ParseError);
    EXPECT_THROW(ExperimentConfig::parse("k = 1\n"), ParseError);
    EXPECT_THROW(ExperimentConfig::parse("[run\n"), ParseError);
}

TEST(Config, PathsResolveAndMustExist) {
    test::TempDir dir;
    test::write_file(dir / "a.jsonl", "");
    test::write_file(dir / "c.ini", "[collection]\ndocs = a.jsonl\n");
    const auto ok = ExperimentConfig::load(dir / "c.ini");
    EXPECT_EQ(ok.get_path("collection", "docs"), dir / "a.jsonl");
    EXPECT_NO_THROW(ok.require_paths_exist());
    test::write_file(dir / "m.ini", "[collection]\ntopics = missing.jsonl\n");
    EXPECT_THROW(ExperimentConfig::load(dir / "m.ini").require_paths_exist(), Error);
    CommonOptions c;
    c.config_path = dir / "m.ini";
    ShardPlanOptions o;
    o.docs = dir / "a.jsonl";
    o.out = dir / "plan.json";
    EXPECT_THROW(run_shard_plan(c, o), Error);
    EXPECT_FALSE(std::filesystem::exists(dir / "plan.json"));
}

TEST(Commands, LexicalPipelineIndependentOfThreads) {
    test::TempDir dir;
    write_collection(dir);
    for (unsigned threads : {1u, 4u}) {
        const auto tag = std::to_string(threads);
        const auto common = with_config(dir, threads);
        run_shard_plan(common, {std::nullopt, dir / ("plan" + tag + ".json"), std::nullopt});
        PsqTranslateOptions psq;
        psq.table = dir / "table.tsv";
        psq.out = dir / ("bags" + tag + ".jsonl");
        run_psq_translate(common, psq);
        IndexLexicalOptions idx;
        idx.bags = psq.out;
        idx.shard_plan = dir / ("plan" + tag + ".json");
        idx.out = dir / ("lex" + tag);
        run_index_lexical(common, idx);
        SearchOptions s;
        s.index = idx.out;
        s.out = dir / ("hmm" + tag + ".run");
        s.scorer = "hmm";
        s.rm3 = true;
        s.use_dates = true;
        run_search(common, s);
    }
    for (const auto* name : {"plan", "bags", "hmm"}) {
        const std::string ext = std::string(name) == "plan" ? ".json" : std::string(name) == "bags" ? ".jsonl" : ".run";
        EXPECT_EQ(test::read_file(dir / (name + std::string("1") + ext)),
                  test::read_file(dir / (name + std::string("4") + ext)))
            << name;
    }
    const auto bags = test::read_file(dir / "bags1.jsonl");
    EXPECT_NE(bags.find(R"({"id":"f1","lang":"fas","date":"2021-01-10","bag":{"city":1,"rain":1.8,"wet":0.2}})"),
              std::string::npos);
    const auto run = read_run(dir / "hmm1.run");
    for (const auto& e : run) {
        if (e.topic_id == "2") EXPECT_EQ(e.doc_id, "f3");  // only the shard from July onwards, plus undated f4
    }
    EXPECT_EQ(run.front().run_tag, "clir-hmm-rm3-TD");
}

TEST(Commands, ValidateBeforeWriting) {
    test::TempDir dir;
    write_collection(dir);
    const auto common = with_config(dir);
    IndexLexicalOptions idx;
    idx.out = dir / "lex";
    run_index_lexical(common, idx);

    SearchOptions bad_variant;
    bad_variant.index = dir / "lex";
    bad_variant.out = dir / "never.run";
    bad_variant.variant = "XYZ";
    EXPECT_THROW(run_search(common, bad_variant), ValidationError);
    SearchOptions bad_dates = bad_variant;
    bad_dates.variant = "T";
    bad_dates.use_dates = true;
    EXPECT_THROW(run_search(common, bad_dates), ValidationError);
    SearchOptions bad_scorer = bad_dates;
    bad_scorer.use_dates = false;
    bad_scorer.scorer = "dense";
    EXPECT_THROW(run_search(common, bad_scorer), ValidationError);
    SearchOptions missing = bad_scorer;
    missing.scorer = std::nullopt;
    missing.index = dir / "nothing";
    EXPECT_THROW(run_search(common, missing), Error);
    EXPECT_FALSE(std::filesystem::exists(dir / "never.run"));

    IndexLexicalOptions both;
    both.docs = dir / "docs.jsonl";
    both.bags = dir / "docs.jsonl";
    both.out = dir / "never";
    EXPECT_THROW(run_index_lexical(common, both), ValidationError);
    EXPECT_FALSE(std::filesystem::exists(dir / "never"));

    CommonOptions no_config;
    SearchOptions no_topics;
    no_topics.index = dir / "lex";
    no_topics.out = dir / "never.run";
    EXPECT_THROW(run_search(no_config, no_topics), ValidationError);
    EXPECT_FALSE(std::filesystem::exists(dir / "never.run"));
}

TEST(Commands, SearchWritesValidRun) {
    test::TempDir dir;
    write_collection(dir);
    const auto common = with_config(dir);
    IndexLexicalOptions idx;
    idx.out = dir / "lex";
    run_index_lexical(common, idx);
    SearchOptions s;
    s.index = idx.out;
    s.out = dir / "bm25.run";
    s.k = 2;
    s.tag = "mytag";
    run_search(common, s);
    const auto run = read_run(dir / "bm25.run");
    ASSERT_FALSE(run.empty());
    EXPECT_LE(run_by_topic(run).at("1").size(), 2u);
    EXPECT_EQ(run.front().run_tag, "mytag");

    EvaluateOptions e;
    e.run = dir / "bm25.run";
    e.out = dir / "report.tsv";
    run_evaluate(common, e);
    EXPECT_EQ(test::read_file(dir / "report.tsv").rfind("topic\tndcg@20\trecall@1000\n", 0), 0u);
}

TEST(Commands, FuseMergesPerTopic) {
    test::TempDir dir;
    test::write_file(dir / "fas.run", "1 Q0 f1 1 -2 a\n2 Q0 f9 1 3 a\n");
    test::write_file(dir / "rus.run", "1 Q0 r1 1 -1.5 b\n");
    test::write_file(dir / "zho.run", "1 Q0 z1 1 -2.5 c\n");
    FuseOptions f;
    f.runs = {dir / "fas.run", dir / "rus.run", dir / "zho.run"};
    f.out = dir / "mlir.run";
    f.k = 1000;
    run_fuse({}, f);
    EXPECT_EQ(test::read_file(dir / "mlir.run"),
              "1 Q0 r1 1 -1.5 clir-fused\n1 Q0 f1 2 -2 clir-fused\n1 Q0 z1 3 -2.5 clir-fused\n"
              "2 Q0 f9 1 3 clir-fused\n");
    f.normalize = "zscore";
    EXPECT_THROW(run_fuse({}, f), ValidationError);
}

TEST(Commands, DenseSearchNeedsQueryEmbeddings) {
    test::TempDir dir;
    write_collection(dir);
    const auto set = test::random_corpus(1, 12, 8);
    EmbeddingSet renamed(8);
    const char* docs[] = {"f1", "f2", "f3", "f4"};
    for (std::size_t i = 0; i < set.size(); ++i) {
        const auto m = set.tokens(i);
        renamed.add(std::string(docs[i / 3]) + "#" + std::to_string(i % 3), {m.data, m.rows * m.cols});
    }
    write_embeddings(dir / "p.emb", renamed);
    EmbeddingSet queries(8);
    const auto q = test::random_query(2, 3, 8);
    queries.add("1:TD", q.data());
    write_embeddings(dir / "q.emb", queries);

    const auto common = with_config(dir);
    IndexDenseOptions d;
    d.embeddings = dir / "p.emb";
    d.out = dir / "dense";
    d.centroids = 4;
    run_index_dense(common, d);

    SearchOptions s;
    s.index = dir / "dense";
    s.query_embeddings = dir / "q.emb";
    s.out = dir / "dense.run";
    EXPECT_THROW(run_search(common, s), ValidationError);  // topic 2 has no vectors
    EXPECT_FALSE(std::filesystem::exists(dir / "dense.run"));
    queries.add("2", q.data());
    write_embeddings(dir / "q.emb", queries);
    run_search(common, s);
    const auto run = read_run(dir / "dense.run");
    EXPECT_EQ(run_by_topic(run).at("1").size(), 4u);
}
