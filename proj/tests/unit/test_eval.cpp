#include <gtest/gtest.h>

#include <random>

#include "clir/error.hpp"
#include "clir/eval.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

using namespace clir;

namespace {

std::vector<std::string> ids(std::initializer_list<const char*> list) { return {list.begin(), list.end()}; }

}  // namespace

TEST(Ndcg, Examples) {
    const std::map<std::string, int> q = {{"d1", 3}, {"d2", 1}};
    EXPECT_DOUBLE_EQ(ndcg_at_k(ids({"d1", "d2"}), q), 1.0);
    EXPECT_NEAR(ndcg_at_k(ids({"d2", "d1"}), q), 0.7098, 1e-4);
    EXPECT_NEAR(ndcg_at_k(ids({"d2", "d1"}), q), 0.7098097413968655, 1e-12);
    EXPECT_EQ(ndcg_at_k(ids({"x", "y"}), q), 0.0);
    EXPECT_THROW(ndcg_at_k(ids({"d1"}), q, 0), ValidationError);
    const std::vector<std::string> long_run = {"a", "b", "c", "d1"};
    EXPECT_EQ(ndcg_at_k(long_run, q, 3), 0.0);
}

TEST(Recall, Examples) {
    const std::map<std::string, int> q = {{"a", 1}, {"b", 2}, {"c", 1}, {"n", 0}};
    EXPECT_EQ(recall_at_k(ids({"c", "x", "a", "b"}), q), 1.0);
    const std::map<std::string, int> two = {{"a", 1}, {"b", 1}};
    EXPECT_EQ(recall_at_k(ids({"a", "z"}), two), 0.5);
    EXPECT_EQ(recall_at_k(ids({"n"}), q), 0.0);
    EXPECT_THROW(recall_at_k(ids({"a"}), q, 0), ValidationError);
}

TEST(Metrics, MatchBruteForce) {
    std::mt19937_64 rng(99);
    for (int trial = 0; trial < 300; ++trial) {
        std::map<std::string, int> q;
        const std::size_t pool = 5 + rng() % 200;
        for (std::size_t i = 0; i < pool; ++i) {
            if (rng() % 3 == 0) q["d" + std::to_string(i)] = static_cast<int>(rng() % 4);
        }
        std::vector<std::string> ranked;
        for (std::size_t i = 0; i < pool; ++i) ranked.push_back("d" + std::to_string(i));
        std::shuffle(ranked.begin(), ranked.end(), rng);
        ranked.resize(rng() % (pool + 1));
        const std::size_t k = 1 + rng() % 40;
        const double n = ndcg_at_k(ranked, q, k);
        EXPECT_NEAR(n, oracle::ndcg(ranked, q, k), 1e-12);
        EXPECT_GE(n, 0.0);
        EXPECT_LE(n, 1.0 + 1e-12);
        EXPECT_NEAR(recall_at_k(ranked, q, k), oracle::recall(ranked, q, k), 1e-12);
        double prev = 0;
        for (std::size_t depth = 1; depth <= pool + 1; depth += 7) {
            const double r = recall_at_k(ranked, q, depth);
            EXPECT_GE(r, prev);
            prev = r;
        }
    }
}

TEST(RunFile, RoundTrip) {
    test::TempDir dir;
    std::mt19937_64 rng(4);
    std::vector<RunEntry> entries;
    for (int t = 0; t < 4; ++t) {
        double score = 50.0;
        for (std::size_t r = 1; r <= 25; ++r) {
            score -= std::uniform_real_distribution<double>(0, 1)(rng);
            entries.push_back({"t" + std::to_string(t), "doc" + std::to_string(r), r, score, "tag"});
        }
    }
    write_run(dir / "a.run", entries);
    EXPECT_EQ(read_run(dir / "a.run"), entries);
    write_run(dir / "b.run", read_run(dir / "a.run"));
    EXPECT_EQ(test::read_file(dir / "a.run"), test::read_file(dir / "b.run"));
    EXPECT_EQ(format_run_line({"1", "d", 1, 0.1, "x"}), "1 Q0 d 1 0.1 x");
    EXPECT_EQ(format_run_line({"1", "d", 2, -3.0, "x"}), "1 Q0 d 2 -3 x");
}

TEST(RunFile, Violations) {
    test::TempDir dir;
    test::write_file(dir / "five.run", "1 Q0 d 1 0.5\n");
    EXPECT_THROW(read_run(dir / "five.run"), ParseError);
    test::write_file(dir / "up.run", "1 Q0 a 1 0.5 t\n1 Q0 b 2 0.7 t\n");
    EXPECT_THROW(read_run(dir / "up.run"), ValidationError);
    test::write_file(dir / "gap.run", "1 Q0 a 1 0.5 t\n1 Q0 b 3 0.4 t\n");
    EXPECT_THROW(read_run(dir / "gap.run"), ValidationError);
    test::write_file(dir / "dup.run", "1 Q0 a 1 0.5 t\n1 Q0 a 2 0.4 t\n");
    EXPECT_THROW(read_run(dir / "dup.run"), ValidationError);
    const std::vector<RunEntry> bad = {{"1", "a b", 1, 0.5, "t"}};
    EXPECT_THROW(write_run(dir / "x.run", bad), ValidationError);
    const std::vector<RunEntry> nan = {{"1", "a", 1, std::nan(""), "t"}};
    EXPECT_THROW(validate_run(nan), ValidationError);
}

TEST(Evaluate, Examples) {
    test::TempDir dir;
    test::write_file(dir / "q.txt", "1 0 a 2\n1 0 b 0\n2 0 c 1\n3 0 z 0\n");
    test::write_file(dir / "perfect.run", "1 Q0 a 1 9 t\n1 Q0 b 2 8 t\n");
    const auto single = evaluate(dir / "perfect.run", dir / "q.txt");
    ASSERT_EQ(single.topics.size(), 1u);
    EXPECT_EQ(single.mean_ndcg, 1.0);
    EXPECT_EQ(single.mean_recall, 1.0);

    test::write_file(dir / "mixed.run", "1 Q0 b 1 9 t\n1 Q0 a 2 8 t\n2 Q0 x 1 1 t\n3 Q0 z 1 1 t\n9 Q0 a 1 1 t\n");
    const auto report = evaluate(dir / "mixed.run", dir / "q.txt");
    ASSERT_EQ(report.topics.size(), 2u);
    EXPECT_EQ(report.unjudged_topics, std::vector<std::string>{"9"});
    EXPECT_EQ(report.no_relevant_topics, std::vector<std::string>{"3"});
    EXPECT_NEAR(report.mean_ndcg, (3.0 / std::log2(3.0) / 3.0 + 0.0) / 2, 1e-12);
    EXPECT_NEAR(report.mean_recall, 0.5, 1e-12);
    const auto text = format_report(report);
    EXPECT_NE(text.find("# unjudged topic\t9"), std::string::npos);

    test::write_file(dir / "neg.txt", "1 0 a -1\n");
    EXPECT_THROW(read_qrels(dir / "neg.txt"), ValidationError);
    test::write_file(dir / "three.txt", "1 0 a\n");
    EXPECT_THROW(read_qrels(dir / "three.txt"), ParseError);
}

TEST(Evaluate, InvariantUnderMonotoneRescaling) {
    std::mt19937_64 rng(6);
    Qrels qrels;
    std::vector<RunEntry> run, scaled;
    for (int t = 0; t < 5; ++t) {
        const std::string topic = std::to_string(t);
        for (int d = 0; d < 40; ++d) {
            if (rng() % 3 == 0) qrels[topic]["d" + std::to_string(d)] = static_cast<int>(rng() % 3);
        }
        qrels[topic]["d0"] = 2;
        for (std::size_t r = 1; r <= 30; ++r) {
            const double s = 100.0 - static_cast<double>(r);
            run.push_back({topic, "d" + std::to_string(rng() % 1000 < 500 ? r : r + 100), r, s, "t"});
            scaled.push_back({topic, run.back().doc_id, r, std::exp(s / 10.0), "t"});
        }
    }
    const auto a = evaluate(run, qrels), b = evaluate(scaled, qrels);
    EXPECT_EQ(a.mean_ndcg, b.mean_ndcg);
    EXPECT_EQ(a.mean_recall, b.mean_recall);
}
