#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "clir/distill.hpp"
#include "clir/error.hpp"
#include "test_support.hpp"

using namespace clir;

TEST(DistillLoss, Examples) {
    const std::vector<double> a = {1.0, 0.0}, zero = {0.0, 0.0};
    EXPECT_NEAR(distill_loss(a, zero), 0.11094407167172735, 1e-4);
    EXPECT_NEAR(distill_loss(a, zero), 0.11094407167172735, 1e-12);
    EXPECT_EQ(distill_loss(a, a), 0.0);
    const std::vector<double> shifted = {6.0, 5.0};
    EXPECT_NEAR(distill_loss(shifted, zero), distill_loss(a, zero), 1e-12);
}

TEST(DistillLoss, Errors) {
    const std::vector<double> two = {1, 2}, three = {1, 2, 3}, one = {1};
    EXPECT_THROW(distill_loss(two, three), ValidationError);
    EXPECT_THROW(distill_loss(one, one), ValidationError);
    const std::vector<double> nan = {1, std::nan("")}, inf = {1, INFINITY};
    EXPECT_THROW(distill_loss(nan, two), ValidationError);
    EXPECT_THROW(distill_loss(two, inf), ValidationError);
    EXPECT_THROW(distill_loss(two, two, 0.0), ValidationError);
}

TEST(DistillLoss, Properties) {
    std::mt19937_64 rng(1);
    std::normal_distribution<double> n(0, 3);
    for (int trial = 0; trial < 500; ++trial) {
        const std::size_t len = 2 + rng() % 60;
        std::vector<double> t(len), s(len);
        for (auto& x : t) x = n(rng);
        for (auto& x : s) x = n(rng);
        const double loss = distill_loss(t, s);
        EXPECT_GE(loss, 0.0);
        EXPECT_NEAR(distill_loss(t, t), 0.0, 1e-12);
        const double ct = n(rng) * 100, cs = n(rng) * 100;
        auto t2 = t, s2 = s;
        for (auto& x : t2) x += ct;
        for (auto& x : s2) x += cs;
        EXPECT_NEAR(distill_loss(t2, s2), loss, 1e-9 * std::max(1.0, loss));

        // Direct Σ p ln(p / q).
        const auto p = softmax(t), q = softmax(s);
        double kl = 0;
        for (std::size_t i = 0; i < len; ++i) kl += p[i] * std::log(p[i] / q[i]);
        EXPECT_NEAR(loss, kl, 1e-9);
    }
}

TEST(Softmax, SumsToOneAndHandlesLargeScores) {
    const std::vector<double> big = {1000, 1001, 999};
    const auto p = softmax(big);
    EXPECT_NEAR(p[0] + p[1] + p[2], 1.0, 1e-12);
    EXPECT_GT(p[1], p[0]);
    const auto hot = softmax(big, 100.0);
    EXPECT_LT(hot[1] - hot[2], p[1] - p[2]);
}

TEST(MineHardPassages, Examples) {
    const auto set = test::random_corpus(3, 10, 8);
    DenseIndexParams p;
    p.num_centroids = 4;
    const auto index = DenseIndex::build(set, p);
    p.nprobe = 4;
    const auto q = test::random_query(9, 3, 8);
    const auto mined = mine_hard_passages(index, q, 50, p);
    EXPECT_EQ(mined.size(), 10u);
    const auto top = mine_hard_passages(index, q, 1, p);
    ASSERT_EQ(top.size(), 1u);
    std::string best;
    double best_score = -INFINITY;
    for (const auto& passage : index.passages()) {
        const double s = maxsim(q, decompress(passage, index.codebook()));
        if (s > best_score || (s == best_score && passage.key < best)) best = passage.key, best_score = s;
    }
    EXPECT_EQ(top[0], best);
    EXPECT_EQ(mine_hard_passages(index, q, 50, p), mined);
    EXPECT_TRUE(mine_hard_passages(DenseIndex{}, q, 5, p).empty());
}

TEST(MineHardPassages, PrefixProperty) {
    const auto set = test::random_corpus(5, 200, 16);
    DenseIndexParams p;
    p.num_centroids = 16;
    const auto index = DenseIndex::build(set, p);
    const auto q = test::random_query(1, 6, 16);
    auto prev = mine_hard_passages(index, q, 1, p);
    for (std::size_t k = 2; k <= 60; ++k) {
        const auto next = mine_hard_passages(index, q, k, p);
        ASSERT_GE(next.size(), prev.size());
        EXPECT_TRUE(std::equal(prev.begin(), prev.end(), next.begin()));
        prev = next;
    }
}

TEST(DistillFile, RoundTrip) {
    test::TempDir dir;
    std::vector<DistillPair> pairs = {
        {"q1", {{"p#0", 1.5}, {"p#1", -0.25}}, std::nullopt},
        {"q2", {{"x#0", 0.1}, {"y#3", 0.2}, {"z#1", 1e-9}}, std::vector<double>{0.5, 0.25, 0.125}},
    };
    write_distill_file(dir / "d.jsonl", pairs);
    EXPECT_EQ(read_distill_file(dir / "d.jsonl"), pairs);
    const auto text = test::read_file(dir / "d.jsonl");
    EXPECT_EQ(text.substr(0, text.find('\n')),
              R"({"query_id":"q1","passages":[{"pid":"p#0","teacher":1.5},{"pid":"p#1","teacher":-0.25}]})");

    std::vector<DistillPair> one = {{"q", {{"p#0", 1.0}}, std::nullopt}};
    EXPECT_THROW(write_distill_file(dir / "bad.jsonl", one), ValidationError);
    test::write_file(dir / "broken.jsonl", "{\"query_id\":\"q\"}\n");
    EXPECT_THROW(read_distill_file(dir / "broken.jsonl"), Error);
}
