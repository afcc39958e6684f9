#include <gtest/gtest.h>

#include <numeric>
#include <random>

#include "clir/error.hpp"
#include "clir/shards.hpp"
#include "test_support.hpp"

using namespace clir;

namespace {

Document dated(std::string id, std::optional<Date> date) { return {std::move(id), "", "x", "fas", date}; }

std::vector<Document> year_of_docs(int year) {
    return {dated("a", Date(year, 1, 1)), dated("b", Date(year, 5, 17)), dated("c", Date(year, 12, 31))};
}

std::vector<Document> random_dated_docs(std::mt19937_64& rng, std::size_t n) {
    std::vector<Document> docs;
    const long base = Date(2020, 1, 1).days();
    for (std::size_t i = 0; i < n; ++i) {
        char id[16];
        std::snprintf(id, sizeof id, "d%04zu", i);
        std::optional<Date> date;
        if (rng() % 20 != 0) date = Date::from_days(base + static_cast<long>(rng() % 1096));
        docs.push_back(dated(id, date));
    }
    return docs;
}

}  // namespace

TEST(PlanShards, Examples) {
    const auto year = plan_shards(year_of_docs(2020));
    ASSERT_EQ(year.size(), 4u);
    EXPECT_EQ(year.windows()[0], (DateWindow{Date(2020, 1, 1), Date(2020, 4, 1)}));
    EXPECT_EQ(year.windows()[3], (DateWindow{Date(2020, 10, 1), Date(2021, 1, 1)}));

    const std::vector<Document> one_month = {dated("x", Date(2021, 6, 3)), dated("y", Date(2021, 6, 28))};
    EXPECT_EQ(plan_shards(one_month).size(), 1u);

    const std::vector<Document> q1 = {dated("x", Date(2021, 1, 10)), dated("y", Date(2021, 3, 25)),
                                      dated("z", Date(2021, 4, 1))};
    const auto plan = plan_shards(q1);
    EXPECT_EQ(plan.shard_of("y"), 0u);
    EXPECT_EQ(plan.shard_of("z"), 1u);
    EXPECT_EQ(plan.window_of(Date(2021, 3, 31)), 0u);
    EXPECT_FALSE(plan.window_of(Date(2020, 12, 31)));
}

TEST(PlanShards, UndatedGoToLastWindow) {
    auto docs = year_of_docs(2020);
    docs.push_back(dated("u", std::nullopt));
    const auto plan = plan_shards(docs);
    EXPECT_EQ(plan.shard_of("u"), 3u);
    EXPECT_THROW(plan_shards(std::vector<Document>{dated("u", std::nullopt)}), ValidationError);
    EXPECT_THROW(plan.shard_of("missing"), ValidationError);
    EXPECT_THROW(plan_shards(docs, 0), ValidationError);
}

TEST(PlanShards, WindowsPartitionTheSpan) {
    std::mt19937_64 rng(19);
    for (int months : {1, 2, 3, 4, 6, 12}) {
        const auto docs = random_dated_docs(rng, 200);
        const auto plan = plan_shards(docs, months);
        for (std::size_t i = 1; i < plan.size(); ++i) EXPECT_EQ(plan.windows()[i].start, plan.windows()[i - 1].end);
        for (long day = plan.windows().front().start.days(); day < plan.windows().back().end.days(); ++day) {
            const auto date = Date::from_days(day);
            std::size_t hits = 0, which = 0;
            for (std::size_t w = 0; w < plan.size(); ++w) {
                if (plan.windows()[w].contains(date)) ++hits, which = w;
            }
            ASSERT_EQ(hits, 1u);
            EXPECT_EQ(plan.window_of(date), which);
        }
        for (const auto& d : docs) {
            if (d.date) EXPECT_TRUE(plan.windows()[plan.shard_of(d.doc_id)].contains(*d.date));
        }
    }
}

TEST(PlanShards, JsonRoundTrip) {
    std::mt19937_64 rng(2);
    const auto plan = plan_shards(random_dated_docs(rng, 50));
    test::TempDir dir;
    plan.save(dir / "plan.json");
    EXPECT_EQ(ShardPlan::load(dir / "plan.json"), plan);
    test::write_file(dir / "bad.json", "{\"format\":\"other\"}");
    EXPECT_THROW(ShardPlan::load(dir / "bad.json"), FormatError);
}

TEST(SelectShards, TopicDateFilters) {
    const std::vector<Document> y2021 = {dated("a", Date(2021, 1, 5)), dated("b", Date(2021, 12, 20))};
    const auto plan2021 = plan_shards(y2021);
    ASSERT_EQ(plan2021.size(), 4u);
    // Topic 203: 3/23/2021 to 3/29/2021.
    Topic t203{"203", "t", "d", Date::parse("3/23/2021"), Date::parse("3/29/2021")};
    EXPECT_EQ(select_shards(plan2021, DateFilter::from_topic(t203)), std::vector<std::size_t>{0});

    // Topic 207: from 9/21/2020, no end.
    const auto plan2020 = plan_shards(year_of_docs(2020));
    Topic t207{"207", "t", "d", Date::parse("9/21/2020"), std::nullopt};
    EXPECT_EQ(select_shards(plan2020, DateFilter::from_topic(t207)), (std::vector<std::size_t>{2, 3}));

    EXPECT_EQ(select_shards(plan2020, DateFilter{}), (std::vector<std::size_t>{0, 1, 2, 3}));
    EXPECT_EQ(select_shards(plan2020, DateFilter{Date(2019, 1, 1), Date(2030, 1, 1)}),
              (std::vector<std::size_t>{0, 1, 2, 3}));
    EXPECT_EQ(select_shards(plan2020, DateFilter{std::nullopt, Date(2020, 4, 1)}), (std::vector<std::size_t>{0, 1}));
    EXPECT_EQ(select_shards(plan2020, DateFilter{std::nullopt, Date(2020, 3, 31)}), (std::vector<std::size_t>{0}));
    EXPECT_THROW(select_shards(plan2020, DateFilter{Date(2020, 5, 1), Date(2020, 4, 1)}), ValidationError);
}

TEST(SelectShards, MatchesIntervalEnumeration) {
    std::mt19937_64 rng(8);
    const auto plan = plan_shards(random_dated_docs(rng, 100));
    const long lo = plan.windows().front().start.days() - 40, hi = plan.windows().back().end.days() + 40;
    for (int trial = 0; trial < 300; ++trial) {
        DateFilter f;
        long a = lo + static_cast<long>(rng() % (hi - lo)), b = lo + static_cast<long>(rng() % (hi - lo));
        if (a > b) std::swap(a, b);
        if (rng() % 4) f.start = Date::from_days(a);
        if (rng() % 4) f.end = Date::from_days(b);
        std::vector<std::size_t> expected;
        for (std::size_t w = 0; w < plan.size(); ++w) {
            bool any = false;
            for (long d = plan.windows()[w].start.days(); d < plan.windows()[w].end.days() && !any; ++d) {
                any = (!f.start || f.start->days() <= d) && (!f.end || d <= f.end->days());
            }
            if (any) expected.push_back(w);
        }
        EXPECT_EQ(select_shards(plan, f), expected);
    }
}

TEST(MergeShards, MaxRule) {
    const std::vector<Ranking> two = {{{"d1", 0.9}}, {{"d2", 0.8}}};
    EXPECT_EQ(merge_shard_results(two, 10), (Ranking{{"d1", 0.9}, {"d2", 0.8}}));
    const std::vector<Ranking> dup = {{{"d1", 0.7}}, {{"d1", 0.9}, {"d3", 0.1}}};
    EXPECT_EQ(merge_shard_results(dup, 10), (Ranking{{"d1", 0.9}, {"d3", 0.1}}));
    EXPECT_EQ(merge_shard_results(dup, 1), (Ranking{{"d1", 0.9}}));
}

TEST(Fuse, RawScores) {
    const std::vector<Ranking> runs = {{{"f1", -2.0}}, {{"r1", -1.5}}, {{"z1", -2.5}}};
    EXPECT_EQ(fuse_multilingual(runs, 10), (Ranking{{"r1", -1.5}, {"f1", -2.0}, {"z1", -2.5}}));
    const std::vector<Ranking> with_empty = {{{"f1", 1.0}}, {}, {{"z1", 2.0}}};
    EXPECT_EQ(fuse_multilingual(with_empty, 10), (Ranking{{"z1", 2.0}, {"f1", 1.0}}));
    const std::vector<Ranking> single = {{{"a", 3.0}, {"b", 2.0}, {"c", 2.0}}};
    EXPECT_EQ(fuse_multilingual(single, 10), single[0]);
    const std::vector<Ranking> overlap = {{{"a", 1.0}}, {{"a", 2.0}}};
    EXPECT_THROW(fuse_multilingual(overlap, 10), ValidationError);
}

TEST(Fuse, MinMaxAndOrderPreservation) {
    const std::vector<Ranking> runs = {{{"f1", 10.0}, {"f2", 0.0}}, {{"r1", 2.0}, {"r2", 1.0}, {"r3", 0.0}}};
    const auto fused = fuse_multilingual(runs, 10, FusionNormalization::MinMax);
    EXPECT_EQ(fused, (Ranking{{"f1", 1.0}, {"r1", 1.0}, {"r2", 0.5}, {"f2", 0.0}, {"r3", 0.0}}));
    EXPECT_EQ(parse_fusion_normalization("minmax"), FusionNormalization::MinMax);

    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<Ranking> langs(3);
        for (std::size_t l = 0; l < 3; ++l) {
            for (int i = 0; i < 20; ++i) langs[l].push_back({"l" + std::to_string(l) + "-" + std::to_string(i), double(rng() % 100)});
            sort_ranking(langs[l]);
        }
        for (auto norm : {FusionNormalization::Raw, FusionNormalization::MinMax}) {
            const auto out = fuse_multilingual(langs, 60, norm);
            for (std::size_t l = 0; l < 3; ++l) {
                std::vector<std::string> seen;
                for (const auto& e : out) {
                    if (e.id.rfind("l" + std::to_string(l), 0) == 0) seen.push_back(e.id);
                }
                std::vector<std::string> expected;
                for (const auto& e : langs[l]) expected.push_back(e.id);
                EXPECT_EQ(seen, expected);
            }
        }
    }
}

TEST(ShardedLexical, EqualsUnsharded) {
    std::mt19937_64 rng(71);
    const auto docs = random_dated_docs(rng, 300);
    std::vector<DocBag> bags = test::random_bags(rng, docs.size(), 40);
    const auto plan = plan_shards(docs);
    const auto shards = build_sharded_lexical(bags, plan);
    const auto single = InvertedIndex::build(bags);
    std::vector<std::size_t> all(shards.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    for (const auto& s : shards) EXPECT_TRUE(s.has_global_stats());
    for (int trial = 0; trial < 40; ++trial) {
        std::vector<std::string> terms;
        for (int i = 0; i < 3; ++i) terms.push_back("t" + std::to_string(rng() % 40));
        const auto query = make_query(terms);
        for (auto scorer : {LexicalScorer::Bm25, LexicalScorer::Hmm}) {
            for (bool rm3 : {false, true}) {
                EXPECT_EQ(search_sharded_lexical(shards, all, query, scorer, rm3, 50),
                          search_lexical(single, query, scorer, rm3, 50));
            }
        }
    }
}
