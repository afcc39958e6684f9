#include <gtest/gtest.h>

#include <random>

#include "clir/error.hpp"
#include "clir/psq.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

using namespace clir;

namespace {

TranslationTable table_of(std::vector<TranslationTable::Row> rows) { return TranslationTable::from_rows(rows); }

struct RandomTable {
    std::vector<std::string> sources, targets;
    std::vector<std::vector<double>> probs;
    TranslationTable table;
};

RandomTable random_table(std::mt19937_64& rng) {
    RandomTable t;
    const std::size_t ns = 1 + rng() % 50, nt = 1 + rng() % 50;
    for (std::size_t i = 0; i < ns; ++i) t.sources.push_back("s" + std::to_string(i));
    for (std::size_t j = 0; j < nt; ++j) t.targets.push_back("t" + std::to_string(j));
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<TranslationTable::Row> rows;
    t.probs.assign(ns, std::vector<double>(nt, 0.0));
    for (std::size_t i = 0; i < ns; ++i) {
        if (u(rng) < 0.1) continue;  // source with no row
        std::vector<double> w(nt);
        double total = 0;
        for (auto& x : w) {
            x = u(rng) < 0.3 ? u(rng) : 0.0;
            total += x;
        }
        if (total == 0) continue;
        const double mass = u(rng) < 0.5 ? 1.0 : 0.5 + 0.5 * u(rng);
        for (std::size_t j = 0; j < nt; ++j) {
            if (w[j] == 0) continue;
            t.probs[i][j] = w[j] / total * mass;
            rows.push_back({t.sources[i], t.targets[j], t.probs[i][j]});
        }
    }
    t.table = TranslationTable::from_rows(rows);
    return t;
}

TokenCounts random_counts(std::mt19937_64& rng, const std::vector<std::string>& sources) {
    TokenCounts c;
    for (const auto& s : sources) {
        if (rng() % 3 == 0) c[s] = static_cast<double>(1 + rng() % 9);
    }
    c["oov"] = 4;
    return c;
}

}  // namespace

TEST(LoadTable, Examples) {
    test::TempDir dir;
    test::write_file(dir / "a.tsv", "a\tx\t0.6\na\ty\t0.4\nb\tx\t1.0\n");
    const auto t = load_table(dir / "a.tsv");
    ASSERT_NE(t.find("a"), nullptr);
    EXPECT_EQ(*t.find("a"), (std::vector<Translation>{{"x", 0.6}, {"y", 0.4}}));
    EXPECT_EQ(*t.find("b"), (std::vector<Translation>{{"x", 1.0}}));

    test::write_file(dir / "heavy.tsv", "a\tx\t0.8\na\ty\t0.4\n");
    EXPECT_THROW(load_table(dir / "heavy.tsv"), ValidationError);
    test::write_file(dir / "zero.tsv", "a\tx\t0\n");
    EXPECT_THROW(load_table(dir / "zero.tsv"), ParseError);
    test::write_file(dir / "big.tsv", "a\tx\t1.5\n");
    EXPECT_THROW(load_table(dir / "big.tsv"), ParseError);
    test::write_file(dir / "short.tsv", "a\tx\n");
    EXPECT_THROW(load_table(dir / "short.tsv"), ParseError);
}

TEST(LoadTable, SortsTargetsAndRoundTrips) {
    test::TempDir dir;
    test::write_file(dir / "t.tsv", "a\ty\t0.2\na\tx\t0.5\na\tz\t0.2\n");
    const auto t = load_table(dir / "t.tsv");
    EXPECT_EQ(*t.find("a"), (std::vector<Translation>{{"x", 0.5}, {"y", 0.2}, {"z", 0.2}}));
    write_table(dir / "out.tsv", t);
    EXPECT_EQ(load_table(dir / "out.tsv"), t);
}

TEST(PruneTable, Examples) {
    const auto t = table_of({{"a", "x", 0.5}, {"a", "y", 0.3}, {"a", "z", 0.2}});
    const auto top2 = prune_table(t, 1.0, 2);
    EXPECT_NEAR(top2.find("a")->at(0).prob, 0.625, 1e-12);
    EXPECT_NEAR(top2.find("a")->at(1).prob, 0.375, 1e-12);
    EXPECT_EQ(top2.find("a")->size(), 2u);

    const auto half = prune_table(t, 0.5, 64);
    EXPECT_EQ(*half.find("a"), (std::vector<Translation>{{"x", 1.0}}));

    const auto single = table_of({{"b", "x", 1.0}, {"c", "y", 1.0}});
    EXPECT_EQ(prune_table(single), single);
    EXPECT_THROW(prune_table(t, 0.0, 2), ValidationError);
    EXPECT_THROW(prune_table(t, 0.5, 0), ValidationError);
}

TEST(PruneTable, PreservesOrderAndRenormalizes) {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 200; ++trial) {
        const auto rt = random_table(rng);
        const double cum = 0.05 + 0.95 * std::uniform_real_distribution<double>(0, 1)(rng);
        const std::size_t alts = 1 + rng() % 8;
        const auto pruned = prune_table(rt.table, cum, alts);
        EXPECT_EQ(pruned.size(), rt.table.size());
        for (const auto& [source, kept] : pruned.rows()) {
            const auto& orig = *rt.table.find(source);
            ASSERT_LE(kept.size(), alts);
            double total = 0, orig_mass = 0;
            for (std::size_t i = 0; i < kept.size(); ++i) {
                EXPECT_EQ(kept[i].target, orig[i].target);  // top-mass prefix
                total += kept[i].prob;
                orig_mass += orig[i].prob;
            }
            EXPECT_NEAR(total, 1.0, 1e-9);
            for (std::size_t i = 0; i < kept.size(); ++i) EXPECT_NEAR(kept[i].prob, orig[i].prob / orig_mass, 1e-12);
            if (kept.size() < orig.size() && kept.size() < alts) {
                double before_last = orig_mass - orig[kept.size() - 1].prob;
                EXPECT_LT(before_last, cum);
                EXPECT_GE(orig_mass, cum);
            }
        }
    }
}

TEST(TranslateDoc, Examples) {
    const std::vector<std::string> vocab = {"a"};
    EXPECT_EQ(translate_doc({{"a", 3}}, TranslationTable::identity(vocab)), (WeightedBag{{"a", 3.0}}));

    const auto t = table_of({{"a", "x", 0.6}, {"a", "y", 0.4}, {"b", "x", 1.0}});
    const auto bag = translate_doc({{"a", 2}, {"b", 1}}, t);
    ASSERT_EQ(bag.size(), 2u);
    EXPECT_NEAR(bag.at("x"), 2.2, 1e-12);
    EXPECT_NEAR(bag.at("y"), 0.8, 1e-12);
    EXPECT_TRUE(translate_doc({{"q", 5}}, t).empty());
}

TEST(TranslateDoc, MatchesMatrixOracle) {
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 200; ++trial) {
        const auto rt = random_table(rng);
        const auto counts = random_counts(rng, rt.sources);
        const auto bag = translate_doc(counts, rt.table);
        const auto expected = oracle::translate(counts, rt.sources, rt.targets, rt.probs);
        ASSERT_EQ(bag.size(), expected.size());
        for (const auto& [term, w] : expected) {
            ASSERT_TRUE(bag.count(term));
            EXPECT_NEAR(bag.at(term), w, 1e-9);
            EXPECT_GT(bag.at(term), 0.0);
        }
    }
}

TEST(TranslateDoc, MassConservationAndLinearity) {
    std::mt19937_64 rng(23);
    for (int trial = 0; trial < 100; ++trial) {
        const auto rt = random_table(rng);
        const auto c1 = random_counts(rng, rt.sources);
        const auto c2 = random_counts(rng, rt.sources);
        TokenCounts sum = c1;
        for (const auto& [s, c] : c2) sum[s] += c;

        double expected_mass = 0;
        for (const auto& [s, c] : sum) {
            if (const auto* row = rt.table.find(s)) {
                for (const auto& t : *row) expected_mass += c * t.prob;
            }
        }
        const auto combined = translate_doc(sum, rt.table);
        double mass = 0;
        for (const auto& [t, w] : combined) mass += w;
        EXPECT_NEAR(mass, expected_mass, 1e-9);

        auto b1 = translate_doc(c1, rt.table);
        for (const auto& [t, w] : translate_doc(c2, rt.table)) b1[t] += w;
        ASSERT_EQ(b1.size(), combined.size());
        for (const auto& [t, w] : combined) EXPECT_NEAR(b1.at(t), w, 1e-9);
    }
}

TEST(CountTokens, CountsMultiplicity) {
    const std::vector<std::string> toks = {"a", "b", "a"};
    EXPECT_EQ(count_tokens(toks), (TokenCounts{{"a", 2.0}, {"b", 1.0}}));
}
