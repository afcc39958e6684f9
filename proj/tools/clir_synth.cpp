// Deterministic synthetic tri-lingual collection for end-to-end runs.
//
// Writes, for each of fas/rus/zho: a document collection, a translation table
// into English, passage embeddings, teacher scores and an experiment config;
// plus shared English topics, qrels, query embeddings and training queries.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <numbers>
#include <random>
#include <set>

#include <CLI11.hpp>
#include <json.hpp>

#include "clir/corpus.hpp"
#include "clir/date.hpp"
#include "clir/dense.hpp"
#include "clir/error.hpp"
#include "clir/text_format.hpp"
#include "clir/tokenizer.hpp"

namespace fs = std::filesystem;

namespace {

struct Options {
    fs::path out;
    std::uint64_t seed = 2024;
    std::size_t docs = 500;
    std::size_t topics = 10;
    std::uint32_t dim = 32;
    std::size_t train_queries = 20;
};

// Distribution code is written out here so the corpus does not depend on the
// standard library's distribution implementations.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t below(std::uint64_t bound) {
        const std::uint64_t max = std::numeric_limits<std::uint64_t>::max();
        const std::uint64_t limit = max - max % bound;
        std::uint64_t x = engine_();
        while (x >= limit) x = engine_();
        return x % bound;
    }
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
    bool chance(double p) { return uniform() < p; }
    double gaussian() {
        const double u1 = 1.0 - uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }
    template <typename T>
    const T& pick(const std::vector<T>& v) { return v[below(v.size())]; }

  private:
    std::mt19937_64 engine_;
};

using Vec = std::vector<double>;

Vec random_unit(Rng& rng, std::uint32_t dim) {
    Vec v(dim);
    double norm = 0.0;
    for (auto& x : v) {
        x = rng.gaussian();
        norm += x * x;
    }
    norm = std::sqrt(norm);
    for (auto& x : v) x /= norm;
    return v;
}

void append_unit(const Vec& v, std::vector<float>& out) {
    double norm = 0.0;
    for (double x : v) norm += x * x;
    norm = std::sqrt(norm);
    for (double x : v) out.push_back(static_cast<float>(x / norm));
}

std::string utf8(char32_t cp) {
    std::string s;
    if (cp < 0x80) {
        s += static_cast<char>(cp);
    } else if (cp < 0x800) {
        s += static_cast<char>(0xC0 | (cp >> 6));
        s += static_cast<char>(0x80 | (cp & 0x3F));
    } else {
        s += static_cast<char>(0xE0 | (cp >> 12));
        s += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
        s += static_cast<char>(0x80 | (cp & 0x3F));
    }
    return s;
}

struct Script {
    std::vector<char32_t> letters;
    std::size_t min_len;
    std::size_t max_len;
};

Script script_for(const std::string& lang) {
    Script s;
    if (lang == "eng") {
        for (char32_t c = U'a'; c <= U'z'; ++c) s.letters.push_back(c);
        s.min_len = 4, s.max_len = 8;
    } else if (lang == "fas") {
        for (char32_t c = 0x0628; c <= 0x063A; ++c) s.letters.push_back(c);
        for (char32_t c = 0x0641; c <= 0x064A; ++c) s.letters.push_back(c);
        s.min_len = 3, s.max_len = 6;
    } else if (lang == "rus") {
        for (char32_t c = 0x0430; c <= 0x044F; ++c) s.letters.push_back(c);
        s.min_len = 4, s.max_len = 8;
    } else {
        for (char32_t c = 0x4E00; c < 0x4E00 + 400; ++c) s.letters.push_back(c);
        s.min_len = 2, s.max_len = 3;
    }
    return s;
}

class WordMaker {
  public:
    WordMaker(Script script, Rng& rng) : script_(std::move(script)), rng_(rng) {}

    std::string make() {
        for (;;) {
            const std::size_t len = script_.min_len + rng_.below(script_.max_len - script_.min_len + 1);
            std::string w;
            for (std::size_t i = 0; i < len; ++i) w += utf8(rng_.pick(script_.letters));
            if (used_.insert(w).second) return w;
        }
    }

  private:
    Script script_;
    Rng& rng_;
    std::set<std::string> used_;
};

// A meaning is shared across languages: concepts carry topical content, filler
// meanings are background vocabulary.
struct Lexicon {
    std::vector<std::string> english;
    std::map<std::string, std::vector<std::vector<std::string>>> foreign;  // lang -> meaning -> synonyms
};

constexpr std::size_t kConcepts = 80;
constexpr std::size_t kFiller = 300;
const std::vector<std::string> kLanguages = {"fas", "rus", "zho"};

struct TopicSpec {
    std::string id;
    std::vector<std::size_t> concepts;
    std::optional<clir::Date> start;
    std::optional<clir::Date> end;
};

struct SynthDoc {
    clir::Document doc;
    std::vector<std::size_t> meanings;  // one per token, aligned with document_tokens
    std::optional<std::size_t> topic;
    double intensity = 0.0;
};

void write_lines(const fs::path& path, const std::vector<std::string>& lines) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw clir::Error("cannot write " + path.string());
    for (const auto& l : lines) out << l << '\n';
}

std::string fixed(double v, int digits) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

void generate(const Options& opt) {
    if (opt.topics * 3 > kConcepts) throw clir::ValidationError("too many topics");
    if (opt.dim < 4) throw clir::ValidationError("dim must be >= 4");
    Rng rng(opt.seed);
    const clir::DefaultTokenizer tokenizer;
    fs::create_directories(opt.out);

    const std::size_t meanings = kConcepts + kFiller;
    std::vector<Vec> meaning_vecs;
    for (std::size_t m = 0; m < meanings; ++m) meaning_vecs.push_back(random_unit(rng, opt.dim));

    Lexicon lex;
    {
        WordMaker eng(script_for("eng"), rng);
        for (std::size_t m = 0; m < meanings; ++m) lex.english.push_back(eng.make());
        for (const auto& lang : kLanguages) {
            WordMaker maker(script_for(lang), rng);
            auto& table = lex.foreign[lang];
            for (std::size_t m = 0; m < meanings; ++m) {
                const std::size_t n = m < kConcepts ? 1 + rng.below(3) : 1;
                table.emplace_back();
                for (std::size_t i = 0; i < n; ++i) table.back().push_back(maker.make());
            }
        }
    }
    std::map<std::string, std::size_t> meaning_of;
    std::map<std::string, Vec> word_offsets;
    auto register_word = [&](const std::string& w, std::size_t m) {
        meaning_of[w] = m;
        word_offsets[w] = random_unit(rng, opt.dim);
    };
    for (std::size_t m = 0; m < meanings; ++m) register_word(lex.english[m], m);
    for (const auto& lang : kLanguages) {
        for (std::size_t m = 0; m < meanings; ++m) {
            for (const auto& w : lex.foreign[lang][m]) register_word(w, m);
        }
    }

    // Token vector: meaning + word identity + occurrence noise.
    auto token_vector = [&](const std::string& word, std::vector<float>& out) {
        const auto& base = meaning_vecs[meaning_of.at(word)];
        const auto& offset = word_offsets.at(word);
        Vec v(opt.dim);
        for (std::uint32_t d = 0; d < opt.dim; ++d) {
            v[d] = base[d] + 0.3 * offset[d] + 0.6 * rng.gaussian() / std::sqrt(static_cast<double>(opt.dim));
        }
        append_unit(v, out);
    };

    // Topics: three concepts each; two carry date ranges.
    std::vector<TopicSpec> topics;
    for (std::size_t t = 0; t < opt.topics; ++t) {
        TopicSpec spec;
        spec.id = std::to_string(201 + t);
        spec.concepts = {3 * t, 3 * t + 1, 3 * t + 2};
        if (t == 2) {
            spec.start = clir::Date(2021, 4, 1);
            spec.end = clir::Date(2021, 6, 30);
        } else if (t == 6) {
            spec.start = clir::Date(2020, 7, 1);
        }
        topics.push_back(std::move(spec));
    }
    const std::size_t first_distractor = opt.topics * 3;

    std::vector<std::string> topic_lines;
    std::map<std::string, std::string> topic_title, topic_desc;
    for (const auto& spec : topics) {
        std::string title;
        for (auto c : spec.concepts) title += (title.empty() ? "" : " ") + lex.english[c];
        std::string desc = "Find";
        for (std::size_t i = 0; i < 6; ++i) {
            desc += ' ';
            desc += i % 2 == 0 ? lex.english[spec.concepts[rng.below(3)]] : lex.english[kConcepts + rng.below(kFiller)];
        }
        desc += '.';
        nlohmann::ordered_json j;
        j["topic_id"] = spec.id;
        j["title"] = title;
        j["description"] = desc;
        if (spec.start) j["start_date"] = spec.start->iso();
        if (spec.end) j["end_date"] = spec.end->iso();
        topic_lines.push_back(j.dump());
        topic_title[spec.id] = title;
        topic_desc[spec.id] = desc;
    }
    if (!meaning_of.contains("find")) register_word("find", kConcepts);
    write_lines(opt.out / "topics.jsonl", topic_lines);

    const clir::Date epoch(2020, 1, 1);
    auto in_range = [](const TopicSpec& t, const std::optional<clir::Date>& d) {
        if (!t.start && !t.end) return true;
        if (!d) return false;
        return (!t.start || *t.start <= *d) && (!t.end || *d <= *t.end);
    };

    std::vector<std::string> qrels;
    std::vector<std::pair<std::string, std::vector<float>>> train_queries;
    std::vector<std::vector<std::size_t>> train_concepts;
    for (std::size_t q = 0; q < opt.train_queries; ++q) {
        std::vector<std::size_t> cs = {rng.below(kConcepts), rng.below(kConcepts), rng.below(kConcepts)};
        std::vector<float> vecs;
        for (auto c : cs) token_vector(lex.english[c], vecs);
        char key[32];
        std::snprintf(key, sizeof key, "train-%02zu", q);
        train_queries.emplace_back(key, std::move(vecs));
        train_concepts.push_back(cs);
    }

    for (std::size_t li = 0; li < kLanguages.size(); ++li) {
        const auto& lang = kLanguages[li];
        const auto& words = lex.foreign[lang];
        const std::size_t count = opt.docs / kLanguages.size() + (li < opt.docs % kLanguages.size() ? 1 : 0);
        std::vector<SynthDoc> docs;
        for (std::size_t i = 0; i < count; ++i) {
            SynthDoc sd;
            char id[32];
            std::snprintf(id, sizeof id, "%s-%04zu", lang.c_str(), i);
            sd.doc.doc_id = id;
            sd.doc.lang = lang;
            std::vector<std::size_t> topical;
            if (rng.chance(0.35)) {
                sd.topic = rng.below(topics.size());
                sd.intensity = 0.15 + 0.25 * rng.uniform();
                topical = topics[*sd.topic].concepts;
            }
            const std::size_t distractors = 2 + rng.below(2);
            std::vector<std::size_t> side;
            for (std::size_t k = 0; k < distractors; ++k) {
                side.push_back(rng.chance(0.2) ? rng.below(first_distractor)
                                               : first_distractor + rng.below(kConcepts - first_distractor));
            }
            if (!rng.chance(0.02)) {
                long offset = static_cast<long>(rng.below(1096));
                if (sd.topic && topics[*sd.topic].start && rng.chance(0.7)) {
                    const auto& t = topics[*sd.topic];
                    const long lo = t.start->days() - epoch.days();
                    const long hi = (t.end ? t.end->days() : clir::Date(2022, 12, 31).days()) - epoch.days();
                    offset = lo + static_cast<long>(rng.below(static_cast<std::uint64_t>(hi - lo + 1)));
                }
                sd.doc.date = clir::Date::from_days(epoch.days() + offset);
            }
            auto draw = [&]() -> std::size_t {
                const double u = rng.uniform();
                if (!topical.empty() && u < sd.intensity) return rng.pick(topical);
                if (u < sd.intensity + 0.15) return rng.pick(side);
                return kConcepts + rng.below(kFiller);
            };
            auto word_for = [&](std::size_t m) { return rng.pick(words[m]); };
            if (!rng.chance(0.1)) {
                const std::size_t n = 2 + rng.below(4);
                for (std::size_t k = 0; k < n; ++k) {
                    sd.doc.title += (k ? " " : "") + word_for(draw());
                }
            }
            const std::size_t body = 30 + rng.below(221);
            for (std::size_t k = 0; k < body; ++k) {
                sd.doc.text += word_for(draw());
                sd.doc.text += (k + 1) % 12 == 0 ? ". " : " ";
            }
            for (const auto& tok : clir::document_tokens(sd.doc, tokenizer)) sd.meanings.push_back(meaning_of.at(tok));
            docs.push_back(std::move(sd));
        }

        std::vector<std::string> doc_lines;
        for (const auto& sd : docs) {
            nlohmann::ordered_json j;
            j["id"] = sd.doc.doc_id;
            if (!sd.doc.title.empty()) j["title"] = sd.doc.title;
            j["text"] = sd.doc.text;
            j["lang"] = sd.doc.lang;
            if (sd.doc.date) j["date"] = sd.doc.date->iso();
            doc_lines.push_back(j.dump());
        }
        write_lines(opt.out / ("docs-" + lang + ".jsonl"), doc_lines);

        // Qrels: on-topic docs inside the topic's date range are relevant;
        // docs sharing a topic concept are judged non-relevant.
        for (std::size_t t = 0; t < topics.size(); ++t) {
            for (const auto& sd : docs) {
                int grade = -1;
                if (sd.topic == t) {
                    grade = in_range(topics[t], sd.doc.date) ? (sd.intensity > 0.3 ? 3 : 1) : 0;
                } else {
                    for (auto m : sd.meanings) {
                        if (std::find(topics[t].concepts.begin(), topics[t].concepts.end(), m) !=
                            topics[t].concepts.end()) {
                            grade = 0;
                            break;
                        }
                    }
                }
                if (grade >= 0) qrels.push_back(topics[t].id + " 0 " + sd.doc.doc_id + " " + std::to_string(grade));
            }
        }

        // Translation table in thousandths so every row sums to at most 1.
        std::vector<std::string> table;
        for (std::size_t m = 0; m < meanings; ++m) {
            for (const auto& w : words[m]) {
                if (m >= kConcepts && rng.chance(0.05)) continue;  // out-of-vocabulary source
                std::map<std::string, int> row;
                const int main = 600 + static_cast<int>(rng.below(301));
                row[lex.english[m]] += main;
                int rest = 1000 - main;
                const std::size_t alts = 1 + rng.below(3);
                for (std::size_t a = 0; a < alts && rest > 1; ++a) {
                    const int share = a + 1 == alts ? rest - static_cast<int>(rng.below(2)) : 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(rest)));
                    if (share <= 0) continue;
                    row[lex.english[rng.below(meanings)]] += share;
                    rest -= share;
                }
                for (const auto& [target, thousandths] : row) {
                    table.push_back(w + "\t" + target + "\t" + fixed(thousandths / 1000.0, 3));
                }
            }
        }
        write_lines(opt.out / ("table-" + lang + ".tsv"), table);

        // Passage embeddings aligned with the default passage split.
        clir::EmbeddingSet passages(opt.dim);
        std::map<std::string, std::vector<float>> passage_vectors;
        for (const auto& sd : docs) {
            const auto tokens = clir::document_tokens(sd.doc, tokenizer);
            std::vector<float> all;
            for (const auto& tok : tokens) token_vector(tok, all);
            for (const auto& p : clir::split_passages(sd.doc.doc_id, tokens.size())) {
                std::span<const float> span(all.data() + p.start * opt.dim, p.size() * opt.dim);
                passages.add(p.key(), span);
                passage_vectors[p.key()].assign(span.begin(), span.end());
            }
        }
        clir::write_embeddings(opt.out / ("passages-" + lang + ".emb"), passages);

        // Teacher: exact MaxSim plus noise, for every passage.
        std::vector<std::string> teacher;
        for (const auto& [qkey, qvec] : train_queries) {
            const clir::MatrixView q{qvec.data(), qvec.size() / opt.dim, opt.dim};
            for (std::size_t i = 0; i < passages.size(); ++i) {
                const double s = clir::maxsim(q, passages.tokens(i)) + 0.05 * rng.gaussian();
                teacher.push_back(qkey + "\t" + passages.key(i) + "\t" + fixed(s, 6));
            }
        }
        write_lines(opt.out / ("teacher-" + lang + ".tsv"), teacher);

        std::vector<std::string> config = {
            "# Synthetic " + lang + " collection",
            "[collection]",
            "docs = docs-" + lang + ".jsonl",
            "topics = topics.jsonl",
            "qrels = qrels.txt",
            "languages = " + lang,
            "tokenizer = default",
            "",
            "[psq]",
            "table = table-" + lang + ".tsv",
            "cum_mass = 0.99",
            "max_alts = 64",
            "",
            "[lexical]",
            "k1 = 0.9",
            "b = 0.4",
            "lambda = 0.5",
            "",
            "[dense]",
            "bits = 2",
            "centroids = 64",
            "nprobe = 4",
            "kmeans_iters = 10",
            "",
            "[shards]",
            "window_months = 3",
            "",
            "[run]",
            "variant = TD",
            "k = 1000",
        };
        write_lines(opt.out / ("experiment-" + lang + ".ini"), config);
        std::cerr << "clir-synth lang=" << lang << " docs=" << docs.size() << " passages=" << passages.size()
                  << " tokens=" << passages.total_tokens() << '\n';
    }
    write_lines(opt.out / "qrels.txt", qrels);

    // Query embeddings for every variant, keyed "<topic>:<variant>".
    clir::EmbeddingSet queries(opt.dim);
    for (const auto& spec : topics) {
        for (auto variant : {clir::QueryVariant::Title, clir::QueryVariant::Description,
                             clir::QueryVariant::TitleDescription}) {
            clir::Topic t{spec.id, topic_title[spec.id], topic_desc[spec.id], spec.start, spec.end};
            std::vector<float> vecs;
            for (const auto& tok : tokenizer.tokenize(clir::form_query(t, variant))) token_vector(tok, vecs);
            queries.add(spec.id + ":" + std::string(clir::to_string(variant)), vecs);
        }
    }
    clir::write_embeddings(opt.out / "queries.emb", queries);

    clir::EmbeddingSet train(opt.dim);
    for (const auto& [key, vecs] : train_queries) train.add(key, vecs);
    clir::write_embeddings(opt.out / "train-queries.emb", train);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"clir-synth: generate the synthetic tri-lingual test collection"};
    Options opt;
    app.add_option("--out", opt.out, "Output directory")->required();
    app.add_option("--seed", opt.seed, "Generator seed")->capture_default_str();
    app.add_option("--docs", opt.docs, "Documents across all languages")->capture_default_str();
    app.add_option("--topics", opt.topics, "Number of topics (at most 26)")->capture_default_str();
    app.add_option("--dim", opt.dim, "Embedding dimension")->capture_default_str();
    app.add_option("--train-queries", opt.train_queries, "Training queries for distillation")->capture_default_str();
    CLI11_PARSE(app, argc, argv);
    try {
        generate(opt);
    } catch (const std::exception& e) {
        std::cerr << "clir-synth: error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
