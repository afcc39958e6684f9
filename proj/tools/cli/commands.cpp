#include "commands.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "clir/corpus.hpp"
#include "clir/dense.hpp"
#include "clir/distill.hpp"
#include "clir/error.hpp"
#include "clir/eval.hpp"
#include "clir/lexical.hpp"
#include "clir/parallel.hpp"
#include "clir/psq.hpp"
#include "clir/shards.hpp"
#include "clir/text_format.hpp"

namespace clir::cli {
namespace {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

constexpr const char* kShardedFormat = "clir-sharded-index";

// One machine-parseable line per event on stderr: "clir cmd=... event=... key=value ...".
class Logger {
  public:
    explicit Logger(std::string command) : command_(std::move(command)) {}

    template <typename... Fields>
    void event(std::string_view name, const Fields&... fields) const {
        std::ostringstream line;
        line << "clir cmd=" << command_ << " event=" << name;
        (append(line, fields), ...);
        std::cerr << line.str() << '\n';
    }

  private:
    template <typename T>
    static void append(std::ostringstream& out, const std::pair<std::string_view, T>& field) {
        out << ' ' << field.first << '=' << field.second;
    }
    std::string command_;
};

template <typename T>
std::pair<std::string_view, T> kv(std::string_view key, T value) {
    return {key, std::move(value)};
}

double ms_since(Clock::time_point start) {
    return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

std::string ms_text(double ms) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f", ms);
    return buf;
}

// Resolved config shared by every command.
struct Context {
    ExperimentConfig config;
    std::uint64_t seed = 42;
    unsigned threads = 1;
};

Context make_context(const CommonOptions& common) {
    Context ctx;
    if (common.config_path) {
        ctx.config = ExperimentConfig::load(*common.config_path);
        ctx.config.require_paths_exist();
    }
    ctx.seed = common.seed ? *common.seed : static_cast<std::uint64_t>(ctx.config.get_int("run", "seed").value_or(42));
    const long long threads = common.threads ? *common.threads : ctx.config.get_int("run", "threads").value_or(1);
    if (threads < 1) throw ValidationError("threads must be >= 1");
    ctx.threads = static_cast<unsigned>(threads);
    return ctx;
}

fs::path require_input(const std::optional<fs::path>& flag, const Context& ctx, std::string_view section,
                       std::string_view key, std::string_view flag_name) {
    std::optional<fs::path> path = flag ? flag : ctx.config.get_path(section, key);
    if (!path) throw ValidationError("missing --" + std::string(flag_name) + " (or " + std::string(section) + "." +
                                     std::string(key) + " in the config)");
    if (!fs::exists(*path)) throw Error("input not found: " + path->string());
    return *path;
}

void require_existing(const fs::path& path) {
    if (!fs::exists(path)) throw Error("input not found: " + path.string());
}

template <typename T>
T pick(const std::optional<T>& flag, std::optional<T> configured, T fallback) {
    if (flag) return *flag;
    if (configured) return *configured;
    return fallback;
}

template <typename T>
std::optional<T> config_int(const Context& ctx, std::string_view section, std::string_view key) {
    auto v = ctx.config.get_int(section, key);
    if (!v) return std::nullopt;
    if (*v < 0) throw ValidationError(std::string(section) + "." + std::string(key) + " must be non-negative");
    return static_cast<T>(*v);
}

std::unique_ptr<Tokenizer> resolve_tokenizer(const std::optional<std::string>& flag, const Context& ctx) {
    return make_tokenizer(pick(flag, ctx.config.get("collection", "tokenizer"), std::string("default")));
}

std::set<std::string> configured_languages(const Context& ctx) {
    std::set<std::string> langs;
    if (auto list = ctx.config.get("collection", "languages")) {
        for (auto part : split_fields(*list, ',')) {
            std::string lang(part);
            std::erase(lang, ' ');
            if (!lang.empty()) langs.insert(lang);
        }
    }
    return langs;
}

void prepare_output_file(const fs::path& path) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
}

void prepare_output_dir(const fs::path& dir) {
    if (fs::exists(dir) && !fs::is_directory(dir)) throw Error(dir.string() + " exists and is not a directory");
    fs::create_directories(dir);
}

std::string shard_dir_name(std::size_t ordinal) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "shard-%03zu", ordinal);
    return buf;
}

nlohmann::json read_json(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw FormatError("missing " + path.string());
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
}

void write_sharded_layout(const fs::path& dir, std::string_view kind, const ShardPlan& plan,
                          const std::vector<std::size_t>& sizes, const std::vector<bool>& present) {
    nlohmann::ordered_json layout;
    layout["format"] = kShardedFormat;
    layout["version"] = 1;
    layout["kind"] = kind;
    auto& shards = layout["shards"] = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < plan.size(); ++i) {
        nlohmann::ordered_json s;
        s["ordinal"] = i;
        s["start"] = plan.windows()[i].start.iso();
        s["end"] = plan.windows()[i].end.iso();
        s["dir"] = present[i] ? nlohmann::ordered_json(shard_dir_name(i)) : nlohmann::ordered_json(nullptr);
        s["size"] = sizes[i];
        shards.push_back(std::move(s));
    }
    std::ofstream out(dir / "layout.json", std::ios::binary);
    out << layout.dump(2) << '\n';
    plan.save(dir / "plan.json");
}

// Index directory as found on disk: a single index or one per date shard.
struct IndexLayout {
    std::string kind;  // "lexical" or "dense"
    bool sharded = false;
    std::optional<ShardPlan> plan;
    std::vector<std::optional<fs::path>> shard_dirs;
};

IndexLayout inspect_index(const fs::path& dir) {
    IndexLayout layout;
    if (fs::exists(dir / "layout.json")) {
        const auto j = read_json(dir / "layout.json");
        if (j.value("format", "") != kShardedFormat || j.value("version", 0) != 1) {
            throw FormatError(dir.string() + ": unsupported sharded layout");
        }
        layout.kind = j.value("kind", "");
        layout.sharded = true;
        layout.plan = ShardPlan::load(dir / "plan.json");
        for (const auto& s : j.at("shards")) {
            if (s.at("dir").is_null()) {
                layout.shard_dirs.emplace_back();
            } else {
                layout.shard_dirs.emplace_back(dir / s.at("dir").get<std::string>());
            }
        }
        if (layout.shard_dirs.size() != layout.plan->size()) throw FormatError(dir.string() + ": layout/plan mismatch");
    } else {
        const auto meta = read_json(dir / "meta.json");
        const auto format = meta.value("format", "");
        if (format == "clir-lexical-index") {
            layout.kind = "lexical";
        } else if (format == "clir-dense-index") {
            layout.kind = "dense";
        } else {
            throw FormatError(dir.string() + " is not an index directory");
        }
        layout.shard_dirs.emplace_back(dir);
    }
    if (layout.kind != "lexical" && layout.kind != "dense") throw FormatError(dir.string() + ": unknown index kind");
    return layout;
}

std::vector<DocBag> read_bags(const fs::path& path) {
    std::vector<DocBag> bags;
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path.string());
    std::string line;
    std::size_t line_no = 0;
    std::set<std::string> seen;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            const auto j = nlohmann::json::parse(line);
            DocBag bag;
            bag.doc_id = j.at("id").get<std::string>();
            for (const auto& [term, weight] : j.at("bag").items()) {
                const double w = weight.get<double>();
                if (!(w >= 0.0)) throw ParseError(path.string(), line_no, "negative weight for '" + term + "'");
                if (w > 0.0) bag.bag[term] = w;
            }
            if (!seen.insert(bag.doc_id).second) {
                throw ValidationError(path.string() + ":" + std::to_string(line_no) + ": duplicate document id '" +
                                      bag.doc_id + "'");
            }
            bags.push_back(std::move(bag));
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(path.string(), line_no, e.what());
        }
    }
    return bags;
}

std::string json_string(const std::string& s) { return nlohmann::json(s).dump(); }

std::vector<DocBag> bags_from_docs(const std::vector<Document>& docs, const Tokenizer& tokenizer, unsigned threads) {
    std::vector<DocBag> bags(docs.size());
    parallel_for(docs.size(), threads, [&](std::size_t i) {
        const auto tokens = document_tokens(docs[i], tokenizer);
        bags[i] = {docs[i].doc_id, count_tokens(tokens)};
    });
    return bags;
}

MatrixView query_vectors(const EmbeddingSet& queries, const std::string& topic_id, QueryVariant variant) {
    const std::string with_variant = topic_id + ":" + std::string(to_string(variant));
    if (auto i = queries.find(with_variant)) return queries.tokens(*i);
    if (auto i = queries.find(topic_id)) return queries.tokens(*i);
    throw ValidationError("no query embedding for topic " + topic_id + " (looked for '" + with_variant + "' and '" +
                          topic_id + "')");
}

}  // namespace

void run_shard_plan(const CommonOptions& common, const ShardPlanOptions& options) {
    const Logger log("shard-plan");
    const auto ctx = make_context(common);
    const auto docs_path = require_input(options.docs, ctx, "collection", "docs", "docs");
    const int months = pick(options.window_months, config_int<int>(ctx, "shards", "window_months"), kDefaultWindowMonths);
    const auto docs = ingest_collection(docs_path, configured_languages(ctx));
    const auto plan = plan_shards(docs, months);
    prepare_output_file(options.out);
    plan.save(options.out);
    log.event("done", kv("docs", docs.size()), kv("shards", plan.size()), kv("out", options.out.string()));
}

void run_psq_translate(const CommonOptions& common, const PsqTranslateOptions& options) {
    const Logger log("psq-translate");
    const auto ctx = make_context(common);
    const auto docs_path = require_input(options.docs, ctx, "collection", "docs", "docs");
    const auto table_path = require_input(options.table, ctx, "psq", "table", "table");
    const double cum_mass = pick(options.cum_mass, ctx.config.get_double("psq", "cum_mass"), kDefaultPruneMass);
    const std::size_t max_alts =
        pick(options.max_alts, config_int<std::size_t>(ctx, "psq", "max_alts"), kDefaultPruneAlternatives);
    const auto tokenizer = resolve_tokenizer(options.tokenizer, ctx);

    auto start = Clock::now();
    const auto docs = ingest_collection(docs_path, configured_languages(ctx));
    const auto table = prune_table(load_table(table_path), cum_mass, max_alts);
    log.event("loaded", kv("docs", docs.size()), kv("sources", table.size()), kv("ms", ms_text(ms_since(start))));

    start = Clock::now();
    std::vector<std::string> lines(docs.size());
    parallel_for(docs.size(), ctx.threads, [&](std::size_t i) {
        const auto& doc = docs[i];
        const auto bag = translate_doc(count_tokens(document_tokens(doc, *tokenizer)), table);
        std::string line = "{\"id\":" + json_string(doc.doc_id) + ",\"lang\":" + json_string(doc.lang);
        if (doc.date) line += ",\"date\":\"" + doc.date->iso() + "\"";
        line += ",\"bag\":{";
        bool first = true;
        for (const auto& [term, weight] : bag) {
            const float w = static_cast<float>(weight);
            if (!(w > 0.0F)) continue;
            if (!first) line += ',';
            first = false;
            line += json_string(term) + ":" + format_float(w);
        }
        line += "}}";
        lines[i] = std::move(line);
    });
    prepare_output_file(options.out);
    std::ofstream out(options.out, std::ios::binary);
    if (!out) throw Error("cannot write " + options.out.string());
    for (const auto& line : lines) out << line << '\n';
    if (!out) throw Error("write failed for " + options.out.string());
    log.event("done", kv("docs", docs.size()), kv("ms", ms_text(ms_since(start))), kv("out", options.out.string()));
}

void run_index_lexical(const CommonOptions& common, const IndexLexicalOptions& options) {
    const Logger log("index-lexical");
    const auto ctx = make_context(common);
    if (options.docs && options.bags) throw ValidationError("give either --docs or --bags, not both");

    auto start = Clock::now();
    std::vector<DocBag> bags;
    if (options.bags) {
        require_existing(*options.bags);
        if (options.shard_plan) require_existing(*options.shard_plan);
        bags = read_bags(*options.bags);
    } else {
        const auto docs_path = require_input(options.docs, ctx, "collection", "docs", "docs");
        if (options.shard_plan) require_existing(*options.shard_plan);
        const auto tokenizer = resolve_tokenizer(options.tokenizer, ctx);
        bags = bags_from_docs(ingest_collection(docs_path, configured_languages(ctx)), *tokenizer, ctx.threads);
    }
    std::optional<ShardPlan> plan;
    if (options.shard_plan) {
        plan = ShardPlan::load(*options.shard_plan);
        for (const auto& bag : bags) plan->shard_of(bag.doc_id);
    }
    log.event("loaded", kv("docs", bags.size()), kv("ms", ms_text(ms_since(start))));

    start = Clock::now();
    if (!plan) {
        const auto index = InvertedIndex::build(bags);
        prepare_output_dir(options.out);
        index.save(options.out);
        log.event("index_build", kv("docs", index.num_docs()), kv("terms", index.num_terms()),
                  kv("ms", ms_text(ms_since(start))));
        return;
    }
    const auto shards = build_sharded_lexical(bags, *plan);
    prepare_output_dir(options.out);
    std::vector<std::size_t> sizes;
    std::vector<bool> present;
    for (std::size_t i = 0; i < shards.size(); ++i) {
        shards[i].save(options.out / shard_dir_name(i));
        sizes.push_back(shards[i].num_docs());
        present.push_back(true);
    }
    write_sharded_layout(options.out, "lexical", *plan, sizes, present);
    log.event("index_build", kv("docs", bags.size()), kv("shards", shards.size()), kv("ms", ms_text(ms_since(start))));
}

void run_index_dense(const CommonOptions& common, const IndexDenseOptions& options) {
    const Logger log("index-dense");
    const auto ctx = make_context(common);
    require_existing(options.embeddings);
    if (options.shard_plan) require_existing(*options.shard_plan);

    DenseIndexParams params;
    params.bits = pick(options.bits, config_int<std::uint32_t>(ctx, "dense", "bits"), params.bits);
    params.num_centroids = pick(options.centroids, config_int<std::uint32_t>(ctx, "dense", "centroids"), 0u);
    params.kmeans_iters = pick(options.kmeans_iters, config_int<std::uint32_t>(ctx, "dense", "kmeans_iters"),
                               params.kmeans_iters);
    params.seed = ctx.seed;
    params.threads = ctx.threads;

    auto start = Clock::now();
    const auto set = load_embeddings(options.embeddings);
    std::optional<ShardPlan> plan;
    if (options.shard_plan) plan = ShardPlan::load(*options.shard_plan);
    std::vector<std::vector<std::size_t>> members(plan ? plan->size() : 1);
    for (std::size_t i = 0; i < set.size(); ++i) {
        const auto doc = parse_passage_key(set.key(i)).first;
        members[plan ? plan->shard_of(doc) : 0].push_back(i);
    }
    log.event("loaded", kv("passages", set.size()), kv("tokens", set.total_tokens()), kv("dim", set.dim()),
              kv("ms", ms_text(ms_since(start))));

    if (!plan) {
        start = Clock::now();
        const auto index = DenseIndex::build(set, params);
        prepare_output_dir(options.out);
        index.save(options.out);
        log.event("index_build", kv("passages", index.size()), kv("centroids", index.codebook().num_centroids()),
                  kv("ms", ms_text(ms_since(start))));
        return;
    }

    // Each shard trains its own codebook, so scores are not comparable across shards.
    std::vector<DenseIndex> shards(plan->size());
    std::vector<std::size_t> sizes(plan->size(), 0);
    std::vector<bool> present(plan->size(), false);
    for (std::size_t s = 0; s < plan->size(); ++s) {
        if (members[s].empty()) continue;
        start = Clock::now();
        EmbeddingSet subset(set.dim());
        for (auto i : members[s]) {
            const auto m = set.tokens(i);
            subset.add(set.key(i), {m.data, m.rows * m.cols});
        }
        shards[s] = DenseIndex::build(subset, params);
        sizes[s] = subset.size();
        present[s] = true;
        log.event("index_build", kv("shard", s), kv("passages", subset.size()),
                  kv("centroids", shards[s].codebook().num_centroids()), kv("ms", ms_text(ms_since(start))));
    }
    prepare_output_dir(options.out);
    for (std::size_t s = 0; s < shards.size(); ++s) {
        if (present[s]) shards[s].save(options.out / shard_dir_name(s));
    }
    write_sharded_layout(options.out, "dense", *plan, sizes, present);
}

void run_search(const CommonOptions& common, const SearchOptions& options) {
    const Logger log("search");
    const auto ctx = make_context(common);
    require_existing(options.index);
    const auto topics_path = require_input(options.topics, ctx, "collection", "topics", "topics");
    const auto layout = inspect_index(options.index);

    const auto variant = parse_query_variant(pick(options.variant, ctx.config.get("run", "variant"), std::string("TD")));
    const std::size_t k = pick(options.k, config_int<std::size_t>(ctx, "run", "k"), kDefaultRecallDepth);
    if (k < 1) throw ValidationError("k must be >= 1");
    const bool use_dates = pick(options.use_dates, ctx.config.get_bool("shards", "use_dates"), false);
    if (use_dates && !layout.sharded) throw ValidationError("--use-dates needs a date-sharded index");
    const std::string scorer_name =
        pick(options.scorer, ctx.config.get("lexical", "scorer"), std::string(layout.kind == "dense" ? "dense" : "bm25"));
    const bool dense = scorer_name == "dense";
    if (dense != (layout.kind == "dense")) {
        throw ValidationError("scorer '" + scorer_name + "' does not match the " + layout.kind + " index");
    }

    LexicalParams lex;
    lex.k1 = pick(options.k1, ctx.config.get_double("lexical", "k1"), lex.k1);
    lex.b = pick(options.b, ctx.config.get_double("lexical", "b"), lex.b);
    lex.lambda = pick(options.lambda, ctx.config.get_double("lexical", "lambda"), lex.lambda);
    lex.rm3_alpha = pick(options.rm3_alpha, ctx.config.get_double("lexical", "rm3_alpha"), lex.rm3_alpha);
    lex.rm3_fb_docs = pick(options.rm3_fb_docs, config_int<std::size_t>(ctx, "lexical", "rm3_fb_docs"), lex.rm3_fb_docs);
    lex.rm3_fb_terms =
        pick(options.rm3_fb_terms, config_int<std::size_t>(ctx, "lexical", "rm3_fb_terms"), lex.rm3_fb_terms);
    lex.validate();
    const bool rm3 = pick(options.rm3, ctx.config.get_bool("lexical", "rm3"), false);
    if (rm3 && dense) throw ValidationError("--rm3 applies to lexical scorers only");

    DenseIndexParams dparams;
    dparams.nprobe = pick(options.nprobe, config_int<std::uint32_t>(ctx, "dense", "nprobe"), dparams.nprobe);
    dparams.candidate_cap =
        pick(options.candidate_cap, config_int<std::size_t>(ctx, "dense", "candidate_cap"), dparams.candidate_cap);
    dparams.seed = ctx.seed;
    dparams.threads = 1;

    const std::string tag = pick(options.tag, ctx.config.get("run", "tag"),
                                 "clir-" + scorer_name + (rm3 ? "-rm3" : "") + "-" + std::string(to_string(variant)));
    if (tag.find_first_of(" \t") != std::string::npos) throw ValidationError("run tag must not contain whitespace");

    auto start = Clock::now();
    const auto topics = read_topics(topics_path);
    std::optional<EmbeddingSet> queries;
    std::vector<std::optional<InvertedIndex>> lexical_shards;
    std::vector<std::optional<DenseIndex>> dense_shards;
    std::unique_ptr<Tokenizer> tokenizer;
    if (dense) {
        if (!options.query_embeddings) throw ValidationError("dense search needs --query-embeddings");
        const fs::path qpath = *options.query_embeddings;
        require_existing(qpath);
        queries = load_embeddings(qpath);
        for (const auto& t : topics) query_vectors(*queries, t.topic_id, variant);
        for (const auto& dir : layout.shard_dirs) {
            dense_shards.push_back(dir ? std::optional<DenseIndex>(DenseIndex::load(*dir)) : std::nullopt);
        }
    } else {
        parse_lexical_scorer(scorer_name);
        tokenizer = resolve_tokenizer(options.tokenizer, ctx);
        for (const auto& dir : layout.shard_dirs) {
            lexical_shards.push_back(dir ? std::optional<InvertedIndex>(InvertedIndex::load(*dir)) : std::nullopt);
        }
    }
    log.event("loaded", kv("topics", topics.size()), kv("shards", layout.shard_dirs.size()),
              kv("ms", ms_text(ms_since(start))));

    auto shards_for = [&](const Topic& topic) {
        std::vector<std::size_t> selected;
        if (layout.sharded && use_dates) {
            selected = select_shards(*layout.plan, DateFilter::from_topic(topic));
        } else {
            for (std::size_t i = 0; i < layout.shard_dirs.size(); ++i) selected.push_back(i);
        }
        std::erase_if(selected, [&](std::size_t s) { return !layout.shard_dirs[s]; });
        return selected;
    };

    std::vector<Ranking> results(topics.size());
    std::vector<std::string> notes(topics.size());
    start = Clock::now();
    if (dense) {
        parallel_for(topics.size(), ctx.threads, [&](std::size_t t) {
            const auto& topic = topics[t];
            const auto q = query_vectors(*queries, topic.topic_id, variant);
            std::vector<Ranking> per_shard;
            DenseSearchStats total;
            for (auto s : shards_for(topic)) {
                DenseIndexParams p = dparams;
                p.nprobe = std::min(p.nprobe, dense_shards[s]->codebook().num_centroids());
                DenseSearchStats stats;
                per_shard.push_back(passages_to_documents(search_dense(*dense_shards[s], q, p, &stats)));
                total.stage1_candidates += stats.stage1_candidates;
                total.stage2_candidates += stats.stage2_candidates;
                total.stage1_ms += stats.stage1_ms;
                total.stage2_ms += stats.stage2_ms;
                total.stage3_ms += stats.stage3_ms;
            }
            results[t] = merge_shard_results(per_shard, k);
            std::ostringstream note;
            note << "shards=" << per_shard.size() << " stage1_candidates=" << total.stage1_candidates
                 << " stage2_candidates=" << total.stage2_candidates << " stage1_ms=" << ms_text(total.stage1_ms)
                 << " stage2_ms=" << ms_text(total.stage2_ms) << " stage3_ms=" << ms_text(total.stage3_ms);
            notes[t] = note.str();
        });
    } else {
        const auto scorer = parse_lexical_scorer(scorer_name);
        std::vector<InvertedIndex> loaded;
        std::vector<std::size_t> remap(lexical_shards.size(), 0);
        for (std::size_t s = 0; s < lexical_shards.size(); ++s) {
            remap[s] = loaded.size();
            if (lexical_shards[s]) loaded.push_back(std::move(*lexical_shards[s]));
        }
        parallel_for(topics.size(), ctx.threads, [&](std::size_t t) {
            const auto& topic = topics[t];
            const auto terms = tokenizer->tokenize(form_query(topic, variant));
            if (terms.empty()) {
                notes[t] = "skipped=empty_query";
                return;
            }
            std::vector<std::size_t> selected;
            for (auto s : shards_for(topic)) selected.push_back(remap[s]);
            const auto query = make_query(terms);
            if (!layout.sharded) {
                results[t] = search_lexical(loaded.front(), query, scorer, rm3, k, lex);
            } else {
                results[t] = search_sharded_lexical(loaded, selected, query, scorer, rm3, k, lex);
            }
            notes[t] = "shards=" + std::to_string(selected.size()) + " terms=" + std::to_string(query.size());
        });
    }
    const double search_ms = ms_since(start);

    std::vector<RunEntry> entries;
    for (std::size_t t = 0; t < topics.size(); ++t) {
        auto topic_entries = to_run_entries(topics[t].topic_id, results[t], tag);
        entries.insert(entries.end(), topic_entries.begin(), topic_entries.end());
        log.event("topic", kv("topic", topics[t].topic_id), kv("results", results[t].size()), kv("detail", notes[t]));
    }
    prepare_output_file(options.out);
    write_run(options.out, entries);
    log.event("done", kv("topics", topics.size()), kv("entries", entries.size()), kv("search_ms", ms_text(search_ms)),
              kv("out", options.out.string()));
}

void run_fuse(const CommonOptions& common, const FuseOptions& options) {
    const Logger log("fuse");
    const auto ctx = make_context(common);
    if (options.runs.empty()) throw ValidationError("fuse needs at least one run file");
    const std::size_t k = pick(options.k, config_int<std::size_t>(ctx, "run", "k"), kDefaultRecallDepth);
    if (k < 1) throw ValidationError("k must be >= 1");
    const auto normalization = parse_fusion_normalization(options.normalize);
    const std::string tag = pick(options.tag, ctx.config.get("run", "tag"), std::string("clir-fused"));

    std::vector<std::map<std::string, Ranking>> runs;
    std::set<std::string> topics;
    for (const auto& path : options.runs) {
        require_existing(path);
        runs.push_back(run_by_topic(read_run(path)));
        for (const auto& [topic, ranking] : runs.back()) topics.insert(topic);
    }
    std::vector<RunEntry> entries;
    for (const auto& topic : topics) {
        std::vector<Ranking> per_language;
        for (const auto& run : runs) {
            auto it = run.find(topic);
            per_language.push_back(it == run.end() ? Ranking{} : it->second);
        }
        auto fused = fuse_multilingual(per_language, k, normalization);
        auto topic_entries = to_run_entries(topic, fused, tag);
        entries.insert(entries.end(), topic_entries.begin(), topic_entries.end());
    }
    prepare_output_file(options.out);
    write_run(options.out, entries);
    log.event("done", kv("runs", runs.size()), kv("topics", topics.size()), kv("out", options.out.string()));
}

void run_mine_distill(const CommonOptions& common, const MineDistillOptions& options) {
    const Logger log("mine-distill");
    const auto ctx = make_context(common);
    require_existing(options.index);
    require_existing(options.queries);
    require_existing(options.teacher);
    if (options.k < 1) throw ValidationError("k must be >= 1");
    const auto layout = inspect_index(options.index);
    if (layout.kind != "dense" || layout.sharded) throw ValidationError("mine-distill needs an unsharded dense index");

    DenseIndexParams params;
    params.nprobe = pick(options.nprobe, config_int<std::uint32_t>(ctx, "dense", "nprobe"), params.nprobe);
    params.candidate_cap =
        pick(options.candidate_cap, config_int<std::size_t>(ctx, "dense", "candidate_cap"), params.candidate_cap);
    params.candidate_cap = std::max(params.candidate_cap, options.k);

    auto start = Clock::now();
    const auto index = DenseIndex::load(options.index);
    const auto queries = load_embeddings(options.queries);
    std::map<std::pair<std::string, std::string>, double> teacher;
    {
        std::ifstream in(options.teacher);
        std::string line;
        std::size_t line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (line.empty()) continue;
            const auto fields = split_fields(line, '\t');
            auto score = fields.size() == 3 ? parse_double(fields[2]) : std::nullopt;
            if (!score || !std::isfinite(*score)) {
                throw ParseError(options.teacher.string(), line_no, "expected query_id<TAB>pid<TAB>score");
            }
            teacher[{std::string(fields[0]), std::string(fields[1])}] = *score;
        }
    }
    params.nprobe = std::min(params.nprobe, index.codebook().num_centroids());
    log.event("loaded", kv("queries", queries.size()), kv("teacher_scores", teacher.size()),
              kv("ms", ms_text(ms_since(start))));

    start = Clock::now();
    std::vector<std::optional<DistillPair>> mined(queries.size());
    parallel_for(queries.size(), ctx.threads, [&](std::size_t i) {
        const auto keys = mine_hard_passages(index, queries.tokens(i), options.k, params);
        DistillPair pair;
        pair.query_id = queries.key(i);
        for (const auto& key : keys) {
            auto it = teacher.find({pair.query_id, key});
            if (it != teacher.end()) pair.passages.push_back({key, it->second});
        }
        if (pair.passages.size() >= 2) mined[i] = std::move(pair);
    });
    std::vector<DistillPair> pairs;
    for (std::size_t i = 0; i < mined.size(); ++i) {
        if (mined[i]) {
            pairs.push_back(std::move(*mined[i]));
        } else {
            log.event("skipped", kv("query", queries.key(i)), kv("reason", "fewer_than_2_teacher_scored_passages"));
        }
    }
    prepare_output_file(options.out);
    write_distill_file(options.out, pairs);
    log.event("done", kv("queries", pairs.size()), kv("ms", ms_text(ms_since(start))), kv("out", options.out.string()));
}

void run_evaluate(const CommonOptions& common, const EvaluateOptions& options) {
    const Logger log("evaluate");
    const auto ctx = make_context(common);
    require_existing(options.run);
    const auto qrels_path = require_input(options.qrels, ctx, "collection", "qrels", "qrels");
    const auto run = read_run(options.run);
    const auto qrels = read_qrels(qrels_path);
    const auto report = evaluate(run, qrels, options.ndcg_depth, options.recall_depth);
    const auto text = format_report(report, options.ndcg_depth, options.recall_depth);
    if (options.out) {
        prepare_output_file(*options.out);
        std::ofstream out(*options.out, std::ios::binary);
        if (!out) throw Error("cannot write " + options.out->string());
        out << text;
    }
    std::cout << text;
    log.event("done", kv("topics", report.topics.size()), kv("unjudged", report.unjudged_topics.size()),
              kv("mean_ndcg", format_double(report.mean_ndcg)), kv("mean_recall", format_double(report.mean_recall)));
}

}  // namespace clir::cli
