#include "clir/shards.hpp"

#include <algorithm>
#include <fstream>
#include <limits>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

#include "clir/error.hpp"

namespace clir {

DateFilter DateFilter::from_topic(const Topic& topic) { return {topic.start_date, topic.end_date}; }

void DateFilter::validate() const {
    if (start && end && *end < *start) throw ValidationError("date filter start is after its end");
}

ShardPlan::ShardPlan(int window_months, std::vector<DateWindow> windows, std::map<std::string, std::size_t> assignment)
    : window_months_(window_months), windows_(std::move(windows)), assignment_(std::move(assignment)) {
    if (window_months_ < 1) throw ValidationError("window_months must be >= 1");
    for (std::size_t i = 0; i < windows_.size(); ++i) {
        if (!(windows_[i].start < windows_[i].end)) throw ValidationError("empty shard window");
        if (i > 0 && windows_[i].start != windows_[i - 1].end) throw ValidationError("shard windows are not contiguous");
    }
    for (const auto& [doc, shard] : assignment_) {
        if (shard >= windows_.size()) throw ValidationError("document '" + doc + "' assigned to a missing shard");
    }
}

std::size_t ShardPlan::shard_of(const std::string& doc_id) const {
    auto it = assignment_.find(doc_id);
    if (it == assignment_.end()) throw ValidationError("document '" + doc_id + "' is not in the shard plan");
    return it->second;
}

std::optional<std::size_t> ShardPlan::window_of(const Date& date) const {
    auto it = std::upper_bound(windows_.begin(), windows_.end(), date,
                               [](const Date& d, const DateWindow& w) { return d < w.end; });
    if (it == windows_.end() || !it->contains(date)) return std::nullopt;
    return static_cast<std::size_t>(it - windows_.begin());
}

std::vector<std::vector<std::string>> ShardPlan::members() const {
    std::vector<std::vector<std::string>> out(windows_.size());
    for (const auto& [doc, shard] : assignment_) out[shard].push_back(doc);
    return out;
}

void ShardPlan::save(const std::filesystem::path& path) const {
    nlohmann::ordered_json j;
    j["format"] = "clir-shard-plan";
    j["version"] = 1;
    j["window_months"] = window_months_;
    auto& windows = j["windows"] = nlohmann::ordered_json::array();
    for (const auto& w : windows_) windows.push_back({{"start", w.start.iso()}, {"end", w.end.iso()}});
    auto& assignment = j["assignment"] = nlohmann::ordered_json::object();
    for (const auto& [doc, shard] : assignment_) assignment[doc] = shard;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    out << j.dump(2) << '\n';
}

ShardPlan ShardPlan::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path.string());
    try {
        const auto j = nlohmann::json::parse(in);
        if (j.value("format", "") != "clir-shard-plan" || j.value("version", 0) != 1) {
            throw FormatError(path.string() + " is not a version 1 shard plan");
        }
        std::vector<DateWindow> windows;
        for (const auto& w : j.at("windows")) {
            windows.push_back({Date::parse(w.at("start").get<std::string>()), Date::parse(w.at("end").get<std::string>())});
        }
        std::map<std::string, std::size_t> assignment;
        for (const auto& [doc, shard] : j.at("assignment").items()) assignment.emplace(doc, shard.get<std::size_t>());
        return ShardPlan(j.at("window_months").get<int>(), std::move(windows), std::move(assignment));
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
}

ShardPlan plan_shards(std::span<const Document> docs, int window_months) {
    if (window_months < 1) throw ValidationError("window_months must be >= 1");
    std::optional<Date> earliest, latest;
    for (const auto& doc : docs) {
        if (!doc.date) continue;
        if (!earliest || *doc.date < *earliest) earliest = doc.date;
        if (!latest || *latest < *doc.date) latest = doc.date;
    }
    if (!earliest) throw ValidationError("cannot plan date shards: no document carries a date");

    const Date origin = earliest->first_of_month();
    const int count = months_between(origin, *latest) / window_months + 1;
    std::vector<DateWindow> windows;
    for (int i = 0; i < count; ++i) {
        windows.push_back({origin.add_months(i * window_months), origin.add_months((i + 1) * window_months)});
    }

    std::map<std::string, std::size_t> assignment;
    const std::size_t last = windows.size() - 1;
    for (const auto& doc : docs) {
        std::size_t shard = last;
        if (doc.date) shard = static_cast<std::size_t>(months_between(origin, *doc.date) / window_months);
        if (!assignment.emplace(doc.doc_id, shard).second) {
            throw ValidationError("duplicate document id '" + doc.doc_id + "'");
        }
    }
    return ShardPlan(window_months, std::move(windows), std::move(assignment));
}

std::vector<std::size_t> select_shards(const ShardPlan& plan, const DateFilter& filter) {
    filter.validate();
    std::vector<std::size_t> selected;
    for (std::size_t i = 0; i < plan.size(); ++i) {
        const auto& w = plan.windows()[i];
        const bool after_start = !filter.start || *filter.start < w.end;
        const bool before_end = !filter.end || w.start <= *filter.end;
        if (after_start && before_end) selected.push_back(i);
    }
    return selected;
}

Ranking merge_shard_results(std::span<const Ranking> per_shard, std::size_t k) {
    std::unordered_map<std::string, double> best;
    for (const auto& ranking : per_shard) {
        for (const auto& entry : ranking) {
            auto [it, inserted] = best.emplace(entry.id, entry.score);
            if (!inserted) it->second = std::max(it->second, entry.score);
        }
    }
    Ranking merged;
    merged.reserve(best.size());
    for (auto& [id, score] : best) merged.push_back({id, score});
    truncate_ranking(merged, k);
    return merged;
}

FusionNormalization parse_fusion_normalization(std::string_view name) {
    if (name == "raw") return FusionNormalization::Raw;
    if (name == "minmax") return FusionNormalization::MinMax;
    throw ValidationError("unknown fusion normalization '" + std::string(name) + "'");
}

Ranking fuse_multilingual(std::span<const Ranking> per_language, std::size_t k, FusionNormalization normalization) {
    std::unordered_set<std::string> seen;
    Ranking fused;
    for (const auto& run : per_language) {
        double lo = std::numeric_limits<double>::infinity();
        double hi = -std::numeric_limits<double>::infinity();
        for (const auto& e : run) {
            lo = std::min(lo, e.score);
            hi = std::max(hi, e.score);
        }
        for (const auto& e : run) {
            if (!seen.insert(e.id).second) {
                throw ValidationError("document '" + e.id + "' appears in more than one language run");
            }
            double score = e.score;
            if (normalization == FusionNormalization::MinMax) score = hi > lo ? (e.score - lo) / (hi - lo) : 1.0;
            fused.push_back({e.id, score});
        }
    }
    truncate_ranking(fused, k);
    return fused;
}

std::vector<InvertedIndex> build_sharded_lexical(std::span<const DocBag> bags, const ShardPlan& plan) {
    const CollectionStats global = CollectionStats::from_bags(bags);
    std::vector<std::vector<DocBag>> per_shard(plan.size());
    for (const auto& bag : bags) per_shard[plan.shard_of(bag.doc_id)].push_back(bag);
    std::vector<InvertedIndex> shards;
    shards.reserve(plan.size());
    for (const auto& members : per_shard) shards.push_back(InvertedIndex::build(members, global));
    return shards;
}

Ranking search_sharded_lexical(std::span<const InvertedIndex> shards, std::span<const std::size_t> selected,
                               const WeightedQuery& query, LexicalScorer scorer, bool rm3, std::size_t k,
                               const LexicalParams& params) {
    params.validate();
    if (k < 1) throw ValidationError("k must be >= 1");
    auto run = [&](const WeightedQuery& q, std::size_t depth) {
        std::vector<Ranking> partial;
        for (auto s : selected) partial.push_back(search_lexical(shards[s], q, scorer, false, depth, params));
        return merge_shard_results(partial, depth);
    };
    for (auto s : selected) {
        if (s >= shards.size()) throw ValidationError("selected shard " + std::to_string(s) + " does not exist");
    }
    if (!rm3) return run(query, k);

    if (normalize_query(query).empty()) throw ValidationError("empty query");
    const Ranking first_pass = run(query, params.rm3_fb_docs);
    if (first_pass.empty()) return {};
    std::vector<const InvertedIndex*> pointers;
    for (auto s : selected) pointers.push_back(&shards[s]);
    WeightedQuery prepared = normalize_query(query);
    if (scorer == LexicalScorer::Hmm && !shards.empty()) {
        std::erase_if(prepared, [&](const auto& entry) {
            const TermStats* ts = shards.front().stats().find(entry.first);
            return !ts || !(ts->cf > 0.0);
        });
    }
    return run(rm3_expand(pointers, prepared, first_pass, params), k);
}

}  // namespace clir
