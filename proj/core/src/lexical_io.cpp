#include <fstream>

#include <json.hpp>

#include "binary_io.hpp"
#include "clir/error.hpp"
#include "clir/lexical.hpp"
#include "clir/text_format.hpp"

namespace clir {
namespace {

constexpr const char* kFormatName = "clir-lexical-index";
constexpr int kFormatVersion = 1;
constexpr char kPostingsMagic[] = "LIPST";

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    return out;
}

std::ifstream open_in(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("missing index file " + path.string());
    return in;
}

}  // namespace

// Layout: meta.json (format, version, counts), docs.tsv (doc_id, length),
// stats.tsv (term, df, cf), postings.bin (per term: key, count, (doc u32, weight f32)*).
void InvertedIndex::save(const std::filesystem::path& dir) const {
    std::filesystem::create_directories(dir);

    nlohmann::ordered_json meta;
    meta["format"] = kFormatName;
    meta["version"] = kFormatVersion;
    meta["num_docs"] = doc_ids_.size();
    meta["num_terms"] = terms_.size();
    meta["global_stats"] = global_stats_;
    meta["stats_num_docs"] = stats_.num_docs;
    meta["stats_total_weight"] = format_double(stats_.total_weight);
    auto meta_out = open_out(dir / "meta.json");
    meta_out << meta.dump(2) << '\n';

    auto docs_out = open_out(dir / "docs.tsv");
    for (std::size_t i = 0; i < doc_ids_.size(); ++i) {
        docs_out << doc_ids_[i] << '\t' << format_double(doc_lengths_[i]) << '\n';
    }

    std::vector<const std::pair<const std::string, TermStats>*> stat_rows;
    stat_rows.reserve(stats_.terms.size());
    for (const auto& entry : stats_.terms) stat_rows.push_back(&entry);
    std::sort(stat_rows.begin(), stat_rows.end(), [](auto* a, auto* b) { return a->first < b->first; });
    auto stats_out = open_out(dir / "stats.tsv");
    for (const auto* row : stat_rows) {
        stats_out << row->first << '\t' << row->second.df << '\t' << format_double(row->second.cf) << '\n';
    }

    auto post_out = open_out(dir / "postings.bin");
    detail::write_bytes(post_out, kPostingsMagic, 5);
    detail::write_le<std::uint32_t>(post_out, kFormatVersion);
    detail::write_le<std::uint64_t>(post_out, terms_.size());
    for (std::size_t t = 0; t < terms_.size(); ++t) {
        detail::write_short_string(post_out, terms_[t]);
        detail::write_le<std::uint32_t>(post_out, static_cast<std::uint32_t>(postings_[t].size()));
        for (const auto& p : postings_[t]) {
            detail::write_le<std::uint32_t>(post_out, p.doc);
            detail::write_le<float>(post_out, p.weight);
        }
    }
    if (!meta_out || !docs_out || !stats_out || !post_out) throw Error("failed writing index to " + dir.string());
}

InvertedIndex InvertedIndex::load(const std::filesystem::path& dir) {
    auto meta_in = open_in(dir / "meta.json");
    nlohmann::json meta;
    try {
        meta = nlohmann::json::parse(meta_in);
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(dir.string() + "/meta.json: " + e.what());
    }
    if (meta.value("format", "") != kFormatName) throw FormatError(dir.string() + " is not a lexical index");
    if (meta.value("version", 0) != kFormatVersion) {
        throw FormatError(dir.string() + ": unsupported lexical index version " + meta["version"].dump());
    }

    InvertedIndex index;
    index.global_stats_ = meta.value("global_stats", false);
    index.stats_.num_docs = meta.at("stats_num_docs").get<std::uint64_t>();
    auto total = parse_double(meta.at("stats_total_weight").get<std::string>());
    if (!total) throw FormatError(dir.string() + ": bad stats_total_weight");
    index.stats_.total_weight = *total;

    auto docs_in = open_in(dir / "docs.tsv");
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(docs_in, line)) {
        ++line_no;
        const auto fields = split_fields(line, '\t');
        auto length = fields.size() == 2 ? parse_double(fields[1]) : std::nullopt;
        if (!length) throw ParseError((dir / "docs.tsv").string(), line_no, "expected doc_id<TAB>length");
        index.doc_ids_.emplace_back(fields[0]);
        index.doc_lengths_.push_back(*length);
    }
    if (!std::is_sorted(index.doc_ids_.begin(), index.doc_ids_.end())) {
        throw FormatError(dir.string() + ": docs.tsv is not sorted by doc_id");
    }

    auto stats_in = open_in(dir / "stats.tsv");
    line_no = 0;
    while (std::getline(stats_in, line)) {
        ++line_no;
        const auto fields = split_fields(line, '\t');
        auto df = fields.size() == 3 ? parse_int(fields[1]) : std::nullopt;
        auto cf = fields.size() == 3 ? parse_double(fields[2]) : std::nullopt;
        if (!df || !cf || *df < 0) throw ParseError((dir / "stats.tsv").string(), line_no, "expected term<TAB>df<TAB>cf");
        index.stats_.terms[std::string(fields[0])] = {static_cast<std::uint64_t>(*df), *cf};
    }

    auto post_in = open_in(dir / "postings.bin");
    detail::expect_magic(post_in, kPostingsMagic, 5, (dir / "postings.bin").string());
    if (detail::read_le<std::uint32_t>(post_in, "version") != kFormatVersion) {
        throw FormatError(dir.string() + ": postings version mismatch");
    }
    const auto num_terms = detail::read_le<std::uint64_t>(post_in, "term count");
    for (std::uint64_t t = 0; t < num_terms; ++t) {
        auto term = detail::read_short_string(post_in, "term");
        const auto count = detail::read_le<std::uint32_t>(post_in, "posting count");
        std::vector<Posting> list(count);
        for (auto& p : list) {
            p.doc = detail::read_le<std::uint32_t>(post_in, "posting doc");
            p.weight = detail::read_le<float>(post_in, "posting weight");
            if (p.doc >= index.doc_ids_.size()) throw CorruptionError(dir.string() + ": posting doc out of range");
        }
        index.term_ids_.emplace(term, static_cast<std::uint32_t>(index.terms_.size()));
        index.terms_.push_back(std::move(term));
        index.postings_.push_back(std::move(list));
    }
    if (index.doc_ids_.size() != meta.at("num_docs").get<std::size_t>() ||
        index.terms_.size() != meta.at("num_terms").get<std::size_t>()) {
        throw FormatError(dir.string() + ": counts disagree with meta.json");
    }
    index.build_forward();
    return index;
}

}  // namespace clir
