#include "clir/corpus.hpp"

#include <charconv>
#include <fstream>
#include <unordered_set>

#include <json.hpp>

#include "clir/error.hpp"

namespace clir {
namespace {

using nlohmann::json;

std::string required_string(const json& record, const char* field, const std::string& source, std::size_t line) {
    auto it = record.find(field);
    if (it == record.end() || !it->is_string()) {
        throw ParseError(source, line, std::string("missing or non-string field '") + field + "'");
    }
    return it->get<std::string>();
}

std::optional<Date> optional_date(const json& record, const char* field, const std::string& source,
                                  std::size_t line) {
    auto it = record.find(field);
    if (it == record.end() || it->is_null()) return std::nullopt;
    if (!it->is_string()) throw ParseError(source, line, std::string("field '") + field + "' must be a string");
    const auto& text = it->get_ref<const std::string&>();
    if (text.empty()) return std::nullopt;
    auto date = Date::try_parse(text);
    if (!date) throw ParseError(source, line, std::string("bad date in '") + field + "': " + text);
    return date;
}

template <typename Fn>
void for_each_json_line(const std::filesystem::path& path, Fn&& fn) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path.string());
    const std::string source = path.string();
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        json record;
        try {
            record = json::parse(line);
        } catch (const json::parse_error& e) {
            throw ParseError(source, line_no, e.what());
        }
        if (!record.is_object()) throw ParseError(source, line_no, "record is not a JSON object");
        fn(record, source, line_no);
    }
}

}  // namespace

std::string Passage::key() const { return doc_id + "#" + std::to_string(index); }

std::pair<std::string, std::size_t> parse_passage_key(std::string_view key) {
    const auto hash = key.rfind('#');
    if (hash == std::string_view::npos || hash + 1 == key.size()) {
        throw ValidationError("passage key '" + std::string(key) + "' lacks a '#<index>' suffix");
    }
    std::size_t index = 0;
    const auto digits = key.substr(hash + 1);
    auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), index);
    if (ec != std::errc{} || ptr != digits.data() + digits.size()) {
        throw ValidationError("passage key '" + std::string(key) + "' has a non-numeric index");
    }
    return {std::string(key.substr(0, hash)), index};
}

QueryVariant parse_query_variant(std::string_view name) {
    if (name == "T" || name == "t") return QueryVariant::Title;
    if (name == "D" || name == "d") return QueryVariant::Description;
    if (name == "TD" || name == "td") return QueryVariant::TitleDescription;
    throw ValidationError("unknown query variant '" + std::string(name) + "' (expected T, D or TD)");
}

std::string_view to_string(QueryVariant variant) noexcept {
    switch (variant) {
        case QueryVariant::Title: return "T";
        case QueryVariant::Description: return "D";
        case QueryVariant::TitleDescription: return "TD";
    }
    return "TD";
}

std::vector<Document> ingest_collection(const std::filesystem::path& path, const std::set<std::string>& languages) {
    std::vector<Document> docs;
    std::unordered_set<std::string> seen;
    for_each_json_line(path, [&](const json& record, const std::string& source, std::size_t line) {
        Document doc;
        doc.doc_id = required_string(record, "id", source, line);
        doc.title = record.contains("title") ? required_string(record, "title", source, line) : std::string{};
        doc.text = required_string(record, "text", source, line);
        doc.lang = required_string(record, "lang", source, line);
        doc.date = optional_date(record, "date", source, line);
        if (doc.doc_id.empty()) throw ParseError(source, line, "empty document id");
        if (!languages.empty() && !languages.contains(doc.lang)) {
            throw ValidationError(source + ":" + std::to_string(line) + ": document " + doc.doc_id +
                                  " has undeclared language '" + doc.lang + "'");
        }
        if (!seen.insert(doc.doc_id).second) {
            throw ValidationError(source + ":" + std::to_string(line) + ": duplicate document id '" + doc.doc_id +
                                  "'");
        }
        docs.push_back(std::move(doc));
    });
    return docs;
}

std::vector<Topic> read_topics(const std::filesystem::path& path) {
    std::vector<Topic> topics;
    std::unordered_set<std::string> seen;
    for_each_json_line(path, [&](const json& record, const std::string& source, std::size_t line) {
        Topic topic;
        topic.topic_id = required_string(record, "topic_id", source, line);
        topic.title = record.contains("title") ? required_string(record, "title", source, line) : std::string{};
        topic.description =
            record.contains("description") ? required_string(record, "description", source, line) : std::string{};
        topic.start_date = optional_date(record, "start_date", source, line);
        topic.end_date = optional_date(record, "end_date", source, line);
        if (topic.start_date && topic.end_date && *topic.end_date < *topic.start_date) {
            throw ValidationError(source + ":" + std::to_string(line) + ": topic " + topic.topic_id +
                                  " has start_date after end_date");
        }
        if (!seen.insert(topic.topic_id).second) {
            throw ValidationError(source + ":" + std::to_string(line) + ": duplicate topic id '" + topic.topic_id +
                                  "'");
        }
        topics.push_back(std::move(topic));
    });
    return topics;
}

std::vector<Passage> split_passages(std::string_view doc_id, std::size_t num_tokens, std::size_t max_len,
                                    std::size_t stride) {
    if (max_len == 0) throw ValidationError("passage length must be positive");
    if (stride == 0 || stride > max_len) throw ValidationError("passage stride must be in (0, max_len]");
    std::vector<Passage> passages;
    for (std::size_t start = 0; start < num_tokens; start += stride) {
        const std::size_t end = std::min(start + max_len, num_tokens);
        passages.push_back(Passage{std::string(doc_id), passages.size(), start, end});
        if (end == num_tokens) break;
    }
    return passages;
}

std::vector<std::string> document_tokens(const Document& doc, const Tokenizer& tokenizer) {
    auto tokens = tokenizer.tokenize(doc.title);
    auto body = tokenizer.tokenize(doc.text);
    tokens.insert(tokens.end(), std::make_move_iterator(body.begin()), std::make_move_iterator(body.end()));
    return tokens;
}

std::vector<Passage> split_passages(const Document& doc, const Tokenizer& tokenizer, std::size_t max_len,
                                    std::size_t stride) {
    return split_passages(doc.doc_id, document_tokens(doc, tokenizer).size(), max_len, stride);
}

std::string form_query(const Topic& topic, QueryVariant variant) {
    auto require = [&](const std::string& field, const char* name) {
        if (field.empty()) throw ValidationError("topic " + topic.topic_id + " has an empty " + name);
    };
    switch (variant) {
        case QueryVariant::Title:
            require(topic.title, "title");
            return topic.title;
        case QueryVariant::Description:
            require(topic.description, "description");
            return topic.description;
        case QueryVariant::TitleDescription:
            require(topic.title, "title");
            require(topic.description, "description");
            return topic.title + " " + topic.description;
    }
    return {};
}

}  // namespace clir
