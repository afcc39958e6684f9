#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "clir/date.hpp"
#include "clir/tokenizer.hpp"

namespace clir {

struct Document {
    std::string doc_id;
    std::string title;
    std::string text;
    std::string lang;
    /// Creation date when known, otherwise the download date. Absent for undated records.
    std::optional<Date> date;
};

/// A window [start, end) over a document's token sequence.
struct Passage {
    std::string doc_id;
    std::size_t index = 0;
    std::size_t start = 0;
    std::size_t end = 0;

    std::size_t size() const noexcept { return end - start; }
    /// "<doc_id>#<index>", the key used in embedding files.
    std::string key() const;

    friend bool operator==(const Passage&, const Passage&) = default;
};

/// Splits a passage key back into (doc_id, index). Throws ValidationError when
/// the key has no '#<digits>' suffix.
std::pair<std::string, std::size_t> parse_passage_key(std::string_view key);

struct Topic {
    std::string topic_id;
    std::string title;
    std::string description;
    std::optional<Date> start_date;
    std::optional<Date> end_date;
};

enum class QueryVariant { Title, Description, TitleDescription };

QueryVariant parse_query_variant(std::string_view name);
std::string_view to_string(QueryVariant variant) noexcept;

inline constexpr std::size_t kDefaultPassageLength = 180;
inline constexpr std::size_t kDefaultPassageStride = 90;

/// Reads a JSON-lines collection. When `languages` is non-empty every record's
/// lang must belong to it.
std::vector<Document> ingest_collection(const std::filesystem::path& path,
                                        const std::set<std::string>& languages = {});

std::vector<Topic> read_topics(const std::filesystem::path& path);

/// Windows start at 0, stride, 2*stride, ... and stop after the first window
/// that reaches the end of the document. An empty document yields no passages.
std::vector<Passage> split_passages(std::string_view doc_id, std::size_t num_tokens,
                                    std::size_t max_len = kDefaultPassageLength,
                                    std::size_t stride = kDefaultPassageStride);

/// Token sequence of a document: title tokens followed by body tokens.
std::vector<std::string> document_tokens(const Document& doc, const Tokenizer& tokenizer);

std::vector<Passage> split_passages(const Document& doc, const Tokenizer& tokenizer,
                                    std::size_t max_len = kDefaultPassageLength,
                                    std::size_t stride = kDefaultPassageStride);

/// T -> title, D -> description, TD -> title + ' ' + description. The raw
/// strings are joined before any tokenization.
std::string form_query(const Topic& topic, QueryVariant variant);

}  // namespace clir
