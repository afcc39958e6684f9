#include "clir/tokenizer.hpp"

#include <unicode/locid.h>
#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>
#include <unicode/utf8.h>

#include "clir/error.hpp"

namespace clir {
namespace {

bool is_word_char(UChar32 c) {
    if (u_isdigit(c)) return true;
    const auto mask = U_GET_GC_MASK(c);
    return (mask & (U_GC_L_MASK | U_GC_M_MASK | U_GC_ND_MASK)) != 0;
}

}  // namespace

std::vector<std::string> DefaultTokenizer::tokenize(std::string_view text) const {
    UErrorCode status = U_ZERO_ERROR;
    const icu::Normalizer2* nfkc = icu::Normalizer2::getNFKCInstance(status);
    if (U_FAILURE(status)) throw Error(std::string("ICU NFKC unavailable: ") + u_errorName(status));

    icu::UnicodeString input = icu::UnicodeString::fromUTF8(icu::StringPiece(text.data(), static_cast<int32_t>(text.size())));
    icu::UnicodeString normalized = nfkc->normalize(input, status);
    if (U_FAILURE(status)) throw Error(std::string("NFKC normalization failed: ") + u_errorName(status));
    normalized.toLower(icu::Locale::getRoot());

    std::vector<std::string> tokens;
    icu::UnicodeString current;
    auto flush = [&] {
        if (current.isEmpty()) return;
        std::string utf8;
        current.toUTF8String(utf8);
        tokens.push_back(stemmer_ ? stemmer_(utf8) : std::move(utf8));
        current.remove();
    };
    for (int32_t i = 0; i < normalized.length();) {
        const UChar32 c = normalized.char32At(i);
        if (is_word_char(c)) {
            current.append(c);
        } else {
            flush();
        }
        i += U16_LENGTH(c);
    }
    flush();
    if (stemmer_) std::erase_if(tokens, [](const std::string& t) { return t.empty(); });
    return tokens;
}

std::vector<std::string> WhitespaceTokenizer::tokenize(std::string_view text) const {
    std::vector<std::string> tokens;
    std::size_t i = 0;
    auto is_space = [](char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; };
    while (i < text.size()) {
        while (i < text.size() && is_space(text[i])) ++i;
        const std::size_t start = i;
        while (i < text.size() && !is_space(text[i])) ++i;
        if (i > start) tokens.emplace_back(text.substr(start, i - start));
    }
    return tokens;
}

std::unique_ptr<Tokenizer> make_tokenizer(std::string_view name) {
    if (name == "default") return std::make_unique<DefaultTokenizer>();
    if (name == "whitespace") return std::make_unique<WhitespaceTokenizer>();
    throw ValidationError("unknown tokenizer '" + std::string(name) + "'");
}

}  // namespace clir
