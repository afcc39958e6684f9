#pragma once

#include <functional>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace clir {

/// Maps a surface token to its index form. The default is identity; language
/// specific stemmers plug in here.
using Stemmer = std::function<std::string(std::string_view)>;

class Tokenizer {
  public:
    virtual ~Tokenizer() = default;
    virtual std::vector<std::string> tokenize(std::string_view text) const = 0;
};

/// NFKC-normalizes UTF-8 text, lowercases it and splits on every code point
/// that is neither a letter, a combining mark nor a digit. Invalid UTF-8 is
/// replaced with U+FFFD before normalization.
class DefaultTokenizer final : public Tokenizer {
  public:
    DefaultTokenizer() = default;
    explicit DefaultTokenizer(Stemmer stemmer) : stemmer_(std::move(stemmer)) {}

    std::vector<std::string> tokenize(std::string_view text) const override;

  private:
    Stemmer stemmer_;
};

/// Splits on ASCII whitespace only; no normalization.
class WhitespaceTokenizer final : public Tokenizer {
  public:
    std::vector<std::string> tokenize(std::string_view text) const override;
};

/// Returns a tokenizer by name: "default" or "whitespace".
std::unique_ptr<Tokenizer> make_tokenizer(std::string_view name);

}  // namespace clir
