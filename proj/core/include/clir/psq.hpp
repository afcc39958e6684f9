#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace clir {

/// Term -> expected count. Ordered so that iteration (and serialization) is deterministic.
using WeightedBag = std::map<std::string, double>;
using TokenCounts = std::map<std::string, double>;

struct Translation {
    std::string target;
    double prob = 0.0;

    friend bool operator==(const Translation&, const Translation&) = default;
};

/// Source token -> translation alternatives, sorted by descending probability
/// (ties by target). Every probability lies in (0, 1] and each row sums to at
/// most 1 + kMassTolerance.
class TranslationTable {
  public:
    static constexpr double kMassTolerance = 1e-6;

    TranslationTable() = default;

    /// Groups (source, target, prob) rows, sorts each row and validates it.
    /// Repeated (source, target) pairs are rejected.
    struct Row {
        std::string source;
        std::string target;
        double prob = 0.0;
    };
    static TranslationTable from_rows(std::span<const Row> rows);

    /// Maps every token in `vocabulary` to itself with probability 1.
    static TranslationTable identity(std::span<const std::string> vocabulary);

    const std::vector<Translation>* find(const std::string& source) const;
    const std::map<std::string, std::vector<Translation>>& rows() const noexcept { return rows_; }
    std::size_t size() const noexcept { return rows_.size(); }
    bool empty() const noexcept { return rows_.empty(); }

    friend bool operator==(const TranslationTable&, const TranslationTable&) = default;

  private:
    friend TranslationTable prune_table(const TranslationTable&, double, std::size_t);
    std::map<std::string, std::vector<Translation>> rows_;
};

inline constexpr double kDefaultPruneMass = 0.99;
inline constexpr std::size_t kDefaultPruneAlternatives = 64;

/// Reads "source<TAB>target<TAB>prob" lines. Throws ParseError for malformed
/// lines or probabilities outside (0, 1], ValidationError for rows whose mass
/// exceeds one.
TranslationTable load_table(const std::filesystem::path& path);
void write_table(const std::filesystem::path& path, const TranslationTable& table);

/// Per source, keeps the most probable targets until their cumulative mass
/// reaches `cum_mass` or `max_alts` are kept, then renormalizes the kept
/// probabilities to sum to one.
TranslationTable prune_table(const TranslationTable& table, double cum_mass = kDefaultPruneMass,
                             std::size_t max_alts = kDefaultPruneAlternatives);

TokenCounts count_tokens(std::span<const std::string> tokens);

/// weight(t) = sum over sources of count(source) * P(t | source). Sources
/// missing from the table contribute nothing; zero weights are dropped.
WeightedBag translate_doc(const TokenCounts& counts, const TranslationTable& table);

}  // namespace clir
