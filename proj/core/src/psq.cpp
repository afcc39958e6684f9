#include "clir/psq.hpp"

#include <algorithm>
#include <fstream>

#include "clir/error.hpp"
#include "clir/text_format.hpp"

namespace clir {
namespace {

void sort_row(std::vector<Translation>& row) {
    std::sort(row.begin(), row.end(), [](const Translation& a, const Translation& b) {
        if (a.prob != b.prob) return a.prob > b.prob;
        return a.target < b.target;
    });
}

}  // namespace

TranslationTable TranslationTable::from_rows(std::span<const Row> rows) {
    TranslationTable table;
    for (const auto& row : rows) {
        if (!(row.prob > 0.0 && row.prob <= 1.0)) {
            throw ValidationError("probability for (" + row.source + ", " + row.target + ") outside (0, 1]");
        }
        table.rows_[row.source].push_back({row.target, row.prob});
    }
    for (auto& [source, targets] : table.rows_) {
        sort_row(targets);
        double mass = 0.0;
        for (std::size_t i = 0; i < targets.size(); ++i) {
            mass += targets[i].prob;
            for (std::size_t j = 0; j < i; ++j) {
                if (targets[j].target == targets[i].target) {
                    throw ValidationError("duplicate translation pair (" + source + ", " + targets[i].target + ")");
                }
            }
        }
        if (mass > 1.0 + kMassTolerance) {
            throw ValidationError("translation mass for '" + source + "' is " + format_double(mass) +
                                  ", which exceeds 1");
        }
    }
    return table;
}

TranslationTable TranslationTable::identity(std::span<const std::string> vocabulary) {
    TranslationTable table;
    for (const auto& token : vocabulary) table.rows_[token] = {{token, 1.0}};
    return table;
}

const std::vector<Translation>* TranslationTable::find(const std::string& source) const {
    auto it = rows_.find(source);
    return it == rows_.end() ? nullptr : &it->second;
}

TranslationTable load_table(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path.string());
    std::vector<TranslationTable::Row> rows;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto fields = split_fields(line, '\t');
        if (fields.size() != 3) {
            throw ParseError(path.string(), line_no, "expected 3 tab-separated fields, found " +
                                                         std::to_string(fields.size()));
        }
        if (fields[0].empty() || fields[1].empty()) throw ParseError(path.string(), line_no, "empty token");
        auto prob = parse_double(fields[2]);
        if (!prob) throw ParseError(path.string(), line_no, "bad probability '" + std::string(fields[2]) + "'");
        if (!(*prob > 0.0 && *prob <= 1.0)) {
            throw ParseError(path.string(), line_no, "probability " + std::string(fields[2]) + " outside (0, 1]");
        }
        rows.push_back({std::string(fields[0]), std::string(fields[1]), *prob});
    }
    return TranslationTable::from_rows(rows);
}

void write_table(const std::filesystem::path& path, const TranslationTable& table) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    for (const auto& [source, targets] : table.rows()) {
        for (const auto& t : targets) out << source << '\t' << t.target << '\t' << format_double(t.prob) << '\n';
    }
    if (!out) throw Error("write failed for " + path.string());
}

TranslationTable prune_table(const TranslationTable& table, double cum_mass, std::size_t max_alts) {
    if (!(cum_mass > 0.0 && cum_mass <= 1.0)) throw ValidationError("cum_mass must be in (0, 1]");
    if (max_alts < 1) throw ValidationError("max_alts must be at least 1");
    TranslationTable pruned;
    for (const auto& [source, targets] : table.rows()) {
        std::vector<Translation> kept;
        double mass = 0.0;
        for (const auto& t : targets) {
            if (kept.size() >= max_alts || mass >= cum_mass) break;
            kept.push_back(t);
            mass += t.prob;
        }
        if (kept.empty() || mass <= 0.0) continue;
        for (auto& t : kept) t.prob /= mass;
        pruned.rows_.emplace(source, std::move(kept));
    }
    return pruned;
}

TokenCounts count_tokens(std::span<const std::string> tokens) {
    TokenCounts counts;
    for (const auto& t : tokens) counts[t] += 1.0;
    return counts;
}

WeightedBag translate_doc(const TokenCounts& counts, const TranslationTable& table) {
    WeightedBag bag;
    for (const auto& [source, count] : counts) {
        if (count <= 0.0) continue;
        const auto* row = table.find(source);
        if (!row) continue;
        for (const auto& t : *row) bag[t.target] += count * t.prob;
    }
    std::erase_if(bag, [](const auto& entry) { return !(entry.second > 0.0); });
    return bag;
}

}  // namespace clir
