#include "config.hpp"

#include <array>
#include <fstream>
#include <sstream>

#include "clir/error.hpp"
#include "clir/text_format.hpp"

namespace clir::cli {
namespace {

constexpr std::array kKeys = {
    KeySpec{"collection", "docs", KeyType::Path, "document JSON-lines file"},
    KeySpec{"collection", "topics", KeyType::Path, "topic JSON-lines file"},
    KeySpec{"collection", "qrels", KeyType::Path, "relevance judgments"},
    KeySpec{"collection", "languages", KeyType::String, "comma-separated allowed document languages"},
    KeySpec{"collection", "tokenizer", KeyType::String, "default | whitespace"},
    KeySpec{"psq", "table", KeyType::Path, "translation table TSV"},
    KeySpec{"psq", "cum_mass", KeyType::Double, "pruning cumulative mass (0.99)"},
    KeySpec{"psq", "max_alts", KeyType::Int, "pruning alternatives per source token (64)"},
    KeySpec{"lexical", "scorer", KeyType::String, "bm25 | hmm"},
    KeySpec{"lexical", "k1", KeyType::Double, "BM25 k1 (0.9)"},
    KeySpec{"lexical", "b", KeyType::Double, "BM25 b (0.4)"},
    KeySpec{"lexical", "lambda", KeyType::Double, "HMM document weight (0.5)"},
    KeySpec{"lexical", "rm3", KeyType::Bool, "enable RM3 expansion"},
    KeySpec{"lexical", "rm3_fb_docs", KeyType::Int, "RM3 feedback documents (10)"},
    KeySpec{"lexical", "rm3_fb_terms", KeyType::Int, "RM3 expansion terms (10)"},
    KeySpec{"lexical", "rm3_alpha", KeyType::Double, "RM3 original-query weight (0.5)"},
    KeySpec{"dense", "bits", KeyType::Int, "residual bits per dimension (1)"},
    KeySpec{"dense", "centroids", KeyType::Int, "centroid count, 0 = automatic"},
    KeySpec{"dense", "nprobe", KeyType::Int, "centroids probed per query token (4)"},
    KeySpec{"dense", "candidate_cap", KeyType::Int, "passages fully scored (2500)"},
    KeySpec{"dense", "kmeans_iters", KeyType::Int, "k-means iterations (20)"},
    KeySpec{"shards", "window_months", KeyType::Int, "months per shard window (3)"},
    KeySpec{"shards", "use_dates", KeyType::Bool, "restrict search to shards matching topic dates"},
    KeySpec{"run", "variant", KeyType::String, "T | D | TD"},
    KeySpec{"run", "tag", KeyType::String, "run tag written to run files"},
    KeySpec{"run", "k", KeyType::Int, "documents per topic"},
    KeySpec{"run", "seed", KeyType::Int, "random seed"},
    KeySpec{"run", "threads", KeyType::Int, "worker threads"},
};

std::string trim(std::string_view s) {
    const auto begin = s.find_first_not_of(" \t\r");
    if (begin == std::string_view::npos) return {};
    const auto end = s.find_last_not_of(" \t\r");
    return std::string(s.substr(begin, end - begin + 1));
}

const KeySpec* find_spec(std::string_view section, std::string_view key) {
    for (const auto& spec : kKeys) {
        if (spec.section == section && spec.key == key) return &spec;
    }
    return nullptr;
}

std::optional<bool> parse_bool(std::string_view v) {
    if (v == "true" || v == "yes" || v == "on" || v == "1") return true;
    if (v == "false" || v == "no" || v == "off" || v == "0") return false;
    return std::nullopt;
}

std::string join_key(std::string_view section, std::string_view key) {
    return std::string(section) + "." + std::string(key);
}

}  // namespace

std::span<const KeySpec> known_keys() { return kKeys; }

std::string describe_keys() {
    std::ostringstream out;
    std::string_view current;
    for (const auto& spec : kKeys) {
        if (spec.section != current) {
            current = spec.section;
            out << "  [" << current << "]\n";
        }
        out << "    " << spec.key << std::string(spec.key.size() < 16 ? 16 - spec.key.size() : 1, ' ') << spec.help
            << '\n';
    }
    return out.str();
}

ExperimentConfig ExperimentConfig::parse(std::string_view text, const std::string& source) {
    ExperimentConfig config;
    std::istringstream in{std::string(text)};
    std::string line;
    std::string section;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (auto hash = line.find_first_of("#;"); hash != std::string::npos) line.erase(hash);
        const std::string content = trim(line);
        if (content.empty()) continue;
        if (content.front() == '[') {
            if (content.back() != ']') throw ParseError(source, line_no, "unterminated section header");
            section = trim(std::string_view(content).substr(1, content.size() - 2));
            bool known = false;
            for (const auto& spec : kKeys) known = known || spec.section == section;
            if (!known) throw ParseError(source, line_no, "unknown section [" + section + "]");
            continue;
        }
        const auto eq = content.find('=');
        if (eq == std::string::npos) throw ParseError(source, line_no, "expected key = value");
        const std::string key = trim(std::string_view(content).substr(0, eq));
        const std::string value = trim(std::string_view(content).substr(eq + 1));
        if (section.empty()) throw ParseError(source, line_no, "key '" + key + "' outside any section");
        const KeySpec* spec = find_spec(section, key);
        if (!spec) throw ParseError(source, line_no, "unknown key '" + key + "' in [" + section + "]");
        bool ok = !value.empty();
        switch (spec->type) {
            case KeyType::Int: ok = ok && parse_int(value).has_value(); break;
            case KeyType::Double: ok = ok && parse_double(value).has_value(); break;
            case KeyType::Bool: ok = ok && parse_bool(value).has_value(); break;
            case KeyType::Path:
            case KeyType::String: break;
        }
        if (!ok) throw ParseError(source, line_no, "bad value for " + join_key(section, key) + ": '" + value + "'");
        if (!config.values_.emplace(join_key(section, key), value).second) {
            throw ParseError(source, line_no, "duplicate key " + join_key(section, key));
        }
    }
    return config;
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open config " + path.string());
    std::ostringstream text;
    text << in.rdbuf();
    auto config = parse(text.str(), path.string());
    config.base_dir_ = path.parent_path();
    return config;
}

std::optional<std::string> ExperimentConfig::get(std::string_view section, std::string_view key) const {
    auto it = values_.find(join_key(section, key));
    if (it == values_.end()) return std::nullopt;
    return it->second;
}

std::optional<long long> ExperimentConfig::get_int(std::string_view section, std::string_view key) const {
    auto v = get(section, key);
    return v ? parse_int(*v) : std::nullopt;
}

std::optional<double> ExperimentConfig::get_double(std::string_view section, std::string_view key) const {
    auto v = get(section, key);
    return v ? parse_double(*v) : std::nullopt;
}

std::optional<bool> ExperimentConfig::get_bool(std::string_view section, std::string_view key) const {
    auto v = get(section, key);
    return v ? parse_bool(*v) : std::nullopt;
}

std::optional<std::filesystem::path> ExperimentConfig::get_path(std::string_view section, std::string_view key) const {
    auto v = get(section, key);
    if (!v) return std::nullopt;
    std::filesystem::path p(*v);
    return p.is_relative() && !base_dir_.empty() ? base_dir_ / p : p;
}

void ExperimentConfig::require_paths_exist() const {
    for (const auto& spec : kKeys) {
        if (spec.type != KeyType::Path) continue;
        if (auto p = get_path(spec.section, spec.key); p && !std::filesystem::exists(*p)) {
            throw Error("config " + join_key(spec.section, spec.key) + " refers to missing path " + p->string());
        }
    }
}

}  // namespace clir::cli
