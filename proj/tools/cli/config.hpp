#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>

namespace clir::cli {

enum class KeyType { Path, String, Int, Double, Bool };

struct KeySpec {
    std::string_view section;
    std::string_view key;
    KeyType type;
    std::string_view help;
};

/// Every key an experiment config may set.
std::span<const KeySpec> known_keys();

/// Help text listing every config key, grouped by section.
std::string describe_keys();

/// INI-style experiment configuration:
///
///     [section]
///     key = value   # comment
///
/// Unknown sections or keys and malformed values are rejected at parse time.
class ExperimentConfig {
  public:
    ExperimentConfig() = default;

    static ExperimentConfig parse(std::string_view text, const std::string& source = "<config>");
    static ExperimentConfig load(const std::filesystem::path& path);

    std::optional<std::string> get(std::string_view section, std::string_view key) const;
    std::optional<long long> get_int(std::string_view section, std::string_view key) const;
    std::optional<double> get_double(std::string_view section, std::string_view key) const;
    std::optional<bool> get_bool(std::string_view section, std::string_view key) const;
    std::optional<std::filesystem::path> get_path(std::string_view section, std::string_view key) const;

    /// Throws clir::Error naming the first path-typed key whose file is missing.
    void require_paths_exist() const;

    const std::map<std::string, std::string>& values() const noexcept { return values_; }

  private:
    std::map<std::string, std::string> values_;
    std::filesystem::path base_dir_;
};

}  // namespace clir::cli
