#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "clir/dense.hpp"

namespace clir {

struct TeacherScore {
    std::string passage_key;
    double teacher = 0.0;

    friend bool operator==(const TeacherScore&, const TeacherScore&) = default;
};

/// Training example for a distilled student: one query and the teacher's
/// scores over its mined passages.
struct DistillPair {
    std::string query_id;
    std::vector<TeacherScore> passages;
    /// Aligned with `passages` when present.
    std::optional<std::vector<double>> student;

    /// Throws ValidationError for fewer than two passages or misaligned student scores.
    void validate() const;
    friend bool operator==(const DistillPair&, const DistillPair&) = default;
};

inline constexpr std::size_t kDefaultMinedPassages = 50;

/// Top-k passage keys from search_dense; fewer when the index has fewer.
std::vector<std::string> mine_hard_passages(const DenseIndex& index, MatrixView query,
                                            std::size_t k = kDefaultMinedPassages, const DenseIndexParams& params = {});

/// Softmax of `scores / temperature`, computed with the max subtracted.
std::vector<double> softmax(std::span<const double> scores, double temperature = 1.0);

/// KL(softmax(teacher) || softmax(student)). Requires equal lengths >= 2 and
/// finite scores.
double distill_loss(std::span<const double> teacher, std::span<const double> student, double temperature = 1.0);

/// JSON lines: {"query_id": ..., "passages": [{"pid": ..., "teacher": ...}, ...]}.
void write_distill_file(const std::filesystem::path& path, std::span<const DistillPair> pairs);
std::vector<DistillPair> read_distill_file(const std::filesystem::path& path);

}  // namespace clir
