#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "clir/dense.hpp"
#include "clir/lexical.hpp"

namespace clir::test {

// Scratch directory removed on destruction.
class TempDir {
  public:
    explicit TempDir(const std::string& tag = "clir") {
        static std::uint64_t counter = 0;
        std::random_device rd;
        path_ = std::filesystem::temp_directory_path() /
                (tag + "-" + std::to_string(rd()) + "-" + std::to_string(counter++));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const noexcept { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

  private:
    std::filesystem::path path_;
};

inline void write_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    out << text;
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline std::vector<float> random_unit_vectors(std::mt19937_64& rng, std::size_t count, std::uint32_t dim) {
    std::normal_distribution<float> normal(0.0F, 1.0F);
    std::vector<float> out(count * dim);
    for (std::size_t i = 0; i < count; ++i) {
        double norm = 0.0;
        for (std::uint32_t d = 0; d < dim; ++d) {
            out[i * dim + d] = normal(rng);
            norm += double(out[i * dim + d]) * out[i * dim + d];
        }
        norm = std::sqrt(norm);
        for (std::uint32_t d = 0; d < dim; ++d) out[i * dim + d] = static_cast<float>(out[i * dim + d] / norm);
    }
    return out;
}

// Passages drawn around a few topic directions so centroids are meaningful.
inline EmbeddingSet random_corpus(std::uint64_t seed, std::size_t passages, std::uint32_t dim,
                                  std::size_t min_tokens = 3, std::size_t max_tokens = 12) {
    std::mt19937_64 rng(seed);
    const auto topics = random_unit_vectors(rng, 8, dim);
    std::normal_distribution<float> noise(0.0F, 0.35F);
    std::uniform_int_distribution<std::size_t> len(min_tokens, max_tokens);
    std::uniform_int_distribution<std::size_t> pick(0, 7);
    EmbeddingSet set(dim);
    for (std::size_t p = 0; p < passages; ++p) {
        const std::size_t n = len(rng);
        std::vector<float> v(n * dim);
        for (std::size_t t = 0; t < n; ++t) {
            const std::size_t topic = pick(rng);
            double norm = 0.0;
            for (std::uint32_t d = 0; d < dim; ++d) {
                v[t * dim + d] = topics[topic * dim + d] + noise(rng);
                norm += double(v[t * dim + d]) * v[t * dim + d];
            }
            norm = std::sqrt(norm);
            for (std::uint32_t d = 0; d < dim; ++d) v[t * dim + d] = static_cast<float>(v[t * dim + d] / norm);
        }
        set.add("doc" + std::to_string(p / 3) + "#" + std::to_string(p % 3), v);
    }
    return set;
}

inline Matrix random_query(std::uint64_t seed, std::size_t tokens, std::uint32_t dim) {
    std::mt19937_64 rng(seed);
    return Matrix(tokens, dim, random_unit_vectors(rng, tokens, dim));
}

// Random bags over a small vocabulary with real weights.
inline std::vector<DocBag> random_bags(std::mt19937_64& rng, std::size_t docs, std::size_t vocab,
                                       bool integer_weights = false) {
    std::uniform_int_distribution<std::size_t> terms(1, 12);
    std::uniform_int_distribution<std::size_t> term(0, vocab - 1);
    std::uniform_real_distribution<double> weight(0.05, 4.0);
    std::uniform_int_distribution<int> count(1, 5);
    std::vector<DocBag> bags;
    for (std::size_t d = 0; d < docs; ++d) {
        DocBag bag;
        char id[32];
        std::snprintf(id, sizeof id, "d%04zu", d);
        bag.doc_id = id;
        const std::size_t n = terms(rng);
        for (std::size_t i = 0; i < n; ++i) {
            bag.bag["t" + std::to_string(term(rng))] += integer_weights ? count(rng) : weight(rng);
        }
        bags.push_back(std::move(bag));
    }
    return bags;
}

}  // namespace clir::test
