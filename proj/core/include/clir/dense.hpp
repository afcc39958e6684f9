#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "clir/ranking.hpp"

namespace clir {

/// Non-owning view of a row-major float matrix.
struct MatrixView {
    const float* data = nullptr;
    std::size_t rows = 0;
    std::size_t cols = 0;

    std::span<const float> row(std::size_t i) const { return {data + i * cols, cols}; }
};

/// Owning row-major float matrix.
class Matrix {
  public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols, 0.0F) {}
    Matrix(std::size_t rows, std::size_t cols, std::vector<float> data);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::span<float> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
    std::span<const float> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }
    const std::vector<float>& data() const noexcept { return data_; }
    MatrixView view() const noexcept { return {data_.data(), rows_, cols_}; }
    operator MatrixView() const noexcept { return view(); }

    friend bool operator==(const Matrix&, const Matrix&) = default;

  private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<float> data_;
};

/// Keyed token-embedding matrices sharing one dimension, stored contiguously.
class EmbeddingSet {
  public:
    static constexpr double kNormTolerance = 1e-4;

    EmbeddingSet() = default;
    explicit EmbeddingSet(std::uint32_t dim) : dim_(dim) {}

    /// Appends `vectors` (num_tokens x dim, row-major). Throws on a dimension
    /// mismatch or a duplicate key.
    void add(std::string key, std::span<const float> vectors);

    std::uint32_t dim() const noexcept { return dim_; }
    std::size_t size() const noexcept { return keys_.size(); }
    std::size_t total_tokens() const noexcept { return offsets_.empty() ? 0 : offsets_.back(); }
    const std::string& key(std::size_t i) const { return keys_.at(i); }
    const std::vector<std::string>& keys() const noexcept { return keys_; }
    MatrixView tokens(std::size_t i) const;
    /// Every token vector of the collection as one matrix.
    MatrixView all_tokens() const noexcept { return {data_.data(), total_tokens(), dim_}; }
    std::optional<std::size_t> find(const std::string& key) const;

    /// Throws ValidationError naming the first vector whose L2 norm is not 1.
    void validate_norms(double tolerance = kNormTolerance) const;

    friend bool operator==(const EmbeddingSet& a, const EmbeddingSet& b) {
        return a.dim_ == b.dim_ && a.keys_ == b.keys_ && a.offsets_ == b.offsets_ && a.data_ == b.data_;
    }

  private:
    std::uint32_t dim_ = 0;
    std::vector<std::string> keys_;
    std::vector<std::size_t> offsets_{0};
    std::vector<float> data_;
    std::unordered_map<std::string, std::size_t> by_key_;
};

/// Binary embedding file: "LIEMB", u32 version, u32 dim, u64 count, then per
/// record u16 key length, key bytes, u32 token count, token_count*dim f32.
/// All integers and floats little-endian.
EmbeddingSet load_embeddings(const std::filesystem::path& path, bool check_norms = true);
void write_embeddings(const std::filesystem::path& path, const EmbeddingSet& set);

struct DenseIndexParams {
    std::uint32_t bits = 1;
    /// 0 selects default_centroid_count(total tokens).
    std::uint32_t num_centroids = 0;
    std::uint32_t nprobe = 4;
    std::size_t candidate_cap = 2500;
    std::uint32_t kmeans_iters = 20;
    std::uint64_t seed = 42;
    unsigned threads = 1;
};

/// 2^ceil(log2(16 * sqrt(total_tokens))).
std::uint32_t default_centroid_count(std::size_t total_tokens);

/// Per-dimension scalar quantizer for residuals with 2^bits levels.
struct ResidualBuckets {
    std::uint32_t dim = 0;
    std::uint32_t bits = 1;
    /// dim x (levels - 1) ascending cut points; a value r falls into the
    /// bucket equal to the number of cut points <= r.
    std::vector<float> boundaries;
    /// dim x levels strictly increasing reconstruction values.
    std::vector<float> values;
    /// Largest |r - value(bucket(r))| over the training residuals, per dimension.
    std::vector<float> error_bound;

    std::uint32_t levels() const noexcept { return 1u << bits; }
    std::uint32_t bucket(std::size_t d, float r) const;
    float value(std::size_t d, std::uint32_t code) const { return values[d * levels() + code]; }

    friend bool operator==(const ResidualBuckets&, const ResidualBuckets&) = default;
};

/// Fits buckets to training residuals (rows = samples). One bit splits at 0;
/// more bits split at the per-dimension empirical quantiles. Each level's
/// reconstruction value is the mean of the residuals it receives.
ResidualBuckets fit_residual_buckets(MatrixView residuals, std::uint32_t bits);

struct Codebook {
    Matrix centroids;
    ResidualBuckets buckets;

    std::uint32_t dim() const noexcept { return static_cast<std::uint32_t>(centroids.cols()); }
    std::uint32_t num_centroids() const noexcept { return static_cast<std::uint32_t>(centroids.rows()); }
    std::uint32_t bits() const noexcept { return buckets.bits; }
    /// Centroid with the largest dot product; lowest id on ties.
    std::uint32_t nearest_centroid(std::span<const float> v) const;

    friend bool operator==(const Codebook&, const Codebook&) = default;
};

/// Spherical k-means on a seeded sample of min(T, 256 K) token vectors,
/// followed by residual bucket fitting on the same sample.
Codebook train_codebook(MatrixView tokens, const DenseIndexParams& params);
inline Codebook train_codebook(const EmbeddingSet& set, const DenseIndexParams& params) {
    return train_codebook(set.all_tokens(), params);
}

struct CompressedPassage {
    std::string key;
    std::vector<std::uint32_t> centroid_ids;
    /// num_tokens * dim codes of `bits` bits each, packed LSB-first.
    std::vector<std::uint8_t> residual_codes;

    std::size_t num_tokens() const noexcept { return centroid_ids.size(); }
    friend bool operator==(const CompressedPassage&, const CompressedPassage&) = default;
};

std::size_t packed_code_bytes(std::size_t num_tokens, std::uint32_t dim, std::uint32_t bits) noexcept;

CompressedPassage compress(std::string key, MatrixView vectors, const Codebook& codebook);
/// centroid + per-dimension reconstruction value; the result is not renormalized.
/// Throws CorruptionError for an out-of-range centroid id or a wrong code size.
Matrix decompress(const CompressedPassage& passage, const Codebook& codebook);

/// Sum over query rows of the maximum dot product against document rows.
/// Throws ValidationError for an empty document or mismatched dimensions.
double maxsim(MatrixView query, MatrixView doc);

struct DenseSearchStats {
    std::size_t stage1_candidates = 0;
    std::size_t stage2_candidates = 0;
    double stage1_ms = 0.0;
    double stage2_ms = 0.0;
    double stage3_ms = 0.0;
};

class DenseIndex {
  public:
    DenseIndex() = default;
    DenseIndex(Codebook codebook, std::vector<CompressedPassage> passages);

    /// Trains a codebook on `set` and compresses every passage.
    static DenseIndex build(const EmbeddingSet& set, const DenseIndexParams& params);

    const Codebook& codebook() const noexcept { return codebook_; }
    const std::vector<CompressedPassage>& passages() const noexcept { return passages_; }
    std::size_t size() const noexcept { return passages_.size(); }
    bool empty() const noexcept { return passages_.empty(); }
    /// Passages containing at least one token assigned to `centroid`, ascending.
    std::span<const std::uint32_t> centroid_passages(std::uint32_t centroid) const { return ivf_.at(centroid); }

    void save(const std::filesystem::path& dir) const;
    static DenseIndex load(const std::filesystem::path& dir);

  private:
    void build_ivf();

    Codebook codebook_;
    std::vector<CompressedPassage> passages_;
    std::vector<std::vector<std::uint32_t>> ivf_;
};

/// Three-stage search: probe the nprobe nearest centroids per query token,
/// keep the candidate_cap best candidates by centroid-only MaxSim, then rank
/// those by exact MaxSim over decompressed vectors. Returns every fully scored
/// passage, descending, ties by key.
Ranking search_dense(const DenseIndex& index, MatrixView query, const DenseIndexParams& params,
                     DenseSearchStats* stats = nullptr);

/// Document score = max over its passages. Descending, ties by doc_id.
Ranking maxp_aggregate(std::span<const ScoredDoc> passage_scores);

/// Maps passage keys ("doc#i") to doc ids and applies maxp_aggregate.
Ranking passages_to_documents(const Ranking& passages);

}  // namespace clir
