#include "clir/dense.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "clir/corpus.hpp"
#include "clir/error.hpp"
#include "clir/parallel.hpp"

namespace clir {
namespace {

float dot(std::span<const float> a, std::span<const float> b) noexcept {
    float acc = 0.0F;
    for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    return acc;
}

void normalize_into(std::span<const double> sum, std::span<float> out) {
    double norm = 0.0;
    for (double v : sum) norm += v * v;
    norm = std::sqrt(norm);
    if (!(norm > 0.0)) return;
    for (std::size_t i = 0; i < sum.size(); ++i) out[i] = static_cast<float>(sum[i] / norm);
}

// Unbiased integer in [0, bound) from a 64-bit engine; independent of the
// standard library's distribution implementations.
std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t bound) {
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % bound;
    std::uint64_t x = rng();
    while (x >= limit) x = rng();
    return x % bound;
}

std::vector<std::size_t> sample_indices(std::size_t total, std::size_t count, std::uint64_t seed) {
    std::vector<std::size_t> idx(total);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::mt19937_64 rng(seed);
    for (std::size_t i = 0; i < count; ++i) {
        const std::size_t j = i + uniform_below(rng, total - i);
        std::swap(idx[i], idx[j]);
    }
    idx.resize(count);
    return idx;
}

double elapsed_ms(std::chrono::steady_clock::time_point since) {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - since).count();
}

}  // namespace

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<float> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows * cols) throw ValidationError("matrix data size does not match its shape");
}

void EmbeddingSet::add(std::string key, std::span<const float> vectors) {
    if (dim_ == 0) throw ValidationError("embedding dimension must be positive");
    if (vectors.size() % dim_ != 0) {
        throw ValidationError("embedding '" + key + "' has " + std::to_string(vectors.size()) +
                              " values, not a multiple of dim " + std::to_string(dim_));
    }
    if (by_key_.contains(key)) throw ValidationError("duplicate embedding key '" + key + "'");
    by_key_.emplace(key, keys_.size());
    keys_.push_back(std::move(key));
    data_.insert(data_.end(), vectors.begin(), vectors.end());
    offsets_.push_back(offsets_.back() + vectors.size() / dim_);
}

MatrixView EmbeddingSet::tokens(std::size_t i) const {
    const std::size_t begin = offsets_.at(i);
    return {data_.data() + begin * dim_, offsets_.at(i + 1) - begin, dim_};
}

std::optional<std::size_t> EmbeddingSet::find(const std::string& key) const {
    auto it = by_key_.find(key);
    if (it == by_key_.end()) return std::nullopt;
    return it->second;
}

void EmbeddingSet::validate_norms(double tolerance) const {
    for (std::size_t i = 0; i < size(); ++i) {
        const auto m = tokens(i);
        for (std::size_t t = 0; t < m.rows; ++t) {
            double norm = 0.0;
            for (float v : m.row(t)) norm += static_cast<double>(v) * v;
            norm = std::sqrt(norm);
            if (!(std::abs(norm - 1.0) <= tolerance)) {
                throw ValidationError("embedding '" + keys_[i] + "' token " + std::to_string(t) + " has norm " +
                                      std::to_string(norm) + ", expected 1");
            }
        }
    }
}

std::uint32_t default_centroid_count(std::size_t total_tokens) {
    const double target = 16.0 * std::sqrt(static_cast<double>(total_tokens));
    if (target <= 1.0) return 1;
    const auto exponent = static_cast<unsigned>(std::ceil(std::log2(target)));
    return 1u << std::min(exponent, 31u);
}

std::uint32_t ResidualBuckets::bucket(std::size_t d, float r) const {
    const std::uint32_t cuts = levels() - 1;
    const float* first = boundaries.data() + d * cuts;
    return static_cast<std::uint32_t>(std::upper_bound(first, first + cuts, r) - first);
}

ResidualBuckets fit_residual_buckets(MatrixView residuals, std::uint32_t bits) {
    if (bits < 1 || bits > 8) throw ValidationError("residual bits must be in [1, 8]");
    if (residuals.rows == 0) throw ValidationError("cannot fit residual buckets without samples");
    ResidualBuckets out;
    out.dim = static_cast<std::uint32_t>(residuals.cols);
    out.bits = bits;
    const std::uint32_t levels = out.levels();
    out.boundaries.assign(out.dim * (levels - 1), 0.0F);
    out.values.assign(out.dim * levels, 0.0F);
    out.error_bound.assign(out.dim, 0.0F);

    std::vector<float> column(residuals.rows);
    for (std::size_t d = 0; d < out.dim; ++d) {
        for (std::size_t i = 0; i < residuals.rows; ++i) column[i] = residuals.data[i * residuals.cols + d];
        float* cuts = out.boundaries.data() + d * (levels - 1);
        if (bits > 1) {
            std::vector<float> sorted = column;
            std::sort(sorted.begin(), sorted.end());
            for (std::uint32_t j = 1; j < levels; ++j) cuts[j - 1] = sorted[j * sorted.size() / levels];
        }

        std::vector<double> sum(levels, 0.0);
        std::vector<std::size_t> count(levels, 0);
        for (float r : column) {
            const auto code = out.bucket(d, r);
            sum[code] += r;
            ++count[code];
        }
        float* values = out.values.data() + d * levels;
        for (std::uint32_t j = 0; j < levels; ++j) {
            if (count[j]) {
                values[j] = static_cast<float>(sum[j] / static_cast<double>(count[j]));
            } else if (j == 0) {
                values[j] = cuts[0];
            } else if (j == levels - 1) {
                values[j] = cuts[j - 1];
            } else {
                values[j] = 0.5F * (cuts[j - 1] + cuts[j]);
            }
        }
        for (std::uint32_t j = 1; j < levels; ++j) {
            if (!(values[j] > values[j - 1])) values[j] = std::nextafter(values[j - 1], std::numeric_limits<float>::infinity());
        }
        float bound = 0.0F;
        for (float r : column) bound = std::max(bound, std::abs(r - values[out.bucket(d, r)]));
        out.error_bound[d] = bound;
    }
    return out;
}

std::uint32_t Codebook::nearest_centroid(std::span<const float> v) const {
    std::uint32_t best = 0;
    float best_score = -std::numeric_limits<float>::infinity();
    for (std::uint32_t c = 0; c < num_centroids(); ++c) {
        const float s = dot(v, centroids.row(c));
        if (s > best_score) {
            best_score = s;
            best = c;
        }
    }
    return best;
}

Codebook train_codebook(MatrixView tokens, const DenseIndexParams& params) {
    if (tokens.cols == 0) throw ValidationError("embedding dimension must be positive");
    const std::size_t total = tokens.rows;
    const std::uint32_t k = params.num_centroids ? params.num_centroids : default_centroid_count(total);
    if (total < k) {
        throw ValidationError("only " + std::to_string(total) + " token vectors for " + std::to_string(k) +
                              " centroids; choose num_centroids <= " + std::to_string(total));
    }
    const std::size_t dim = tokens.cols;
    const std::size_t sample_size = std::min<std::size_t>(total, std::size_t{256} * k);
    const auto sample = sample_indices(total, sample_size, params.seed);

    Codebook book;
    book.centroids = Matrix(k, dim);
    for (std::uint32_t c = 0; c < k; ++c) {
        auto src = tokens.row(sample[c]);
        std::copy(src.begin(), src.end(), book.centroids.row(c).begin());
    }

    std::vector<std::uint32_t> assignment(sample_size);
    std::vector<double> sums(static_cast<std::size_t>(k) * dim);
    std::vector<std::size_t> counts(k);
    for (std::uint32_t iter = 0; iter < params.kmeans_iters; ++iter) {
        parallel_for(sample_size, params.threads,
                     [&](std::size_t i) { assignment[i] = book.nearest_centroid(tokens.row(sample[i])); });
        std::fill(sums.begin(), sums.end(), 0.0);
        std::fill(counts.begin(), counts.end(), 0);
        for (std::size_t i = 0; i < sample_size; ++i) {
            const auto v = tokens.row(sample[i]);
            double* acc = sums.data() + static_cast<std::size_t>(assignment[i]) * dim;
            for (std::size_t d = 0; d < dim; ++d) acc[d] += v[d];
            ++counts[assignment[i]];
        }
        for (std::uint32_t c = 0; c < k; ++c) {
            if (counts[c] == 0) continue;
            normalize_into({sums.data() + static_cast<std::size_t>(c) * dim, dim}, book.centroids.row(c));
        }
    }

    Matrix residuals(sample_size, dim);
    parallel_for(sample_size, params.threads, [&](std::size_t i) {
        const auto v = tokens.row(sample[i]);
        const auto c = book.centroids.row(book.nearest_centroid(v));
        auto r = residuals.row(i);
        for (std::size_t d = 0; d < dim; ++d) r[d] = v[d] - c[d];
    });
    book.buckets = fit_residual_buckets(residuals, params.bits);
    return book;
}

std::size_t packed_code_bytes(std::size_t num_tokens, std::uint32_t dim, std::uint32_t bits) noexcept {
    return (num_tokens * dim * bits + 7) / 8;
}

CompressedPassage compress(std::string key, MatrixView vectors, const Codebook& codebook) {
    if (vectors.cols != codebook.dim()) {
        throw ValidationError("passage '" + key + "' has dim " + std::to_string(vectors.cols) + ", codebook has " +
                              std::to_string(codebook.dim()));
    }
    const std::uint32_t dim = codebook.dim();
    const std::uint32_t bits = codebook.bits();
    CompressedPassage out;
    out.key = std::move(key);
    out.centroid_ids.resize(vectors.rows);
    out.residual_codes.assign(packed_code_bytes(vectors.rows, dim, bits), 0);
    std::size_t bit = 0;
    for (std::size_t t = 0; t < vectors.rows; ++t) {
        const auto v = vectors.row(t);
        const auto id = codebook.nearest_centroid(v);
        out.centroid_ids[t] = id;
        const auto c = codebook.centroids.row(id);
        for (std::uint32_t d = 0; d < dim; ++d) {
            const std::uint32_t code = codebook.buckets.bucket(d, v[d] - c[d]);
            for (std::uint32_t b = 0; b < bits; ++b, ++bit) {
                if ((code >> b) & 1u) out.residual_codes[bit / 8] |= static_cast<std::uint8_t>(1u << (bit % 8));
            }
        }
    }
    return out;
}

Matrix decompress(const CompressedPassage& passage, const Codebook& codebook) {
    const std::uint32_t dim = codebook.dim();
    const std::uint32_t bits = codebook.bits();
    const std::size_t n = passage.num_tokens();
    if (passage.residual_codes.size() != packed_code_bytes(n, dim, bits)) {
        throw CorruptionError("passage '" + passage.key + "' has " + std::to_string(passage.residual_codes.size()) +
                              " code bytes, expected " + std::to_string(packed_code_bytes(n, dim, bits)));
    }
    Matrix out(n, dim);
    std::size_t bit = 0;
    for (std::size_t t = 0; t < n; ++t) {
        const auto id = passage.centroid_ids[t];
        if (id >= codebook.num_centroids()) {
            throw CorruptionError("passage '" + passage.key + "' token " + std::to_string(t) + " has centroid id " +
                                  std::to_string(id) + " >= " + std::to_string(codebook.num_centroids()));
        }
        const auto c = codebook.centroids.row(id);
        auto v = out.row(t);
        for (std::uint32_t d = 0; d < dim; ++d) {
            std::uint32_t code = 0;
            for (std::uint32_t b = 0; b < bits; ++b, ++bit) {
                code |= static_cast<std::uint32_t>((passage.residual_codes[bit / 8] >> (bit % 8)) & 1u) << b;
            }
            v[d] = c[d] + codebook.buckets.value(d, code);
        }
    }
    return out;
}

double maxsim(MatrixView query, MatrixView doc) {
    if (doc.rows == 0) throw ValidationError("maxsim over an empty document");
    if (query.cols != doc.cols) throw ValidationError("maxsim dimension mismatch");
    double total = 0.0;
    for (std::size_t i = 0; i < query.rows; ++i) {
        const auto q = query.row(i);
        float best = -std::numeric_limits<float>::infinity();
        for (std::size_t j = 0; j < doc.rows; ++j) best = std::max(best, dot(q, doc.row(j)));
        total += best;
    }
    return total;
}

DenseIndex::DenseIndex(Codebook codebook, std::vector<CompressedPassage> passages)
    : codebook_(std::move(codebook)), passages_(std::move(passages)) {
    build_ivf();
}

DenseIndex DenseIndex::build(const EmbeddingSet& set, const DenseIndexParams& params) {
    Codebook book = train_codebook(set, params);
    std::vector<CompressedPassage> passages(set.size());
    parallel_for(set.size(), params.threads,
                 [&](std::size_t i) { passages[i] = compress(set.key(i), set.tokens(i), book); });
    return DenseIndex(std::move(book), std::move(passages));
}

void DenseIndex::build_ivf() {
    ivf_.assign(codebook_.num_centroids(), {});
    for (std::uint32_t p = 0; p < passages_.size(); ++p) {
        for (auto id : passages_[p].centroid_ids) {
            if (id >= ivf_.size()) {
                throw CorruptionError("passage '" + passages_[p].key + "' references centroid " + std::to_string(id));
            }
            auto& list = ivf_[id];
            if (list.empty() || list.back() != p) list.push_back(p);
        }
    }
}

Ranking search_dense(const DenseIndex& index, MatrixView query, const DenseIndexParams& params,
                     DenseSearchStats* stats) {
    if (index.empty()) return {};
    if (query.rows == 0) throw ValidationError("query has no token vectors");
    const auto& book = index.codebook();
    if (query.cols != book.dim()) throw ValidationError("query dim does not match the index");
    const std::uint32_t k = book.num_centroids();
    if (params.nprobe < 1 || params.nprobe > k) {
        throw ValidationError("nprobe must be in [1, " + std::to_string(k) + "]");
    }
    if (params.candidate_cap < 1) throw ValidationError("candidate_cap must be >= 1");

    DenseSearchStats local;
    auto start = std::chrono::steady_clock::now();

    // Query-token x centroid similarities, reused by stages 1 and 2.
    Matrix qc(query.rows, k);
    for (std::size_t i = 0; i < query.rows; ++i) {
        auto row = qc.row(i);
        for (std::uint32_t c = 0; c < k; ++c) row[c] = dot(query.row(i), book.centroids.row(c));
    }

    std::vector<char> is_candidate(index.size(), 0);
    std::vector<std::uint32_t> order(k);
    for (std::size_t i = 0; i < query.rows; ++i) {
        const auto row = qc.row(i);
        std::iota(order.begin(), order.end(), 0u);
        std::partial_sort(order.begin(), order.begin() + params.nprobe, order.end(), [&](std::uint32_t a, std::uint32_t b) {
            if (row[a] != row[b]) return row[a] > row[b];
            return a < b;
        });
        for (std::uint32_t p = 0; p < params.nprobe; ++p) {
            for (auto passage : index.centroid_passages(order[p])) is_candidate[passage] = 1;
        }
    }
    std::vector<std::uint32_t> candidates;
    for (std::uint32_t p = 0; p < is_candidate.size(); ++p) {
        if (is_candidate[p]) candidates.push_back(p);
    }
    local.stage1_candidates = candidates.size();
    local.stage1_ms = elapsed_ms(start);

    start = std::chrono::steady_clock::now();
    if (candidates.size() > params.candidate_cap) {
        std::vector<std::pair<double, std::uint32_t>> approx;
        approx.reserve(candidates.size());
        for (auto p : candidates) {
            const auto& ids = index.passages()[p].centroid_ids;
            double score = 0.0;
            for (std::size_t i = 0; i < query.rows; ++i) {
                const auto row = qc.row(i);
                float best = -std::numeric_limits<float>::infinity();
                for (auto id : ids) best = std::max(best, row[id]);
                score += best;
            }
            approx.emplace_back(score, p);
        }
        const auto& passages = index.passages();
        std::partial_sort(approx.begin(), approx.begin() + static_cast<std::ptrdiff_t>(params.candidate_cap),
                          approx.end(), [&](const auto& a, const auto& b) {
                              if (a.first != b.first) return a.first > b.first;
                              return passages[a.second].key < passages[b.second].key;
                          });
        approx.resize(params.candidate_cap);
        candidates.clear();
        for (const auto& [score, p] : approx) candidates.push_back(p);
    }
    local.stage2_candidates = candidates.size();
    local.stage2_ms = elapsed_ms(start);

    start = std::chrono::steady_clock::now();
    Ranking ranking(candidates.size());
    parallel_for(candidates.size(), params.threads, [&](std::size_t i) {
        const auto& passage = index.passages()[candidates[i]];
        const Matrix vectors = decompress(passage, book);
        ranking[i] = {passage.key, maxsim(query, vectors)};
    });
    sort_ranking(ranking);
    local.stage3_ms = elapsed_ms(start);

    if (stats) *stats = local;
    return ranking;
}

Ranking maxp_aggregate(std::span<const ScoredDoc> passage_scores) {
    std::unordered_map<std::string, double> best;
    for (const auto& p : passage_scores) {
        auto [it, inserted] = best.emplace(p.id, p.score);
        if (!inserted) it->second = std::max(it->second, p.score);
    }
    Ranking out;
    out.reserve(best.size());
    for (auto& [id, score] : best) out.push_back({id, score});
    sort_ranking(out);
    return out;
}

Ranking passages_to_documents(const Ranking& passages) {
    Ranking by_doc;
    by_doc.reserve(passages.size());
    for (const auto& p : passages) by_doc.push_back({parse_passage_key(p.id).first, p.score});
    return maxp_aggregate(by_doc);
}

}  // namespace clir
