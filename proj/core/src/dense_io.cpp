#include <fstream>

#include <json.hpp>

#include "binary_io.hpp"
#include "clir/dense.hpp"
#include "clir/error.hpp"

namespace clir {
namespace {

constexpr char kEmbeddingMagic[] = "LIEMB";
constexpr std::uint32_t kEmbeddingVersion = 1;
constexpr char kCodebookMagic[] = "LICBK";
constexpr char kCodesMagic[] = "LICOD";
constexpr const char* kIndexFormat = "clir-dense-index";
constexpr std::uint32_t kIndexVersion = 1;

void write_floats(std::ostream& out, const std::vector<float>& values) {
    detail::write_bytes(out, values.data(), values.size() * sizeof(float));
}

std::vector<float> read_floats(std::istream& in, std::size_t count, const char* what) {
    std::vector<float> values(count);
    detail::read_bytes(in, values.data(), count * sizeof(float), what);
    return values;
}

}  // namespace

EmbeddingSet load_embeddings(const std::filesystem::path& path, bool check_norms) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path.string());
    const std::string source = path.string();
    detail::expect_magic(in, kEmbeddingMagic, 5, source);
    const auto version = detail::read_le<std::uint32_t>(in, "version");
    if (version != kEmbeddingVersion) {
        throw FormatError(source + ": unsupported embedding file version " + std::to_string(version));
    }
    const auto dim = detail::read_le<std::uint32_t>(in, "dim");
    if (dim == 0) throw FormatError(source + ": zero embedding dimension");
    const auto count = detail::read_le<std::uint64_t>(in, "passage count");

    EmbeddingSet set(dim);
    std::vector<float> buffer;
    for (std::uint64_t i = 0; i < count; ++i) {
        auto key = detail::read_short_string(in, "record key");
        const auto tokens = detail::read_le<std::uint32_t>(in, "token count");
        buffer.resize(static_cast<std::size_t>(tokens) * dim);
        detail::read_bytes(in, buffer.data(), buffer.size() * sizeof(float), "token vectors");
        try {
            set.add(std::move(key), buffer);
        } catch (const ValidationError& e) {
            throw FormatError(source + ": " + e.what());
        }
    }
    if (in.peek() != std::char_traits<char>::eof()) throw FormatError(source + ": trailing bytes after last record");
    if (check_norms) set.validate_norms();
    return set;
}

void write_embeddings(const std::filesystem::path& path, const EmbeddingSet& set) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    detail::write_bytes(out, kEmbeddingMagic, 5);
    detail::write_le<std::uint32_t>(out, kEmbeddingVersion);
    detail::write_le<std::uint32_t>(out, set.dim());
    detail::write_le<std::uint64_t>(out, set.size());
    for (std::size_t i = 0; i < set.size(); ++i) {
        const auto m = set.tokens(i);
        detail::write_short_string(out, set.key(i));
        detail::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(m.rows));
        detail::write_bytes(out, m.data, m.rows * m.cols * sizeof(float));
    }
    if (!out) throw Error("write failed for " + path.string());
}

void DenseIndex::save(const std::filesystem::path& dir) const {
    std::filesystem::create_directories(dir);
    const auto& book = codebook_;

    nlohmann::ordered_json meta;
    meta["format"] = kIndexFormat;
    meta["version"] = kIndexVersion;
    meta["dim"] = book.dim();
    meta["bits"] = book.bits();
    meta["num_centroids"] = book.num_centroids();
    meta["num_passages"] = passages_.size();
    std::ofstream meta_out(dir / "meta.json", std::ios::binary);
    meta_out << meta.dump(2) << '\n';

    std::ofstream cb(dir / "codebook.bin", std::ios::binary);
    detail::write_bytes(cb, kCodebookMagic, 5);
    detail::write_le<std::uint32_t>(cb, kIndexVersion);
    detail::write_le<std::uint32_t>(cb, book.dim());
    detail::write_le<std::uint32_t>(cb, book.bits());
    detail::write_le<std::uint32_t>(cb, book.num_centroids());
    write_floats(cb, book.centroids.data());
    write_floats(cb, book.buckets.boundaries);
    write_floats(cb, book.buckets.values);
    write_floats(cb, book.buckets.error_bound);

    std::ofstream codes(dir / "codes.bin", std::ios::binary);
    detail::write_bytes(codes, kCodesMagic, 5);
    detail::write_le<std::uint32_t>(codes, kIndexVersion);
    detail::write_le<std::uint64_t>(codes, passages_.size());
    for (const auto& p : passages_) {
        detail::write_le<std::uint32_t>(codes, static_cast<std::uint32_t>(p.num_tokens()));
        detail::write_bytes(codes, p.centroid_ids.data(), p.centroid_ids.size() * sizeof(std::uint32_t));
        detail::write_bytes(codes, p.residual_codes.data(), p.residual_codes.size());
    }

    std::ofstream keys(dir / "keys.tsv", std::ios::binary);
    for (const auto& p : passages_) keys << p.key << '\n';

    if (!meta_out || !cb || !codes || !keys) throw Error("failed writing dense index to " + dir.string());
}

DenseIndex DenseIndex::load(const std::filesystem::path& dir) {
    std::ifstream meta_in(dir / "meta.json");
    if (!meta_in) throw FormatError("missing " + (dir / "meta.json").string());
    nlohmann::json meta;
    try {
        meta = nlohmann::json::parse(meta_in);
    } catch (const nlohmann::json::exception& e) {
        throw FormatError((dir / "meta.json").string() + ": " + e.what());
    }
    if (meta.value("format", "") != kIndexFormat) throw FormatError(dir.string() + " is not a dense index");
    if (meta.value("version", 0u) != kIndexVersion) throw FormatError(dir.string() + ": unsupported dense index version");

    std::ifstream cb(dir / "codebook.bin", std::ios::binary);
    if (!cb) throw FormatError("missing " + (dir / "codebook.bin").string());
    detail::expect_magic(cb, kCodebookMagic, 5, (dir / "codebook.bin").string());
    if (detail::read_le<std::uint32_t>(cb, "version") != kIndexVersion) throw FormatError("codebook version mismatch");
    const auto dim = detail::read_le<std::uint32_t>(cb, "dim");
    const auto bits = detail::read_le<std::uint32_t>(cb, "bits");
    const auto k = detail::read_le<std::uint32_t>(cb, "centroid count");
    if (dim == 0 || k == 0 || bits < 1 || bits > 8) throw FormatError("codebook header out of range");
    Codebook book;
    book.centroids = Matrix(k, dim, read_floats(cb, static_cast<std::size_t>(k) * dim, "centroids"));
    book.buckets.dim = dim;
    book.buckets.bits = bits;
    const std::uint32_t levels = 1u << bits;
    book.buckets.boundaries = read_floats(cb, static_cast<std::size_t>(dim) * (levels - 1), "bucket boundaries");
    book.buckets.values = read_floats(cb, static_cast<std::size_t>(dim) * levels, "bucket values");
    book.buckets.error_bound = read_floats(cb, dim, "error bounds");

    std::ifstream keys_in(dir / "keys.tsv");
    if (!keys_in) throw FormatError("missing " + (dir / "keys.tsv").string());
    std::vector<std::string> keys;
    for (std::string line; std::getline(keys_in, line);) keys.push_back(line);

    std::ifstream codes(dir / "codes.bin", std::ios::binary);
    if (!codes) throw FormatError("missing " + (dir / "codes.bin").string());
    detail::expect_magic(codes, kCodesMagic, 5, (dir / "codes.bin").string());
    if (detail::read_le<std::uint32_t>(codes, "version") != kIndexVersion) throw FormatError("codes version mismatch");
    const auto count = detail::read_le<std::uint64_t>(codes, "passage count");
    if (count != keys.size() || count != meta.value("num_passages", std::uint64_t{0})) {
        throw FormatError(dir.string() + ": passage count disagrees between codes.bin, keys.tsv and meta.json");
    }
    std::vector<CompressedPassage> passages(count);
    for (std::uint64_t i = 0; i < count; ++i) {
        auto& p = passages[i];
        p.key = std::move(keys[i]);
        const auto n = detail::read_le<std::uint32_t>(codes, "token count");
        p.centroid_ids.resize(n);
        detail::read_bytes(codes, p.centroid_ids.data(), n * sizeof(std::uint32_t), "centroid ids");
        p.residual_codes.resize(packed_code_bytes(n, dim, bits));
        detail::read_bytes(codes, p.residual_codes.data(), p.residual_codes.size(), "residual codes");
    }
    return DenseIndex(std::move(book), std::move(passages));
}

}  // namespace clir
