#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "toxtopic/binio.hpp"
#include "toxtopic/error.hpp"
#include "toxtopic/io.hpp"
#include "toxtopic/textprep.hpp"

namespace toxtopic {

// Dense row-major N x d matrix of frozen features.
struct FeatureMatrix {
    std::vector<InstanceId> instance_ids;
    std::vector<double> values;
    std::size_t dim = 0;
    std::string provider_tag;

    std::size_t rows() const noexcept { return instance_ids.size(); }
    std::span<const double> row(std::size_t i) const {
        return std::span(values).subspan(i * dim, dim);
    }
    void append_row(InstanceId id, std::span<const double> x) {
        instance_ids.push_back(id);
        values.insert(values.end(), x.begin(), x.end());
    }
};

struct TfidfModel {
    std::size_t vocab_size = 0;
    std::vector<double> idf;
    std::size_t num_docs = 0;
};

/// Smoothed idf: ln((1 + N) / (1 + df)) + 1, df over train_docs only.
inline TfidfModel fit_tfidf(const std::vector<BowDocument>& train_docs, std::size_t vocab_size) {
    if (train_docs.empty()) throw ValidationError("fit_tfidf: no training documents");
    if (vocab_size == 0) throw ValidationError("fit_tfidf: empty vocabulary");
    std::vector<std::uint64_t> df(vocab_size, 0);
    std::vector<std::size_t> last_seen(vocab_size, SIZE_MAX);
    for (std::size_t d = 0; d < train_docs.size(); ++d) {
        for (auto w : train_docs[d].token_ids) {
            if (w >= vocab_size) throw ValidationError("fit_tfidf: token id out of range");
            if (last_seen[w] != d) {
                last_seen[w] = d;
                ++df[w];
            }
        }
    }
    TfidfModel m;
    m.vocab_size = vocab_size;
    m.num_docs = train_docs.size();
    m.idf.resize(vocab_size);
    const double n1 = 1.0 + static_cast<double>(m.num_docs);
    for (std::size_t w = 0; w < vocab_size; ++w)
        m.idf[w] = std::log(n1 / (1.0 + static_cast<double>(df[w]))) + 1.0;
    return m;
}

inline TfidfModel fit_tfidf(const std::vector<BowDocument>& train_docs, const Vocabulary& vocab) {
    return fit_tfidf(train_docs, vocab.size());
}

/// Raw count times idf, then L2-normalized. Empty docs map to the zero vector.
inline std::vector<double> transform(const TfidfModel& model, const BowDocument& doc) {
    std::vector<double> v(model.vocab_size, 0.0);
    for (auto w : doc.token_ids) {
        if (w >= model.vocab_size) throw ValidationError("transform: token id out of range");
        v[w] += 1.0;
    }
    double norm2 = 0.0;
    for (std::size_t w = 0; w < v.size(); ++w) {
        v[w] *= model.idf[w];
        norm2 += v[w] * v[w];
    }
    if (norm2 > 0.0) {
        const double inv = 1.0 / std::sqrt(norm2);
        for (auto& x : v) x *= inv;
    }
    return v;
}

inline FeatureMatrix tfidf_features(const TfidfModel& model, const std::vector<BowDocument>& docs) {
    FeatureMatrix fm;
    fm.dim = model.vocab_size;
    fm.provider_tag = "tfidf";
    fm.values.reserve(docs.size() * fm.dim);
    for (const auto& doc : docs) fm.append_row(doc.instance_id, transform(model, doc));
    return fm;
}

class EmbeddingTable {
public:
    EmbeddingTable() = default;
    explicit EmbeddingTable(std::size_t dim) : dim_(dim) {}

    std::size_t dim() const noexcept { return dim_; }
    std::size_t size() const noexcept { return entries_.size(); }
    bool contains(InstanceId id) const { return entries_.contains(id); }
    const std::vector<float>& at(InstanceId id) const {
        auto it = entries_.find(id);
        if (it == entries_.end())
            throw ValidationError("no embedding for instance_id " + std::to_string(id));
        return it->second;
    }
    const std::map<InstanceId, std::vector<float>>& entries() const noexcept { return entries_; }

    // Returns false if the id is already present.
    bool insert(InstanceId id, std::vector<float> v) {
        if (v.size() != dim_) throw ValidationError("embedding dimension mismatch");
        return entries_.emplace(id, std::move(v)).second;
    }

private:
    std::size_t dim_ = 0;
    std::map<InstanceId, std::vector<float>> entries_;
};

inline constexpr std::string_view kEmbeddingMagic = "EMB1";

/// EMB1 layout, little-endian: magic, u32 count, u32 dim, then per record
/// u64 instance_id followed by dim float32 values. The byte length must be
/// exactly 12 + count * (8 + 4 * dim). Either the whole table parses or an
/// error is thrown.
inline EmbeddingTable parse_embeddings(std::span<const std::byte> bytes) {
    if (bytes.size() < 12) throw FormatError("embedding file shorter than its 12-byte header");
    if (std::memcmp(bytes.data(), kEmbeddingMagic.data(), 4) != 0) {
        throw FormatError("embedding file has bad magic '" +
                          std::string(reinterpret_cast<const char*>(bytes.data()), 4) +
                          "' (expected EMB1)");
    }
    const std::uint64_t count = binio::load_u32(bytes, 4);
    const std::uint64_t dim = binio::load_u32(bytes, 8);
    if (dim == 0) throw FormatError("embedding dimension is 0");
    const std::uint64_t expected = 12 + count * (8 + 4 * dim);
    if (bytes.size() != expected) {
        throw FormatError("embedding file length " + std::to_string(bytes.size()) +
                          " does not match declared size " + std::to_string(expected) + " (" +
                          std::to_string(count) + " records, d=" + std::to_string(dim) + ")");
    }
    EmbeddingTable table(dim);
    std::size_t off = 12;
    for (std::uint64_t r = 0; r < count; ++r) {
        const InstanceId id = binio::load_u64(bytes, off);
        off += 8;
        std::vector<float> v(dim);
        for (std::uint64_t j = 0; j < dim; ++j, off += 4) {
            v[j] = binio::load_f32(bytes, off);
            if (!std::isfinite(v[j])) {
                throw FormatError("non-finite value in embedding record " + std::to_string(r) +
                                  " (instance_id " + std::to_string(id) + ")");
            }
        }
        if (!table.insert(id, std::move(v)))
            throw FormatError("duplicate instance_id " + std::to_string(id) + " in embedding file");
    }
    return table;
}

inline EmbeddingTable load_embeddings(const std::filesystem::path& path) {
    const std::string data = io::read_file(path);
    return parse_embeddings(binio::as_bytes(data));
}

// Rows in exactly the requested order.
inline FeatureMatrix embedding_features(const EmbeddingTable& table,
                                        std::span<const InstanceId> ids) {
    FeatureMatrix fm;
    fm.dim = table.dim();
    fm.provider_tag = "embeddings";
    fm.values.reserve(ids.size() * fm.dim);
    std::vector<double> row(fm.dim);
    for (auto id : ids) {
        const auto& v = table.at(id);
        for (std::size_t j = 0; j < fm.dim; ++j) row[j] = static_cast<double>(v[j]);
        fm.append_row(id, row);
    }
    return fm;
}

}  // namespace toxtopic
