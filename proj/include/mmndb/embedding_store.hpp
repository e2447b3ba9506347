#pragma once

#include "mmndb/corpus.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace mmndb {

enum class SimilarityMetric : std::uint8_t { dot = 0, cosine = 1 };

std::string_view to_string(SimilarityMetric metric);
SimilarityMetric similarity_metric_from_string(std::string_view s);

/// dot: sum q_i d_i. cosine: dot / (|q| |d|). Throws ContractError on a dim
/// mismatch or, for cosine, a zero vector.
double score(SimilarityMetric metric, std::span<const float> q, std::span<const float> d);

double l2_norm(std::span<const float> v);

struct ScoredDoc {
    std::string doc_id;
    double score = 0.0;

    friend bool operator==(const ScoredDoc&, const ScoredDoc&) = default;
};

/// Static, query-independent document vectors. Entries are kept sorted by
/// doc_id in one contiguous block; nothing here ever sees a query.
class EmbeddingStore {
public:
    explicit EmbeddingStore(std::uint32_t dim, SimilarityMetric metric_hint = SimilarityMetric::cosine,
                            std::uint8_t generator_id = 0);

    /// Builds a store from (id, vector) pairs. Throws ContractError on
    /// duplicate ids, wrong dims or non-finite components.
    static EmbeddingStore from_entries(std::uint32_t dim, std::map<std::string, std::vector<float>> entries,
                                       SimilarityMetric metric_hint = SimilarityMetric::cosine,
                                       std::uint8_t generator_id = 0);

    std::uint32_t dim() const noexcept { return dim_; }
    std::size_t size() const noexcept { return ids_.size(); }
    bool empty() const noexcept { return ids_.empty(); }
    SimilarityMetric metric_hint() const noexcept { return metric_hint_; }
    /// Algorithm identifier of the generator that produced the vectors (0 = external).
    std::uint8_t generator_id() const noexcept { return generator_id_; }

    const std::vector<std::string>& ids() const noexcept { return ids_; }
    std::span<const float> vector_at(std::size_t index) const;
    double norm_at(std::size_t index) const { return norms_.at(index); }

    std::optional<std::size_t> index_of(std::string_view doc_id) const;
    bool contains(std::string_view doc_id) const { return index_of(doc_id).has_value(); }
    /// Throws NotFoundError.
    std::span<const float> vector(std::string_view doc_id) const;

    friend bool operator==(const EmbeddingStore& a, const EmbeddingStore& b);

private:
    std::uint32_t dim_;
    SimilarityMetric metric_hint_;
    std::uint8_t generator_id_;
    std::vector<std::string> ids_;
    std::vector<float> data_;
    std::vector<double> norms_;
};

/// Every document scored against q, sorted by descending score with ties
/// broken by ascending doc_id. Throws ContractError on a dim mismatch.
std::vector<ScoredDoc> rank_all(const EmbeddingStore& store, std::span<const float> q, SimilarityMetric metric);

/// Maps a query category to its embedding. Backed by a table of per-category
/// vectors (the synthetic anchors, or text embeddings computed elsewhere).
class QueryEncoder {
public:
    QueryEncoder() = default;
    explicit QueryEncoder(EmbeddingStore table, std::uint64_t fallback_seed = 0)
        : table_(std::move(table)), fallback_seed_(fallback_seed) {}

    std::uint32_t dim() const { return table_ ? table_->dim() : 0; }
    bool has(std::string_view category) const { return table_ && table_->contains(category); }

    /// Known categories return their table vector. Unknown categories get a
    /// deterministic pseudo-random unit vector derived from the fallback seed.
    std::vector<float> encode(std::string_view category) const;

    const EmbeddingStore& table() const;

private:
    std::optional<EmbeddingStore> table_;
    std::uint64_t fallback_seed_ = 0;
};

struct SynthParams {
    std::uint32_t dim = 64;
    double signal_weight = 1.0;
    double noise_sigma = 0.0;
    std::uint64_t seed = 0;
    /// Gram-Schmidt the category anchors when there are no more categories
    /// than dimensions.
    bool orthogonal_anchors = true;
};

struct SynthResult {
    EmbeddingStore store;
    QueryEncoder encoder;
};

/// Planted-similarity embeddings: each category gets a seeded unit anchor;
/// doc = normalize(sum_c counts[c] * alpha * anchor_c + sigma * eps_d).
SynthResult synth_generate(const MultimodalDatabase& db, const SynthParams& params);

void write_store(const EmbeddingStore& store, std::ostream& out);
void write_store(const EmbeddingStore& store, const std::filesystem::path& path);
/// Throws FormatError (with the offending byte offset) on bad magic, bad
/// version, or truncation.
EmbeddingStore read_store(std::istream& in);
EmbeddingStore read_store(const std::filesystem::path& path);

} // namespace mmndb
