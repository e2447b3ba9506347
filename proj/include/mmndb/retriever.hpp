#pragma once

#include "mmndb/embedding_store.hpp"
#include "mmndb/selector.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>

namespace mmndb {

enum class Strategy { topk, threshold, neural, mixed };

std::string_view to_string(Strategy s);
Strategy strategy_from_string(std::string_view s);

struct RetrieverConfig {
    Strategy strategy = Strategy::mixed;
    std::size_t k = 50;
    double tau = 0.25;
    /// Batched-scan window. 0 disables the scan: neural/mixed score the whole store.
    std::size_t window = 0;
    std::size_t tolerance = 0;
    SimilarityMetric metric = SimilarityMetric::dot;

    /// Throws ConfigError for k == 0 or non-finite tau.
    void validate() const;
};

struct RetrievalResult {
    std::set<std::string> retrieved;
    std::map<std::string, double> scores;
    /// Documents examined by a batched scan; store size otherwise.
    std::size_t scanned = 0;
};

/// The K best documents of rank_all (ties by ascending doc_id).
RetrievalResult retrieve_topk(const EmbeddingStore& store, std::span<const float> q, std::size_t k,
                              SimilarityMetric metric = SimilarityMetric::dot);

/// Documents whose cosine with q is strictly greater than tau.
RetrievalResult retrieve_threshold(const EmbeddingStore& store, std::span<const float> q, double tau);

/// Documents the selector marks relevant. Scores are selector probabilities.
RetrievalResult retrieve_neural(const EmbeddingStore& store, std::span<const float> q, const SelectorModel& model);

/// Union of the top-K and the neural selection; scores come from rank_all.
RetrievalResult retrieve_mixed(const EmbeddingStore& store, std::span<const float> q, const SelectorModel& model,
                               std::size_t k, SimilarityMetric metric = SimilarityMetric::dot);

/// Online-aggregation scan: walk the rank_all order in windows of `window`
/// documents, keep the selector's relevant picks, and stop after the first
/// window with at most `tolerance` picks (that window's picks are kept).
RetrievalResult retrieve_batched(const EmbeddingStore& store, std::span<const float> q, const SelectorModel& model,
                                 std::size_t window, std::size_t tolerance,
                                 SimilarityMetric metric = SimilarityMetric::dot);

/// Dispatch on config.strategy. neural and mixed need a selector; with a
/// non-zero window they run the batched scan in place of the full selector pass.
RetrievalResult retrieve(const EmbeddingStore& store, std::span<const float> q, const RetrieverConfig& config,
                         const SelectorModel* selector);

} // namespace mmndb
