#include "mmndb/retriever.hpp"

#include "mmndb/error.hpp"

#include <cmath>

namespace mmndb {

std::string_view to_string(Strategy s) {
    switch (s) {
    case Strategy::topk: return "topk";
    case Strategy::threshold: return "threshold";
    case Strategy::neural: return "neural";
    case Strategy::mixed: return "mixed";
    }
    return "?";
}

Strategy strategy_from_string(std::string_view s) {
    if (s == "topk") return Strategy::topk;
    if (s == "threshold") return Strategy::threshold;
    if (s == "neural") return Strategy::neural;
    if (s == "mixed") return Strategy::mixed;
    throw ConfigError("unknown strategy '" + std::string(s) + "' (expected topk, threshold, neural or mixed)");
}

void RetrieverConfig::validate() const {
    if (k == 0) throw ConfigError("retriever k must be >= 1");
    if (!std::isfinite(tau)) throw ConfigError("retriever tau must be finite");
}

RetrievalResult retrieve_topk(const EmbeddingStore& store, std::span<const float> q, std::size_t k,
                              SimilarityMetric metric) {
    if (k == 0) throw ContractError("top-k needs k >= 1");
    const auto ranked = rank_all(store, q, metric);
    RetrievalResult r;
    r.scanned = store.size();
    for (std::size_t i = 0; i < ranked.size() && i < k; ++i) {
        r.retrieved.insert(ranked[i].doc_id);
        r.scores.emplace(ranked[i].doc_id, ranked[i].score);
    }
    return r;
}

RetrievalResult retrieve_threshold(const EmbeddingStore& store, std::span<const float> q, double tau) {
    if (!std::isfinite(tau)) throw ContractError("threshold must be finite");
    RetrievalResult r;
    r.scanned = store.size();
    for (const auto& s : rank_all(store, q, SimilarityMetric::cosine)) {
        if (!(s.score > tau)) break;
        r.retrieved.insert(s.doc_id);
        r.scores.emplace(s.doc_id, s.score);
    }
    return r;
}

RetrievalResult retrieve_neural(const EmbeddingStore& store, std::span<const float> q, const SelectorModel& model) {
    if (q.size() != model.dim() || store.dim() != model.dim()) {
        throw ContractError("selector dim " + std::to_string(model.dim()) + " does not match store/query");
    }
    RetrievalResult r;
    r.scanned = store.size();
    for (std::size_t i = 0; i < store.size(); ++i) {
        const auto p = model.predict(q, store.vector_at(i));
        if (p.relevant) {
            r.retrieved.insert(store.ids()[i]);
            r.scores.emplace(store.ids()[i], p.probability);
        }
    }
    return r;
}

RetrievalResult retrieve_mixed(const EmbeddingStore& store, std::span<const float> q, const SelectorModel& model,
                               std::size_t k, SimilarityMetric metric) {
    const auto neural = retrieve_neural(store, q, model);
    auto r = retrieve_topk(store, q, k, metric);
    r.retrieved.insert(neural.retrieved.begin(), neural.retrieved.end());
    const auto ranked = rank_all(store, q, metric);
    for (const auto& s : ranked) {
        if (r.retrieved.contains(s.doc_id)) r.scores[s.doc_id] = s.score;
    }
    return r;
}

RetrievalResult retrieve_batched(const EmbeddingStore& store, std::span<const float> q, const SelectorModel& model,
                                 std::size_t window, std::size_t tolerance, SimilarityMetric metric) {
    if (window == 0) throw ContractError("batched scan needs window >= 1");
    if (q.size() != model.dim() || store.dim() != model.dim()) {
        throw ContractError("selector dim " + std::to_string(model.dim()) + " does not match store/query");
    }
    const auto ranked = rank_all(store, q, metric);
    RetrievalResult r;
    for (std::size_t start = 0; start < ranked.size(); start += window) {
        const std::size_t end = std::min(ranked.size(), start + window);
        std::size_t picked = 0;
        for (std::size_t i = start; i < end; ++i) {
            const auto p = model.predict(q, store.vector(ranked[i].doc_id));
            if (p.relevant) {
                r.retrieved.insert(ranked[i].doc_id);
                r.scores.emplace(ranked[i].doc_id, p.probability);
                ++picked;
            }
        }
        r.scanned = end;
        if (picked <= tolerance) break;
    }
    return r;
}

RetrievalResult retrieve(const EmbeddingStore& store, std::span<const float> q, const RetrieverConfig& config,
                         const SelectorModel* selector) {
    config.validate();
    auto need_selector = [&]() -> const SelectorModel& {
        if (!selector) throw ConfigError("strategy '" + std::string(to_string(config.strategy)) + "' needs a selector");
        return *selector;
    };
    switch (config.strategy) {
    case Strategy::topk: return retrieve_topk(store, q, config.k, config.metric);
    case Strategy::threshold: return retrieve_threshold(store, q, config.tau);
    case Strategy::neural:
        if (config.window > 0) {
            return retrieve_batched(store, q, need_selector(), config.window, config.tolerance, config.metric);
        }
        return retrieve_neural(store, q, need_selector());
    case Strategy::mixed: {
        if (config.window == 0) return retrieve_mixed(store, q, need_selector(), config.k, config.metric);
        auto r = retrieve_batched(store, q, need_selector(), config.window, config.tolerance, config.metric);
        const auto top = retrieve_topk(store, q, config.k, config.metric);
        r.retrieved.insert(top.retrieved.begin(), top.retrieved.end());
        for (const auto& s : rank_all(store, q, config.metric)) {
            if (r.retrieved.contains(s.doc_id)) r.scores[s.doc_id] = s.score;
        }
        return r;
    }
    }
    throw ConfigError("unknown strategy");
}

} // namespace mmndb
