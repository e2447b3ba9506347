#pragma once

#include "mmndb/aggregator.hpp"
#include "mmndb/corpus.hpp"
#include "mmndb/embedding_store.hpp"
#include "mmndb/reasoner.hpp"
#include "mmndb/retriever.hpp"
#include "mmndb/selector.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

namespace mmndb {

/// How the retrieved set D_r handed to the reasoner is formed.
struct IRSetting {
    enum class Kind { perfect, noisy, damaging, full };

    Kind kind = Kind::perfect;
    /// noisy: random non-relevant documents added per query.
    std::size_t n_random = 300;
    /// damaging: highest-scoring non-relevant documents added per query.
    std::size_t n_top = 300;
    std::uint64_t seed = 0;
    SimilarityMetric damaging_metric = SimilarityMetric::cosine;
    RetrieverConfig retriever;

    static IRSetting perfect();
    static IRSetting noisy(std::size_t n_random, std::uint64_t seed);
    static IRSetting damaging(std::size_t n_top);
    static IRSetting full(RetrieverConfig config);

    std::string name() const;
    nlohmann::ordered_json describe() const;
};

std::string_view to_string(IRSetting::Kind kind);
IRSetting::Kind setting_kind_from_string(std::string_view s);

/// Everything besides the corpus a setting or the benchmark may need.
struct PipelineResources {
    const EmbeddingStore* store = nullptr;
    const QueryEncoder* encoder = nullptr;
    const SelectorModel* selector = nullptr;
};

/// Throws ConfigError when the setting needs a resource that is missing.
std::set<std::string> build_setting(const IRSetting& setting, const MultimodalDatabase& db, const Query& query,
                                    const PipelineResources& resources);

/// Per-query metrics. Optional fields are undefined for this query (an empty
/// TP/FP subset, or a split that does not apply to MAX).
struct QueryMetrics {
    double total_error = 0.0;
    std::optional<double> total_error_tp;
    std::optional<double> total_error_fp;
    std::optional<double> total_error_fn;
    double delta_error = 0.0;
    std::optional<double> delta_error_tp;
    std::optional<double> delta_error_fp;
    double accuracy = 1.0;
    std::optional<double> accuracy_tp;
    std::optional<double> accuracy_fp;
    std::optional<bool> max_hit;
    std::size_t n_tp = 0;
    std::size_t n_fp = 0;
    std::size_t n_fn = 0;

    /// Flattened (name, value) view used for averaging and serialization.
    std::vector<std::pair<std::string, std::optional<double>>> fields() const;
};

/// Names of the QueryMetrics fields, in report order.
const std::vector<std::string>& metric_names();

/// Scores one query run. `answers` must cover `retrieved` (ContractError
/// otherwise). Under IndecisivePolicy::skip, non-numeric answers are left out
/// of the accuracy and delta-error averages; everywhere else they count as 0.
QueryMetrics eval_query(const GroundTruth& gt, const std::set<std::string>& retrieved, const AnswerMap& answers,
                        const QueryAnswer& final_answer, IndecisivePolicy policy = IndecisivePolicy::as_zero);
QueryMetrics eval_query(const MultimodalDatabase& db, const Query& query, const std::set<std::string>& retrieved,
                        const AnswerMap& answers, const QueryAnswer& final_answer,
                        IndecisivePolicy policy = IndecisivePolicy::as_zero);

struct RetrievalSample {
    std::set<std::string> relevant;
    std::set<std::string> retrieved;
};

struct RetrievalMetrics {
    double micro_precision = 0.0;
    double micro_recall = 0.0;
    double micro_f1 = 0.0;
    double macro_precision = 0.0;
    double macro_recall = 0.0;
    double macro_f1 = 0.0;
};

struct PrecisionRecall {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

/// P/R/F1 from confusion counts. P = 1 when nothing was retrieved and nothing
/// was missed, otherwise 0 for an empty retrieval; R = 1 when nothing is
/// relevant; F1 = 0 when P + R = 0.
PrecisionRecall precision_recall(std::size_t tp, std::size_t fp, std::size_t fn);

/// Micro pools the counts over all samples; macro averages per-sample P, R
/// and F1. Throws ContractError on an empty list.
RetrievalMetrics retrieval_metrics(std::span<const RetrievalSample> samples);

struct QueryRecord {
    Query query;
    std::int64_t ground_truth = 0;
    QueryAnswer answer;
    /// Set when the final answer could not be formed (e.g. MAX over nothing).
    std::optional<std::string> answer_error;
    std::size_t retrieved = 0;
    std::size_t non_numeric = 0;
    QueryMetrics metrics;
};

struct MetricSummary {
    double mean = 0.0;
    /// Sample standard deviation over sqrt(n).
    double stderr_ = 0.0;
    std::size_t n = 0;
};

struct EvalReport {
    IRSetting setting;
    QueryType query_type = QueryType::count;
    std::vector<QueryRecord> per_query;
    std::vector<std::pair<std::string, MetricSummary>> summary;
    RetrievalMetrics retrieval;
    nlohmann::ordered_json seeds = nlohmann::ordered_json::object();
    nlohmann::ordered_json config = nlohmann::ordered_json::object();

    const MetricSummary* metric(std::string_view name) const;
};

/// Mean and standard error over the defined values.
MetricSummary summarize(std::span<const double> values);

struct BenchmarkOptions {
    IndecisivePolicy policy = IndecisivePolicy::as_zero;
    /// Queries evaluated concurrently.
    unsigned parallelism = 1;
    nlohmann::ordered_json seeds = nlohmann::ordered_json::object();
    nlohmann::ordered_json config = nlohmann::ordered_json::object();
};

/// For each setting and query: build D_r, reason over it, aggregate, score.
/// Returns one report per (setting, query type), settings in the given order
/// and query types in count/in/max order. Per-query failures are recorded in
/// the report rather than thrown; configuration errors are thrown.
std::vector<EvalReport> run_benchmark(const MultimodalDatabase& db, const PipelineResources& resources,
                                      std::span<const Query> queries, std::span<const IRSetting> settings,
                                      const ReasonerBackend& backend, const BenchmarkOptions& options);

nlohmann::ordered_json to_json(const EvalReport& report);
/// Aligned plain-text table, one block per query type.
std::string render_table(std::span<const EvalReport> reports);
/// Same table from serialized reports (the `report` subcommand input).
std::string render_table(const std::vector<nlohmann::ordered_json>& reports);

/// Every category in the vocabulary crossed with the given query types.
std::vector<Query> all_queries(const MultimodalDatabase& db, std::span<const QueryType> types);

} // namespace mmndb
