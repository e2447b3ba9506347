#include "mmndb/evalharness.hpp"

#include "mmndb/error.hpp"
#include "mmndb/rng.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <iomanip>
#include <sstream>
#include <thread>

namespace mmndb {

using ojson = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Settings

IRSetting IRSetting::perfect() { return {}; }

IRSetting IRSetting::noisy(std::size_t n_random, std::uint64_t seed) {
    IRSetting s;
    s.kind = Kind::noisy;
    s.n_random = n_random;
    s.seed = seed;
    return s;
}

IRSetting IRSetting::damaging(std::size_t n_top) {
    IRSetting s;
    s.kind = Kind::damaging;
    s.n_top = n_top;
    return s;
}

IRSetting IRSetting::full(RetrieverConfig config) {
    IRSetting s;
    s.kind = Kind::full;
    s.retriever = config;
    return s;
}

std::string_view to_string(IRSetting::Kind kind) {
    switch (kind) {
    case IRSetting::Kind::perfect: return "perfect";
    case IRSetting::Kind::noisy: return "noisy";
    case IRSetting::Kind::damaging: return "damaging";
    case IRSetting::Kind::full: return "full";
    }
    return "?";
}

IRSetting::Kind setting_kind_from_string(std::string_view s) {
    if (s == "perfect") return IRSetting::Kind::perfect;
    if (s == "noisy") return IRSetting::Kind::noisy;
    if (s == "damaging") return IRSetting::Kind::damaging;
    if (s == "full") return IRSetting::Kind::full;
    throw ConfigError("unknown setting '" + std::string(s) + "' (expected perfect, noisy, damaging or full)");
}

std::string IRSetting::name() const { return std::string(to_string(kind)); }

ojson IRSetting::describe() const {
    ojson j;
    j["kind"] = name();
    switch (kind) {
    case Kind::perfect: break;
    case Kind::noisy:
        j["n_random"] = n_random;
        j["seed"] = seed;
        break;
    case Kind::damaging:
        j["n_top"] = n_top;
        j["metric"] = to_string(damaging_metric);
        break;
    case Kind::full:
        j["strategy"] = to_string(retriever.strategy);
        j["k"] = retriever.k;
        j["tau"] = retriever.tau;
        j["window"] = retriever.window;
        j["tolerance"] = retriever.tolerance;
        j["metric"] = to_string(retriever.metric);
        break;
    }
    return j;
}

std::set<std::string> build_setting(const IRSetting& setting, const MultimodalDatabase& db, const Query& query,
                                    const PipelineResources& res) {
    const auto gt = ground_truth(db, query);
    std::set<std::string> out = gt.relevant;

    switch (setting.kind) {
    case IRSetting::Kind::perfect: return out;

    case IRSetting::Kind::noisy: {
        std::vector<std::string> pool;
        for (const auto& [id, d] : db.docs()) {
            if (!gt.relevant.contains(id)) pool.push_back(id);
        }
        // partial Fisher-Yates; per-query stream so queries are independent
        rng::Stream stream(rng::Fnv1a{}.add(setting.seed).add("noisy-ir").add(query.key()).value());
        const std::size_t take = std::min(setting.n_random, pool.size());
        for (std::size_t i = 0; i < take; ++i) {
            const auto j = i + static_cast<std::size_t>(stream.below(pool.size() - i));
            std::swap(pool[i], pool[j]);
            out.insert(pool[i]);
        }
        return out;
    }

    case IRSetting::Kind::damaging: {
        if (!res.store || !res.encoder) throw ConfigError("damaging setting needs an embedding store and encoder");
        const auto q = res.encoder->encode(query.category);
        std::size_t added = 0;
        for (const auto& s : rank_all(*res.store, q, setting.damaging_metric)) {
            if (added >= setting.n_top) break;
            if (gt.relevant.contains(s.doc_id) || !db.contains(s.doc_id)) continue;
            out.insert(s.doc_id);
            ++added;
        }
        return out;
    }

    case IRSetting::Kind::full: {
        if (!res.store || !res.encoder) throw ConfigError("full setting needs an embedding store and encoder");
        const auto q = res.encoder->encode(query.category);
        auto r = retrieve(*res.store, q, setting.retriever, res.selector);
        std::set<std::string> retrieved;
        for (const auto& id : r.retrieved) {
            if (db.contains(id)) retrieved.insert(id);
        }
        return retrieved;
    }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Per-query metrics

const std::vector<std::string>& metric_names() {
    static const std::vector<std::string> names{
        "total_error", "total_error_tp", "total_error_fp", "total_error_fn", "delta_error", "delta_error_tp",
        "delta_error_fp", "accuracy", "accuracy_tp", "accuracy_fp", "max_hit", "n_tp", "n_fp", "n_fn",
    };
    return names;
}

std::vector<std::pair<std::string, std::optional<double>>> QueryMetrics::fields() const {
    std::optional<double> hit;
    if (max_hit) hit = *max_hit ? 1.0 : 0.0;
    return {
        {"total_error", total_error},
        {"total_error_tp", total_error_tp},
        {"total_error_fp", total_error_fp},
        {"total_error_fn", total_error_fn},
        {"delta_error", delta_error},
        {"delta_error_tp", delta_error_tp},
        {"delta_error_fp", delta_error_fp},
        {"accuracy", accuracy},
        {"accuracy_tp", accuracy_tp},
        {"accuracy_fp", accuracy_fp},
        {"max_hit", hit},
        {"n_tp", static_cast<double>(n_tp)},
        {"n_fp", static_cast<double>(n_fp)},
        {"n_fn", static_cast<double>(n_fn)},
    };
}

namespace {

struct SubsetStats {
    std::size_t n = 0;
    std::size_t exact = 0;
    double abs_dev = 0.0;

    std::optional<double> accuracy() const {
        if (n == 0) return std::nullopt;
        return static_cast<double>(exact) / static_cast<double>(n);
    }
    std::optional<double> delta() const {
        if (n == 0) return std::nullopt;
        return abs_dev / static_cast<double>(n);
    }
};

} // namespace

QueryMetrics eval_query(const GroundTruth& gt, const std::set<std::string>& retrieved, const AnswerMap& answers,
                        const QueryAnswer& final_answer, IndecisivePolicy policy) {
    const QueryType type = gt.query.type;
    QueryMetrics m;

    auto answer_value = [&](const std::string& id) -> std::pair<std::int64_t, bool> {
        auto it = answers.find(id);
        if (it == answers.end()) throw ContractError("no intermediate answer for retrieved doc '" + id + "'");
        if (!it->second.is_number()) return {0, false};
        const auto v = it->second.value;
        return {type == QueryType::in ? (v >= 1 ? 1 : 0) : v, true};
    };

    SubsetStats all, tp, fp;
    std::int64_t tp_signed = 0;
    std::int64_t fp_sum = 0;
    for (const auto& id : retrieved) {
        const auto [a, numeric] = answer_value(id);
        const std::int64_t g = gt.value_for(id);
        const bool relevant = gt.relevant.contains(id);
        if (relevant) {
            ++m.n_tp;
            tp_signed += a - g;
        } else {
            ++m.n_fp;
            fp_sum += a;
        }
        if (!numeric && policy == IndecisivePolicy::skip) continue;
        auto& subset = relevant ? tp : fp;
        for (SubsetStats* s : {&all, &subset}) {
            ++s->n;
            s->exact += a == g ? 1 : 0;
            s->abs_dev += static_cast<double>(std::llabs(a - g));
        }
    }
    std::int64_t fn_sum = 0;
    for (const auto& id : gt.relevant) {
        if (!retrieved.contains(id)) {
            ++m.n_fn;
            fn_sum += gt.value_for(id);
        }
    }

    m.accuracy = all.accuracy().value_or(1.0);
    m.delta_error = all.delta().value_or(0.0);
    m.accuracy_tp = tp.accuracy();
    m.accuracy_fp = fp.accuracy();
    m.delta_error_tp = tp.delta();
    m.delta_error_fp = fp.delta();

    const double norm = static_cast<double>(std::max<std::int64_t>(gt.global, 1));
    if (type == QueryType::max) {
        const std::int64_t at_witness = final_answer.witness ? gt.value_for(*final_answer.witness) : 0;
        m.total_error = static_cast<double>(std::llabs(at_witness - gt.global)) / norm;
        m.max_hit = gt.max_docs.empty() || (final_answer.witness && gt.max_docs.contains(*final_answer.witness));
    } else {
        m.total_error = static_cast<double>(std::llabs(final_answer.value - gt.global)) / norm;
        m.total_error_tp = static_cast<double>(std::llabs(tp_signed)) / norm;
        m.total_error_fp = static_cast<double>(fp_sum) / norm;
        m.total_error_fn = static_cast<double>(fn_sum) / norm;
    }
    return m;
}

QueryMetrics eval_query(const MultimodalDatabase& db, const Query& query, const std::set<std::string>& retrieved,
                        const AnswerMap& answers, const QueryAnswer& final_answer, IndecisivePolicy policy) {
    return eval_query(ground_truth(db, query), retrieved, answers, final_answer, policy);
}

// ---------------------------------------------------------------------------
// Retrieval metrics

PrecisionRecall precision_recall(std::size_t tp, std::size_t fp, std::size_t fn) {
    PrecisionRecall r;
    if (tp + fp == 0) r.precision = fn == 0 ? 1.0 : 0.0;
    else r.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
    if (tp + fn == 0) r.recall = 1.0;
    else r.recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
    const double s = r.precision + r.recall;
    r.f1 = s == 0.0 ? 0.0 : 2.0 * r.precision * r.recall / s;
    return r;
}

RetrievalMetrics retrieval_metrics(std::span<const RetrievalSample> samples) {
    if (samples.empty()) throw ContractError("retrieval metrics need at least one query");
    std::size_t tp = 0, fp = 0, fn = 0;
    double p_sum = 0.0, r_sum = 0.0, f_sum = 0.0;
    for (const auto& s : samples) {
        std::size_t q_tp = 0;
        for (const auto& id : s.retrieved) q_tp += s.relevant.contains(id) ? 1 : 0;
        const std::size_t q_fp = s.retrieved.size() - q_tp;
        const std::size_t q_fn = s.relevant.size() - q_tp;
        tp += q_tp;
        fp += q_fp;
        fn += q_fn;
        const auto pr = precision_recall(q_tp, q_fp, q_fn);
        p_sum += pr.precision;
        r_sum += pr.recall;
        f_sum += pr.f1;
    }
    const auto micro = precision_recall(tp, fp, fn);
    const double n = static_cast<double>(samples.size());
    return {micro.precision, micro.recall, micro.f1, p_sum / n, r_sum / n, f_sum / n};
}

// ---------------------------------------------------------------------------
// Benchmark

MetricSummary summarize(std::span<const double> values) {
    MetricSummary s;
    s.n = values.size();
    if (values.empty()) return s;
    double sum = 0.0;
    for (double v : values) sum += v;
    s.mean = sum / static_cast<double>(s.n);
    if (s.n > 1) {
        double ss = 0.0;
        for (double v : values) ss += (v - s.mean) * (v - s.mean);
        s.stderr_ = std::sqrt(ss / static_cast<double>(s.n - 1)) / std::sqrt(static_cast<double>(s.n));
    }
    return s;
}

const MetricSummary* EvalReport::metric(std::string_view name) const {
    for (const auto& [n, s] : summary) {
        if (n == name) return &s;
    }
    return nullptr;
}

std::vector<Query> all_queries(const MultimodalDatabase& db, std::span<const QueryType> types) {
    std::vector<Query> out;
    for (const auto type : types) {
        for (const auto& cat : db.vocabulary()) out.push_back(Query::make(type, cat));
    }
    return out;
}

namespace {

struct QueryRun {
    QueryRecord record;
    RetrievalSample sample;
};

QueryRun run_one(const MultimodalDatabase& db, const PipelineResources& res, const Query& query,
                 const IRSetting& setting, const ReasonerBackend& backend, IndecisivePolicy policy) {
    QueryRun run;
    const auto gt = ground_truth(db, query);
    const auto retrieved = build_setting(setting, db, query, res);
    const auto answers = reason_all(backend, db, query, retrieved, 1);

    auto& rec = run.record;
    rec.query = query;
    rec.ground_truth = gt.global;
    rec.retrieved = retrieved.size();
    for (const auto& [id, a] : answers) rec.non_numeric += a.is_number() ? 0 : 1;
    try {
        rec.answer = aggregate(query.type, answers, policy);
    } catch (const EmptyAnswerError& e) {
        rec.answer = QueryAnswer{query.type, 0, std::nullopt, rec.non_numeric, policy};
        rec.answer_error = e.what();
    }
    rec.metrics = eval_query(gt, retrieved, answers, rec.answer, policy);
    run.sample = {gt.relevant, retrieved};
    return run;
}

} // namespace

std::vector<EvalReport> run_benchmark(const MultimodalDatabase& db, const PipelineResources& resources,
                                      std::span<const Query> queries, std::span<const IRSetting> settings,
                                      const ReasonerBackend& backend, const BenchmarkOptions& options) {
    if (options.parallelism == 0) throw ConfigError("parallelism must be >= 1");
    for (const auto& s : settings) {
        if (s.kind == IRSetting::Kind::damaging || s.kind == IRSetting::Kind::full) {
            if (!resources.store || !resources.encoder) {
                throw ConfigError(s.name() + " setting needs an embedding store and query encoder");
            }
        }
        if (s.kind == IRSetting::Kind::full) {
            s.retriever.validate();
            const bool needs_selector =
                s.retriever.strategy == Strategy::neural || s.retriever.strategy == Strategy::mixed;
            if (needs_selector && !resources.selector) {
                throw ConfigError("strategy '" + std::string(to_string(s.retriever.strategy)) +
                                  "' needs a trained selector");
            }
        }
    }

    std::vector<EvalReport> reports;
    for (const auto& setting : settings) {
        std::vector<QueryRun> runs(queries.size());
        std::vector<std::optional<std::string>> errors(queries.size());
        auto work = [&](std::size_t i) {
            try {
                runs[i] = run_one(db, resources, queries[i], setting, backend, options.policy);
            } catch (const std::exception& e) {
                errors[i] = e.what();
            }
        };
        const std::size_t workers = std::min<std::size_t>(options.parallelism, queries.size());
        if (workers <= 1) {
            for (std::size_t i = 0; i < queries.size(); ++i) work(i);
        } else {
            std::atomic<std::size_t> next{0};
            std::vector<std::jthread> pool;
            for (std::size_t w = 0; w < workers; ++w) {
                pool.emplace_back([&] {
                    for (std::size_t i = next.fetch_add(1); i < queries.size(); i = next.fetch_add(1)) work(i);
                });
            }
        }

        for (const auto type : {QueryType::count, QueryType::in, QueryType::max}) {
            EvalReport report;
            report.setting = setting;
            report.query_type = type;
            report.seeds = options.seeds;
            report.config = options.config;
            std::vector<RetrievalSample> samples;
            std::map<std::string, std::vector<double>> values;
            bool any = false;
            for (std::size_t i = 0; i < queries.size(); ++i) {
                if (queries[i].type != type) continue;
                any = true;
                if (errors[i]) {
                    QueryRecord failed;
                    failed.query = queries[i];
                    failed.answer_error = *errors[i];
                    report.per_query.push_back(std::move(failed));
                    continue;
                }
                for (const auto& [name, v] : runs[i].record.metrics.fields()) {
                    if (v) values[name].push_back(*v);
                }
                samples.push_back(runs[i].sample);
                report.per_query.push_back(runs[i].record);
            }
            if (!any) continue;
            for (const auto& name : metric_names()) {
                auto it = values.find(name);
                report.summary.emplace_back(name, it == values.end() ? MetricSummary{} : summarize(it->second));
            }
            if (!samples.empty()) report.retrieval = retrieval_metrics(samples);
            reports.push_back(std::move(report));
        }
    }
    return reports;
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

ojson optional_number(const std::optional<double>& v) { return v ? ojson(*v) : ojson(nullptr); }

} // namespace

ojson to_json(const EvalReport& report) {
    ojson j;
    j["setting"] = report.setting.describe();
    j["query_type"] = to_string(report.query_type);
    ojson per_query = ojson::array();
    for (const auto& r : report.per_query) {
        ojson q;
        q["query"] = r.query.key();
        q["text"] = r.query.raw_text;
        q["ground_truth"] = r.ground_truth;
        q["answer"] = r.answer.value;
        q["witness"] = r.answer.witness ? ojson(*r.answer.witness) : ojson(nullptr);
        q["excluded"] = r.answer.excluded;
        q["retrieved"] = r.retrieved;
        q["error"] = r.answer_error ? ojson(*r.answer_error) : ojson(nullptr);
        ojson metrics;
        for (const auto& [name, v] : r.metrics.fields()) metrics[name] = optional_number(v);
        q["metrics"] = std::move(metrics);
        per_query.push_back(std::move(q));
    }
    j["per_query"] = std::move(per_query);
    ojson mean, se, n;
    for (const auto& [name, s] : report.summary) {
        mean[name] = s.n ? ojson(s.mean) : ojson(nullptr);
        se[name] = s.n ? ojson(s.stderr_) : ojson(nullptr);
        n[name] = s.n;
    }
    j["mean"] = std::move(mean);
    j["stderr"] = std::move(se);
    j["n"] = std::move(n);
    j["retrieval"] = {
        {"micro_precision", report.retrieval.micro_precision}, {"micro_recall", report.retrieval.micro_recall},
        {"micro_f1", report.retrieval.micro_f1},               {"macro_precision", report.retrieval.macro_precision},
        {"macro_recall", report.retrieval.macro_recall},       {"macro_f1", report.retrieval.macro_f1},
    };
    j["seeds"] = report.seeds;
    j["config"] = report.config;
    return j;
}

namespace {

struct Column {
    std::string header;
    std::string metric;
};

std::vector<Column> columns_for(std::string_view query_type) {
    if (query_type == "max") {
        return {{"Total Error", "total_error"}, {"Delta Error", "delta_error"}, {"Accuracy", "max_hit"}};
    }
    return {
        {"Error", "total_error"},          {"Error TP", "total_error_tp"}, {"Error FP", "total_error_fp"},
        {"Error FN", "total_error_fn"},    {"Delta", "delta_error"},       {"Delta TP", "delta_error_tp"},
        {"Delta FP", "delta_error_fp"},    {"Accuracy", "accuracy"},       {"Acc. TP", "accuracy_tp"},
        {"Acc. FP", "accuracy_fp"},
    };
}

std::string cell(const ojson& report, const std::string& metric) {
    const auto& mean = report.at("mean");
    if (!mean.contains(metric) || mean.at(metric).is_null()) return "N/A";
    // A split over a subset that was empty for every query is not meaningful.
    if ((metric == "total_error_fp" || metric == "delta_error_fp" || metric == "accuracy_fp") &&
        report.at("mean").value("n_fp", 0.0) == 0.0) {
        return "N/A";
    }
    if (metric == "total_error_fn" && report.at("mean").value("n_fn", 0.0) == 0.0) return "N/A";
    std::ostringstream os;
    os << std::fixed << std::setprecision(3) << mean.at(metric).get<double>() << " +- "
       << report.at("stderr").at(metric).get<double>();
    return os.str();
}

} // namespace

std::string render_table(const std::vector<ojson>& reports) {
    std::ostringstream out;
    for (const std::string type : {"count", "in", "max"}) {
        std::vector<const ojson*> rows;
        for (const auto& r : reports) {
            if (r.at("query_type") == type) rows.push_back(&r);
        }
        if (rows.empty()) continue;
        const auto cols = columns_for(type);
        std::vector<std::vector<std::string>> grid;
        std::vector<std::string> header{"Setting"};
        for (const auto& c : cols) header.push_back(c.header);
        grid.push_back(header);
        for (const auto* r : rows) {
            std::vector<std::string> line{r->at("setting").at("kind").get<std::string>()};
            for (const auto& c : cols) line.push_back(cell(*r, c.metric));
            grid.push_back(std::move(line));
        }
        std::vector<std::size_t> width(header.size(), 0);
        for (const auto& line : grid) {
            for (std::size_t i = 0; i < line.size(); ++i) width[i] = std::max(width[i], line[i].size());
        }
        std::string upper = type;
        for (auto& c : upper) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
        out << "== " << upper << " ==\n";
        for (std::size_t row = 0; row < grid.size(); ++row) {
            for (std::size_t i = 0; i < grid[row].size(); ++i) {
                out << (i ? " | " : "") << std::left << std::setw(static_cast<int>(width[i])) << grid[row][i];
            }
            out << '\n';
            if (row == 0) {
                for (std::size_t i = 0; i < width.size(); ++i) out << (i ? "-+-" : "") << std::string(width[i], '-');
                out << '\n';
            }
        }
        out << '\n';
    }
    return out.str();
}

std::string render_table(std::span<const EvalReport> reports) {
    std::vector<ojson> js;
    for (const auto& r : reports) js.push_back(to_json(r));
    return render_table(js);
}

} // namespace mmndb
