#include "mmndb/cli.hpp"

#include "mmndb/aggregator.hpp"
#include "mmndb/config.hpp"
#include "mmndb/corpus.hpp"
#include "mmndb/embedding_store.hpp"
#include "mmndb/error.hpp"
#include "mmndb/evalharness.hpp"
#include "mmndb/query.hpp"
#include "mmndb/reasoner.hpp"
#include "mmndb/retriever.hpp"
#include "mmndb/selector.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <fstream>
#include <memory>
#include <ostream>

namespace mmndb {

namespace {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;

class UsageError : public Error {
public:
    using Error::Error;
};

struct Overrides {
    std::optional<std::string> config_path;
    std::vector<std::pair<std::string, std::string>> values;
};

void add_common_flags(CLI::App* sub, Overrides& ov) {
    sub->add_option_function<std::string>(
        "--config", [&ov](const std::string& v) { ov.config_path = v; }, "Engine config file (key = value)");
    auto flag = [&](const std::string& name, const std::string& key, const std::string& help) {
        sub->add_option_function<std::string>(
            name, [&ov, key](const std::string& v) { ov.values.emplace_back(key, v); }, help);
    };
    flag("--annotations", "annotations", "Annotation file");
    flag("--format", "format", "Annotation format: coco-json | simple-jsonl");
    flag("--store", "store", "Embedding store file");
    flag("--anchors", "anchors", "Query embedding table (store format)");
    flag("--selector", "selector", "Selector model file");
    flag("--setting", "setting", "perfect | noisy | damaging | full (comma list for eval)");
    flag("--backend", "backend", "oracle | noisy | remote");
    flag("--strategy", "strategy", "topk | threshold | neural | mixed");
    flag("--k", "k", "Top-K size");
    flag("--tau", "tau", "Cosine threshold");
    flag("--window", "window", "Batched-scan window (0 = full scan)");
    flag("--tolerance", "tolerance", "Batched-scan stop tolerance");
    flag("--policy", "policy", "Indecisive answer policy: as_zero | skip");
    flag("--seed", "seed", "Seed for every randomized component");
    flag("--parallelism", "parallelism", "Worker count");
    flag("--out", "out", "Output path");
    sub->add_option_function<std::vector<std::string>>(
        "--set",
        [&ov](const std::vector<std::string>& kvs) {
            for (const auto& kv : kvs) {
                const auto eq = kv.find('=');
                if (eq == std::string::npos) throw CLI::ValidationError("--set", "expected key=value, got " + kv);
                ov.values.emplace_back(kv.substr(0, eq), kv.substr(eq + 1));
            }
        },
        "Any config key as key=value");
}

EngineConfig resolve_config(const Overrides& ov) {
    EngineConfig cfg = ov.config_path ? EngineConfig::load(*ov.config_path) : EngineConfig{};
    for (const auto& [k, v] : ov.values) cfg.set(k, v);
    cfg.check_paths();
    cfg.noisy.seed = cfg.seed;
    cfg.synth.seed = cfg.seed;
    cfg.selector_hyper.seed = cfg.seed;
    return cfg;
}

MultimodalDatabase load_db(const EngineConfig& cfg) {
    if (!cfg.annotations) throw UsageError("no annotation file configured (use --annotations or the config file)");
    return ingest_annotations(*cfg.annotations, cfg.annotation_format());
}

struct Embeddings {
    std::optional<EmbeddingStore> store;
    std::optional<QueryEncoder> encoder;
    std::optional<SelectorModel> selector;

    PipelineResources resources() const {
        return {store ? &*store : nullptr, encoder ? &*encoder : nullptr, selector ? &*selector : nullptr};
    }
};

Embeddings load_embeddings(const EngineConfig& cfg) {
    Embeddings e;
    if (cfg.store) e.store = read_store(*cfg.store);
    if (cfg.anchors) e.encoder = QueryEncoder(read_store(*cfg.anchors), cfg.seed);
    if (e.store && !e.encoder) throw UsageError("an embedding store needs a query table (--anchors)");
    if (e.store && e.encoder && e.store->dim() != e.encoder->dim()) {
        throw ContractError("store dim " + std::to_string(e.store->dim()) + " does not match query table dim " +
                            std::to_string(e.encoder->dim()));
    }
    if (cfg.selector) {
        e.selector = read_selector(*cfg.selector);
        if (e.store && e.selector->dim() != e.store->dim()) {
            throw ContractError("selector dim does not match store dim");
        }
    }
    return e;
}

std::unique_ptr<ReasonerBackend> make_backend(const EngineConfig& cfg, const Embeddings& emb) {
    switch (cfg.backend) {
    case BackendKind::oracle: return std::make_unique<OracleReasoner>();
    case BackendKind::noisy: {
        const EmbeddingStore* store = emb.store ? &*emb.store : nullptr;
        const QueryEncoder* encoder = emb.encoder ? &*emb.encoder : nullptr;
        return std::make_unique<NoisyReasoner>(cfg.noisy, store, encoder);
    }
    case BackendKind::remote: return std::make_unique<RemoteReasoner>(cfg.remote);
    }
    throw ConfigError("unknown backend");
}

ojson manifest(const std::string& command, const EngineConfig& cfg, const std::vector<std::string>& outputs) {
    ojson m;
    m["command"] = command;
    m["config_hash"] = cfg.hash();
    m["seeds"] = {{"seed", cfg.seed}};
    m["templates_version"] = canonical_templates().version;
    m["config"] = cfg.to_json();
    m["outputs"] = outputs;
    return m;
}

void write_json(const fs::path& path, const ojson& j) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open '" + path.string() + "' for writing");
    out << j.dump(2) << '\n';
}

std::string supported_templates() {
    std::string s = "supported query templates:\n";
    for (auto t : {QueryType::count, QueryType::in, QueryType::max}) {
        s += "  " + canonical_templates().query_template(t).text() + "\n";
    }
    s += "  What is the maximum number of {object}?\n";
    return s;
}

// ---------------------------------------------------------------------------

int cmd_ingest(const EngineConfig& cfg, std::ostream& out) {
    const auto db = load_db(cfg);
    ojson summary;
    summary["format"] = to_string(cfg.annotation_format());
    summary["docs"] = db.size();
    summary["categories"] = db.vocabulary().size();
    summary["instances"] = db.total_instances();
    summary["vocabulary"] = db.vocabulary();
    out << summary.dump(2) << '\n';
    return kExitOk;
}

int cmd_synth_embed(const EngineConfig& cfg, const std::optional<std::string>& anchors_out, std::ostream& out) {
    const auto db = load_db(cfg);
    const auto synth = synth_generate(db, cfg.synth);
    const fs::path store_path = cfg.out;
    const fs::path anchors_path = anchors_out ? fs::path(*anchors_out) : fs::path(store_path.string() + ".anchors");
    write_store(synth.store, store_path);
    write_store(synth.encoder.table(), anchors_path);
    const fs::path manifest_path = store_path.string() + ".manifest.json";
    write_json(manifest_path, manifest("synth-embed", cfg, {store_path.string(), anchors_path.string()}));
    ojson summary{{"store", store_path.string()},
                  {"anchors", anchors_path.string()},
                  {"docs", synth.store.size()},
                  {"dim", synth.store.dim()},
                  {"manifest", manifest_path.string()}};
    out << summary.dump(2) << '\n';
    return kExitOk;
}

int cmd_train_selector(const EngineConfig& cfg, std::ostream& out) {
    const auto db = load_db(cfg);
    const auto emb = load_embeddings(cfg);
    if (!emb.store || !emb.encoder) throw UsageError("train-selector needs --store and --anchors");
    const QueryType count_only[] = {QueryType::count};
    const auto queries = all_queries(db, count_only);
    const auto model = train_selector(*emb.store, db, queries, *emb.encoder, cfg.selector_hyper);
    write_selector(model, cfg.out);

    std::vector<RetrievalSample> samples;
    for (const auto& q : queries) {
        const auto r = retrieve_neural(*emb.store, emb.encoder->encode(q.category), model);
        samples.push_back({ground_truth(db, q).relevant, r.retrieved});
    }
    const auto m = retrieval_metrics(samples);
    const fs::path manifest_path = cfg.out.string() + ".manifest.json";
    write_json(manifest_path, manifest("train-selector", cfg, {cfg.out.string()}));
    ojson summary{{"selector", cfg.out.string()},
                  {"parameters", model.parameter_count()},
                  {"train_queries", queries.size()},
                  {"train_micro_precision", m.micro_precision},
                  {"train_micro_recall", m.micro_recall},
                  {"manifest", manifest_path.string()}};
    out << summary.dump(2) << '\n';
    return kExitOk;
}

int cmd_query(const EngineConfig& cfg, const std::string& text, std::ostream& out) {
    const Query query = parse_query(text);
    const auto db = load_db(cfg);
    const auto emb = load_embeddings(cfg);
    const auto backend = make_backend(cfg, emb);

    std::set<std::string> docs;
    std::string source = "all";
    if (emb.store && emb.encoder) {
        const auto r = retrieve(*emb.store, emb.encoder->encode(query.category), cfg.retriever,
                                emb.selector ? &*emb.selector : nullptr);
        for (const auto& id : r.retrieved) {
            if (db.contains(id)) docs.insert(id);
        }
        source = std::string(to_string(cfg.retriever.strategy));
    } else {
        for (const auto& [id, d] : db.docs()) docs.insert(id);
    }

    const auto answers = reason_all(*backend, db, query, docs, cfg.parallelism);
    const auto answer = aggregate(query.type, answers, cfg.policy);

    ojson j;
    j["query"] = {{"type", to_string(query.type)}, {"category", query.category}, {"text", query.raw_text}};
    j["value"] = answer.value;
    j["witness"] = answer.witness ? ojson(*answer.witness) : ojson(nullptr);
    j["excluded"] = answer.excluded;
    j["policy"] = to_string(answer.policy);
    j["retrieval"] = source;
    j["retrieved"] = docs.size();
    j["backend"] = backend->describe();
    j["manifest"] = {{"config_hash", cfg.hash()}, {"seed", cfg.seed}};
    out << j.dump() << '\n';
    return kExitOk;
}

int cmd_eval(const EngineConfig& cfg, std::ostream& out) {
    const auto db = load_db(cfg);
    const auto emb = load_embeddings(cfg);
    const auto backend = make_backend(cfg, emb);
    const auto res = emb.resources();

    std::vector<IRSetting::Kind> kinds = cfg.settings;
    if (kinds.empty()) {
        kinds = {IRSetting::Kind::perfect, IRSetting::Kind::noisy};
        if (res.store && res.encoder) {
            kinds.push_back(IRSetting::Kind::damaging);
            const bool needs_selector =
                cfg.retriever.strategy == Strategy::neural || cfg.retriever.strategy == Strategy::mixed;
            if (!needs_selector || res.selector) kinds.push_back(IRSetting::Kind::full);
        }
    }
    std::vector<IRSetting> settings;
    for (auto k : kinds) {
        switch (k) {
        case IRSetting::Kind::perfect: settings.push_back(IRSetting::perfect()); break;
        case IRSetting::Kind::noisy: settings.push_back(IRSetting::noisy(cfg.noisy_ir_n_random, cfg.seed)); break;
        case IRSetting::Kind::damaging: settings.push_back(IRSetting::damaging(cfg.damaging_n_top)); break;
        case IRSetting::Kind::full: settings.push_back(IRSetting::full(cfg.retriever)); break;
        }
    }

    const auto queries = all_queries(db, cfg.query_types);
    BenchmarkOptions options;
    options.policy = cfg.policy;
    options.parallelism = cfg.parallelism;
    options.seeds = {{"seed", cfg.seed}};
    options.config = cfg.to_json();
    // Worker count and output location never change the results, so they
    // stay out of the report.
    options.config.erase("parallelism");
    options.config.erase("out");
    const auto reports = run_benchmark(db, res, queries, settings, *backend, options);

    fs::create_directories(cfg.out);
    std::vector<std::string> files;
    ojson all = ojson::array();
    for (const auto& r : reports) {
        auto j = to_json(r);
        const auto path = cfg.out / ("report_" + r.setting.name() + "_" + std::string(to_string(r.query_type)) + ".json");
        write_json(path, j);
        files.push_back(path.string());
        all.push_back(std::move(j));
    }
    {
        std::ofstream table(cfg.out / "table.txt", std::ios::trunc);
        table << render_table(reports);
    }
    files.push_back((cfg.out / "table.txt").string());
    write_json(cfg.out / "manifest.json", manifest("eval", cfg, files));

    ojson summary{{"out", cfg.out.string()}, {"reports", files}, {"config_hash", cfg.hash()}};
    out << summary.dump(2) << '\n';
    return kExitOk;
}

int cmd_report(const std::vector<std::string>& inputs, std::ostream& out) {
    std::vector<fs::path> files;
    for (const auto& in : inputs) {
        const fs::path p(in);
        if (fs::is_directory(p)) {
            std::vector<fs::path> found;
            for (const auto& e : fs::directory_iterator(p)) {
                const auto name = e.path().filename().string();
                if (name.starts_with("report_") && e.path().extension() == ".json") found.push_back(e.path());
            }
            std::sort(found.begin(), found.end());
            files.insert(files.end(), found.begin(), found.end());
        } else {
            files.push_back(p);
        }
    }
    if (files.empty()) throw UsageError("no report files given");

    std::vector<ojson> reports;
    for (const auto& f : files) {
        std::ifstream in(f);
        if (!in) throw NotFoundError("cannot open report '" + f.string() + "'");
        ojson j;
        try {
            j = ojson::parse(in);
        } catch (const ojson::parse_error& e) {
            throw FormatError("malformed report '" + f.string() + "': " + e.what(), e.byte);
        }
        if (j.is_array()) {
            for (auto& r : j) reports.push_back(std::move(r));
        } else {
            reports.push_back(std::move(j));
        }
    }
    // settings in pipeline order regardless of file name order
    auto rank = [](const ojson& r) {
        static const std::vector<std::string> order{"perfect", "noisy", "damaging", "full"};
        const auto kind = r.at("setting").at("kind").get<std::string>();
        return std::find(order.begin(), order.end(), kind) - order.begin();
    };
    std::stable_sort(reports.begin(), reports.end(), [&](const ojson& a, const ojson& b) { return rank(a) < rank(b); });
    try {
        out << render_table(reports);
    } catch (const ojson::exception& e) {
        throw FormatError(std::string("report is missing fields: ") + e.what(), 0);
    }
    return kExitOk;
}

} // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Multimodal neural database engine: COUNT / IN / MAX queries over annotated image corpora"};
    app.require_subcommand(1);
    app.footer(supported_templates());

    Overrides ov;
    std::string query_text;
    std::optional<std::string> anchors_out;
    std::vector<std::string> report_inputs;

    auto* ingest = app.add_subcommand("ingest", "Validate an annotation file and print a corpus summary");
    add_common_flags(ingest, ov);
    auto* synth = app.add_subcommand("synth-embed", "Generate a synthetic planted-similarity embedding store");
    add_common_flags(synth, ov);
    synth->add_option_function<std::string>(
        "--anchors-out", [&](const std::string& v) { anchors_out = v; }, "Where to write the query table");
    auto* train = app.add_subcommand("train-selector", "Train the neural relevance selector");
    add_common_flags(train, ov);
    auto* query = app.add_subcommand("query", "Answer one natural-language query (JSON on stdout)");
    add_common_flags(query, ov);
    query->add_option("text", query_text, "Query text")->required();
    auto* eval = app.add_subcommand("eval", "Run the benchmark settings and write EvalReport files");
    add_common_flags(eval, ov);
    auto* report = app.add_subcommand("report", "Render EvalReport JSON files as tables");
    report->add_option("--in", report_inputs, "Report files or eval output directories")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n" << "run with --help for usage\n";
        return kExitUsage;
    }

    try {
        if (report->parsed()) return cmd_report(report_inputs, out);
        const EngineConfig cfg = resolve_config(ov);
        if (ingest->parsed()) return cmd_ingest(cfg, out);
        if (synth->parsed()) return cmd_synth_embed(cfg, anchors_out, out);
        if (train->parsed()) return cmd_train_selector(cfg, out);
        if (query->parsed()) return cmd_query(cfg, query_text, out);
        if (eval->parsed()) return cmd_eval(cfg, out);
    } catch (const UnsupportedQueryError& e) {
        err << "error: " << e.what() << "\n" << supported_templates();
        return kExitUsage;
    } catch (const QueryParseError& e) {
        err << "error: " << e.what() << "\n" << supported_templates();
        return kExitUsage;
    } catch (const UsageError& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitData;
    }
    return kExitUsage;
}

} // namespace mmndb
