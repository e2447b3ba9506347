#include "mmndb/config.hpp"

#include "mmndb/error.hpp"
#include "mmndb/rng.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>

namespace mmndb {

namespace fs = std::filesystem;

std::string_view to_string(BackendKind kind) {
    switch (kind) {
    case BackendKind::oracle: return "oracle";
    case BackendKind::noisy: return "noisy";
    case BackendKind::remote: return "remote";
    }
    return "?";
}

BackendKind backend_kind_from_string(std::string_view s) {
    if (s == "oracle") return BackendKind::oracle;
    if (s == "noisy") return BackendKind::noisy;
    if (s == "remote") return BackendKind::remote;
    throw ConfigError("unknown backend '" + std::string(s) + "' (expected oracle, noisy or remote)");
}

namespace {

std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return std::string(s.substr(first, last - first + 1));
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
    T out{};
    const auto* end = value.data() + value.size();
    auto [ptr, ec] = std::from_chars(value.data(), end, out);
    if (ec != std::errc{} || ptr != end) throw ConfigError("invalid value '" + value + "' for " + key);
    return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "true") return true;
    if (value == "false") return false;
    throw ConfigError("invalid value '" + value + "' for " + key + " (expected true or false)");
}

std::vector<std::string> split_list(const std::string& value) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream in(value);
    while (std::getline(in, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

// Shortest text that reads back to the same double.
std::string fmt_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

std::string join(const std::vector<std::string>& items) {
    std::string out;
    for (const auto& s : items) out += (out.empty() ? "" : ",") + s;
    return out;
}

struct Key {
    std::function<void(EngineConfig&, const std::string&, const std::string&)> set;
    std::function<std::string(const EngineConfig&)> get;
};

const std::vector<std::pair<std::string, Key>>& key_table() {
    using C = EngineConfig;
    auto path_key = [](std::optional<fs::path> C::*member) {
        return Key{[member](C& c, const std::string&, const std::string& v) { c.*member = fs::path(v); },
                   [member](const C& c) { return c.*member ? (c.*member)->string() : std::string{}; }};
    };
    static const std::vector<std::pair<std::string, Key>> table{
        {"annotations", path_key(&C::annotations)},
        {"format",
         {[](C& c, const std::string&, const std::string& v) { c.format = annotation_format_from_string(v); },
          [](const C& c) { return c.format ? std::string(to_string(*c.format)) : std::string{}; }}},
        {"store", path_key(&C::store)},
        {"anchors", path_key(&C::anchors)},
        {"selector", path_key(&C::selector)},
        {"setting",
         {[](C& c, const std::string&, const std::string& v) {
              c.settings.clear();
              for (const auto& s : split_list(v)) c.settings.push_back(setting_kind_from_string(s));
          },
          [](const C& c) {
              std::vector<std::string> names;
              for (auto k : c.settings) names.emplace_back(to_string(k));
              return join(names);
          }}},
        {"backend",
         {[](C& c, const std::string&, const std::string& v) { c.backend = backend_kind_from_string(v); },
          [](const C& c) { return std::string(to_string(c.backend)); }}},
        {"strategy",
         {[](C& c, const std::string&, const std::string& v) { c.retriever.strategy = strategy_from_string(v); },
          [](const C& c) { return std::string(to_string(c.retriever.strategy)); }}},
        {"k",
         {[](C& c, const std::string& k, const std::string& v) { c.retriever.k = parse_number<std::size_t>(k, v); },
          [](const C& c) { return std::to_string(c.retriever.k); }}},
        {"tau",
         {[](C& c, const std::string& k, const std::string& v) { c.retriever.tau = parse_number<double>(k, v); },
          [](const C& c) { return fmt_double(c.retriever.tau); }}},
        {"window",
         {[](C& c, const std::string& k, const std::string& v) { c.retriever.window = parse_number<std::size_t>(k, v); },
          [](const C& c) { return std::to_string(c.retriever.window); }}},
        {"tolerance",
         {[](C& c, const std::string& k, const std::string& v) {
              c.retriever.tolerance = parse_number<std::size_t>(k, v);
          },
          [](const C& c) { return std::to_string(c.retriever.tolerance); }}},
        {"metric",
         {[](C& c, const std::string&, const std::string& v) { c.retriever.metric = similarity_metric_from_string(v); },
          [](const C& c) { return std::string(to_string(c.retriever.metric)); }}},
        {"policy",
         {[](C& c, const std::string&, const std::string& v) { c.policy = indecisive_policy_from_string(v); },
          [](const C& c) { return std::string(to_string(c.policy)); }}},
        {"query_types",
         {[](C& c, const std::string& k, const std::string& v) {
              c.query_types.clear();
              for (const auto& s : split_list(v)) {
                  auto t = query_type_from_string(s);
                  if (!t) throw ConfigError("invalid value '" + s + "' for " + k);
                  c.query_types.push_back(*t);
              }
          },
          [](const C& c) {
              std::vector<std::string> names;
              for (auto t : c.query_types) names.emplace_back(to_string(t));
              return join(names);
          }}},
        {"seed",
         {[](C& c, const std::string& k, const std::string& v) { c.seed = parse_number<std::uint64_t>(k, v); },
          [](const C& c) { return std::to_string(c.seed); }}},
        {"parallelism",
         {[](C& c, const std::string& k, const std::string& v) {
              c.parallelism = parse_number<unsigned>(k, v);
              if (c.parallelism == 0) throw ConfigError("parallelism must be >= 1");
          },
          [](const C& c) { return std::to_string(c.parallelism); }}},
        {"out",
         {[](C& c, const std::string&, const std::string& v) { c.out = v; },
          [](const C& c) { return c.out.string(); }}},
        {"noisy.p_err",
         {[](C& c, const std::string& k, const std::string& v) { c.noisy.p_err = parse_number<double>(k, v); },
          [](const C& c) { return fmt_double(c.noisy.p_err); }}},
        {"noisy.max_offset",
         {[](C& c, const std::string& k, const std::string& v) {
              c.noisy.max_offset = parse_number<std::int64_t>(k, v);
          },
          [](const C& c) { return std::to_string(c.noisy.max_offset); }}},
        {"noisy.p_indecisive",
         {[](C& c, const std::string& k, const std::string& v) { c.noisy.p_indecisive = parse_number<double>(k, v); },
          [](const C& c) { return fmt_double(c.noisy.p_indecisive); }}},
        {"noisy.indecisive_threshold",
         {[](C& c, const std::string& k, const std::string& v) {
              c.noisy.indecisive_threshold = parse_number<std::int64_t>(k, v);
          },
          [](const C& c) { return std::to_string(c.noisy.indecisive_threshold); }}},
        {"noisy.score_gain",
         {[](C& c, const std::string& k, const std::string& v) { c.noisy.score_gain = parse_number<double>(k, v); },
          [](const C& c) { return fmt_double(c.noisy.score_gain); }}},
        {"noisy_ir.n_random",
         {[](C& c, const std::string& k, const std::string& v) {
              c.noisy_ir_n_random = parse_number<std::size_t>(k, v);
          },
          [](const C& c) { return std::to_string(c.noisy_ir_n_random); }}},
        {"damaging.n_top",
         {[](C& c, const std::string& k, const std::string& v) { c.damaging_n_top = parse_number<std::size_t>(k, v); },
          [](const C& c) { return std::to_string(c.damaging_n_top); }}},
        {"remote.endpoint",
         {[](C& c, const std::string&, const std::string& v) { c.remote.endpoint = v; },
          [](const C& c) { return c.remote.endpoint; }}},
        {"remote.timeout_ms",
         {[](C& c, const std::string& k, const std::string& v) {
              c.remote.timeout = std::chrono::milliseconds(parse_number<std::int64_t>(k, v));
          },
          [](const C& c) { return std::to_string(c.remote.timeout.count()); }}},
        {"remote.max_in_flight",
         {[](C& c, const std::string& k, const std::string& v) {
              c.remote.max_in_flight = parse_number<std::size_t>(k, v);
          },
          [](const C& c) { return std::to_string(c.remote.max_in_flight); }}},
        {"synth.dim",
         {[](C& c, const std::string& k, const std::string& v) { c.synth.dim = parse_number<std::uint32_t>(k, v); },
          [](const C& c) { return std::to_string(c.synth.dim); }}},
        {"synth.alpha",
         {[](C& c, const std::string& k, const std::string& v) { c.synth.signal_weight = parse_number<double>(k, v); },
          [](const C& c) { return fmt_double(c.synth.signal_weight); }}},
        {"synth.sigma",
         {[](C& c, const std::string& k, const std::string& v) { c.synth.noise_sigma = parse_number<double>(k, v); },
          [](const C& c) { return fmt_double(c.synth.noise_sigma); }}},
        {"synth.orthogonal",
         {[](C& c, const std::string& k, const std::string& v) { c.synth.orthogonal_anchors = parse_bool(k, v); },
          [](const C& c) { return std::string(c.synth.orthogonal_anchors ? "true" : "false"); }}},
        {"selector.hidden",
         {[](C& c, const std::string& k, const std::string& v) {
              c.selector_hyper.hidden = parse_number<std::uint32_t>(k, v);
          },
          [](const C& c) { return std::to_string(c.selector_hyper.hidden); }}},
        {"selector.epochs",
         {[](C& c, const std::string& k, const std::string& v) {
              c.selector_hyper.epochs = parse_number<std::uint32_t>(k, v);
          },
          [](const C& c) { return std::to_string(c.selector_hyper.epochs); }}},
        {"selector.lr",
         {[](C& c, const std::string& k, const std::string& v) {
              c.selector_hyper.learning_rate = parse_number<double>(k, v);
          },
          [](const C& c) { return fmt_double(c.selector_hyper.learning_rate); }}},
        {"selector.balance",
         {[](C& c, const std::string& k, const std::string& v) {
              c.selector_hyper.balance_classes = parse_bool(k, v);
          },
          [](const C& c) { return std::string(c.selector_hyper.balance_classes ? "true" : "false"); }}},
    };
    return table;
}

} // namespace

const std::vector<std::string>& config_keys() {
    static const std::vector<std::string> keys = [] {
        std::vector<std::string> out;
        for (const auto& [k, v] : key_table()) out.push_back(k);
        return out;
    }();
    return keys;
}

void EngineConfig::set(const std::string& key, const std::string& value) {
    for (const auto& [k, entry] : key_table()) {
        if (k == key) {
            entry.set(*this, key, value);
            if (key.starts_with("noisy.")) noisy.validate();
            if (key == "k" || key == "window" || key == "tolerance") retriever.validate();
            return;
        }
    }
    throw ConfigError("unknown config key '" + key + "'");
}

EngineConfig EngineConfig::load(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
    EngineConfig cfg;
    const fs::path base = path.parent_path();
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::string t = trim(line);
        if (t.empty() || t.front() == '#') continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos) {
            throw ConfigError(path.string() + ":" + std::to_string(line_no) + ": expected 'key = value'");
        }
        const std::string key = trim(t.substr(0, eq));
        std::string value = trim(t.substr(eq + 1));
        if (value.size() >= 2 && value.front() == '"' && value.back() == '"') {
            value = value.substr(1, value.size() - 2);
        } else if (const auto hash = value.find(" #"); hash != std::string::npos) {
            value = trim(value.substr(0, hash));
        }
        try {
            cfg.set(key, value);
        } catch (const ConfigError& e) {
            throw ConfigError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    for (auto* p : {&cfg.annotations, &cfg.store, &cfg.anchors, &cfg.selector}) {
        if (*p && p->value().is_relative()) *p = base / p->value();
    }
    if (cfg.out.is_relative() && !base.empty()) cfg.out = base / cfg.out;
    cfg.check_paths();
    return cfg;
}

void EngineConfig::check_paths() const {
    const std::pair<const char*, const std::optional<fs::path>*> inputs[] = {
        {"annotations", &annotations}, {"store", &store}, {"anchors", &anchors}, {"selector", &selector}};
    for (const auto& [name, p] : inputs) {
        if (*p && !fs::exists(**p)) {
            throw ConfigError(std::string(name) + " file '" + (*p)->string() + "' does not exist");
        }
    }
}

AnnotationFormat EngineConfig::annotation_format() const {
    if (format) return *format;
    if (annotations && annotations->extension() == ".json") return AnnotationFormat::coco_json;
    return AnnotationFormat::simple_jsonl;
}

std::vector<std::pair<std::string, std::string>> EngineConfig::canonical() const {
    std::vector<std::pair<std::string, std::string>> out;
    for (const auto& [k, entry] : key_table()) out.emplace_back(k, entry.get(*this));
    return out;
}

nlohmann::ordered_json EngineConfig::to_json() const {
    nlohmann::ordered_json j = nlohmann::ordered_json::object();
    for (const auto& [k, v] : canonical()) j[k] = v;
    return j;
}

std::string EngineConfig::hash() const {
    rng::Fnv1a h;
    for (const auto& [k, v] : canonical()) h.add(k).add(v);
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h.value()));
    return buf;
}

} // namespace mmndb
