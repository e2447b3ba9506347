#pragma once

#include "mmndb/aggregator.hpp"
#include "mmndb/corpus.hpp"
#include "mmndb/evalharness.hpp"
#include "mmndb/reasoner.hpp"
#include "mmndb/retriever.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace mmndb {

enum class BackendKind { oracle, noisy, remote };

std::string_view to_string(BackendKind kind);
BackendKind backend_kind_from_string(std::string_view s);

/// Everything a CLI run needs. Loaded from a `key = value` text file (TOML
/// compatible subset: `#` comments, optional double quotes around values);
/// unknown keys are rejected. Command-line flags are applied on top.
struct EngineConfig {
    std::optional<std::filesystem::path> annotations;
    std::optional<AnnotationFormat> format;
    std::optional<std::filesystem::path> store;
    std::optional<std::filesystem::path> anchors;
    std::optional<std::filesystem::path> selector;

    std::vector<IRSetting::Kind> settings;
    BackendKind backend = BackendKind::oracle;
    RetrieverConfig retriever;
    IndecisivePolicy policy = IndecisivePolicy::as_zero;
    std::vector<QueryType> query_types{QueryType::count, QueryType::in, QueryType::max};

    std::uint64_t seed = 0;
    unsigned parallelism = 1;
    std::filesystem::path out = "mmndb_out";

    NoisyParams noisy;
    std::size_t noisy_ir_n_random = 300;
    std::size_t damaging_n_top = 300;
    RemoteConfig remote;

    SynthParams synth;
    SelectorHyper selector_hyper;

    /// Applies one key. Throws ConfigError for unknown keys or bad values.
    void set(const std::string& key, const std::string& value);

    /// Reads `path`. Relative paths inside are resolved against the file's
    /// directory; referenced input files must exist.
    static EngineConfig load(const std::filesystem::path& path);

    /// Input files named by the config must exist (ConfigError otherwise).
    void check_paths() const;

    AnnotationFormat annotation_format() const;

    /// Effective settings as (key, value) pairs in a fixed order.
    std::vector<std::pair<std::string, std::string>> canonical() const;
    nlohmann::ordered_json to_json() const;
    /// FNV-1a over the canonical key/value dump, as 16 hex digits.
    std::string hash() const;
};

/// Every key `EngineConfig::set` accepts.
const std::vector<std::string>& config_keys();

} // namespace mmndb
