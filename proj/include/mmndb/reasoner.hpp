#pragma once

#include "mmndb/corpus.hpp"
#include "mmndb/embedding_store.hpp"
#include "mmndb/query.hpp"

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <string_view>

namespace mmndb {

/// Per-document partial answer A_p.
struct IntermediateAnswer {
    enum class Kind { number, indecisive, failed };

    Kind kind = Kind::failed;
    std::int64_t value = 0;  // number
    std::string token;       // indecisive token or failure reason
    std::string doc_id;
    std::optional<std::string> raw_text;

    static IntermediateAnswer number(std::int64_t n, std::string doc_id = {});
    static IntermediateAnswer indecisive(std::string token, std::string doc_id = {});
    static IntermediateAnswer failed(std::string reason, std::string doc_id = {});

    bool is_number() const noexcept { return kind == Kind::number; }

    friend bool operator==(const IntermediateAnswer&, const IntermediateAnswer&) = default;
};

std::string_view to_string(IntermediateAnswer::Kind kind);

/// Indecisive tokens recognized by parse_answer, in match priority order.
const std::vector<std::string>& indecisive_tokens();

/// First integer token (digits, or a number word zero..twenty) wins;
/// otherwise an indecisive token; otherwise failed("unparseable").
IntermediateAnswer parse_answer(std::string_view text);

class ReasonerBackend {
public:
    virtual ~ReasonerBackend() = default;

    /// Must be safe to call concurrently.
    virtual IntermediateAnswer reason(const Query& query, const Document& doc) const = 0;
    virtual std::string describe() const = 0;
};

/// Answers from the annotations: the count for COUNT/MAX, presence for IN.
class OracleReasoner final : public ReasonerBackend {
public:
    IntermediateAnswer reason(const Query& query, const Document& doc) const override;
    std::string describe() const override { return "oracle"; }
};

struct NoisyParams {
    double p_err = 0.1;
    std::int64_t max_offset = 1;
    double p_indecisive = 0.0;
    /// Only true values >= this may come back indecisive.
    std::int64_t indecisive_threshold = 5;
    std::uint64_t seed = 0;
    /// Extra error probability per unit of positive cosine between the query
    /// and document embeddings, applied only where the object is absent: a
    /// non-relevant document that looks like the query is more likely to be
    /// miscounted. Needs a store and encoder; 0 disables.
    double score_gain = 0.0;

    void validate() const;
};

/// Seeded perturbation of the oracle. Randomness for a pair comes from
/// hash(seed, query, doc_id) alone, so results do not depend on call order.
class NoisyReasoner final : public ReasonerBackend {
public:
    explicit NoisyReasoner(NoisyParams params, const EmbeddingStore* store = nullptr,
                           const QueryEncoder* encoder = nullptr);

    IntermediateAnswer reason(const Query& query, const Document& doc) const override;
    std::string describe() const override;

    /// Error probability applied to this pair.
    double error_probability(const Query& query, const Document& doc) const;

    const NoisyParams& params() const noexcept { return params_; }

private:
    NoisyParams params_;
    const EmbeddingStore* store_;
    const QueryEncoder* encoder_;
};

struct RemoteConfig {
    /// Base URL, e.g. "http://127.0.0.1:8080" or "http://host:port/prefix".
    std::string endpoint;
    std::chrono::milliseconds timeout{30'000};
    std::size_t max_in_flight = 16;
};

/// Calls POST {endpoint}/v1/reason with {"prompt","image_uri","doc_id"} and
/// parses the {"text"} reply. Transport problems become failed answers.
class RemoteReasoner final : public ReasonerBackend {
public:
    explicit RemoteReasoner(RemoteConfig config);
    ~RemoteReasoner() override;

    IntermediateAnswer reason(const Query& query, const Document& doc) const override;
    std::string describe() const override { return "remote(" + config_.endpoint + ")"; }

private:
    struct Slots;

    RemoteConfig config_;
    std::string scheme_host_port_;
    std::string path_prefix_;
    std::unique_ptr<Slots> slots_;
};

/// One answer per requested doc, fanned out over `parallelism` workers. The
/// result is keyed by doc_id and does not depend on scheduling. Backend
/// exceptions are recorded as failed answers.
std::map<std::string, IntermediateAnswer> reason_all(const ReasonerBackend& backend, const MultimodalDatabase& db,
                                                     const Query& query, const std::set<std::string>& docs,
                                                     unsigned parallelism);

} // namespace mmndb
