#include "mmndb/reasoner.hpp"

#include "mmndb/error.hpp"
#include "mmndb/rng.hpp"

#include <httplib.h>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <atomic>
#include <cctype>
#include <thread>
#include <vector>

namespace mmndb {

IntermediateAnswer IntermediateAnswer::number(std::int64_t n, std::string doc_id) {
    IntermediateAnswer a;
    a.kind = Kind::number;
    a.value = std::max<std::int64_t>(n, 0);
    a.doc_id = std::move(doc_id);
    return a;
}

IntermediateAnswer IntermediateAnswer::indecisive(std::string token, std::string doc_id) {
    IntermediateAnswer a;
    a.kind = Kind::indecisive;
    a.token = std::move(token);
    a.doc_id = std::move(doc_id);
    return a;
}

IntermediateAnswer IntermediateAnswer::failed(std::string reason, std::string doc_id) {
    IntermediateAnswer a;
    a.kind = Kind::failed;
    a.token = std::move(reason);
    a.doc_id = std::move(doc_id);
    return a;
}

std::string_view to_string(IntermediateAnswer::Kind kind) {
    switch (kind) {
    case IntermediateAnswer::Kind::number: return "number";
    case IntermediateAnswer::Kind::indecisive: return "indecisive";
    case IntermediateAnswer::Kind::failed: return "failed";
    }
    return "?";
}

const std::vector<std::string>& indecisive_tokens() {
    static const std::vector<std::string> tokens{"many", "few", "a lot", "several", "some"};
    return tokens;
}

namespace {

const std::vector<std::string_view>& number_words() {
    static const std::vector<std::string_view> words{
        "zero",    "one",     "two",       "three",    "four",     "five",    "six",
        "seven",   "eight",   "nine",      "ten",      "eleven",   "twelve",  "thirteen",
        "fourteen", "fifteen", "sixteen",  "seventeen", "eighteen", "nineteen", "twenty",
    };
    return words;
}

std::string lower(std::string_view s) {
    std::string out(s);
    for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

bool is_word_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }

// Position of `phrase` in `text` at word boundaries, or npos.
std::size_t find_phrase(const std::string& text, std::string_view phrase) {
    std::size_t pos = 0;
    while ((pos = text.find(phrase, pos)) != std::string::npos) {
        const bool left_ok = pos == 0 || !is_word_char(text[pos - 1]);
        const std::size_t end = pos + phrase.size();
        const bool right_ok = end >= text.size() || !is_word_char(text[end]);
        if (left_ok && right_ok) return pos;
        ++pos;
    }
    return std::string::npos;
}

} // namespace

IntermediateAnswer parse_answer(std::string_view text) {
    const std::string t = lower(text);
    for (std::size_t i = 0; i < t.size();) {
        if (!is_word_char(t[i])) {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j < t.size() && is_word_char(t[j])) ++j;
        const std::string_view word(t.data() + i, j - i);
        if (std::all_of(word.begin(), word.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); })) {
            // Digits beyond int64 are not a plausible count.
            if (word.size() > 18) return IntermediateAnswer::failed("unparseable");
            auto a = IntermediateAnswer::number(std::stoll(std::string(word)));
            a.raw_text = std::string(text);
            return a;
        }
        const auto& words = number_words();
        if (auto it = std::find(words.begin(), words.end(), word); it != words.end()) {
            auto a = IntermediateAnswer::number(it - words.begin());
            a.raw_text = std::string(text);
            return a;
        }
        i = j;
    }

    std::size_t best = std::string::npos;
    std::string token;
    for (const auto& tok : indecisive_tokens()) {
        const auto pos = find_phrase(t, tok);
        if (pos < best) {
            best = pos;
            token = tok;
        }
    }
    IntermediateAnswer a = best == std::string::npos ? IntermediateAnswer::failed("unparseable")
                                                     : IntermediateAnswer::indecisive(token);
    a.raw_text = std::string(text);
    return a;
}

IntermediateAnswer OracleReasoner::reason(const Query& query, const Document& doc) const {
    auto it = doc.counts.find(query.category);
    const std::int64_t n = it == doc.counts.end() ? 0 : it->second;
    return IntermediateAnswer::number(query.type == QueryType::in ? (n >= 1 ? 1 : 0) : n, doc.doc_id);
}

void NoisyParams::validate() const {
    if (!(p_err >= 0.0 && p_err <= 1.0)) throw ConfigError("noisy p_err must be in [0, 1]");
    if (!(p_indecisive >= 0.0 && p_indecisive <= 1.0)) throw ConfigError("noisy p_indecisive must be in [0, 1]");
    if (max_offset < 1) throw ConfigError("noisy max_offset must be >= 1");
    if (!(score_gain >= 0.0)) throw ConfigError("noisy score_gain must be >= 0");
}

NoisyReasoner::NoisyReasoner(NoisyParams params, const EmbeddingStore* store, const QueryEncoder* encoder)
    : params_(params), store_(store), encoder_(encoder) {
    params_.validate();
    if (params_.score_gain > 0.0 && (!store_ || !encoder_)) {
        throw ConfigError("noisy score_gain needs an embedding store and query encoder");
    }
}

std::string NoisyReasoner::describe() const {
    return "noisy(p_err=" + std::to_string(params_.p_err) + ", seed=" + std::to_string(params_.seed) + ")";
}

double NoisyReasoner::error_probability(const Query& query, const Document& doc) const {
    double p = params_.p_err;
    if (params_.score_gain > 0.0 && OracleReasoner{}.reason(query, doc).value == 0) {
        const auto idx = store_->index_of(doc.doc_id);
        if (idx && store_->norm_at(*idx) > 0.0) {
            const auto q = encoder_->encode(query.category);
            const double s = score(SimilarityMetric::cosine, q, store_->vector_at(*idx));
            p += params_.score_gain * std::max(0.0, s);
        }
    }
    return std::clamp(p, 0.0, 1.0);
}

IntermediateAnswer NoisyReasoner::reason(const Query& query, const Document& doc) const {
    const auto truth = OracleReasoner{}.reason(query, doc);
    const std::int64_t v = truth.value;
    rng::Stream stream(rng::Fnv1a{}.add(params_.seed).add(query.key()).add(doc.doc_id).value());
    const double u_indecisive = stream.uniform();
    const double u_err = stream.uniform();
    const auto offset_draw = static_cast<std::int64_t>(stream.below(static_cast<std::uint64_t>(2 * params_.max_offset)));

    if (v >= params_.indecisive_threshold && u_indecisive < params_.p_indecisive) {
        return IntermediateAnswer::indecisive("many", doc.doc_id);
    }
    if (u_err < error_probability(query, doc)) {
        // {-e..-1} then {1..e}
        const std::int64_t delta = offset_draw < params_.max_offset ? offset_draw - params_.max_offset
                                                                    : offset_draw - params_.max_offset + 1;
        return IntermediateAnswer::number(std::max<std::int64_t>(0, v + delta), doc.doc_id);
    }
    return IntermediateAnswer::number(v, doc.doc_id);
}

struct RemoteReasoner::Slots {
    std::mutex mu;
    std::condition_variable cv;
    std::size_t in_flight = 0;
};

RemoteReasoner::RemoteReasoner(RemoteConfig config)
    : config_(std::move(config)), slots_(std::make_unique<Slots>()) {
    if (config_.endpoint.empty()) throw ConfigError("remote backend needs an endpoint");
    if (config_.max_in_flight == 0) throw ConfigError("remote max_in_flight must be >= 1");
    std::string url = config_.endpoint;
    while (!url.empty() && url.back() == '/') url.pop_back();
    const auto scheme_end = url.find("://");
    const auto path_start = url.find('/', scheme_end == std::string::npos ? 0 : scheme_end + 3);
    scheme_host_port_ = url.substr(0, path_start);
    path_prefix_ = path_start == std::string::npos ? "" : url.substr(path_start);
}

RemoteReasoner::~RemoteReasoner() = default;

IntermediateAnswer RemoteReasoner::reason(const Query& query, const Document& doc) const {
    {
        std::unique_lock lock(slots_->mu);
        slots_->cv.wait(lock, [&] { return slots_->in_flight < config_.max_in_flight; });
        ++slots_->in_flight;
    }
    struct Release {
        Slots& s;
        ~Release() {
            {
                std::lock_guard lock(s.mu);
                --s.in_flight;
            }
            s.cv.notify_one();
        }
    } release{*slots_};

    nlohmann::json body{
        {"prompt", render_prompt(query, canonical_templates().prompt_template(query.type))},
        {"image_uri", doc.meta.contains("image_uri") ? doc.meta.at("image_uri") : std::string{}},
        {"doc_id", doc.doc_id},
    };

    httplib::Client client(scheme_host_port_);
    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(config_.timeout);
    const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(config_.timeout - secs);
    client.set_connection_timeout(secs.count(), usecs.count());
    client.set_read_timeout(secs.count(), usecs.count());
    client.set_write_timeout(secs.count(), usecs.count());

    auto res = client.Post(path_prefix_ + "/v1/reason", body.dump(), "application/json");
    if (!res) return IntermediateAnswer::failed("transport: " + httplib::to_string(res.error()), doc.doc_id);
    if (res->status != 200) {
        return IntermediateAnswer::failed("transport: HTTP " + std::to_string(res->status), doc.doc_id);
    }
    try {
        const auto reply = nlohmann::json::parse(res->body);
        auto answer = parse_answer(reply.at("text").get<std::string>());
        answer.doc_id = doc.doc_id;
        return answer;
    } catch (const nlohmann::json::exception& e) {
        return IntermediateAnswer::failed(std::string("transport: bad response body: ") + e.what(), doc.doc_id);
    }
}

std::map<std::string, IntermediateAnswer> reason_all(const ReasonerBackend& backend, const MultimodalDatabase& db,
                                                     const Query& query, const std::set<std::string>& docs,
                                                     unsigned parallelism) {
    if (parallelism == 0) throw ContractError("parallelism must be >= 1");
    const std::vector<std::string> ids(docs.begin(), docs.end());
    std::vector<IntermediateAnswer> answers(ids.size());

    auto work = [&](std::size_t i) {
        try {
            answers[i] = backend.reason(query, db.doc(ids[i]));
        } catch (const std::exception& e) {
            answers[i] = IntermediateAnswer::failed(e.what());
        }
        answers[i].doc_id = ids[i];
    };

    const std::size_t workers = std::min<std::size_t>(parallelism, ids.size());
    if (workers <= 1) {
        for (std::size_t i = 0; i < ids.size(); ++i) work(i);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                for (std::size_t i = next.fetch_add(1); i < ids.size(); i = next.fetch_add(1)) work(i);
            });
        }
    }

    std::map<std::string, IntermediateAnswer> out;
    for (std::size_t i = 0; i < ids.size(); ++i) out.emplace(ids[i], std::move(answers[i]));
    return out;
}

} // namespace mmndb
