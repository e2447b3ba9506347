#include "mmndb/embedding_store.hpp"

#include "binary_io.hpp"
#include "mmndb/error.hpp"
#include "mmndb/rng.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

namespace mmndb {

namespace {

constexpr char kStoreMagic[4] = {'M', 'M', 'N', 'B'};
constexpr std::uint32_t kStoreVersion = 1;

void require_same_dim(std::size_t a, std::size_t b) {
    if (a != b) {
        throw ContractError("dimension mismatch: " + std::to_string(a) + " vs " + std::to_string(b));
    }
}

double dot(std::span<const float> a, std::span<const float> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += static_cast<double>(a[i]) * static_cast<double>(b[i]);
    return s;
}

std::vector<double> unit_gaussian(rng::Stream& stream, std::uint32_t dim) {
    std::vector<double> v(dim);
    double norm = 0.0;
    do {
        for (auto& x : v) x = stream.gaussian();
        norm = std::sqrt(std::inner_product(v.begin(), v.end(), v.begin(), 0.0));
    } while (norm == 0.0);
    for (auto& x : v) x /= norm;
    return v;
}

} // namespace

std::string_view to_string(SimilarityMetric metric) {
    return metric == SimilarityMetric::dot ? "dot" : "cosine";
}

SimilarityMetric similarity_metric_from_string(std::string_view s) {
    if (s == "dot") return SimilarityMetric::dot;
    if (s == "cosine") return SimilarityMetric::cosine;
    throw ConfigError("unknown metric '" + std::string(s) + "' (expected dot or cosine)");
}

double l2_norm(std::span<const float> v) { return std::sqrt(dot(v, v)); }

double score(SimilarityMetric metric, std::span<const float> q, std::span<const float> d) {
    require_same_dim(q.size(), d.size());
    const double raw = dot(q, d);
    if (metric == SimilarityMetric::dot) return raw;
    const double nq = l2_norm(q);
    const double nd = l2_norm(d);
    if (nq == 0.0 || nd == 0.0) throw ContractError("cosine similarity of a zero vector");
    return std::clamp(raw / (nq * nd), -1.0, 1.0);
}

EmbeddingStore::EmbeddingStore(std::uint32_t dim, SimilarityMetric metric_hint, std::uint8_t generator_id)
    : dim_(dim), metric_hint_(metric_hint), generator_id_(generator_id) {
    if (dim == 0) throw ContractError("embedding dimension must be positive");
}

EmbeddingStore EmbeddingStore::from_entries(std::uint32_t dim, std::map<std::string, std::vector<float>> entries,
                                            SimilarityMetric metric_hint, std::uint8_t generator_id) {
    EmbeddingStore store(dim, metric_hint, generator_id);
    store.ids_.reserve(entries.size());
    store.data_.reserve(entries.size() * dim);
    store.norms_.reserve(entries.size());
    for (auto& [id, v] : entries) {
        if (v.size() != dim) {
            throw ContractError("vector for '" + id + "' has dim " + std::to_string(v.size()) + ", expected " +
                                std::to_string(dim));
        }
        if (!std::all_of(v.begin(), v.end(), [](float x) { return std::isfinite(x); })) {
            throw ContractError("vector for '" + id + "' has non-finite components");
        }
        store.ids_.push_back(id);
        store.data_.insert(store.data_.end(), v.begin(), v.end());
        store.norms_.push_back(l2_norm(v));
    }
    return store;
}

std::span<const float> EmbeddingStore::vector_at(std::size_t index) const {
    if (index >= ids_.size()) throw NotFoundError("store index out of range");
    return {data_.data() + index * dim_, dim_};
}

std::optional<std::size_t> EmbeddingStore::index_of(std::string_view doc_id) const {
    auto it = std::lower_bound(ids_.begin(), ids_.end(), doc_id);
    if (it == ids_.end() || *it != doc_id) return std::nullopt;
    return static_cast<std::size_t>(it - ids_.begin());
}

std::span<const float> EmbeddingStore::vector(std::string_view doc_id) const {
    auto idx = index_of(doc_id);
    if (!idx) throw NotFoundError("no embedding for '" + std::string(doc_id) + "'");
    return vector_at(*idx);
}

bool operator==(const EmbeddingStore& a, const EmbeddingStore& b) {
    if (a.dim_ != b.dim_ || a.metric_hint_ != b.metric_hint_ || a.generator_id_ != b.generator_id_ ||
        a.ids_ != b.ids_ || a.data_.size() != b.data_.size()) {
        return false;
    }
    // bitwise, so -0.0 != 0.0 and NaN payloads would be compared exactly
    return std::memcmp(a.data_.data(), b.data_.data(), a.data_.size() * sizeof(float)) == 0;
}

std::vector<ScoredDoc> rank_all(const EmbeddingStore& store, std::span<const float> q, SimilarityMetric metric) {
    require_same_dim(q.size(), store.dim());
    const double nq = l2_norm(q);
    if (metric == SimilarityMetric::cosine && nq == 0.0) {
        throw ContractError("cosine ranking with a zero query vector");
    }
    std::vector<ScoredDoc> out;
    out.reserve(store.size());
    for (std::size_t i = 0; i < store.size(); ++i) {
        const double raw = dot(q, store.vector_at(i));
        double s = raw;
        if (metric == SimilarityMetric::cosine) {
            // zero document vectors have no direction; they rank as orthogonal
            const double nd = store.norm_at(i);
            s = nd == 0.0 ? 0.0 : std::clamp(raw / (nq * nd), -1.0, 1.0);
        }
        out.push_back({store.ids()[i], s});
    }
    std::sort(out.begin(), out.end(), [](const ScoredDoc& a, const ScoredDoc& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.doc_id < b.doc_id;
    });
    return out;
}

std::vector<float> QueryEncoder::encode(std::string_view category) const {
    if (table_) {
        if (auto idx = table_->index_of(category)) {
            auto v = table_->vector_at(*idx);
            return {v.begin(), v.end()};
        }
    }
    if (dim() == 0) throw ContractError("query encoder has no embedding table");
    rng::Stream stream(rng::Fnv1a{}.add(fallback_seed_).add("fallback-anchor").add(category).value());
    auto unit = unit_gaussian(stream, dim());
    return {unit.begin(), unit.end()};
}

const EmbeddingStore& QueryEncoder::table() const {
    if (!table_) throw ContractError("query encoder has no embedding table");
    return *table_;
}

SynthResult synth_generate(const MultimodalDatabase& db, const SynthParams& params) {
    if (params.dim < 2) throw ContractError("synthetic embeddings need dim >= 2");
    if (!(params.signal_weight >= 0.0) || !(params.noise_sigma >= 0.0)) {
        throw ContractError("signal_weight and noise_sigma must be non-negative");
    }
    const auto& vocab = db.vocabulary();
    const bool orthogonalize = params.orthogonal_anchors && vocab.size() <= params.dim;

    std::map<std::string, std::vector<double>> anchors;
    std::vector<const std::vector<double>*> basis;
    for (const auto& cat : vocab) {
        rng::Stream stream(rng::Fnv1a{}.add(params.seed).add("anchor").add(cat).value());
        auto v = unit_gaussian(stream, params.dim);
        if (orthogonalize) {
            // modified Gram-Schmidt against earlier anchors; redraw on collapse
            for (;;) {
                for (const auto* b : basis) {
                    const double p = std::inner_product(v.begin(), v.end(), b->begin(), 0.0);
                    for (std::size_t i = 0; i < v.size(); ++i) v[i] -= p * (*b)[i];
                }
                const double n = std::sqrt(std::inner_product(v.begin(), v.end(), v.begin(), 0.0));
                if (n > 1e-6) {
                    for (auto& x : v) x /= n;
                    break;
                }
                v = unit_gaussian(stream, params.dim);
            }
        }
        basis.push_back(&anchors.emplace(cat, std::move(v)).first->second);
    }

    std::map<std::string, std::vector<float>> doc_vectors;
    for (const auto& [id, d] : db.docs()) {
        std::vector<double> v(params.dim, 0.0);
        for (const auto& [cat, n] : d.counts) {
            const auto& a = anchors.at(cat);
            for (std::size_t i = 0; i < v.size(); ++i) v[i] += n * params.signal_weight * a[i];
        }
        if (params.noise_sigma > 0.0) {
            rng::Stream stream(rng::Fnv1a{}.add(params.seed).add("noise").add(id).value());
            for (auto& x : v) x += params.noise_sigma * stream.gaussian();
        }
        const double n = std::sqrt(std::inner_product(v.begin(), v.end(), v.begin(), 0.0));
        std::vector<float> f(params.dim, 0.0f);
        if (n > 0.0) {
            for (std::size_t i = 0; i < v.size(); ++i) f[i] = static_cast<float>(v[i] / n);
        }
        doc_vectors.emplace(id, std::move(f));
    }

    std::map<std::string, std::vector<float>> anchor_vectors;
    for (const auto& [cat, a] : anchors) anchor_vectors.emplace(cat, std::vector<float>(a.begin(), a.end()));

    return {EmbeddingStore::from_entries(params.dim, std::move(doc_vectors), SimilarityMetric::cosine,
                                         rng::kAlgorithmMt64BoxMuller),
            QueryEncoder(EmbeddingStore::from_entries(params.dim, std::move(anchor_vectors),
                                                      SimilarityMetric::cosine, rng::kAlgorithmMt64BoxMuller),
                         params.seed)};
}

void write_store(const EmbeddingStore& store, std::ostream& out) {
    out.write(kStoreMagic, 4);
    detail::put_le<std::uint32_t>(out, kStoreVersion);
    detail::put_le<std::uint64_t>(out, store.size());
    detail::put_le<std::uint32_t>(out, store.dim());
    detail::put_le<std::uint8_t>(out, static_cast<std::uint8_t>(store.metric_hint()));
    // reserved[0] carries the generator algorithm id; the rest is zero
    detail::put_le<std::uint8_t>(out, store.generator_id());
    const char zeros[6] = {};
    out.write(zeros, 6);
    for (std::size_t i = 0; i < store.size(); ++i) {
        const auto& id = store.ids()[i];
        if (id.size() > 0xffff) throw ContractError("doc_id longer than 65535 bytes: " + id.substr(0, 32));
        detail::put_le<std::uint16_t>(out, static_cast<std::uint16_t>(id.size()));
        out.write(id.data(), static_cast<std::streamsize>(id.size()));
        for (float x : store.vector_at(i)) detail::put_le<float>(out, x);
    }
    if (!out) throw Error("failed writing embedding store");
}

void write_store(const EmbeddingStore& store, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open '" + path.string() + "' for writing");
    write_store(store, out);
}

EmbeddingStore read_store(std::istream& in) {
    detail::Reader r(in);
    char magic[4];
    r.bytes(magic, 4, "magic");
    if (std::memcmp(magic, kStoreMagic, 4) != 0) throw FormatError("bad magic, expected \"MMNB\"", 0);
    const auto version = r.le<std::uint32_t>("version");
    if (version != kStoreVersion) throw FormatError("unsupported store version " + std::to_string(version), 4);
    const auto count = r.le<std::uint64_t>("count");
    const auto dim = r.le<std::uint32_t>("dim");
    if (dim == 0) throw FormatError("dimension must be positive", 16);
    const auto hint = r.le<std::uint8_t>("metric hint");
    if (hint > 1) throw FormatError("unknown metric hint " + std::to_string(hint), 20);
    const auto generator = r.le<std::uint8_t>("reserved");
    char reserved[6];
    r.bytes(reserved, 6, "reserved");

    std::map<std::string, std::vector<float>> entries;
    for (std::uint64_t i = 0; i < count; ++i) {
        const auto record_offset = r.offset();
        const auto len = r.le<std::uint16_t>("id length");
        std::string id(len, '\0');
        r.bytes(id.data(), len, "doc id");
        std::vector<float> v(dim);
        for (auto& x : v) {
            const auto at = r.offset();
            x = r.le<float>("vector component");
            if (!std::isfinite(x)) throw FormatError("non-finite component for '" + id + "'", at);
        }
        if (!entries.emplace(std::move(id), std::move(v)).second) {
            throw FormatError("duplicate doc id in store", record_offset);
        }
    }
    if (!r.at_eof()) throw FormatError("trailing bytes after last record", r.offset());
    return EmbeddingStore::from_entries(dim, std::move(entries), static_cast<SimilarityMetric>(hint), generator);
}

EmbeddingStore read_store(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw NotFoundError("cannot open store '" + path.string() + "'");
    return read_store(in);
}

} // namespace mmndb
