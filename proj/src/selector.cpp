#include "mmndb/selector.hpp"

#include "binary_io.hpp"
#include "mmndb/error.hpp"
#include "mmndb/rng.hpp"

#include <cmath>
#include <fstream>

namespace mmndb {

namespace {

constexpr char kSelectorMagic[4] = {'M', 'M', 'S', 'L'};
constexpr std::uint32_t kSelectorVersion = 1;

double sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

} // namespace

SelectorModel::SelectorModel(std::uint32_t dim, std::uint32_t hidden)
    : dim_(dim), hidden_(hidden), hidden_w_(std::size_t{dim} * hidden, 0.0f), hidden_b_(hidden, 0.0f),
      out_w_(hidden, 0.0f) {
    if (dim == 0 || hidden == 0) throw ContractError("selector dim and hidden width must be positive");
}

std::size_t SelectorModel::parameter_count() const noexcept {
    return std::size_t{dim_} * hidden_ + 2 * std::size_t{hidden_} + 1;
}

std::vector<double> pair_features(std::span<const float> q, std::span<const float> d) {
    if (q.size() != d.size()) {
        throw ContractError("dimension mismatch: " + std::to_string(q.size()) + " vs " + std::to_string(d.size()));
    }
    const double nq = l2_norm(q);
    const double nd = l2_norm(d);
    if (nq == 0.0 || nd == 0.0) throw ContractError("selector input is a zero vector");
    std::vector<double> x(q.size());
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = (q[i] / nq) * (d[i] / nd);
    return x;
}

double SelectorModel::probability_from_features(std::span<const double> x) const {
    if (x.size() != dim_) {
        throw ContractError("selector expects dim " + std::to_string(dim_) + ", got " + std::to_string(x.size()));
    }
    double z = out_b_;
    for (std::uint32_t j = 0; j < hidden_; ++j) {
        double a = hidden_b_[j];
        for (std::uint32_t i = 0; i < dim_; ++i) a += x[i] * hidden_w_[std::size_t{i} * hidden_ + j];
        z += out_w_[j] * std::tanh(a);
    }
    return sigmoid(z);
}

SelectorPrediction SelectorModel::predict(std::span<const float> q, std::span<const float> d) const {
    if (q.size() != dim_ || d.size() != dim_) {
        throw ContractError("selector expects dim " + std::to_string(dim_));
    }
    // A zero document vector carries no evidence; score it from zero features
    // rather than failing the whole scan.
    std::vector<double> x(dim_, 0.0);
    if (l2_norm(d) > 0.0) x = pair_features(q, d);
    else if (l2_norm(q) == 0.0) throw ContractError("selector input is a zero vector");
    const double p = probability_from_features(x);
    return {p, p > 0.5};
}

SelectorModel train_selector(const EmbeddingStore& store, const MultimodalDatabase& db,
                             std::span<const Query> train_queries, const QueryEncoder& encoder,
                             const SelectorHyper& hyper) {
    const std::uint32_t dim = store.dim();
    const std::uint32_t H = hyper.hidden;
    if (encoder.dim() != dim) throw ContractError("query encoder dim does not match the store");

    // Materialize every (query, doc) pair.
    std::vector<double> features;
    std::vector<std::uint8_t> labels;
    for (const auto& q : train_queries) {
        const auto gt = ground_truth(db, q);
        const auto qv = encoder.encode(q.category);
        for (const auto& [id, doc] : db.docs()) {
            const auto idx = store.index_of(id);
            if (!idx) throw ContractError("store has no embedding for doc '" + id + "'");
            const auto dv = store.vector_at(*idx);
            if (store.norm_at(*idx) == 0.0) {
                features.insert(features.end(), dim, 0.0);
            } else {
                const auto x = pair_features(qv, dv);
                features.insert(features.end(), x.begin(), x.end());
            }
            labels.push_back(gt.relevant.contains(id) ? 1 : 0);
        }
    }
    const std::size_t n = labels.size();
    std::size_t positives = 0;
    for (auto y : labels) positives += y;
    if (positives == 0) throw TrainingError("no positive (query, document) pairs in the training data");
    const std::size_t negatives = n - positives;

    double w_pos = 1.0 / static_cast<double>(n);
    double w_neg = w_pos;
    if (hyper.balance_classes && negatives > 0) {
        w_pos = 0.5 / static_cast<double>(positives);
        w_neg = 0.5 / static_cast<double>(negatives);
    }

    SelectorModel model(dim, H);
    rng::Stream init(rng::Fnv1a{}.add(hyper.seed).add("selector-init").value());
    const double w_scale = 1.0 / std::sqrt(static_cast<double>(dim));
    const double v_scale = 1.0 / std::sqrt(static_cast<double>(H));
    for (auto& w : model.hidden_w()) w = static_cast<float>((2.0 * init.uniform() - 1.0) * w_scale);
    for (auto& w : model.out_w()) w = static_cast<float>((2.0 * init.uniform() - 1.0) * v_scale);

    // Training runs in double on a hidden-major copy of W (Wt[j][i]) so the
    // inner loops are contiguous; the model keeps the dim-major layout.
    std::vector<double> Wt(std::size_t{H} * dim);
    for (std::uint32_t i = 0; i < dim; ++i) {
        for (std::uint32_t j = 0; j < H; ++j) Wt[std::size_t{j} * dim + i] = model.hidden_w()[std::size_t{i} * H + j];
    }
    std::vector<double> b(H, 0.0);
    std::vector<double> v(model.out_w().begin(), model.out_w().end());
    double c = 0.0;

    std::vector<double> gW(Wt.size()), gb(H), gv(H), h(H);
    for (std::uint32_t epoch = 0; epoch < hyper.epochs; ++epoch) {
        std::fill(gW.begin(), gW.end(), 0.0);
        std::fill(gb.begin(), gb.end(), 0.0);
        std::fill(gv.begin(), gv.end(), 0.0);
        double gc = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            const double* x = features.data() + k * dim;
            double z = c;
            for (std::uint32_t j = 0; j < H; ++j) {
                const double* w = Wt.data() + std::size_t{j} * dim;
                double a = b[j];
                for (std::uint32_t i = 0; i < dim; ++i) a += x[i] * w[i];
                h[j] = std::tanh(a);
                z += v[j] * h[j];
            }
            const double y = labels[k];
            const double delta = (y > 0 ? w_pos : w_neg) * (sigmoid(z) - y);
            gc += delta;
            for (std::uint32_t j = 0; j < H; ++j) {
                gv[j] += delta * h[j];
                const double d1 = delta * v[j] * (1.0 - h[j] * h[j]);
                gb[j] += d1;
                double* g = gW.data() + std::size_t{j} * dim;
                for (std::uint32_t i = 0; i < dim; ++i) g[i] += x[i] * d1;
            }
        }
        for (std::size_t i = 0; i < Wt.size(); ++i) Wt[i] -= hyper.learning_rate * gW[i];
        for (std::uint32_t j = 0; j < H; ++j) {
            b[j] -= hyper.learning_rate * gb[j];
            v[j] -= hyper.learning_rate * gv[j];
        }
        c -= hyper.learning_rate * gc;
    }

    for (std::uint32_t i = 0; i < dim; ++i) {
        for (std::uint32_t j = 0; j < H; ++j) {
            model.hidden_w()[std::size_t{i} * H + j] = static_cast<float>(Wt[std::size_t{j} * dim + i]);
        }
    }
    for (std::uint32_t j = 0; j < H; ++j) {
        model.hidden_b()[j] = static_cast<float>(b[j]);
        model.out_w()[j] = static_cast<float>(v[j]);
    }
    model.out_b() = static_cast<float>(c);
    return model;
}

void write_selector(const SelectorModel& model, std::ostream& out) {
    out.write(kSelectorMagic, 4);
    detail::put_le<std::uint32_t>(out, kSelectorVersion);
    detail::put_le<std::uint32_t>(out, model.dim());
    detail::put_le<std::uint32_t>(out, model.hidden());
    for (float w : model.hidden_w()) detail::put_le<float>(out, w);
    for (float w : model.hidden_b()) detail::put_le<float>(out, w);
    for (float w : model.out_w()) detail::put_le<float>(out, w);
    detail::put_le<float>(out, model.out_b());
    if (!out) throw Error("failed writing selector model");
}

void write_selector(const SelectorModel& model, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open '" + path.string() + "' for writing");
    write_selector(model, out);
}

SelectorModel read_selector(std::istream& in) {
    detail::Reader r(in);
    char magic[4];
    r.bytes(magic, 4, "magic");
    if (std::memcmp(magic, kSelectorMagic, 4) != 0) throw FormatError("bad magic, expected \"MMSL\"", 0);
    const auto version = r.le<std::uint32_t>("version");
    if (version != kSelectorVersion) {
        throw FormatError("unsupported selector version " + std::to_string(version), 4);
    }
    const auto dim = r.le<std::uint32_t>("dim");
    if (dim == 0) throw FormatError("selector dim must be positive", 8);
    const auto hidden = r.le<std::uint32_t>("hidden width");
    if (hidden == 0) throw FormatError("selector hidden width must be positive", 12);
    SelectorModel model(dim, hidden);
    auto read_block = [&](std::vector<float>& block) {
        for (auto& w : block) {
            const auto at = r.offset();
            w = r.le<float>("weights");
            if (!std::isfinite(w)) throw FormatError("non-finite selector weight", at);
        }
    };
    read_block(model.hidden_w());
    read_block(model.hidden_b());
    read_block(model.out_w());
    const auto at = r.offset();
    model.out_b() = r.le<float>("output bias");
    if (!std::isfinite(model.out_b())) throw FormatError("non-finite selector weight", at);
    if (!r.at_eof()) throw FormatError("trailing bytes after selector weights", r.offset());
    return model;
}

SelectorModel read_selector(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw NotFoundError("cannot open selector '" + path.string() + "'");
    return read_selector(in);
}

} // namespace mmndb
