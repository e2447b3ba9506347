#pragma once

#include "mmndb/corpus.hpp"
#include "mmndb/embedding_store.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

namespace mmndb {

struct SelectorPrediction {
    double probability = 0.0;
    bool relevant = false;
};

/// Small binary relevance classifier over a (query, document) embedding pair.
///
/// Input features are the elementwise product of the L2-normalized query and
/// document vectors. One tanh hidden layer of width H feeds a sigmoid output:
///
///   h = tanh(W^T x + b),  p = sigmoid(v . h + c)
///
/// W is dim x H, stored row-major (row i holds the H weights of feature i).
/// A pair is relevant iff p > 0.5.
class SelectorModel {
public:
    SelectorModel(std::uint32_t dim, std::uint32_t hidden);

    std::uint32_t dim() const noexcept { return dim_; }
    std::uint32_t hidden() const noexcept { return hidden_; }
    /// dim*H + 2H + 1
    std::size_t parameter_count() const noexcept;

    std::vector<float>& hidden_w() noexcept { return hidden_w_; }
    std::vector<float>& hidden_b() noexcept { return hidden_b_; }
    std::vector<float>& out_w() noexcept { return out_w_; }
    float& out_b() noexcept { return out_b_; }
    const std::vector<float>& hidden_w() const noexcept { return hidden_w_; }
    const std::vector<float>& hidden_b() const noexcept { return hidden_b_; }
    const std::vector<float>& out_w() const noexcept { return out_w_; }
    float out_b() const noexcept { return out_b_; }

    /// Throws ContractError on a dim mismatch or a zero vector.
    SelectorPrediction predict(std::span<const float> q, std::span<const float> d) const;
    /// Same forward pass on a precomputed feature vector.
    double probability_from_features(std::span<const double> features) const;

    friend bool operator==(const SelectorModel&, const SelectorModel&) = default;

private:
    std::uint32_t dim_;
    std::uint32_t hidden_;
    std::vector<float> hidden_w_;
    std::vector<float> hidden_b_;
    std::vector<float> out_w_;
    float out_b_ = 0.0f;
};

/// Product of the normalized vectors. Throws ContractError on zero vectors.
std::vector<double> pair_features(std::span<const float> q, std::span<const float> d);

struct SelectorHyper {
    std::uint32_t hidden = 8;
    std::uint32_t epochs = 2000;
    double learning_rate = 1.0;
    std::uint64_t seed = 0;
    /// Scale each class's loss so positives and negatives carry equal total
    /// weight. Relevant pairs are rare, so without this the minimum is close
    /// to "never relevant".
    bool balance_classes = true;
};

/// Full-batch gradient descent on binary cross-entropy over every
/// (train query, document) pair; label is membership in the ground-truth
/// relevant set. Deterministic given the seed. Throws TrainingError when no
/// pair is positive.
SelectorModel train_selector(const EmbeddingStore& store, const MultimodalDatabase& db,
                             std::span<const Query> train_queries, const QueryEncoder& encoder,
                             const SelectorHyper& hyper);

void write_selector(const SelectorModel& model, std::ostream& out);
void write_selector(const SelectorModel& model, const std::filesystem::path& path);
SelectorModel read_selector(std::istream& in);
SelectorModel read_selector(const std::filesystem::path& path);

} // namespace mmndb
