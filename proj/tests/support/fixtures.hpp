#pragma once

// Shared corpora for the unit and acceptance suites.

#include "mmndb/corpus.hpp"
#include "mmndb/embedding_store.hpp"
#include "mmndb/rng.hpp"

#include <sstream>
#include <string>
#include <vector>

namespace mmndb::testing {

/// The 80 COCO object categories.
inline const std::vector<std::string>& coco_categories() {
    static const std::vector<std::string> names{
    "person",
    "bicycle",
    "car",
    "motorcycle",
    "airplane",
    "bus",
    "train",
    "truck",
    "boat",
    "traffic light",
    "fire hydrant",
    "stop sign",
    "parking meter",
    "bench",
    "bird",
    "cat",
    "dog",
    "horse",
    "sheep",
    "cow",
    "elephant",
    "bear",
    "zebra",
    "giraffe",
    "backpack",
    "umbrella",
    "handbag",
    "tie",
    "suitcase",
    "frisbee",
    "skis",
    "snowboard",
    "sports ball",
    "kite",
    "baseball bat",
    "baseball glove",
    "skateboard",
    "surfboard",
    "tennis racket",
    "bottle",
    "wine glass",
    "cup",
    "fork",
    "knife",
    "spoon",
    "bowl",
    "banana",
    "apple",
    "sandwich",
    "orange",
    "broccoli",
    "carrot",
    "hot dog",
    "pizza",
    "donut",
    "cake",
    "chair",
    "couch",
    "potted plant",
    "bed",
    "dining table",
    "toilet",
    "tv",
    "laptop",
    "mouse",
    "remote",
    "keyboard",
    "cell phone",
    "microwave",
    "oven",
    "toaster",
    "sink",
    "refrigerator",
    "book",
    "clock",
    "vase",
    "scissors",
    "teddy bear",
    "hair drier",
    "toothbrush",
    };
    return names;
}

inline const char* kToy3Jsonl =
    "{\"doc_id\": \"d1\", \"counts\": {\"person\": 2, \"guitar\": 1}}\n"
    "{\"doc_id\": \"d2\", \"counts\": {\"dog\": 3}}\n"
    "{\"doc_id\": \"d3\", \"counts\": {\"person\": 1, \"dog\": 1}}\n";

inline MultimodalDatabase toy3() {
    std::istringstream in(kToy3Jsonl);
    return read_simple_jsonl(in);
}

/// {a:[1,0], b:[0,1], c:[0.8,0.6]}
inline EmbeddingStore toyvec() {
    return EmbeddingStore::from_entries(2, {{"a", {1.0f, 0.0f}}, {"b", {0.0f, 1.0f}}, {"c", {0.8f, 0.6f}}});
}

struct RandomCorpusSpec {
    std::size_t docs = 100;
    std::size_t categories = 10;
    /// Chance that a doc contains a given category.
    double p_contains = 0.2;
    std::uint32_t max_count = 5;
    std::uint64_t seed = 1;
};

inline std::string category_name(std::size_t i) { return "cat" + std::to_string(i); }

inline std::string doc_name(std::size_t i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "doc%05zu", i);
    return buf;
}

inline std::vector<Document> random_documents(const RandomCorpusSpec& spec) {
    rng::Stream s(spec.seed);
    std::vector<Document> docs;
    for (std::size_t i = 0; i < spec.docs; ++i) {
        Document d;
        d.doc_id = doc_name(i);
        for (std::size_t c = 0; c < spec.categories; ++c) {
            if (s.uniform() < spec.p_contains) {
                d.counts[category_name(c)] = 1 + static_cast<std::uint32_t>(s.below(spec.max_count));
            }
        }
        docs.push_back(std::move(d));
    }
    return docs;
}

inline MultimodalDatabase random_corpus(const RandomCorpusSpec& spec) {
    return MultimodalDatabase::from_documents(random_documents(spec));
}

/// Random unit-ish vectors keyed doc00000.. for store-level property tests.
inline EmbeddingStore random_store(std::size_t n, std::uint32_t dim, std::uint64_t seed) {
    rng::Stream s(seed);
    std::map<std::string, std::vector<float>> entries;
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<float> v(dim);
        for (auto& x : v) x = static_cast<float>(s.gaussian());
        // occasional exact duplicate to exercise the tie-break
        if (i > 0 && s.uniform() < 0.05) v = entries.begin()->second;
        entries.emplace(doc_name(i), std::move(v));
    }
    return EmbeddingStore::from_entries(dim, std::move(entries));
}

inline std::vector<float> random_vector(std::uint32_t dim, std::uint64_t seed) {
    rng::Stream s(seed);
    std::vector<float> v(dim);
    for (auto& x : v) x = static_cast<float>(s.gaussian());
    return v;
}

} // namespace mmndb::testing

namespace mmndb::testing {

/// Planted corpus: every doc holds 1..max_categories distinct categories with
/// counts 1..max_count.
inline MultimodalDatabase planted_corpus(std::size_t docs, std::size_t categories, std::size_t max_categories,
                                         std::uint32_t max_count, std::uint64_t seed) {
    rng::Stream s(seed);
    std::vector<Document> out;
    for (std::size_t i = 0; i < docs; ++i) {
        Document d;
        d.doc_id = doc_name(i);
        const std::size_t k = 1 + static_cast<std::size_t>(s.below(max_categories));
        while (d.counts.size() < k) {
            d.counts[category_name(static_cast<std::size_t>(s.below(categories)))] =
                1 + static_cast<std::uint32_t>(s.below(max_count));
        }
        out.push_back(std::move(d));
    }
    return MultimodalDatabase::from_documents(std::move(out));
}

} // namespace mmndb::testing
