#include "support/fixtures.hpp"

#include "mmndb/embedding_store.hpp"
#include "mmndb/error.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <sstream>

using namespace mmndb;

namespace {

// Independent reference: scores recomputed per pair, then sorted with the
// documented tie rule.
std::vector<ScoredDoc> brute_force_rank(const EmbeddingStore& store, const std::vector<float>& q,
                                        SimilarityMetric metric) {
    std::vector<ScoredDoc> out;
    for (const auto& id : store.ids()) {
        const auto v = store.vector(id);
        long double dot = 0, nq = 0, nd = 0;
        for (std::size_t i = 0; i < q.size(); ++i) {
            dot += static_cast<long double>(q[i]) * v[i];
            nq += static_cast<long double>(q[i]) * q[i];
            nd += static_cast<long double>(v[i]) * v[i];
        }
        double s = static_cast<double>(dot);
        if (metric == SimilarityMetric::cosine) s = nd == 0 ? 0.0 : static_cast<double>(dot / std::sqrt(nq * nd));
        out.push_back({id, s});
    }
    std::stable_sort(out.begin(), out.end(), [](const ScoredDoc& a, const ScoredDoc& b) { return a.score > b.score; });
    return out;
}

} // namespace

TEST_CASE("score on hand-computed pairs") {
    const std::vector<float> e1{1, 0}, e2{0, 1}, c{0.8f, 0.6f};
    CHECK(score(SimilarityMetric::cosine, e1, e1) == doctest::Approx(1.0));
    CHECK(score(SimilarityMetric::cosine, e1, e2) == doctest::Approx(0.0));
    CHECK(score(SimilarityMetric::cosine, e1, c) == doctest::Approx(0.8).epsilon(1e-7));
    CHECK(score(SimilarityMetric::dot, std::vector<float>{2, 3}, std::vector<float>{4, -1}) == doctest::Approx(5.0));

    CHECK_THROWS_AS(score(SimilarityMetric::dot, e1, std::vector<float>{1, 2, 3}), ContractError);
    CHECK_THROWS_AS(score(SimilarityMetric::cosine, e1, std::vector<float>{0, 0}), ContractError);
}

TEST_CASE("cosine bounds and self-similarity; dot scale equivariance") {
    for (std::uint64_t seed = 1; seed <= 200; ++seed) {
        const auto q = testing::random_vector(16, seed);
        const auto d = testing::random_vector(16, seed + 1000);
        const double c = score(SimilarityMetric::cosine, q, d);
        CHECK(c >= -1.0);
        CHECK(c <= 1.0);
        CHECK(score(SimilarityMetric::cosine, q, q) == doctest::Approx(1.0).epsilon(1e-6));

        std::vector<float> scaled(q);
        for (auto& x : scaled) x *= 2.0f;  // exact in binary floating point
        CHECK(score(SimilarityMetric::dot, scaled, d) == doctest::Approx(2.0 * score(SimilarityMetric::dot, q, d)));
    }
}

TEST_CASE("rank_all on TOYVEC") {
    const auto store = testing::toyvec();
    const auto ranked = rank_all(store, std::vector<float>{1, 0}, SimilarityMetric::cosine);
    REQUIRE(ranked.size() == 3);
    CHECK(ranked[0].doc_id == "a");
    CHECK(ranked[0].score == doctest::Approx(1.0));
    CHECK(ranked[1].doc_id == "c");
    CHECK(ranked[1].score == doctest::Approx(0.8));
    CHECK(ranked[2].doc_id == "b");
    CHECK(ranked[2].score == doctest::Approx(0.0));

    CHECK(rank_all(EmbeddingStore(4), std::vector<float>{1, 0, 0, 0}, SimilarityMetric::dot).empty());
    CHECK_THROWS_AS(rank_all(store, std::vector<float>{1, 0, 0}, SimilarityMetric::dot), ContractError);
}

TEST_CASE("identical vectors rank by doc_id") {
    const auto store =
        EmbeddingStore::from_entries(2, {{"zeta", {0.5f, 0.5f}}, {"alpha", {0.5f, 0.5f}}, {"mid", {0.1f, 0.0f}}});
    const auto ranked = rank_all(store, std::vector<float>{1, 1}, SimilarityMetric::dot);
    CHECK(ranked[0].doc_id == "alpha");
    CHECK(ranked[1].doc_id == "zeta");
}

TEST_CASE("rank_all agrees with brute force and is invariant to positive query scaling") {
    for (std::uint64_t seed = 1; seed <= 30; ++seed) {
        const auto store = testing::random_store(300, 12, seed);
        const auto q = testing::random_vector(12, seed * 31);
        for (auto metric : {SimilarityMetric::dot, SimilarityMetric::cosine}) {
            const auto ranked = rank_all(store, q, metric);
            const auto reference = brute_force_rank(store, q, metric);
            REQUIRE(ranked.size() == reference.size());
            for (std::size_t i = 0; i < ranked.size(); ++i) {
                CHECK(ranked[i].doc_id == reference[i].doc_id);
                CHECK(ranked[i].score == doctest::Approx(reference[i].score).epsilon(1e-9));
            }
            std::vector<float> scaled(q);
            for (auto& x : scaled) x *= 4.0f;
            const auto again = rank_all(store, scaled, metric);
            for (std::size_t i = 0; i < ranked.size(); ++i) CHECK(again[i].doc_id == ranked[i].doc_id);
        }
    }
}

TEST_CASE("store invariants") {
    const auto store = testing::random_store(50, 8, 3);
    for (std::size_t i = 0; i < store.size(); ++i) {
        double n = 0;
        for (float x : store.vector_at(i)) n += static_cast<double>(x) * x;
        CHECK(store.norm_at(i) == doctest::Approx(std::sqrt(n)).epsilon(1e-6));
    }
    CHECK_THROWS_AS(EmbeddingStore::from_entries(2, {{"a", {1.0f}}}), ContractError);
    CHECK_THROWS_AS(EmbeddingStore::from_entries(2, {{"a", {1.0f, NAN}}}), ContractError);
    CHECK_THROWS_AS(EmbeddingStore(0), ContractError);
}

TEST_CASE("synthetic planted embeddings") {
    std::vector<Document> docs{
        {"only_a", {{"a", 1}}, {}},
        {"only_a3", {{"a", 3}}, {}},
        {"only_b", {{"b", 2}}, {}},
    };
    const auto db = MultimodalDatabase::from_documents(docs);
    SynthParams params;
    params.dim = 8;
    params.noise_sigma = 0.0;
    params.seed = 99;
    const auto synth = synth_generate(db, params);
    const auto qa = synth.encoder.encode("a");

    // noiseless, single category: doc vector is the anchor itself
    CHECK(score(SimilarityMetric::cosine, qa, synth.store.vector("only_a")) == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(score(SimilarityMetric::cosine, qa, synth.store.vector("only_a3")) == doctest::Approx(1.0).epsilon(1e-6));
    // orthogonalized anchors: a doc without the category scores 0
    CHECK(std::abs(score(SimilarityMetric::cosine, qa, synth.store.vector("only_b"))) < 1e-6);
    CHECK(synth.store.generator_id() == rng::kAlgorithmMt64BoxMuller);

    const auto again = synth_generate(db, params);
    CHECK(again.store == synth.store);
    CHECK(again.encoder.table() == synth.encoder.table());

    params.seed = 100;
    CHECK_FALSE(synth_generate(db, params).store == synth.store);

    params.dim = 1;
    CHECK_THROWS_AS(synth_generate(db, params), ContractError);
}

TEST_CASE("noisy synthetic store stays normalized and deterministic") {
    const auto db = testing::random_corpus({100, 6, 0.3, 3, 5});
    SynthParams params{32, 1.0, 0.3, 17, true};
    const auto a = synth_generate(db, params);
    const auto b = synth_generate(db, params);
    CHECK(a.store == b.store);
    for (std::size_t i = 0; i < a.store.size(); ++i) {
        if (a.store.norm_at(i) > 0) CHECK(a.store.norm_at(i) == doctest::Approx(1.0).epsilon(1e-5));
    }
    // unknown category still encodes deterministically
    CHECK(a.encoder.encode("unicorn") == b.encoder.encode("unicorn"));
}

TEST_CASE("store file round trip") {
    for (const auto& store : {testing::toyvec(), testing::random_store(40, 7, 11), EmbeddingStore(512)}) {
        std::stringstream buf;
        write_store(store, buf);
        CHECK(read_store(buf) == store);
    }
}

TEST_CASE("store file byte layout") {
    std::stringstream buf;
    write_store(EmbeddingStore::from_entries(2, {{"a", {1.0f, -2.0f}}}, SimilarityMetric::dot), buf);
    const std::string bytes = buf.str();
    REQUIRE(bytes.size() == 28 + 2 + 1 + 8);
    CHECK(bytes.substr(0, 4) == "MMNB");
    CHECK(bytes[4] == 1);  // version LE
    CHECK(bytes[8] == 1);  // count LE
    CHECK(bytes[16] == 2); // dim LE
    CHECK(bytes[20] == 0); // metric hint dot
    CHECK(bytes[28] == 1); // id_len LE
    CHECK(bytes[30] == 'a');
    float first;
    std::memcpy(&first, bytes.data() + 31, 4);
    CHECK(first == 1.0f);

    std::stringstream empty;
    write_store(EmbeddingStore(512), empty);
    CHECK(empty.str().size() == 28);
}

TEST_CASE("corrupt store files raise FormatError with offsets") {
    std::stringstream buf;
    write_store(testing::toyvec(), buf);
    const std::string good = buf.str();

    auto read = [](const std::string& bytes) {
        std::istringstream in(bytes);
        return read_store(in);
    };

    std::string bad_magic = good;
    bad_magic[0] = 'X';
    try {
        read(bad_magic);
        FAIL("expected FormatError");
    } catch (const FormatError& e) {
        CHECK(e.offset() == 0);
    }

    std::string bad_version = good;
    bad_version[4] = 9;
    CHECK_THROWS_AS(read(bad_version), FormatError);

    for (std::size_t cut : {std::size_t{2}, std::size_t{20}, good.size() - 1}) {
        try {
            read(good.substr(0, cut));
            FAIL("expected FormatError");
        } catch (const FormatError& e) {
            CHECK(e.offset() == cut);
        }
    }
    CHECK_THROWS_AS(read(good + "x"), FormatError);
}
