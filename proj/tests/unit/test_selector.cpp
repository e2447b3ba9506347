#include "support/fixtures.hpp"

#include "mmndb/error.hpp"
#include "mmndb/evalharness.hpp"
#include "mmndb/retriever.hpp"
#include "mmndb/selector.hpp"

#include <doctest.h>

#include <cmath>
#include <sstream>

using namespace mmndb;

namespace {

std::vector<Query> count_queries(std::size_t from, std::size_t to) {
    std::vector<Query> qs;
    for (std::size_t c = from; c < to; ++c) qs.push_back(Query::make(QueryType::count, testing::category_name(c)));
    return qs;
}

} // namespace

TEST_CASE("parameter count") {
    CHECK(SelectorModel(512, 8).parameter_count() == 4113);
    CHECK(SelectorModel(768, 8).parameter_count() == 768 * 8 + 2 * 8 + 1);
    CHECK_THROWS_AS(SelectorModel(0, 8), ContractError);
}

TEST_CASE("zero-weight model sits exactly on the cutoff") {
    const SelectorModel model(4, 3);
    const auto p = model.predict(std::vector<float>{1, 2, 3, 4}, std::vector<float>{4, 3, 2, 1});
    CHECK(p.probability == 0.5);
    CHECK_FALSE(p.relevant);
}

TEST_CASE("hand-set single path forward pass") {
    SelectorModel model(3, 1);
    model.hidden_w() = {1.0f, 0.0f, 0.0f};
    model.out_w() = {1.0f};
    const std::vector<float> e1{1, 0, 0};
    const auto p = model.predict(e1, e1);
    // x = e1 (product of unit vectors), h = tanh(1), p = 1 / (1 + exp(-tanh(1)))
    const double expected = 1.0 / (1.0 + std::exp(-std::tanh(1.0)));
    CHECK(p.probability == doctest::Approx(expected).epsilon(1e-7));
    CHECK(p.relevant);

    CHECK_THROWS_AS(model.predict(std::vector<float>{1, 0}, std::vector<float>{1, 0}), ContractError);
    CHECK_THROWS_AS(model.predict(std::vector<float>{0, 0, 0}, e1), ContractError);
}

TEST_CASE("pair features are the product of normalized vectors") {
    const auto x = pair_features(std::vector<float>{3, 4}, std::vector<float>{0, 2});
    CHECK(x[0] == doctest::Approx(0.0));
    CHECK(x[1] == doctest::Approx(0.8));
}

TEST_CASE("selector learns a noiseless planted corpus and generalizes to held-out categories") {
    // single-category docs, orthogonal anchors
    const auto db = testing::planted_corpus(400, 16, 1, 3, 5);
    const auto synth = synth_generate(db, {32, 1.0, 0.0, 7, true});
    const auto train = count_queries(0, 12);
    const auto held_out = count_queries(12, 16);

    SelectorHyper hyper;
    hyper.hidden = 8;
    hyper.epochs = 50;
    hyper.learning_rate = 1.0;
    hyper.seed = 3;
    const auto model = train_selector(synth.store, db, train, synth.encoder, hyper);

    for (const auto& q : held_out) {
        const auto gt = ground_truth(db, q);
        const auto r = retrieve_neural(synth.store, synth.encoder.encode(q.category), model);
        CHECK(r.retrieved == gt.relevant);
    }

    // 50 epochs separate the classes; confident outputs take longer
    SelectorHyper longer = hyper;
    longer.epochs = 500;
    const auto confident = train_selector(synth.store, db, train, synth.encoder, longer);
    for (const auto& q : held_out) {
        const auto gt = ground_truth(db, q);
        REQUIRE_FALSE(gt.relevant.empty());
        const auto qv = synth.encoder.encode(q.category);
        CHECK(confident.predict(qv, synth.store.vector(*gt.relevant.begin())).probability > 0.9);
        CHECK(retrieve_neural(synth.store, qv, confident).retrieved == gt.relevant);
    }

    SUBCASE("training is deterministic") {
        CHECK(train_selector(synth.store, db, train, synth.encoder, hyper) == model);
        hyper.seed = 4;
        CHECK_FALSE(train_selector(synth.store, db, train, synth.encoder, hyper) == model);
    }
}

TEST_CASE("training without positives is rejected") {
    const auto db = testing::planted_corpus(50, 4, 1, 2, 1);
    const auto synth = synth_generate(db, {8, 1.0, 0.0, 1, true});
    const std::vector<Query> none{Query::make(QueryType::count, "unicorn")};
    CHECK_THROWS_AS(train_selector(synth.store, db, none, synth.encoder, {}), TrainingError);
}

TEST_CASE("selector file round trip and layout") {
    const auto db = testing::planted_corpus(60, 4, 2, 2, 2);
    const auto synth = synth_generate(db, {8, 1.0, 0.1, 1, true});
    SelectorHyper hyper;
    hyper.hidden = 3;
    hyper.epochs = 5;
    const auto model = train_selector(synth.store, db, count_queries(0, 4), synth.encoder, hyper);

    std::stringstream buf;
    write_selector(model, buf);
    const std::string bytes = buf.str();
    CHECK(bytes.size() == 16 + 4 * model.parameter_count());
    CHECK(bytes.substr(0, 4) == "MMSL");
    CHECK(read_selector(buf) == model);

    auto read = [](const std::string& b) {
        std::istringstream in(b);
        return read_selector(in);
    };
    std::string bad = bytes;
    bad[1] = 'X';
    CHECK_THROWS_AS(read(bad), FormatError);
    try {
        read(bytes.substr(0, 30));
        FAIL("expected FormatError");
    } catch (const FormatError& e) {
        CHECK(e.offset() == 30);
    }
    CHECK_THROWS_AS(read(bytes + "zz"), FormatError);
}
