#include "support/fixtures.hpp"

#include "mmndb/aggregator.hpp"
#include "mmndb/error.hpp"
#include "mmndb/evalharness.hpp"

#include <doctest.h>

#include <algorithm>
#include <random>

using namespace mmndb;

namespace {

using A = IntermediateAnswer;

AnswerMap answers(std::initializer_list<std::pair<const char*, A>> xs) {
    AnswerMap m;
    for (auto [id, a] : xs) {
        a.doc_id = id;
        m.emplace(id, a);
    }
    return m;
}

} // namespace

TEST_CASE("aggregate_count") {
    auto r = aggregate_count(answers({{"d1", A::number(2)}, {"d3", A::number(1)}}));
    CHECK(r.value == 3);
    CHECK(r.excluded == 0);
    CHECK_FALSE(r.witness);
    CHECK(aggregate_count({}).value == 0);

    r = aggregate_count(answers({{"d1", A::number(2)}, {"d2", A::indecisive("many")}}), IndecisivePolicy::as_zero);
    CHECK(r.value == 2);
    CHECK(r.excluded == 1);
    CHECK(r.policy == IndecisivePolicy::as_zero);

    r = aggregate_count(answers({{"d1", A::number(2)}, {"d2", A::failed("x")}}), IndecisivePolicy::skip);
    CHECK(r.value == 2);
    CHECK(r.excluded == 1);
    CHECK(r.policy == IndecisivePolicy::skip);
}

TEST_CASE("aggregate_in") {
    CHECK(aggregate_in(answers({{"d2", A::number(3)}, {"d3", A::number(1)}, {"d1", A::number(0)}})).value == 2);
    CHECK(aggregate_in(answers({{"d1", A::number(0)}, {"d2", A::number(0)}})).value == 0);
    const auto r = aggregate_in(answers({{"d1", A::indecisive("few")}}), IndecisivePolicy::as_zero);
    CHECK(r.value == 0);
    CHECK(r.excluded == 1);
    CHECK(r.type == QueryType::in);
}

TEST_CASE("aggregate_max") {
    auto r = aggregate_max(answers({{"d2", A::number(3)}, {"d3", A::number(1)}}));
    CHECK(r.value == 3);
    CHECK(r.witness == "d2");
    r = aggregate_max(answers({{"d9", A::number(2)}, {"d1", A::number(2)}}));
    CHECK(r.value == 2);
    CHECK(r.witness == "d1");
    CHECK_THROWS_AS(aggregate_max({}), EmptyAnswerError);
    CHECK_THROWS_AS(aggregate_max(answers({{"d1", A::indecisive("many")}})), EmptyAnswerError);

    // non-numeric answers never win, even when every number is 0
    r = aggregate_max(answers({{"a", A::indecisive("many")}, {"b", A::number(0)}}), IndecisivePolicy::as_zero);
    CHECK(r.witness == "b");
    CHECK(r.value == 0);
    CHECK(r.excluded == 1);
}

TEST_CASE("aggregate dispatch and policy names") {
    const auto m = answers({{"d1", A::number(2)}, {"d2", A::number(5)}});
    CHECK(aggregate(QueryType::count, m).value == 7);
    CHECK(aggregate(QueryType::in, m).value == 2);
    CHECK(aggregate(QueryType::max, m).witness == "d2");
    CHECK(indecisive_policy_from_string("skip") == IndecisivePolicy::skip);
    CHECK(to_string(IndecisivePolicy::as_zero) == "as_zero");
    CHECK_THROWS_AS(indecisive_policy_from_string("ignore"), ConfigError);
}

TEST_CASE("aggregation is permutation invariant") {
    std::mt19937_64 gen(17);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<std::pair<std::string, A>> items;
        for (int i = 0; i < 40; ++i) {
            const auto id = testing::doc_name(i);
            const auto r = gen() % 10;
            items.emplace_back(id, r == 0   ? A::indecisive("many", id)
                                   : r == 1 ? A::failed("x", id)
                                            : A::number(static_cast<std::int64_t>(gen() % 4), id));
        }
        // Re-insert in shuffled order and as a union of two partial folds.
        std::shuffle(items.begin(), items.end(), gen);
        AnswerMap shuffled(items.begin(), items.end());
        AnswerMap first_half(items.begin(), items.begin() + 20);
        AnswerMap second_half(items.begin() + 20, items.end());
        AnswerMap sorted(items.rbegin(), items.rend());
        for (auto policy : {IndecisivePolicy::as_zero, IndecisivePolicy::skip}) {
            for (auto type : {QueryType::count, QueryType::in, QueryType::max}) {
                CHECK(aggregate(type, shuffled, policy) == aggregate(type, sorted, policy));
            }
            const auto a = aggregate_count(first_half, policy);
            const auto b = aggregate_count(second_half, policy);
            CHECK(a.value + b.value == aggregate_count(sorted, policy).value);
            CHECK(a.excluded + b.excluded == aggregate_count(sorted, policy).excluded);
            CHECK(aggregate_count(sorted, policy).value >= aggregate_in(sorted, policy).value);
        }
    }
}

TEST_CASE("aggregating oracle answers over the relevant set equals ground truth") {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const auto db = testing::random_corpus({50 * seed, 10, 0.25, 6, seed});
        const std::vector<QueryType> types{QueryType::count, QueryType::in, QueryType::max};
        for (const auto& q : all_queries(db, types)) {
            const auto gt = ground_truth(db, q);
            if (gt.relevant.empty()) continue;
            const auto ans = reason_all(OracleReasoner{}, db, q, gt.relevant, 1);
            const auto r = aggregate(q.type, ans);
            CHECK(r.value == gt.global);
            CHECK(r.excluded == 0);
            if (q.type == QueryType::max) CHECK(gt.max_docs.contains(*r.witness));
        }
    }
}
