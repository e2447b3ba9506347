#include "support/fixtures.hpp"

#include "mmndb/category.hpp"
#include "mmndb/error.hpp"
#include "mmndb/query.hpp"

#include <doctest.h>

using namespace mmndb;

TEST_CASE("parse the canonical query forms") {
    auto q = parse_query("How many dogs are in the database?");
    CHECK(q.type == QueryType::count);
    CHECK(q.category == "dog");
    CHECK(q.raw_text == "How many dogs are in the database?");

    q = parse_query("In how many pictures there are persons?");
    CHECK(q.type == QueryType::in);
    CHECK(q.category == "person");

    q = parse_query("Which image has the most guitars?");
    CHECK(q.type == QueryType::max);
    CHECK(q.category == "guitar");
}

TEST_CASE("parsing tolerates case, whitespace and phrasing variants") {
    CHECK(parse_query("  HOW   many Teddy Bears are there in the database ").category == "teddy bear");
    CHECK(parse_query("in how many images are there people?").type == QueryType::in);
    CHECK(parse_query("in how many images are there people?").category == "person");
    const auto q = parse_query("What is the maximum number of cars in a single image?");
    CHECK(q.type == QueryType::max);
    CHECK(q.category == "car");
    CHECK(parse_query("which picture has the most wine glasses").category == "wine glass");
}

TEST_CASE("unsupported and empty queries") {
    CHECK_THROWS_AS(parse_query("List all dogs"), UnsupportedQueryError);
    CHECK_THROWS_AS(parse_query(""), UnsupportedQueryError);
    try {
        parse_query("Count the dogs");
    } catch (const UnsupportedQueryError& e) {
        CHECK(e.text() == "Count the dogs");
    }
    CHECK_THROWS_AS(parse_query("How many are in the database?"), QueryParseError);
    CHECK_THROWS_AS(parse_query("Which image has the most ?"), QueryParseError);
}

TEST_CASE("open-vocabulary categories are accepted") {
    CHECK(parse_query("How many unicorns are in the database?").category == "unicorn");
}

TEST_CASE("render prompts") {
    const PromptTemplate count_tmpl("How many {object} are in this image?", "Answer with a number.");
    CHECK(render_prompt(Query::make(QueryType::count, "dog"), count_tmpl) ==
          "How many dog are in this image? Answer with a number.");
    const PromptTemplate in_tmpl("Is there a {object} in this image?");
    CHECK(render_prompt(Query::make(QueryType::in, "person"), in_tmpl) == "Is there a person in this image?");

    CHECK_THROWS_AS(PromptTemplate("How many are here?"), ContractError);
    CHECK_THROWS_AS(PromptTemplate("{object} and {object}"), ContractError);
}

TEST_CASE("shipped template resource") {
    const auto& t = canonical_templates();
    CHECK(t.version == 1);
    CHECK(t.query_count.text() == "How many {object} are in the database?");
    CHECK(t.query_in.text() == "In how many pictures there are {object}?");
    CHECK(t.prompt_count.suffix() == std::optional<std::string>("Answer with a number."));
}

TEST_CASE("canonical templates round-trip for every COCO category") {
    std::size_t checked = 0;
    for (const auto& raw : testing::coco_categories()) {
        const auto category = normalize_category(raw);
        CHECK(category == raw);
        for (auto type : {QueryType::count, QueryType::in, QueryType::max}) {
            const auto text = canonical_query_text(type, category);
            const auto q = parse_query(text);
            CHECK(q.type == type);
            CHECK(q.category == category);
            ++checked;
        }
    }
    CHECK(checked == 240);
}

TEST_CASE("plural surface forms parse to the COCO category") {
    // 80 categories x 3 templates in their natural plural phrasing
    std::size_t checked = 0;
    for (const auto& raw : testing::coco_categories()) {
        std::string plural = raw;
        if (raw == "person") plural = "people";
        else if (raw == "knife") plural = "knives";
        else if (raw == "mouse") plural = "mice";
        else if (raw == "sheep" || raw == "skis" || raw == "scissors" || raw == "broccoli") plural = raw;
        else if (raw == "bus") plural = "buses";
        else if (raw.ends_with("ch") || raw.ends_with("sh") || raw.ends_with("ss")) plural = raw + "es";
        else plural = raw + "s";
        const std::string texts[] = {
            "How many " + plural + " are in the database?",
            "In how many pictures there are " + plural + "?",
            "Which image has the most " + plural + "?",
        };
        for (const auto& text : texts) {
            CHECK_MESSAGE(parse_query(text).category == raw, text);
            ++checked;
        }
    }
    CHECK(checked == 240);
}
