#include "support/fixtures.hpp"

#include "mmndb/category.hpp"
#include "mmndb/corpus.hpp"
#include "mmndb/error.hpp"

#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace mmndb;

TEST_CASE("simple-jsonl ingestion builds TOY3") {
    const auto db = testing::toy3();
    CHECK(db.size() == 3);
    CHECK(db.vocabulary() == std::set<std::string>{"dog", "guitar", "person"});
    CHECK(db.instance_count("d1", "person") == 2);
    CHECK(db.instance_count("d2", "person") == 0);
    CHECK(db.instance_count("d3", "dog") == 1);
    CHECK_THROWS_AS(db.instance_count("d9", "dog"), NotFoundError);
}

TEST_CASE("document without annotations is kept with empty counts") {
    std::istringstream in("{\"doc_id\": \"d4\", \"counts\": {}}\n{\"doc_id\": \"d5\"}\n");
    const auto db = read_simple_jsonl(in);
    REQUIRE(db.size() == 2);
    CHECK(db.doc("d4").counts.empty());
    CHECK(db.instance_count("d4", "dog") == 0);
    const auto gt = ground_truth(db, Query::make(QueryType::count, "dog"));
    CHECK(gt.global == 0);
    CHECK(gt.relevant.empty());
}

TEST_CASE("zero counts are dropped and categories normalized") {
    std::istringstream in("{\"doc_id\": \"x\", \"counts\": {\"Dogs\": 2, \"cat\": 0, \"People\": 1}}\n");
    const auto db = read_simple_jsonl(in);
    CHECK(db.doc("x").counts == std::map<std::string, std::uint32_t>{{"dog", 2}, {"person", 1}});
    CHECK(db.vocabulary() == std::set<std::string>{"dog", "person"});
}

TEST_CASE("malformed jsonl reports the line") {
    std::istringstream in("{\"doc_id\": \"d1\", \"counts\": {}}\n{\"doc_id\": \"d2\", \"counts\": \n");
    try {
        read_simple_jsonl(in);
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.line() == 2);
    }
}

TEST_CASE("duplicate doc_id names the id") {
    std::istringstream in("{\"doc_id\": \"d1\"}\n{\"doc_id\": \"d1\"}\n");
    try {
        read_simple_jsonl(in);
        FAIL("expected IngestError");
    } catch (const IngestError& e) {
        CHECK(std::string(e.what()).find("d1") != std::string::npos);
    }
}

TEST_CASE("COCO instances file") {
    const char* coco = R"({
      "images": [{"id": 10, "file_name": "a.jpg"}, {"id": 11, "file_name": "b.jpg"}, {"id": 12, "file_name": "c.jpg"}],
      "categories": [{"id": 1, "name": "person"}, {"id": 18, "name": "dog"}, {"id": 20, "name": "sheep"}],
      "annotations": [
        {"id": 1, "image_id": 10, "category_id": 1},
        {"id": 2, "image_id": 10, "category_id": 1},
        {"id": 3, "image_id": 11, "category_id": 18},
        {"id": 4, "image_id": 10, "category_id": 18}
      ]
    })";
    std::istringstream in(coco);
    const auto db = read_coco_json(in);
    CHECK(db.size() == 3);
    CHECK(db.instance_count("10", "person") == 2);
    CHECK(db.instance_count("10", "dog") == 1);
    CHECK(db.doc("12").counts.empty());
    CHECK(db.doc("10").meta.at("image_uri") == "a.jpg");
    // declared categories are part of the vocabulary even without instances
    CHECK(db.vocabulary().contains("sheep"));

    std::istringstream broken("{\"images\": [\n  {\"id\": 1,}\n]}");
    try {
        read_coco_json(broken);
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.line() == 2);
    }

    std::istringstream dangling(R"({"images": [], "categories": [], "annotations": [{"id": 1, "image_id": 5, "category_id": 1}]})");
    CHECK_THROWS_AS(read_coco_json(dangling), IngestError);
}

TEST_CASE("ingest_annotations from disk") {
    const auto path = std::filesystem::temp_directory_path() / "mmndb_toy3.jsonl";
    {
        std::ofstream out(path);
        out << testing::kToy3Jsonl;
    }
    CHECK(ingest_annotations(path, AnnotationFormat::simple_jsonl) == testing::toy3());
    CHECK_THROWS_AS(ingest_annotations(path.string() + ".missing", AnnotationFormat::simple_jsonl), NotFoundError);
    std::filesystem::remove(path);
}

TEST_CASE("ground truth on TOY3") {
    const auto db = testing::toy3();

    const auto count = ground_truth(db, Query::make(QueryType::count, "person"));
    CHECK(count.relevant == std::set<std::string>{"d1", "d3"});
    CHECK(count.global == 3);
    CHECK(count.per_doc == std::map<std::string, std::int64_t>{{"d1", 2}, {"d3", 1}});

    const auto in = ground_truth(db, Query::make(QueryType::in, "dog"));
    CHECK(in.relevant == std::set<std::string>{"d2", "d3"});
    CHECK(in.global == 2);

    const auto max = ground_truth(db, Query::make(QueryType::max, "dog"));
    CHECK(max.global == 3);
    CHECK(max.max_docs == std::set<std::string>{"d2"});

    const auto unknown = ground_truth(db, Query::make(QueryType::max, "zebra"));
    CHECK(unknown.global == 0);
    CHECK(unknown.relevant.empty());
    CHECK(unknown.max_docs.empty());
}

TEST_CASE("ground truth equals brute force on random corpora") {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const auto docs = testing::random_documents({200, 8, 0.3, 4, seed});
        const auto db = MultimodalDatabase::from_documents(docs);
        for (const auto& cat : db.vocabulary()) {
            std::int64_t sum = 0, present = 0, best = 0;
            for (const auto& d : docs) {
                auto it = d.counts.find(cat);
                const std::int64_t n = it == d.counts.end() ? 0 : it->second;
                sum += n;
                present += n > 0;
                best = std::max(best, n);
            }
            const auto c = ground_truth(db, Query::make(QueryType::count, cat));
            CHECK(c.global == sum);
            CHECK(ground_truth(db, Query::make(QueryType::in, cat)).global == present);
            CHECK(ground_truth(db, Query::make(QueryType::in, cat)).global ==
                  static_cast<std::int64_t>(c.relevant.size()));
            CHECK(ground_truth(db, Query::make(QueryType::max, cat)).global == best);
        }
    }
}

TEST_CASE("ingestion is permutation invariant") {
    auto docs = testing::random_documents({150, 6, 0.3, 3, 42});
    const auto reference = MultimodalDatabase::from_documents(docs);
    rng::Stream s(7);
    for (int round = 0; round < 5; ++round) {
        for (std::size_t i = docs.size(); i > 1; --i) std::swap(docs[i - 1], docs[s.below(i)]);
        const auto db = MultimodalDatabase::from_documents(docs);
        CHECK(db == reference);
        for (const auto& cat : db.vocabulary()) {
            const auto a = ground_truth(db, Query::make(QueryType::max, cat));
            const auto b = ground_truth(reference, Query::make(QueryType::max, cat));
            CHECK(a.max_docs == b.max_docs);
            CHECK(a.per_doc == b.per_doc);
        }
    }
}

TEST_CASE("category normalization") {
    CHECK(normalize_category("People") == "person");
    CHECK(normalize_category("  Dining   Tables ") == "dining table");
    CHECK(normalize_category("wine glasses") == "wine glass");
    CHECK(normalize_category("knives") == "knife");
    CHECK(normalize_category("sandwiches") == "sandwich");
    CHECK(normalize_category("buses") == "bus");
    CHECK(normalize_category("ties") == "tie");
    CHECK(normalize_category("skis") == "skis");
    CHECK(normalize_category("scissors") == "scissors");
    CHECK(normalize_category("sheep") == "sheep");
    CHECK(normalize_category("guitars") == "guitar");
}
