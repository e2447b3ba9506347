#include "mmndb/corpus.hpp"

#include "mmndb/category.hpp"
#include "mmndb/error.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <fstream>
#include <istream>
#include <iterator>
#include <ostream>
#include <sstream>
#include <unordered_map>

namespace mmndb {

using nlohmann::json;

namespace {

// nlohmann reports a 1-based byte position; turn it into line/column.
std::pair<std::size_t, std::size_t> line_column(std::string_view text, std::size_t byte) {
    std::size_t line = 1;
    std::size_t col = 1;
    for (std::size_t i = 0; i + 1 < byte && i < text.size(); ++i) {
        if (text[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    return {line, col};
}

} // namespace

MultimodalDatabase MultimodalDatabase::from_documents(std::vector<Document> docs,
                                                      const std::set<std::string>& declared_categories) {
    MultimodalDatabase db;
    for (const auto& c : declared_categories) {
        auto norm = normalize_category(c);
        if (!norm.empty()) db.vocabulary_.insert(std::move(norm));
    }
    for (auto& d : docs) {
        if (d.doc_id.empty()) throw IngestError("document with empty doc_id");
        Document clean;
        clean.doc_id = d.doc_id;
        clean.meta = std::move(d.meta);
        for (const auto& [cat, n] : d.counts) {
            auto norm = normalize_category(cat);
            if (norm.empty()) throw IngestError("empty category name in document '" + d.doc_id + "'");
            if (n == 0) continue;
            clean.counts[norm] += n;
            db.vocabulary_.insert(std::move(norm));
        }
        auto id = clean.doc_id;
        if (!db.docs_.emplace(id, std::move(clean)).second) {
            throw IngestError("duplicate doc_id '" + id + "'");
        }
    }
    return db;
}

const Document& MultimodalDatabase::doc(std::string_view doc_id) const {
    auto it = docs_.find(doc_id);
    if (it == docs_.end()) throw NotFoundError("unknown doc_id '" + std::string(doc_id) + "'");
    return it->second;
}

std::uint32_t MultimodalDatabase::instance_count(std::string_view doc_id, std::string_view category) const {
    const auto& d = doc(doc_id);
    auto it = d.counts.find(std::string(category));
    return it == d.counts.end() ? 0 : it->second;
}

std::uint64_t MultimodalDatabase::total_instances() const {
    std::uint64_t total = 0;
    for (const auto& [id, d] : docs_) {
        for (const auto& [c, n] : d.counts) total += n;
    }
    return total;
}

std::string_view to_string(AnnotationFormat format) {
    return format == AnnotationFormat::coco_json ? "coco-json" : "simple-jsonl";
}

AnnotationFormat annotation_format_from_string(std::string_view s) {
    if (s == "coco-json") return AnnotationFormat::coco_json;
    if (s == "simple-jsonl") return AnnotationFormat::simple_jsonl;
    throw ConfigError("unknown annotation format '" + std::string(s) +
                      "' (expected coco-json or simple-jsonl)");
}

MultimodalDatabase read_simple_jsonl(std::istream& in) {
    std::vector<Document> docs;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::parse_error& e) {
            throw ParseError(std::string("malformed JSON: ") + e.what(), line_no, e.byte);
        }
        try {
            if (!j.is_object()) throw ParseError("expected a JSON object", line_no, 1);
            Document d;
            d.doc_id = j.at("doc_id").get<std::string>();
            if (auto it = j.find("counts"); it != j.end()) {
                for (const auto& [cat, n] : it->items()) {
                    const auto v = n.get<std::int64_t>();
                    if (v < 0) throw ParseError("negative count for '" + cat + "'", line_no, 1);
                    d.counts[cat] += static_cast<std::uint32_t>(v);
                }
            }
            if (auto it = j.find("meta"); it != j.end()) {
                for (const auto& [k, v] : it->items()) d.meta[k] = v.get<std::string>();
            }
            docs.push_back(std::move(d));
        } catch (const json::exception& e) {
            throw ParseError(std::string("invalid document record: ") + e.what(), line_no, 1);
        }
    }
    return MultimodalDatabase::from_documents(std::move(docs));
}

MultimodalDatabase read_coco_json(std::istream& in) {
    const std::string text{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        auto [line, col] = line_column(text, e.byte);
        throw ParseError(std::string("malformed COCO JSON: ") + e.what(), line, col);
    }
    try {
        std::unordered_map<std::int64_t, std::string> category_names;
        std::set<std::string> declared;
        for (const auto& c : j.at("categories")) {
            auto name = c.at("name").get<std::string>();
            category_names[c.at("id").get<std::int64_t>()] = name;
            declared.insert(name);
        }

        std::unordered_map<std::int64_t, std::size_t> index;
        std::vector<Document> docs;
        for (const auto& img : j.at("images")) {
            const auto id = img.at("id").get<std::int64_t>();
            if (index.contains(id)) throw IngestError("duplicate doc_id '" + std::to_string(id) + "'");
            Document d;
            d.doc_id = std::to_string(id);
            if (auto it = img.find("file_name"); it != img.end()) d.meta["file_name"] = it->get<std::string>();
            if (auto it = img.find("coco_url"); it != img.end()) d.meta["image_uri"] = it->get<std::string>();
            else if (d.meta.contains("file_name")) d.meta["image_uri"] = d.meta["file_name"];
            index.emplace(id, docs.size());
            docs.push_back(std::move(d));
        }

        for (const auto& ann : j.at("annotations")) {
            const auto image_id = ann.at("image_id").get<std::int64_t>();
            const auto category_id = ann.at("category_id").get<std::int64_t>();
            auto img = index.find(image_id);
            if (img == index.end()) {
                throw IngestError("annotation " + ann.value("id", json(-1)).dump() +
                                  " references unknown image_id " + std::to_string(image_id));
            }
            auto cat = category_names.find(category_id);
            if (cat == category_names.end()) {
                throw IngestError("annotation references unknown category_id " + std::to_string(category_id));
            }
            docs[img->second].counts[cat->second] += 1;
        }
        return MultimodalDatabase::from_documents(std::move(docs), declared);
    } catch (const json::exception& e) {
        throw ParseError(std::string("invalid COCO schema: ") + e.what(), 1, 1);
    }
}

MultimodalDatabase ingest_annotations(const std::filesystem::path& source, AnnotationFormat format) {
    std::ifstream in(source, std::ios::binary);
    if (!in) throw NotFoundError("cannot open annotation file '" + source.string() + "'");
    return format == AnnotationFormat::coco_json ? read_coco_json(in) : read_simple_jsonl(in);
}

void write_simple_jsonl(const MultimodalDatabase& db, std::ostream& out) {
    for (const auto& [id, d] : db.docs()) {
        nlohmann::ordered_json j;
        j["doc_id"] = id;
        j["counts"] = nlohmann::ordered_json::object();
        for (const auto& [c, n] : d.counts) j["counts"][c] = n;
        if (!d.meta.empty()) {
            j["meta"] = nlohmann::ordered_json::object();
            for (const auto& [k, v] : d.meta) j["meta"][k] = v;
        }
        out << j.dump() << '\n';
    }
}

GroundTruth ground_truth(const MultimodalDatabase& db, const Query& query) {
    GroundTruth gt;
    gt.query = query;
    std::int64_t best = 0;
    for (const auto& [id, d] : db.docs()) {
        auto it = d.counts.find(query.category);
        if (it == d.counts.end()) continue;
        const std::int64_t n = it->second;
        gt.relevant.insert(id);
        gt.per_doc[id] = query.type == QueryType::in ? 1 : n;
        switch (query.type) {
        case QueryType::count: gt.global += n; break;
        case QueryType::in: gt.global += 1; break;
        case QueryType::max:
            if (n > best) {
                best = n;
                gt.max_docs.clear();
            }
            if (n == best) gt.max_docs.insert(id);
            break;
        }
    }
    if (query.type == QueryType::max) gt.global = best;
    return gt;
}

} // namespace mmndb
