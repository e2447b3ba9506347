#pragma once

#include "mmndb/query.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace mmndb {

/// One image with its per-category instance counts. Categories with zero
/// instances are never stored.
struct Document {
    std::string doc_id;
    std::map<std::string, std::uint32_t> counts;
    std::map<std::string, std::string> meta;

    friend bool operator==(const Document&, const Document&) = default;
};

/// The document collection. Immutable once built; iteration is by doc_id,
/// so nothing downstream can observe insertion order.
class MultimodalDatabase {
public:
    MultimodalDatabase() = default;

    /// Validates and normalizes: non-empty unique ids, category names
    /// normalized, zero counts dropped. Throws IngestError.
    static MultimodalDatabase from_documents(std::vector<Document> docs,
                                             const std::set<std::string>& declared_categories = {});

    const std::map<std::string, Document, std::less<>>& docs() const noexcept { return docs_; }
    const std::set<std::string>& vocabulary() const noexcept { return vocabulary_; }
    std::size_t size() const noexcept { return docs_.size(); }
    bool empty() const noexcept { return docs_.empty(); }

    bool contains(std::string_view doc_id) const { return docs_.find(doc_id) != docs_.end(); }
    /// Throws NotFoundError.
    const Document& doc(std::string_view doc_id) const;

    /// Stored count, 0 when the category is absent. Throws NotFoundError for
    /// an unknown doc_id.
    std::uint32_t instance_count(std::string_view doc_id, std::string_view category) const;

    std::uint64_t total_instances() const;

    friend bool operator==(const MultimodalDatabase&, const MultimodalDatabase&) = default;

private:
    std::map<std::string, Document, std::less<>> docs_;
    std::set<std::string> vocabulary_;
};

enum class AnnotationFormat { coco_json, simple_jsonl };

std::string_view to_string(AnnotationFormat format);
AnnotationFormat annotation_format_from_string(std::string_view s);

MultimodalDatabase read_simple_jsonl(std::istream& in);
MultimodalDatabase read_coco_json(std::istream& in);
MultimodalDatabase ingest_annotations(const std::filesystem::path& source, AnnotationFormat format);

void write_simple_jsonl(const MultimodalDatabase& db, std::ostream& out);

/// Reference answer for a query. `per_doc` holds only relevant docs; every
/// other doc has ground-truth value 0. For IN the per-doc value is the
/// presence indicator (1).
struct GroundTruth {
    Query query;
    std::set<std::string> relevant;
    std::map<std::string, std::int64_t> per_doc;
    std::int64_t global = 0;
    std::set<std::string> max_docs;

    std::int64_t value_for(const std::string& doc_id) const {
        auto it = per_doc.find(doc_id);
        return it == per_doc.end() ? 0 : it->second;
    }
};

GroundTruth ground_truth(const MultimodalDatabase& db, const Query& query);

} // namespace mmndb
