#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace mmndb {

enum class QueryType { count, in, max };

std::string_view to_string(QueryType type);
/// Accepts "count", "in", "max" (any case).
std::optional<QueryType> query_type_from_string(std::string_view s);

struct Query {
    QueryType type = QueryType::count;
    std::string category;
    std::string raw_text;

    /// Builds a query directly; the category is normalized.
    static Query make(QueryType type, std::string_view category);

    /// Stable key used for seeding and report ordering, e.g. "count:dog".
    std::string key() const;

    friend bool operator==(const Query& a, const Query& b) {
        return a.type == b.type && a.category == b.category;
    }
};

/// Matches `text` against the query template grammar (case-insensitive,
/// whitespace-tolerant):
///   COUNT  how many X are (there) in the database
///   IN     in how many pictures|images (are) there (are) X
///   MAX    which image|picture has the most X
///          what is the maximum number of X (in an|a single|one image|picture)
/// Throws UnsupportedQueryError when nothing matches and QueryParseError
/// when a template matches with an empty object.
Query parse_query(std::string_view text);

/// A prompt with exactly one `{object}` placeholder. Enforced on construction.
class PromptTemplate {
public:
    explicit PromptTemplate(std::string text, std::optional<std::string> suffix = std::nullopt);

    const std::string& text() const noexcept { return text_; }
    const std::optional<std::string>& suffix() const noexcept { return suffix_; }

    std::string render(std::string_view object) const;

private:
    std::string text_;
    std::optional<std::string> suffix_;
};

std::string render_prompt(const Query& query, const PromptTemplate& tmpl);

/// The shipped template resource (resources/query_templates.txt).
struct TemplateSet {
    int version = 0;
    PromptTemplate query_count{"{object}"};
    PromptTemplate query_in{"{object}"};
    PromptTemplate query_max{"{object}"};
    PromptTemplate prompt_count{"{object}"};
    PromptTemplate prompt_in{"{object}"};
    PromptTemplate prompt_max{"{object}"};

    const PromptTemplate& query_template(QueryType type) const;
    const PromptTemplate& prompt_template(QueryType type) const;
};

const TemplateSet& canonical_templates();
/// Raw resource text, for help output.
std::string_view canonical_templates_text();

/// Natural-language form of the query produced by the canonical template.
std::string canonical_query_text(QueryType type, std::string_view category);

} // namespace mmndb
