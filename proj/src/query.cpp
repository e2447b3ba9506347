#include "mmndb/query.hpp"

#include "mmndb/category.hpp"
#include "mmndb/error.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <map>
#include <regex>
#include <sstream>

namespace mmndb {

namespace detail {
std::string_view embedded_templates_text();
}

namespace {

constexpr std::string_view kPlaceholder = "{object}";

std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(first, last - first + 1));
}

std::string collapse_whitespace(std::string_view s) {
    std::string out;
    bool space = false;
    for (char c : s) {
        if (std::isspace(static_cast<unsigned char>(c))) {
            space = !out.empty();
            continue;
        }
        if (space) out.push_back(' ');
        space = false;
        out.push_back(c);
    }
    return out;
}

struct Pattern {
    QueryType type;
    std::regex re;
};

const std::vector<Pattern>& patterns() {
    using std::regex_constants::icase;
    using std::regex_constants::ECMAScript;
    static const std::vector<Pattern> all{
        {QueryType::count,
         std::regex(R"(^how many\s*(.*?)\s*are (?:there )?in the database\s*\??$)", ECMAScript | icase)},
        {QueryType::in,
         std::regex(R"(^in how many (?:pictures|images) (?:are )?there(?: are)?\s*(.*?)\s*\??$)",
                    ECMAScript | icase)},
        {QueryType::max,
         std::regex(R"(^which (?:image|picture) has the most\s*(.*?)\s*\??$)", ECMAScript | icase)},
        {QueryType::max,
         std::regex(R"(^what is the maximum number of\s*(.*?)(?: in (?:an|a single|a|one) (?:image|picture))?\s*\??$)",
                    ECMAScript | icase)},
    };
    return all;
}

TemplateSet load_templates(std::string_view text) {
    std::map<std::string, std::string> kv;
    std::istringstream in{std::string(text)};
    std::string line;
    while (std::getline(in, line)) {
        const std::string t = trim(line);
        if (t.empty() || t.front() == '#') continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos) continue;
        kv[trim(t.substr(0, eq))] = trim(t.substr(eq + 1));
    }
    auto get = [&](const std::string& key) {
        auto it = kv.find(key);
        if (it == kv.end()) throw ConfigError("template resource missing key '" + key + "'");
        return it->second;
    };
    std::optional<std::string> suffix;
    if (auto it = kv.find("prompt.suffix"); it != kv.end() && !it->second.empty()) suffix = it->second;

    TemplateSet set;
    set.version = std::stoi(get("version"));
    set.query_count = PromptTemplate(get("query.count"));
    set.query_in = PromptTemplate(get("query.in"));
    set.query_max = PromptTemplate(get("query.max"));
    set.prompt_count = PromptTemplate(get("prompt.count"), suffix);
    set.prompt_in = PromptTemplate(get("prompt.in"), suffix);
    set.prompt_max = PromptTemplate(get("prompt.max"), suffix);
    return set;
}

} // namespace

std::string_view to_string(QueryType type) {
    switch (type) {
    case QueryType::count: return "count";
    case QueryType::in: return "in";
    case QueryType::max: return "max";
    }
    return "?";
}

std::optional<QueryType> query_type_from_string(std::string_view s) {
    std::string lower;
    for (char c : s) lower.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    if (lower == "count") return QueryType::count;
    if (lower == "in") return QueryType::in;
    if (lower == "max") return QueryType::max;
    return std::nullopt;
}

Query Query::make(QueryType type, std::string_view category) {
    Query q;
    q.type = type;
    q.category = normalize_category(category);
    if (q.category.empty()) throw QueryParseError("query category is empty");
    q.raw_text = canonical_query_text(type, q.category);
    return q;
}

std::string Query::key() const {
    return std::string(to_string(type)) + ":" + category;
}

Query parse_query(std::string_view text) {
    const std::string cleaned = collapse_whitespace(text);
    std::smatch m;
    for (const auto& p : patterns()) {
        if (!std::regex_match(cleaned, m, p.re)) continue;
        std::string object = normalize_category(m[1].str());
        if (object.empty()) {
            throw QueryParseError("query \"" + std::string(text) + "\" has an empty object");
        }
        Query q;
        q.type = p.type;
        q.category = std::move(object);
        q.raw_text = std::string(text);
        return q;
    }
    throw UnsupportedQueryError(std::string(text));
}

PromptTemplate::PromptTemplate(std::string text, std::optional<std::string> suffix)
    : text_(std::move(text)), suffix_(std::move(suffix)) {
    const auto first = text_.find(kPlaceholder);
    if (first == std::string::npos || text_.find(kPlaceholder, first + 1) != std::string::npos) {
        throw ContractError("prompt template must contain exactly one {object} placeholder: \"" +
                            text_ + "\"");
    }
}

std::string PromptTemplate::render(std::string_view object) const {
    std::string out = text_;
    out.replace(out.find(kPlaceholder), kPlaceholder.size(), object);
    if (suffix_) {
        out += ' ';
        out += *suffix_;
    }
    return out;
}

std::string render_prompt(const Query& query, const PromptTemplate& tmpl) {
    return tmpl.render(query.category);
}

const PromptTemplate& TemplateSet::query_template(QueryType type) const {
    switch (type) {
    case QueryType::count: return query_count;
    case QueryType::in: return query_in;
    case QueryType::max: return query_max;
    }
    return query_count;
}

const PromptTemplate& TemplateSet::prompt_template(QueryType type) const {
    switch (type) {
    case QueryType::count: return prompt_count;
    case QueryType::in: return prompt_in;
    case QueryType::max: return prompt_max;
    }
    return prompt_count;
}

const TemplateSet& canonical_templates() {
    static const TemplateSet set = load_templates(detail::embedded_templates_text());
    return set;
}

std::string_view canonical_templates_text() { return detail::embedded_templates_text(); }

std::string canonical_query_text(QueryType type, std::string_view category) {
    return canonical_templates().query_template(type).render(category);
}

} // namespace mmndb
