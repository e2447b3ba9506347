#include "mmndb/aggregator.hpp"

#include "mmndb/error.hpp"

namespace mmndb {

std::string_view to_string(IndecisivePolicy policy) {
    return policy == IndecisivePolicy::as_zero ? "as_zero" : "skip";
}

IndecisivePolicy indecisive_policy_from_string(std::string_view s) {
    if (s == "as_zero") return IndecisivePolicy::as_zero;
    if (s == "skip") return IndecisivePolicy::skip;
    throw ConfigError("unknown indecisive policy '" + std::string(s) + "' (expected as_zero or skip)");
}

// For COUNT and IN both policies give the same value, since a non-numeric
// answer contributes nothing either way; the policies only differ in intent
// and, for MAX, in witness handling.

QueryAnswer aggregate_count(const AnswerMap& answers, IndecisivePolicy policy) {
    QueryAnswer out{QueryType::count, 0, std::nullopt, 0, policy};
    for (const auto& [id, a] : answers) {
        if (a.is_number()) out.value += a.value;
        else ++out.excluded;
    }
    return out;
}

QueryAnswer aggregate_in(const AnswerMap& answers, IndecisivePolicy policy) {
    QueryAnswer out{QueryType::in, 0, std::nullopt, 0, policy};
    for (const auto& [id, a] : answers) {
        if (!a.is_number()) ++out.excluded;
        else if (a.value >= 1) ++out.value;
    }
    return out;
}

QueryAnswer aggregate_max(const AnswerMap& answers, IndecisivePolicy policy) {
    QueryAnswer out{QueryType::max, 0, std::nullopt, 0, policy};
    // Map iteration is by ascending doc_id, so strict > keeps the smallest id on ties.
    for (const auto& [id, a] : answers) {
        if (!a.is_number()) {
            ++out.excluded;
            continue;
        }
        if (!out.witness || a.value > out.value) {
            out.value = a.value;
            out.witness = id;
        }
    }
    if (!out.witness) throw EmptyAnswerError("MAX is undefined: no numeric intermediate answers");
    return out;
}

QueryAnswer aggregate(QueryType type, const AnswerMap& answers, IndecisivePolicy policy) {
    switch (type) {
    case QueryType::count: return aggregate_count(answers, policy);
    case QueryType::in: return aggregate_in(answers, policy);
    case QueryType::max: return aggregate_max(answers, policy);
    }
    return aggregate_count(answers, policy);
}

} // namespace mmndb
