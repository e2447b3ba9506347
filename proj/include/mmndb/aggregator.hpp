#pragma once

#include "mmndb/query.hpp"
#include "mmndb/reasoner.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>

namespace mmndb {

/// How indecisive and failed answers enter the fold. as_zero counts them as
/// 0; skip leaves them out. Both always report how many there were.
enum class IndecisivePolicy { as_zero, skip };

std::string_view to_string(IndecisivePolicy policy);
IndecisivePolicy indecisive_policy_from_string(std::string_view s);

struct QueryAnswer {
    QueryType type = QueryType::count;
    std::int64_t value = 0;
    std::optional<std::string> witness;
    std::size_t excluded = 0;
    IndecisivePolicy policy = IndecisivePolicy::as_zero;

    friend bool operator==(const QueryAnswer&, const QueryAnswer&) = default;
};

using AnswerMap = std::map<std::string, IntermediateAnswer>;

/// Sum of the numeric answers.
QueryAnswer aggregate_count(const AnswerMap& answers, IndecisivePolicy policy = IndecisivePolicy::as_zero);
/// Number of documents whose numeric answer is >= 1.
QueryAnswer aggregate_in(const AnswerMap& answers, IndecisivePolicy policy = IndecisivePolicy::as_zero);
/// Largest numeric answer; ties go to the smallest doc_id. Throws
/// EmptyAnswerError when there is no numeric answer at all.
QueryAnswer aggregate_max(const AnswerMap& answers, IndecisivePolicy policy = IndecisivePolicy::as_zero);

QueryAnswer aggregate(QueryType type, const AnswerMap& answers, IndecisivePolicy policy = IndecisivePolicy::as_zero);

} // namespace mmndb
