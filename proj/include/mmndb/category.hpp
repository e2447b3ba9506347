#pragma once

#include <string>
#include <string_view>

namespace mmndb {

/// Canonical form of an object category: trimmed, lower-case, inner
/// whitespace collapsed, last word singularized ("Dining  Tables" ->
/// "dining table", "people" -> "person"). Idempotent.
std::string normalize_category(std::string_view name);

} // namespace mmndb
