#include "mmndb/category.hpp"

#include <algorithm>
#include <cctype>
#include <string>
#include <unordered_map>
#include <unordered_set>

namespace mmndb {

namespace {

const std::unordered_map<std::string_view, std::string_view>& irregular_plurals() {
    static const std::unordered_map<std::string_view, std::string_view> table{
        {"people", "person"}, {"persons", "person"}, {"men", "man"},
        {"women", "woman"},   {"children", "child"}, {"mice", "mouse"},
        {"geese", "goose"},   {"teeth", "tooth"},    {"feet", "foot"},
        {"oxen", "ox"},       {"knives", "knife"},   {"wives", "wife"},
        {"leaves", "leaf"},   {"loaves", "loaf"},    {"shelves", "shelf"},
        {"wolves", "wolf"},   {"calves", "calf"},    {"halves", "half"},
        {"buses", "bus"},     {"potatoes", "potato"}, {"tomatoes", "tomato"},
        {"cookies", "cookie"}, {"movies", "movie"},  {"ties", "tie"},
        {"pies", "pie"},      {"skies", "sky"},      {"dice", "die"},
        {"cacti", "cactus"},  {"radii", "radius"},   {"fungi", "fungus"},
    };
    return table;
}

// Words whose singular ends like a plural; left untouched.
const std::unordered_set<std::string_view>& invariant_words() {
    static const std::unordered_set<std::string_view> words{
        "sheep",  "deer",   "fish",    "scissors", "skis",   "pants",  "jeans",
        "series", "species", "news",    "bus",    "gas",    "lens",
        "cactus", "octopus", "walrus",  "bonus",   "status", "virus",  "bass",
        "chess",  "dress",  "grass",   "glass",    "cross",  "process", "address",
    };
    return words;
}

bool ends_with(std::string_view s, std::string_view suffix) {
    return s.size() >= suffix.size() && s.substr(s.size() - suffix.size()) == suffix;
}

std::string singularize_word(std::string word) {
    if (invariant_words().contains(word)) return word;
    if (auto it = irregular_plurals().find(word); it != irregular_plurals().end()) {
        return std::string(it->second);
    }
    if (word.size() > 4 && ends_with(word, "ies")) {
        word.resize(word.size() - 3);
        return word + "y";
    }
    for (std::string_view es : {"sses", "ches", "shes", "xes", "zes"}) {
        if (word.size() > es.size() && ends_with(word, es)) {
            word.resize(word.size() - 2);
            return word;
        }
    }
    if (word.size() > 2 && word.back() == 's' && !ends_with(word, "ss") &&
        !ends_with(word, "us") && !ends_with(word, "is")) {
        word.pop_back();
    }
    return word;
}

} // namespace

std::string normalize_category(std::string_view name) {
    std::string collapsed;
    collapsed.reserve(name.size());
    bool pending_space = false;
    for (char raw : name) {
        const auto c = static_cast<unsigned char>(raw);
        if (std::isspace(c)) {
            pending_space = !collapsed.empty();
            continue;
        }
        if (pending_space) {
            collapsed.push_back(' ');
            pending_space = false;
        }
        collapsed.push_back(static_cast<char>(std::tolower(c)));
    }
    const auto last_space = collapsed.rfind(' ');
    const std::size_t head = last_space == std::string::npos ? 0 : last_space + 1;
    return collapsed.substr(0, head) + singularize_word(collapsed.substr(head));
}

} // namespace mmndb
