#include "gazeclass/types.hpp"

#include <algorithm>
#include <cctype>

namespace gazeclass {

std::string_view to_string(Expertise c) {
    switch (c) {
        case Expertise::Novice: return "novice";
        case Expertise::Intermediate: return "intermediate";
        case Expertise::Expert: return "expert";
    }
    return "unknown";
}

std::optional<Expertise> parse_expertise(std::string_view text) {
    std::string lower(text);
    std::transform(lower.begin(), lower.end(), lower.begin(),
                   [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
    if (lower == "novice" || lower == "n") return Expertise::Novice;
    if (lower == "intermediate" || lower == "i") return Expertise::Intermediate;
    if (lower == "expert" || lower == "e") return Expertise::Expert;
    return std::nullopt;
}

void RowMatrix::append_row(std::span<const double> values) {
    if (rows_ == 0 && cols_ == 0) cols_ = values.size();
    if (values.size() != cols_) throw Error("row width mismatch");
    data_.insert(data_.end(), values.begin(), values.end());
    ++rows_;
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) {
    std::uint64_t z = base + 0x9E3779B97F4A7C15ULL * (index + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace gazeclass
