#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace gazeclass {

// Expertise level of a participant. Ordering is the canonical class order
// used for confusion matrices and one-vs-one pairings.
enum class Expertise : std::uint8_t { Novice = 0, Intermediate = 1, Expert = 2 };

inline constexpr std::size_t kClassCount = 3;
inline constexpr std::array<Expertise, kClassCount> kAllClasses{
    Expertise::Novice, Expertise::Intermediate, Expertise::Expert};

constexpr std::size_t class_index(Expertise c) { return static_cast<std::size_t>(c); }

std::string_view to_string(Expertise c);
// Accepts full names and single-letter codes, case-insensitive.
std::optional<Expertise> parse_expertise(std::string_view text);

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Dense row-major matrix of doubles. Rows are training samples.
class RowMatrix {
public:
    RowMatrix() = default;
    RowMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    std::span<const double> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }
    std::span<double> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }
    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }

    void append_row(std::span<const double> values);

    const std::vector<double>& data() const { return data_; }

    bool operator==(const RowMatrix&) const = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

// SplitMix64 step; used to derive independent per-run seeds from a base seed.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index);

// 64-bit FNV-1a. Stable across platforms, used for config fingerprints.
std::uint64_t fnv1a64(std::string_view bytes);

}  // namespace gazeclass
