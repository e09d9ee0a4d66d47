#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace ctm {

using Rng = std::mt19937_64;

/// 64-bit FNV-1a.
std::uint64_t fnv1a64(std::string_view bytes) noexcept;

/// SplitMix64 finalizer; used to decorrelate derived seeds.
std::uint64_t mix64(std::uint64_t x) noexcept;

/// Seed for a named sub-task: seed XOR fnv1a64(tag).
inline std::uint64_t derive_seed(std::uint64_t seed, std::string_view tag) noexcept {
    return seed ^ fnv1a64(tag);
}

/// Uniform double in [0, 1) from the top 53 bits of one draw.
inline double uniform01(Rng& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Uniform integer in [0, n) by rejection, independent of the standard library's distribution.
std::size_t uniform_index(Rng& rng, std::size_t n);

// Text and files

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view contents);

/// Shortest representation that round-trips exactly.
std::string format_double(double value);
double parse_double(std::string_view text);
long long parse_integer(std::string_view text);

std::string sha256_hex(std::string_view bytes);
std::string sha256_file(const std::filesystem::path& path);

std::string trim(std::string_view text);

struct CsvRecord {
    std::vector<std::string> fields;
    std::size_t line = 0; ///< line on which the record starts
};

/// RFC 4180 reader: quoted fields may contain commas, doubled quotes and newlines.
std::vector<CsvRecord> parse_csv(std::string_view text);
std::string csv_escape(std::string_view field);

/// One term per line, '#' starts a comment, blank lines skipped, terms lowercased.
std::vector<std::string> read_term_list(const std::filesystem::path& path);

} // namespace ctm
