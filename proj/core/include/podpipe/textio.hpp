#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace podpipe {

/// Shortest decimal representation that round-trips the exact double.
/// Every float written to disk goes through this, which is what makes
/// re-serialization byte-stable.
std::string canon(double v);

std::optional<double> parse_double(std::string_view s);
std::optional<long long> parse_int(std::string_view s);

/// Splits one CSV line on commas. No quoting: none of the formats here
/// carry embedded commas.
std::vector<std::string_view> split_csv(std::string_view line);

std::string read_file(const std::filesystem::path& p);

/// Splits file content into lines ('\n' separated; a trailing final
/// newline does not produce an empty last line).
std::vector<std::string_view> split_lines(std::string_view content);
// The returned views alias the argument, so a temporary buffer is a bug.
std::vector<std::string_view> split_lines(std::string&&) = delete;

/// Reads a whole file or fails with a not-found error naming the path.
std::string read_file_or_fail(const std::filesystem::path& p);

void write_file(const std::filesystem::path& p, std::string_view content);

}  // namespace podpipe
