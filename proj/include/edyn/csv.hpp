#pragma once

// CSV output with a '#'-prefixed metadata block, and a reader for the same
// layout.

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace edyn {

inline constexpr std::string_view kToolName = "edgedyn";
inline constexpr std::string_view kToolVersion = "1.0.0";

/// Shortest decimal string that parses back to the same binary64
/// ("nan", "inf", "-inf" for non-finite values).
std::string format_double(double v);

/// Full-string parse of a decimal or nan/inf token; nullopt on failure.
std::optional<double> parse_double(std::string_view s);

/// Ordered key=value pairs written as '# key=value' lines. The first line is
/// always '# tool=edgedyn <version>'.
class Metadata {
 public:
  Metadata& add(std::string key, std::string value);
  Metadata& add(std::string key, double value);
  Metadata& add(std::string key, long long value);
  Metadata& add(std::string key, unsigned long long value);

  const std::vector<std::pair<std::string, std::string>>& entries() const noexcept { return entries_; }
  std::optional<std::string> get(std::string_view key) const;
  void write(std::ostream& out) const;

 private:
  std::vector<std::pair<std::string, std::string>> entries_;
};

struct CsvTable {
  Metadata meta;                             ///< leading '# key=value' lines
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> footer;           ///< trailing '#' lines, prefix stripped

  /// Index of a header column; throws ParseError when missing.
  std::size_t column(std::string_view name) const;
};

/// Throws ParseError with line/column on ragged rows or a missing header.
CsvTable read_csv(const std::filesystem::path& path);

}  // namespace edyn
