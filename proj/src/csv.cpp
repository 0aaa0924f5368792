#include "edyn/csv.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <ostream>

#include "edyn/errors.hpp"

namespace edyn {

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::optional<double> parse_double(std::string_view s) {
  if (s == "nan") return std::nan("");
  if (s == "inf") return HUGE_VAL;
  if (s == "-inf") return -HUGE_VAL;
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) return std::nullopt;
  return v;
}

Metadata& Metadata::add(std::string key, std::string value) {
  entries_.emplace_back(std::move(key), std::move(value));
  return *this;
}

Metadata& Metadata::add(std::string key, double value) { return add(std::move(key), format_double(value)); }

Metadata& Metadata::add(std::string key, long long value) { return add(std::move(key), std::to_string(value)); }

Metadata& Metadata::add(std::string key, unsigned long long value) {
  return add(std::move(key), std::to_string(value));
}

std::optional<std::string> Metadata::get(std::string_view key) const {
  for (const auto& [k, v] : entries_) {
    if (k == key) return v;
  }
  return std::nullopt;
}

void Metadata::write(std::ostream& out) const {
  out << "# tool=" << kToolName << ' ' << kToolVersion << '\n';
  for (const auto& [k, v] : entries_) out << "# " << k << '=' << v << '\n';
}

std::size_t CsvTable::column(std::string_view name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return i;
  }
  throw ParseError("missing column '" + std::string(name) + "'", meta.entries().size() + 2, 1);
}

namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (true) {
    const std::size_t comma = line.find(',', pos);
    out.emplace_back(line.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos));
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  return out;
}

}  // namespace

CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  CsvTable t;
  std::string line;
  std::size_t line_no = 0;
  bool tool_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::string body = line.substr(line.size() > 1 && line[1] == ' ' ? 2 : 1);
      const auto eq = body.find('=');
      if (!t.header.empty()) {
        t.footer.push_back(std::move(body));
      } else if (eq != std::string::npos) {
        if (!tool_seen && body.substr(0, eq) == "tool") {
          tool_seen = true;
        } else {
          t.meta.add(body.substr(0, eq), body.substr(eq + 1));
        }
      }
      continue;
    }
    if (t.header.empty()) {
      t.header = split(line);
      continue;
    }
    if (!t.footer.empty()) throw ParseError("data row after footer comments", line_no, 1);
    auto cells = split(line);
    if (cells.size() != t.header.size()) {
      throw ParseError("row has " + std::to_string(cells.size()) + " cells, header has " +
                           std::to_string(t.header.size()),
                       line_no, 1);
    }
    t.rows.push_back(std::move(cells));
  }
  if (t.header.empty()) throw ParseError("no header row", line_no + 1, 1);
  return t;
}

}  // namespace edyn
