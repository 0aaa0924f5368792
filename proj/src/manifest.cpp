#include <algorithm>
#include <fstream>
#include <set>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "edyn/cli.hpp"
#include "edyn/errors.hpp"

namespace edyn::cli {

namespace {

std::string flag_name(std::string key) {
  std::replace(key.begin(), key.end(), '_', '-');
  return key;
}

const std::set<std::string> kReserved = {"out-dir", "prefix"};

}  // namespace

Manifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open manifest " + path.string());
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ParseError("manifest " + path.string() + ": " + e.message(), e.line(), 1);
  }

  // Line numbers of section headers, for error messages.
  std::vector<std::pair<std::string, std::size_t>> section_lines;
  {
    std::ifstream again(path);
    std::string line;
    std::size_t no = 0;
    while (std::getline(again, line)) {
      ++no;
      const auto first = line.find_first_not_of(" \t");
      if (first != std::string::npos && line[first] == '[') {
        const auto close = line.find(']', first);
        std::string name = line.substr(first + 1, close - first - 1);
        name.erase(0, name.find_first_not_of(" \t"));
        name.erase(name.find_last_not_of(" \t") + 1);
        section_lines.emplace_back(name, no);
      }
    }
  }
  auto line_of = [&](const std::string& name) -> std::size_t {
    for (const auto& [n, l] : section_lines) {
      if (n == name) return l;
    }
    return 0;
  };

  Manifest m;
  m.path = path;
  const auto base = path.parent_path();
  for (const auto& [key, child] : tree) {
    if (child.empty()) {
      const std::string flag = flag_name(key);
      if (kReserved.count(flag)) {
        throw ParseError("manifest default '" + key + "' is not allowed", 1, 1);
      }
      m.defaults.emplace_back(flag, child.data());
      continue;
    }
    ManifestEntry e;
    e.name = key;
    e.line = line_of(key);
    if (key.find_first_of("/\\") != std::string::npos || key == "." || key == ".." || key == "summary") {
      throw ParseError("invalid entry name '" + key + "'", e.line, 2);
    }
    std::vector<std::pair<std::string, std::string>> own;
    for (const auto& [k, v] : child) {
      std::string flag = flag_name(k);
      std::string value = v.data();
      if (flag == "command") {
        e.command = value;
        continue;
      }
      if (kReserved.count(flag)) {
        throw ParseError("entry '" + key + "': key '" + k + "' is set by the sweep", e.line, 1);
      }
      if (flag == "dataset" && !value.empty() && std::filesystem::path(value).is_relative()) {
        value = (base / value).lexically_normal().string();
      }
      own.emplace_back(std::move(flag), std::move(value));
    }
    for (const auto& [k, v] : m.defaults) {
      if (k == "command") {
        if (e.command.empty()) e.command = v;
        continue;
      }
      const bool overridden = std::any_of(own.begin(), own.end(), [&](const auto& kv) { return kv.first == k; });
      if (!overridden) e.options.emplace_back(k, v);
    }
    if (e.command.empty()) throw ParseError("entry '" + key + "' has no 'command' key", e.line, 1);
    e.options.insert(e.options.end(), own.begin(), own.end());
    m.entries.push_back(std::move(e));
  }
  return m;
}

std::vector<std::string> entry_arguments(const ManifestEntry& entry, const std::filesystem::path& out_dir) {
  std::vector<std::string> args{entry.command};
  for (const auto& [k, v] : entry.options) {
    if (v == "true") {
      args.push_back("--" + k);
    } else if (v == "false") {
      continue;
    } else {
      args.push_back("--" + k);
      args.push_back(v);
    }
  }
  args.push_back("--out-dir");
  args.push_back(out_dir.string());
  args.push_back("--prefix");
  args.push_back(entry.name);
  return args;
}

}  // namespace edyn::cli
