#pragma once

// The edgedyn command line: orbit, bifurcation, train, phase and sweep.

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace edyn::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,  ///< unexpected numerical failure
  kExitParam = 2,    ///< invalid arguments
  kExitData = 3,     ///< missing or malformed input files
};

/// Key facts about a finished run, collected for the sweep summary.
struct RunSummary {
  std::vector<std::pair<std::string, std::string>> fields;

  void set(std::string key, std::string value);
  std::string get(const std::string& key) const;
};

/// Runs one command. args excludes the program name, e.g.
/// {"orbit", "--a", "1.2"}. Diagnostics go to err, reports to out.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
        RunSummary* summary = nullptr);

int main_entry(int argc, char** argv);

// --- manifest ----------------------------------------------------------------

struct ManifestEntry {
  std::string name;
  std::string command;
  std::vector<std::pair<std::string, std::string>> options;  ///< section keys, after defaults
  std::size_t line = 0;
};

/// INI-style manifest: optional top-level `key = value` defaults shared by
/// every entry (`command` included), then one `[name]` section per run whose
/// keys are the CLI flags without the leading dashes (underscores are
/// accepted for dashes). Relative `dataset` paths resolve
/// against the manifest's directory. Throws ParseError on malformed files.
struct Manifest {
  std::filesystem::path path;
  std::vector<std::pair<std::string, std::string>> defaults;
  std::vector<ManifestEntry> entries;
};

Manifest load_manifest(const std::filesystem::path& path);

/// Command-line arguments for one entry, writing into out_dir with the
/// entry name as file prefix.
std::vector<std::string> entry_arguments(const ManifestEntry& entry, const std::filesystem::path& out_dir);

}  // namespace edyn::cli
