#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

namespace CLI {
class App;
}

namespace emtrack::cli {

using KeyValues = std::vector<std::pair<std::string, std::string>>;

std::string version_string();

std::string fmt(double v);  // %.17g, survives a parse round trip
std::string fmt(int v);
std::string fmt(std::uint64_t v);
std::string fmt(bool v);

// Structured text: a header line, then subcommand, version, and the caller's
// fields as key=value lines in the given order. Nothing volatile goes in, so
// a rerun with the same arguments writes the same bytes.
void write_manifest(const std::string& path, const std::string& subcommand,
                    const KeyValues& fields);

// Runs fn(0..n-1) on up to jobs threads. Callers write results into
// preallocated slots so output order never depends on scheduling. The first
// exception wins and is rethrown after every worker joins.
void run_parallel(std::size_t n, int jobs,
                  const std::function<void(std::size_t)>& fn);

// key=value lines; '#' starts a comment, blank lines are skipped. Keys are
// the long option names without the leading dashes.
KeyValues parse_config_file(const std::string& path);

// Applies config values to every option the command line left untouched, so
// flags always win. Unknown keys are errors; typos never pass silently.
void apply_config_file(CLI::App& sub, const std::string& path);

// A sequence directory holds det.txt. Returns root itself when it has one,
// otherwise root's immediate subdirectories that do, sorted by name.
std::vector<std::string> find_sequence_dirs(const std::string& root);

std::string sequence_name(const std::string& dir);

}  // namespace emtrack::cli
