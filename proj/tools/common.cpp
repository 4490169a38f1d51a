#include "common.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <thread>

#include <CLI11.hpp>

#include <emtrack/errors.hpp>

namespace emtrack::cli {

namespace fs = std::filesystem;

std::string version_string() { return EMTRACK_VERSION_STRING; }

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmt(int v) { return std::to_string(v); }
std::string fmt(std::uint64_t v) { return std::to_string(v); }
std::string fmt(bool v) { return v ? "true" : "false"; }

void write_manifest(const std::string& path, const std::string& subcommand,
                    const KeyValues& fields) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write manifest: " + path);
  out << "emtrack-manifest 1\n";
  out << "subcommand=" << subcommand << "\n";
  out << "version=" << version_string() << "\n";
  for (const auto& [k, v] : fields) out << k << "=" << v << "\n";
  out.flush();
  if (!out) throw IoError("cannot write manifest: " + path);
}

void run_parallel(std::size_t n, int jobs,
                  const std::function<void(std::size_t)>& fn) {
  const std::size_t width = std::min<std::size_t>(std::max(jobs, 1), n);
  if (width <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_lock;
  std::vector<std::thread> pool;
  pool.reserve(width);
  for (std::size_t w = 0; w < width; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= n) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> hold(error_lock);
          if (!error) error = std::current_exception();
          return;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

KeyValues parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file: " + path);
  auto trim = [](const std::string& s) {
    const char* ws = " \t\r";
    const auto b = s.find_first_not_of(ws);
    if (b == std::string::npos) return std::string();
    return s.substr(b, s.find_last_not_of(ws) - b + 1);
  };
  KeyValues out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) {
      line.erase(hash);
    }
    const std::string stripped = trim(line);
    if (stripped.empty()) continue;
    const auto eq = stripped.find('=');
    if (eq == std::string::npos) {
      throw ParseError("expected key=value in " + path + " on line " +
                       std::to_string(line_no));
    }
    const std::string key = trim(stripped.substr(0, eq));
    if (key.empty()) {
      throw ParseError("empty key in " + path + " on line " +
                       std::to_string(line_no));
    }
    out.emplace_back(key, trim(stripped.substr(eq + 1)));
  }
  return out;
}

void apply_config_file(CLI::App& sub, const std::string& path) {
  for (const auto& [key, value] : parse_config_file(path)) {
    CLI::Option* op = sub.get_option_no_throw("--" + key);
    if (op == nullptr) {
      throw ConfigError("unknown config key \"" + key + "\" in " + path);
    }
    if (op->count() > 0) continue;
    if (op->get_expected_min() == 0) {
      op->add_result(op->get_flag_value(key, value));
    } else {
      op->add_result(value);
    }
    op->run_callback();
  }
}

std::vector<std::string> find_sequence_dirs(const std::string& root) {
  if (!fs::is_directory(root)) throw ConfigError("not a directory: " + root);
  if (fs::exists(fs::path(root) / "det.txt")) return {root};
  std::vector<std::string> dirs;
  for (const auto& entry : fs::directory_iterator(root)) {
    if (entry.is_directory() && fs::exists(entry.path() / "det.txt")) {
      dirs.push_back(entry.path().string());
    }
  }
  std::sort(dirs.begin(), dirs.end());
  if (dirs.empty()) throw ConfigError("no det.txt under " + root);
  return dirs;
}

std::string sequence_name(const std::string& dir) {
  fs::path p(dir);
  if (!p.has_filename()) p = p.parent_path();
  std::string name = p.filename().string();
  return name.empty() ? dir : name;
}

}  // namespace emtrack::cli
