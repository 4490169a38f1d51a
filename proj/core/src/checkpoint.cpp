#include "emtrack/checkpoint.hpp"

#include <cctype>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "emtrack/errors.hpp"

namespace emtrack {
namespace {

constexpr const char* kMagic = "emtrack-checkpoint 1";

void write_values(std::ostream& out, const char* tag, const double* v, Eigen::Index n) {
  out << tag;
  char buf[64];
  for (Eigen::Index i = 0; i < n; ++i) {
    std::snprintf(buf, sizeof(buf), " %.17g", v[i]);
    out << buf;
  }
  out << '\n';
}

// Row-major on disk; Eigen matrices are column-major in memory.
void write_matrix(std::ostream& out, const char* tag, const Eigen::MatrixXd& m) {
  const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm = m;
  write_values(out, tag, rm.data(), rm.size());
}

std::vector<double> read_values(std::istringstream& ss, Eigen::Index n, const std::string& tag) {
  std::vector<double> out(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!(ss >> out[i])) throw ParseError("truncated '" + tag + "' block");
    if (!std::isfinite(out[i])) throw NumericalError("non-finite value in '" + tag + "' block");
  }
  std::string extra;
  if (ss >> extra) throw ParseError("trailing value in '" + tag + "' block");
  return out;
}

std::istringstream expect_line(std::istream& in, const std::string& tag) {
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream ss(line);
    std::string head;
    ss >> head;
    if (head != tag) throw ParseError("expected '" + tag + "' block, found '" + head + "'");
    return ss;
  }
  throw ParseError("missing '" + tag + "' block");
}

Eigen::MatrixXd to_matrix(const std::vector<double>& v, Eigen::Index rows, Eigen::Index cols) {
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = v[r * cols + c];
  }
  return m;
}

}  // namespace

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  ckpt.scorer.check();
  if (ckpt.appearance) ckpt.appearance->check();
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open " + path);

  out << kMagic << '\n';
  for (const auto& [key, value] : ckpt.config) {
    if (key.find_first_of(" \t") != std::string::npos ||
        value.find_first_of(" \t") != std::string::npos) {
      throw ParseError("config keys and values must not contain whitespace");
    }
    out << "cfg " << key << ' ' << value << '\n';
  }
  out << "scorer " << ckpt.scorer.hidden() << '\n';
  write_matrix(out, "w1", ckpt.scorer.w1);
  write_values(out, "b1", ckpt.scorer.b1.data(), ckpt.scorer.b1.size());
  write_matrix(out, "w2", ckpt.scorer.w2);
  write_values(out, "b2", ckpt.scorer.b2.data(), ckpt.scorer.b2.size());
  if (ckpt.appearance) {
    const Eigen::MatrixXd& p = ckpt.appearance->proj;
    out << "appearance " << p.rows() << ' ' << p.cols() << '\n';
    write_matrix(out, "proj", p);
  }
  out << "end\n";
  if (!out) throw IoError("write failed for " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);

  std::string line;
  if (!std::getline(in, line)) throw ParseError("empty checkpoint " + path);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kMagic) throw ParseError("unsupported checkpoint version: '" + line + "'");

  Checkpoint ckpt;
  bool have_scorer = false;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream ss(line);
    std::string head;
    ss >> head;
    if (head == "cfg") {
      std::string key, value, extra;
      if (!(ss >> key >> value) || (ss >> extra)) throw ParseError("malformed cfg line");
      ckpt.config.emplace_back(key, value);
    } else if (head == "scorer") {
      int hidden = 0;
      if (!(ss >> hidden) || hidden < 1) throw ParseError("malformed scorer header");
      auto w1 = expect_line(in, "w1");
      ckpt.scorer.w1 = to_matrix(read_values(w1, hidden * 5, "w1"), hidden, 5);
      auto b1 = expect_line(in, "b1");
      const auto b1v = read_values(b1, hidden, "b1");
      ckpt.scorer.b1 = Eigen::Map<const Eigen::VectorXd>(b1v.data(), hidden);
      auto w2 = expect_line(in, "w2");
      ckpt.scorer.w2 = to_matrix(read_values(w2, hidden, "w2"), 1, hidden);
      auto b2 = expect_line(in, "b2");
      const auto b2v = read_values(b2, 1, "b2");
      ckpt.scorer.b2 = Eigen::Map<const Eigen::VectorXd>(b2v.data(), 1);
      have_scorer = true;
    } else if (head == "appearance") {
      Eigen::Index rows = 0, cols = 0;
      if (!(ss >> rows >> cols) || rows < 1 || cols < 1) {
        throw ParseError("malformed appearance header");
      }
      auto proj = expect_line(in, "proj");
      AppearanceHead head_params;
      head_params.proj = to_matrix(read_values(proj, rows * cols, "proj"), rows, cols);
      ckpt.appearance = std::move(head_params);
    } else if (head == "end") {
      if (!have_scorer) throw ParseError("checkpoint has no scorer block");
      ckpt.scorer.check();
      if (ckpt.appearance) ckpt.appearance->check();
      return ckpt;
    } else {
      throw ParseError("unknown checkpoint block '" + head + "'");
    }
  }
  throw ParseError("checkpoint missing 'end' marker");
}

}  // namespace emtrack
