#include "emtrack/mot_io.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "emtrack/errors.hpp"

namespace emtrack {
namespace {

std::string line_tag(int line_no) { return "line " + std::to_string(line_no); }

double parse_double(const std::string& tok, int line_no) {
  double out = 0.0;
  const char* begin = tok.data();
  const char* end = begin + tok.size();
  const auto res = std::from_chars(begin, end, out);
  if (res.ec != std::errc() || res.ptr != end || !std::isfinite(out)) {
    throw ParseError("bad number '" + tok + "' on " + line_tag(line_no));
  }
  return out;
}

int parse_int(const std::string& tok, int line_no) {
  int out = 0;
  const char* begin = tok.data();
  const char* end = begin + tok.size();
  const auto res = std::from_chars(begin, end, out);
  if (res.ec != std::errc() || res.ptr != end) {
    throw ParseError("bad integer '" + tok + "' on " + line_tag(line_no));
  }
  return out;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (!std::isspace(static_cast<unsigned char>(c))) {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

bool blank(const std::string& s) {
  return std::all_of(s.begin(), s.end(),
                     [](char c) { return std::isspace(static_cast<unsigned char>(c)); });
}

}  // namespace

std::vector<MotRow> parse_mot(std::istream& in) {
  std::vector<MotRow> rows;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (blank(line)) continue;
    const std::vector<std::string> f = split_csv(line);
    if (f.size() < 7 || f.size() > 10) {
      throw ParseError("expected 7 to 10 fields on " + line_tag(line_no));
    }
    MotRow r;
    r.frame = parse_int(f[0], line_no);
    r.id = parse_int(f[1], line_no);
    r.left = parse_double(f[2], line_no);
    r.top = parse_double(f[3], line_no);
    r.w = parse_double(f[4], line_no);
    r.h = parse_double(f[5], line_no);
    r.conf = parse_double(f[6], line_no);
    if (r.frame < 1) throw ParseError("frame must be >= 1 on " + line_tag(line_no));
    if (r.w <= 0.0 || r.h <= 0.0) {
      throw ParseError("box size must be positive on " + line_tag(line_no));
    }
    rows.push_back(r);
  }
  return rows;
}

std::vector<MotRow> read_mot(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  return parse_mot(in);
}

void write_mot(std::ostream& out, std::vector<MotRow> rows) {
  std::stable_sort(rows.begin(), rows.end(), [](const MotRow& a, const MotRow& b) {
    if (a.frame != b.frame) return a.frame < b.frame;
    return a.id < b.id;
  });
  char buf[256];
  for (const MotRow& r : rows) {
    std::snprintf(buf, sizeof(buf), "%d,%d,%.4f,%.4f,%.4f,%.4f,%.4f,-1,-1,-1\n", r.frame, r.id,
                  r.left, r.top, r.w, r.h, r.conf);
    out << buf;
  }
}

void write_mot_file(const std::string& path, std::vector<MotRow> rows) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open " + path);
  write_mot(out, std::move(rows));
}

FrameTable group_by_frame(const std::vector<MotRow>& rows) {
  FrameTable table;
  if (rows.empty()) return table;
  int lo = rows[0].frame, hi = rows[0].frame;
  for (const MotRow& r : rows) {
    lo = std::min(lo, r.frame);
    hi = std::max(hi, r.frame);
  }
  table.first_frame = lo;
  table.frames.resize(hi - lo + 1);
  for (const MotRow& r : rows) {
    auto& frame = table.frames[r.frame - lo];
    Detection d;
    d.box = BoundingBox{r.left, r.top, r.w, r.h, r.conf};
    d.crop_id = std::to_string(r.frame) + ":" + std::to_string(frame.size());
    frame.push_back(std::move(d));
  }
  return table;
}

std::vector<EmbeddingEntry> parse_embeddings(std::istream& in) {
  std::vector<EmbeddingEntry> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (blank(line)) continue;
    std::istringstream ss(line);
    std::string id, dim_tok;
    if (!(ss >> id >> dim_tok)) {
      throw ParseError("expected '<id> <dim> <values>' on " + line_tag(line_no));
    }
    const int dim = parse_int(dim_tok, line_no);
    if (dim < 1) throw ParseError("dim must be >= 1 on " + line_tag(line_no));
    Eigen::VectorXd v(dim);
    std::string tok;
    for (int i = 0; i < dim; ++i) {
      if (!(ss >> tok)) throw ParseError("missing value on " + line_tag(line_no));
      v(i) = parse_double(tok, line_no);
    }
    if (ss >> tok) throw ParseError("trailing value on " + line_tag(line_no));
    out.emplace_back(std::move(id), std::move(v));
  }
  return out;
}

std::vector<EmbeddingEntry> read_embeddings(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  return parse_embeddings(in);
}

void write_embeddings(std::ostream& out, const std::vector<EmbeddingEntry>& entries) {
  char buf[64];
  for (const auto& [id, v] : entries) {
    out << id << ' ' << v.size();
    for (Eigen::Index i = 0; i < v.size(); ++i) {
      std::snprintf(buf, sizeof(buf), " %.17g", v(i));
      out << buf;
    }
    out << '\n';
  }
}

void write_embeddings_file(const std::string& path, const std::vector<EmbeddingEntry>& entries) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open " + path);
  write_embeddings(out, entries);
}

}  // namespace emtrack
