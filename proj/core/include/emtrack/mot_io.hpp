#pragma once

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "emtrack/boxes.hpp"

namespace emtrack {

// One CSV row: frame,id,bb_left,bb_top,w,h,conf,-1,-1,-1. Detections carry
// id = -1, ground truth carries the identity.
struct MotRow {
  int frame = 1;
  int id = -1;
  double left = 0.0;
  double top = 0.0;
  double w = 0.0;
  double h = 0.0;
  double conf = 1.0;
};

// Throws ParseError naming the 1-based line on any malformed row.
std::vector<MotRow> parse_mot(std::istream& in);
std::vector<MotRow> read_mot(const std::string& path);

// Rows are written sorted by (frame, id) with four decimals and the three
// trailing placeholder fields.
void write_mot(std::ostream& out, std::vector<MotRow> rows);
void write_mot_file(const std::string& path, std::vector<MotRow> rows);

struct FrameTable {
  int first_frame = 1;
  // frames[i] holds frame first_frame + i; gaps stay empty.
  std::vector<std::vector<Detection>> frames;
};

// Groups rows into consecutive frames and assigns crop ids "<frame>:<index>"
// by order of appearance within the frame.
FrameTable group_by_frame(const std::vector<MotRow>& rows);

// Sidecar format: one line per crop, "<crop_id> <dim> <v1> ... <vdim>".
using EmbeddingEntry = std::pair<std::string, Eigen::VectorXd>;
std::vector<EmbeddingEntry> parse_embeddings(std::istream& in);
std::vector<EmbeddingEntry> read_embeddings(const std::string& path);
void write_embeddings(std::ostream& out, const std::vector<EmbeddingEntry>& entries);
void write_embeddings_file(const std::string& path, const std::vector<EmbeddingEntry>& entries);

}  // namespace emtrack
