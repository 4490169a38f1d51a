#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include <emtrack/errors.hpp>
#include <emtrack/metrics.hpp>
#include <emtrack/mot_io.hpp>

#include "commands.hpp"
#include "common.hpp"

namespace emtrack::cli {
namespace {

struct EvalArgs {
  std::string gt;
  std::string result;
  std::string out_csv;  // default: result path + ".eval.csv"
  std::string config_path;
  double iou = 0.5;
};

struct FrameSpan {
  int lo = 0;
  int hi = -1;  // empty when hi < lo
};

FrameSpan span_of(const std::vector<MotRow>& rows) {
  FrameSpan s;
  for (const auto& r : rows) {
    if (s.hi < s.lo) {
      s.lo = s.hi = r.frame;
    } else {
      s.lo = std::min(s.lo, r.frame);
      s.hi = std::max(s.hi, r.frame);
    }
  }
  return s;
}

void run_eval(const EvalArgs& a) {
  std::vector<MotRow> truth = read_mot(a.gt);
  std::vector<MotRow> result = read_mot(a.result);

  const FrameSpan ts = span_of(truth);
  const FrameSpan rs = span_of(result);
  if (ts.hi >= ts.lo && rs.hi >= rs.lo &&
      (ts.lo != rs.lo || ts.hi != rs.hi)) {
    const int lo = std::max(ts.lo, rs.lo);
    const int hi = std::min(ts.hi, rs.hi);
    if (lo > hi) {
      throw ConfigError("frame ranges are disjoint (truth " + fmt(ts.lo) +
                        ".." + fmt(ts.hi) + ", result " + fmt(rs.lo) + ".." +
                        fmt(rs.hi) + ")");
    }
    std::cerr << "warning: frame ranges differ (truth " << ts.lo << ".."
              << ts.hi << ", result " << rs.lo << ".." << rs.hi
              << "); evaluating frames " << lo << ".." << hi << "\n";
    auto outside = [lo, hi](const MotRow& r) {
      return r.frame < lo || r.frame > hi;
    };
    std::erase_if(truth, outside);
    std::erase_if(result, outside);
  }

  const EvalReport rep = evaluate(truth, result, a.iou);
  std::printf("MOTA     %.4f\n", rep.mota);
  std::printf("IDF1     %.4f\n", rep.idf1);
  std::printf("IDSW     %d\n", rep.idsw);
  std::printf("GT       %d\n", rep.gt_count);
  std::printf("Pred     %d\n", rep.pred_count);
  std::printf("Matches  %d\n", rep.matches);
  std::printf("FN       %d\n", rep.false_negatives);
  std::printf("FP       %d\n", rep.false_positives);

  const std::string csv_path =
      a.out_csv.empty() ? a.result + ".eval.csv" : a.out_csv;
  std::ofstream csv(csv_path);
  if (!csv) throw IoError("cannot write " + csv_path);
  csv << "mota,idf1,idsw,gt,pred,matches,fn,fp\n";
  csv << fmt(rep.mota) << "," << fmt(rep.idf1) << "," << rep.idsw << ","
      << rep.gt_count << "," << rep.pred_count << "," << rep.matches << ","
      << rep.false_negatives << "," << rep.false_positives << "\n";
  csv.flush();
  if (!csv) throw IoError("cannot write " + csv_path);

  KeyValues kv;
  kv.emplace_back("in.gt", a.gt);
  kv.emplace_back("in.result", a.result);
  kv.emplace_back("out.csv", csv_path);
  kv.emplace_back("cfg.iou", fmt(a.iou));
  write_manifest(csv_path + ".manifest", "eval", kv);
}

}  // namespace

void setup_eval(CLI::App& app) {
  auto args = std::make_shared<EvalArgs>();
  CLI::App* sub = app.add_subcommand(
      "eval", "Score a result file against ground truth");
  sub->add_option("--config", args->config_path,
                  "Eval config file (key=value lines); flags win");
  sub->add_option("--gt", args->gt, "Ground-truth CSV")->required();
  sub->add_option("--result", args->result, "Tracker result CSV")->required();
  sub->add_option("--out", args->out_csv,
                  "Metrics CSV (default: result path + .eval.csv)");
  sub->add_option("--iou", args->iou, "Match gate on box overlap")
      ->capture_default_str();
  sub->callback([args, sub] {
    if (!args->config_path.empty()) apply_config_file(*sub, args->config_path);
    run_eval(*args);
  });
}

}  // namespace emtrack::cli
