#include "emtrack/metrics.hpp"

#include <map>
#include <utility>

#include "emtrack/assignment.hpp"
#include "emtrack/boxes.hpp"

namespace emtrack {
namespace {

BoundingBox row_box(const MotRow& r) { return BoundingBox{r.left, r.top, r.w, r.h, r.conf}; }

}  // namespace

EvalReport evaluate(const std::vector<MotRow>& truth, const std::vector<MotRow>& result,
                    double iou_threshold) {
  std::map<int, std::vector<const MotRow*>> tf, rf;
  for (const MotRow& r : truth) tf[r.frame].push_back(&r);
  for (const MotRow& r : result) rf[r.frame].push_back(&r);

  EvalReport rep;
  rep.gt_count = static_cast<int>(truth.size());
  rep.pred_count = static_cast<int>(result.size());

  std::map<int, int> last_match;                    // truth id -> last result id
  std::map<std::pair<int, int>, int> overlap_count; // (truth id, result id) -> frames

  std::map<int, char> frames;
  for (const auto& [f, _] : tf) frames[f] = 1;
  for (const auto& [f, _] : rf) frames[f] = 1;

  for (const auto& [frame, _] : frames) {
    const auto ti = tf.find(frame);
    const auto ri = rf.find(frame);
    const auto& ts = ti == tf.end() ? std::vector<const MotRow*>{} : ti->second;
    const auto& rs = ri == rf.end() ? std::vector<const MotRow*>{} : ri->second;
    const int n = static_cast<int>(ts.size());
    const int m = static_cast<int>(rs.size());

    Eigen::MatrixXd cost(n, m);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < m; ++j) {
        const double ov = iou(row_box(*ts[i]), row_box(*rs[j]));
        cost(i, j) = ov >= iou_threshold ? -ov : 1.0;
        if (ov >= iou_threshold) ++overlap_count[{ts[i]->id, rs[j]->id}];
      }
    }
    const Assignment a = solve_assignment(cost, 0.0);

    int matched = 0;
    for (const auto& [i, j] : a.pairs) {
      if (cost(i, j) > 0.0) continue;  // gated pair, counts as miss
      ++matched;
      const int tid = ts[i]->id;
      const int rid = rs[j]->id;
      const auto prev = last_match.find(tid);
      if (prev != last_match.end() && prev->second != rid) ++rep.idsw;
      last_match[tid] = rid;
    }
    rep.matches += matched;
    rep.false_negatives += n - matched;
    rep.false_positives += m - matched;
  }

  if (rep.gt_count == 0) {
    rep.mota = (rep.false_positives == 0) ? 1.0 : 0.0;
  } else {
    rep.mota =
        1.0 - static_cast<double>(rep.false_negatives + rep.false_positives + rep.idsw) /
                  static_cast<double>(rep.gt_count);
  }

  // Global id-to-id matching on per-pair overlap frame counts.
  std::map<int, int> tid_index, rid_index;
  for (const MotRow& r : truth) tid_index.emplace(r.id, 0);
  for (const MotRow& r : result) rid_index.emplace(r.id, 0);
  int k = 0;
  for (auto& [id, idx] : tid_index) idx = k++;
  k = 0;
  for (auto& [id, idx] : rid_index) idx = k++;

  Eigen::MatrixXd neg_counts =
      Eigen::MatrixXd::Zero(static_cast<int>(tid_index.size()), static_cast<int>(rid_index.size()));
  for (const auto& [pair, count] : overlap_count) {
    neg_counts(tid_index[pair.first], rid_index[pair.second]) = -static_cast<double>(count);
  }
  double idtp = 0.0;
  if (neg_counts.size() > 0) {
    const Assignment a = solve_assignment(neg_counts, 0.0);
    for (const auto& [i, j] : a.pairs) idtp -= neg_counts(i, j);
  }
  rep.idf1 = (rep.gt_count + rep.pred_count == 0)
                 ? 1.0
                 : 2.0 * idtp / static_cast<double>(rep.gt_count + rep.pred_count);
  return rep;
}

}  // namespace emtrack
