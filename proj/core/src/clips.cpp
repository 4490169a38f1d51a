#include "emtrack/clips.hpp"

#include <algorithm>

#include "emtrack/errors.hpp"

namespace emtrack {

void DetectionClip::check() const {
  if (t < 2) throw DimensionError("clip needs at least two frames");
  if (k < 1) throw DimensionError("clip needs at least one object");
  if (static_cast<int>(frames.size()) != t)
    throw DimensionError("clip frame count mismatch");
  for (const auto& f : frames)
    if (static_cast<int>(f.size()) != k)
      throw DimensionError("clip has a ragged frame");
}

namespace {

struct Slot {
  BoundingBox last;      // most recent claimed box
  double vx = 0.0, vy = 0.0, vw = 0.0, vh = 0.0;
  int last_t = 0;        // frame offset of the claim

  BoundingBox extrapolate(int t) const {
    double dt = t - last_t;
    BoundingBox b = last;
    b.x += vx * dt;
    b.y += vy * dt;
    b.w = std::max(last.w + vw * dt, 1e-3);
    b.h = std::max(last.h + vh * dt, 1e-3);
    b.conf = 0.0;
    return b;
  }

  void claim(const BoundingBox& b, int t) {
    double dt = t - last_t;
    if (dt > 0) {
      vx = (b.x - last.x) / dt;
      vy = (b.y - last.y) / dt;
      vw = (b.w - last.w) / dt;
      vh = (b.h - last.h) / dt;
    }
    last = b;
    last_t = t;
  }
};

}  // namespace

PreprocessResult preprocess_clips(
    const std::vector<std::vector<Detection>>& frames, int first_frame,
    const std::string& sequence, const PreprocessOptions& opt) {
  if (opt.clip_len < 2)
    throw DimensionError("clip length must be at least 2");
  PreprocessResult out;
  const int total = static_cast<int>(frames.size());

  for (int w0 = 0; w0 + opt.clip_len <= total; w0 += opt.clip_len) {
    std::vector<Slot> slots;
    DetectionClip clip;
    clip.t = opt.clip_len;
    clip.sequence = sequence;
    clip.first_frame = first_frame + w0;
    clip.frames.resize(opt.clip_len);

    for (const auto& d : frames[w0]) {
      if (d.box.conf < opt.conf_threshold) continue;
      clip.frames[0].push_back(d);
      Slot s;
      s.last = d.box;
      s.last_t = 0;
      slots.push_back(s);
    }
    clip.k = static_cast<int>(slots.size());
    if (clip.k == 0) {
      out.warnings.push_back(sequence + ": window at frame " +
                             std::to_string(clip.first_frame) +
                             " skipped, no detections in its first frame");
      continue;
    }

    for (int t = 1; t < opt.clip_len; ++t) {
      std::vector<BoundingBox> preds(slots.size());
      for (std::size_t s = 0; s < slots.size(); ++s)
        preds[s] = slots[s].extrapolate(t);

      std::vector<const Detection*> cands;
      for (const auto& d : frames[w0 + t])
        if (d.box.conf >= opt.conf_threshold) cands.push_back(&d);

      // greedy best-overlap claims
      struct Pair {
        double overlap;
        int slot;
        int cand;
      };
      std::vector<Pair> pairs;
      for (std::size_t s = 0; s < preds.size(); ++s)
        for (std::size_t c = 0; c < cands.size(); ++c) {
          double ov = iou(preds[s], cands[c]->box);
          if (ov >= opt.fill_iou_gate)
            pairs.push_back({ov, static_cast<int>(s), static_cast<int>(c)});
        }
      std::stable_sort(pairs.begin(), pairs.end(),
                       [](const Pair& a, const Pair& b) {
                         return a.overlap > b.overlap;
                       });

      std::vector<int> slot_claim(slots.size(), -1);
      std::vector<bool> cand_used(cands.size(), false);
      for (const auto& p : pairs) {
        if (slot_claim[p.slot] >= 0 || cand_used[p.cand]) continue;
        slot_claim[p.slot] = p.cand;
        cand_used[p.cand] = true;
      }

      clip.frames[t].resize(slots.size());
      for (std::size_t s = 0; s < slots.size(); ++s) {
        if (slot_claim[s] >= 0) {
          const Detection& d = *cands[slot_claim[s]];
          clip.frames[t][s] = d;
          slots[s].claim(d.box, t);
        } else {
          clip.frames[t][s] = Detection{preds[s], ""};
        }
      }
    }

    clip.check();
    out.clips.push_back(std::move(clip));
  }
  return out;
}

}  // namespace emtrack
