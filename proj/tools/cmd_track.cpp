#include <cstddef>
#include <filesystem>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include <emtrack/checkpoint.hpp>
#include <emtrack/errors.hpp>
#include <emtrack/mot_io.hpp>
#include <emtrack/tracker.hpp>

#include "commands.hpp"
#include "common.hpp"

namespace emtrack::cli {
namespace {

struct TrackArgs {
  std::string det;
  std::string checkpoint;
  std::string out;
  std::string embeddings;  // default: det path with extension .emb
  std::string config_path;
  TrackerConfig cfg;
};

void run_track(const TrackArgs& a) {
  a.cfg.check();
  const std::vector<MotRow> rows = read_mot(a.det);
  const Checkpoint ckpt = load_checkpoint(a.checkpoint);

  MapEmbeddingProvider provider;
  std::string sidecar;
  if (a.cfg.use_appearance) {
    if (!ckpt.appearance.has_value()) {
      throw ConfigError("checkpoint has no appearance head: " + a.checkpoint);
    }
    sidecar = a.embeddings.empty()
                  ? std::filesystem::path(a.det).replace_extension(".emb").string()
                  : a.embeddings;
    if (!std::filesystem::exists(sidecar)) {
      throw IoError("embedding sidecar not found: " + sidecar);
    }
    for (const auto& [id, e] : read_embeddings(sidecar)) provider.insert(id, e);
  }

  const FrameTable table = group_by_frame(rows);
  OnlineTracker tracker(ckpt.scorer, a.cfg,
                        a.cfg.use_appearance ? ckpt.appearance : std::nullopt);
  std::vector<MotRow> out_rows;
  for (std::size_t i = 0; i < table.frames.size(); ++i) {
    const int frame = table.first_frame + static_cast<int>(i);
    const std::vector<Detection>& dets = table.frames[i];
    std::vector<Eigen::VectorXd> embs;
    if (a.cfg.use_appearance) {
      embs.reserve(dets.size());
      for (const auto& d : dets) embs.push_back(provider.embed(d.crop_id));
    }
    for (const TrackRecord& rec : tracker.step(frame, dets, embs)) {
      MotRow r;
      r.frame = rec.frame;
      r.id = rec.id;
      r.left = rec.box.x;
      r.top = rec.box.y;
      r.w = rec.box.w;
      r.h = rec.box.h;
      r.conf = 1.0;
      out_rows.push_back(r);
    }
  }
  write_mot_file(a.out, out_rows);

  KeyValues kv;
  kv.emplace_back("in.config", a.config_path);
  kv.emplace_back("in.det", a.det);
  kv.emplace_back("in.checkpoint", a.checkpoint);
  kv.emplace_back("in.embeddings", sidecar);
  kv.emplace_back("out.result", a.out);
  kv.emplace_back("cfg.kappa", fmt(a.cfg.kappa));
  kv.emplace_back("cfg.s-min", fmt(a.cfg.s_min));
  kv.emplace_back("cfg.max-misses", fmt(a.cfg.max_misses));
  kv.emplace_back("cfg.c-miss", fmt(a.cfg.c_miss));
  kv.emplace_back("cfg.sigma-pos", fmt(a.cfg.sigma_pos));
  kv.emplace_back("cfg.sigma-vel", fmt(a.cfg.sigma_vel));
  kv.emplace_back("cfg.new-track-conf", fmt(a.cfg.new_track_conf));
  kv.emplace_back("cfg.ema-momentum", fmt(a.cfg.ema_momentum));
  kv.emplace_back("cfg.use-appearance", fmt(a.cfg.use_appearance));
  write_manifest(a.out + ".manifest", "track", kv);

  std::cerr << "tracked " << table.frames.size() << " frames: "
            << out_rows.size() << " result rows\n";
}

}  // namespace

void setup_track(CLI::App& app) {
  auto args = std::make_shared<TrackArgs>();
  CLI::App* sub = app.add_subcommand(
      "track", "Run the online tracker over a detection file");
  sub->add_option("--config", args->config_path,
                  "Tracker config file (key=value lines); flags win");
  sub->add_option("--det", args->det, "Detection CSV")->required();
  sub->add_option("--checkpoint", args->checkpoint, "Trained checkpoint")
      ->required();
  sub->add_option("--out", args->out, "Output result CSV")->required();
  sub->add_option("--embeddings", args->embeddings,
                  "Embedding sidecar (default: detection path with .emb)");
  TrackerConfig& c = args->cfg;
  sub->add_option("--kappa", c.kappa, "Appearance weight in the match cost")
      ->capture_default_str();
  sub->add_option("--s-min", c.s_min, "Cosine similarity floor")
      ->capture_default_str();
  sub->add_option("--max-misses", c.max_misses,
                  "A track ends once its miss streak exceeds this")
      ->capture_default_str();
  sub->add_option("--c-miss", c.c_miss, "Per-line opt-out cost")
      ->capture_default_str();
  sub->add_option("--sigma-pos", c.sigma_pos,
                  "Size-relative position noise scale")
      ->capture_default_str();
  sub->add_option("--sigma-vel", c.sigma_vel,
                  "Size-relative velocity noise scale")
      ->capture_default_str();
  sub->add_option("--new-track-conf", c.new_track_conf,
                  "Minimum confidence to start a track")
      ->capture_default_str();
  sub->add_option("--ema-momentum", c.ema_momentum,
                  "Track embedding update momentum")
      ->capture_default_str();
  sub->add_flag("--use-appearance", c.use_appearance,
                "Add the appearance term to the match cost");
  sub->callback([args, sub] {
    if (!args->config_path.empty()) apply_config_file(*sub, args->config_path);
    run_track(*args);
  });
}

}  // namespace emtrack::cli
