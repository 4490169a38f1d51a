#include <filesystem>
#include <iostream>
#include <memory>
#include <string>

#include <CLI11.hpp>

#include <emtrack/errors.hpp>
#include <emtrack/mot_io.hpp>
#include <emtrack/synthetic.hpp>

#include "commands.hpp"
#include "common.hpp"

namespace emtrack::cli {
namespace {

struct SynthArgs {
  std::string out_dir;
  std::string config_path;
  SceneConfig cfg;
};

void run_synth(const SynthArgs& a) {
  SyntheticScene scene = generate_scene(a.cfg);

  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(a.out_dir, ec);
  if (ec) throw IoError("cannot create " + a.out_dir + ": " + ec.message());
  const fs::path out(a.out_dir);
  const std::string gt_path = (out / "gt.txt").string();
  const std::string det_path = (out / "det.txt").string();
  const std::string emb_path = (out / "det.emb").string();
  write_mot_file(gt_path, scene.truth);
  write_mot_file(det_path, scene.detections);
  write_embeddings_file(emb_path, scene.embeddings);

  KeyValues kv;
  kv.emplace_back("seed", fmt(a.cfg.seed));
  kv.emplace_back("in.config", a.config_path);
  kv.emplace_back("out.gt", gt_path);
  kv.emplace_back("out.det", det_path);
  kv.emplace_back("out.embeddings", emb_path);
  kv.emplace_back("cfg.k", fmt(a.cfg.k));
  kv.emplace_back("cfg.t", fmt(a.cfg.t));
  kv.emplace_back("cfg.width", fmt(a.cfg.width));
  kv.emplace_back("cfg.height", fmt(a.cfg.height));
  kv.emplace_back("cfg.miss-rate", fmt(a.cfg.miss_rate));
  kv.emplace_back("cfg.fp-rate", fmt(a.cfg.fp_rate));
  kv.emplace_back("cfg.center-noise", fmt(a.cfg.center_noise));
  kv.emplace_back("cfg.size-noise", fmt(a.cfg.size_noise));
  kv.emplace_back("cfg.crossing", fmt(a.cfg.crossing));
  kv.emplace_back("cfg.gap-len", fmt(a.cfg.gap_len));
  kv.emplace_back("cfg.embed-dim", fmt(a.cfg.embed_dim));
  kv.emplace_back("cfg.embed-noise", fmt(a.cfg.embed_noise));
  kv.emplace_back("cfg.seed", fmt(a.cfg.seed));
  write_manifest((out / "manifest.txt").string(), "synth", kv);

  std::cerr << "wrote " << a.out_dir << ": " << scene.truth.size()
            << " truth rows, " << scene.detections.size() << " detections\n";
}

}  // namespace

void setup_synth(CLI::App& app) {
  auto args = std::make_shared<SynthArgs>();
  CLI::App* sub =
      app.add_subcommand("synth", "Generate a synthetic scene directory");
  sub->add_option("--config", args->config_path,
                  "Scene config file (key=value lines); flags win");
  sub->add_option("--out", args->out_dir, "Output sequence directory")
      ->required();
  SceneConfig& c = args->cfg;
  sub->add_option("--k", c.k, "Objects per frame")->capture_default_str();
  sub->add_option("--t", c.t, "Frames")->capture_default_str();
  sub->add_option("--width", c.width, "Scene width in px")
      ->capture_default_str();
  sub->add_option("--height", c.height, "Scene height in px")
      ->capture_default_str();
  sub->add_option("--miss-rate", c.miss_rate,
                  "Per-detection drop probability")
      ->capture_default_str();
  sub->add_option("--fp-rate", c.fp_rate,
                  "Expected false positives per frame is k * fp-rate")
      ->capture_default_str();
  sub->add_option("--center-noise", c.center_noise,
                  "Gaussian noise on box centers, px")
      ->capture_default_str();
  sub->add_option("--size-noise", c.size_noise,
                  "Gaussian noise on box sizes, px")
      ->capture_default_str();
  sub->add_flag("--crossing", c.crossing,
                "Route all trajectories through the scene center");
  sub->add_option("--gap-len", c.gap_len,
                  "Occlude every object once for this many frames")
      ->capture_default_str();
  sub->add_option("--embed-dim", c.embed_dim, "Embedding dimension")
      ->capture_default_str();
  sub->add_option("--embed-noise", c.embed_noise,
                  "Gaussian noise on detection embeddings")
      ->capture_default_str();
  sub->add_option("--seed", c.seed, "Random seed")->capture_default_str();
  sub->callback([args, sub] {
    if (!args->config_path.empty()) apply_config_file(*sub, args->config_path);
    run_synth(*args);
  });
}

}  // namespace emtrack::cli
