#include <cstddef>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include <emtrack/checkpoint.hpp>
#include <emtrack/clips.hpp>
#include <emtrack/errors.hpp>
#include <emtrack/mot_io.hpp>
#include <emtrack/trainer.hpp>

#include "commands.hpp"
#include "common.hpp"

namespace emtrack::cli {
namespace {

struct TrainArgs {
  std::string det_dir;
  std::string out;
  std::string config_path;
  TrainConfig cfg;
  bool appearance = false;
  int appearance_dim = 0;  // 0 keeps the sidecar dimension
  int jobs = 1;
};

struct SequenceData {
  PreprocessResult pre;
  std::vector<EmbeddingEntry> embeddings;
};

// Crop ids are unique within a sequence only, so everything gets the
// sequence name as a prefix before the pools are merged.
SequenceData load_sequence(const std::string& dir, const TrainArgs& a) {
  namespace fs = std::filesystem;
  const std::string name = sequence_name(dir);
  SequenceData out;

  FrameTable table = group_by_frame(read_mot((fs::path(dir) / "det.txt").string()));
  for (auto& frame : table.frames) {
    for (auto& det : frame) det.crop_id = name + "/" + det.crop_id;
  }
  PreprocessOptions opt;
  opt.clip_len = a.cfg.clip_len;
  opt.conf_threshold = a.cfg.conf_threshold;
  out.pre = preprocess_clips(table.frames, table.first_frame, name, opt);

  if (a.appearance) {
    const std::string sidecar = (fs::path(dir) / "det.emb").string();
    if (!fs::exists(sidecar)) {
      throw IoError("embedding sidecar not found: " + sidecar);
    }
    out.embeddings = read_embeddings(sidecar);
    for (auto& [id, e] : out.embeddings) id = name + "/" + id;
  }
  return out;
}

// The appearance loss reads embeddings for the first and last frames of a
// clip; slots filled by gap extrapolation have no crop behind them.
bool has_endpoint_embeddings(const DetectionClip& clip) {
  for (const auto& det : clip.frames.front()) {
    if (det.crop_id.empty()) return false;
  }
  for (const auto& det : clip.frames.back()) {
    if (det.crop_id.empty()) return false;
  }
  return true;
}

void run_train(const TrainArgs& a) {
  a.cfg.check();
  const std::vector<std::string> dirs = find_sequence_dirs(a.det_dir);
  std::vector<SequenceData> seqs(dirs.size());
  run_parallel(dirs.size(), a.jobs,
               [&](std::size_t i) { seqs[i] = load_sequence(dirs[i], a); });

  std::vector<DetectionClip> clips;
  MapEmbeddingProvider provider;
  for (auto& s : seqs) {
    for (const auto& w : s.pre.warnings) std::cerr << "warning: " << w << "\n";
    clips.insert(clips.end(), s.pre.clips.begin(), s.pre.clips.end());
    for (const auto& [id, e] : s.embeddings) provider.insert(id, e);
  }
  if (clips.empty()) {
    throw ConfigError("no clips produced from " + a.det_dir +
                      " (clip-len " + fmt(a.cfg.clip_len) + ", conf-threshold " +
                      fmt(a.cfg.conf_threshold) + ")");
  }

  const TrainResult result = train_association(clips, a.cfg);

  Checkpoint ckpt;
  ckpt.scorer = result.params;
  std::vector<double> kl;
  int head_dim = 0;
  if (a.appearance) {
    std::vector<DetectionClip> usable;
    for (const auto& c : clips) {
      if (has_endpoint_embeddings(c)) usable.push_back(c);
    }
    if (usable.empty()) {
      throw ConfigError("no clips with endpoint embeddings for appearance training");
    }
    head_dim = a.appearance_dim > 0 ? a.appearance_dim : provider.dim();
    Rng head_rng = Rng(a.cfg.seed).stream("init").stream("appearance");
    const AppearanceHead head0 = init_appearance(head_dim, provider.dim(), head_rng);
    AppearanceTrainResult app = train_appearance(usable, result.params, head0,
                                                 provider, a.cfg);
    ckpt.appearance = std::move(app.head);
    kl = std::move(app.kl);
  }

  ckpt.config = {
      {"lr", fmt(a.cfg.lr)},
      {"epochs", fmt(a.cfg.epochs)},
      {"appearance_lr", fmt(a.cfg.appearance_lr)},
      {"appearance_epochs", fmt(a.cfg.appearance_epochs)},
      {"sinkhorn_iters", fmt(a.cfg.sinkhorn_iters)},
      {"clip_len", fmt(a.cfg.clip_len)},
      {"sigma_q", fmt(a.cfg.sigma_q)},
      {"sigma_r", fmt(a.cfg.sigma_r)},
      {"sigma_init", fmt(a.cfg.sigma_init)},
      {"conf_threshold", fmt(a.cfg.conf_threshold)},
      {"hidden", fmt(a.cfg.hidden)},
      {"adam", fmt(a.cfg.adam)},
      {"seed", fmt(a.cfg.seed)},
      {"appearance", fmt(a.appearance)},
      {"appearance_dim", fmt(head_dim)},
  };
  save_checkpoint(a.out, ckpt);

  const std::string loss_path = a.out + ".loss.csv";
  std::ofstream csv(loss_path);
  if (!csv) throw IoError("cannot write " + loss_path);
  csv << "step,phase,loss\n";
  for (std::size_t i = 0; i < result.losses.size(); ++i) {
    csv << i << ",association," << fmt(result.losses[i]) << "\n";
  }
  for (std::size_t i = 0; i < kl.size(); ++i) {
    csv << i << ",appearance," << fmt(kl[i]) << "\n";
  }
  csv.flush();
  if (!csv) throw IoError("cannot write " + loss_path);

  KeyValues kv;
  kv.emplace_back("seed", fmt(a.cfg.seed));
  kv.emplace_back("in.config", a.config_path);
  kv.emplace_back("in.det-dir", a.det_dir);
  kv.emplace_back("out.checkpoint", a.out);
  kv.emplace_back("out.loss-csv", loss_path);
  kv.emplace_back("cfg.lr", fmt(a.cfg.lr));
  kv.emplace_back("cfg.epochs", fmt(a.cfg.epochs));
  kv.emplace_back("cfg.appearance-lr", fmt(a.cfg.appearance_lr));
  kv.emplace_back("cfg.appearance-epochs", fmt(a.cfg.appearance_epochs));
  kv.emplace_back("cfg.sinkhorn-iters", fmt(a.cfg.sinkhorn_iters));
  kv.emplace_back("cfg.clip-len", fmt(a.cfg.clip_len));
  kv.emplace_back("cfg.sigma-q", fmt(a.cfg.sigma_q));
  kv.emplace_back("cfg.sigma-r", fmt(a.cfg.sigma_r));
  kv.emplace_back("cfg.sigma-init", fmt(a.cfg.sigma_init));
  kv.emplace_back("cfg.conf-threshold", fmt(a.cfg.conf_threshold));
  kv.emplace_back("cfg.hidden", fmt(a.cfg.hidden));
  kv.emplace_back("cfg.adam", fmt(a.cfg.adam));
  kv.emplace_back("cfg.appearance", fmt(a.appearance));
  kv.emplace_back("cfg.appearance-dim", fmt(head_dim));
  kv.emplace_back("cfg.jobs", fmt(a.jobs));
  write_manifest(a.out + ".manifest", "train", kv);

  std::cerr << "trained " << result.losses.size() << " steps on "
            << clips.size() << " clips; loss " << fmt(result.losses.front())
            << " -> " << fmt(result.losses.back()) << "\n";
}

}  // namespace

void setup_train(CLI::App& app) {
  auto args = std::make_shared<TrainArgs>();
  CLI::App* sub = app.add_subcommand(
      "train", "Train the association scorer on detection sequences");
  sub->add_option("--config", args->config_path,
                  "Training config file (key=value lines); flags win");
  sub->add_option("--det-dir", args->det_dir,
                  "Sequence directory, or a directory of them")
      ->required();
  sub->add_option("--out", args->out, "Output checkpoint path")->required();
  TrainConfig& c = args->cfg;
  sub->add_option("--lr", c.lr, "Association learning rate")
      ->capture_default_str();
  sub->add_option("--epochs", c.epochs, "Association epochs")
      ->capture_default_str();
  sub->add_option("--appearance-lr", c.appearance_lr,
                  "Appearance head learning rate")
      ->capture_default_str();
  sub->add_option("--appearance-epochs", c.appearance_epochs,
                  "Appearance head epochs")
      ->capture_default_str();
  sub->add_option("--sinkhorn-iters", c.sinkhorn_iters,
                  "Sinkhorn iterations per score matrix")
      ->capture_default_str();
  sub->add_option("--clip-len", c.clip_len, "Frames per training clip")
      ->capture_default_str();
  sub->add_option("--sigma-q", c.sigma_q, "Process noise variance")
      ->capture_default_str();
  sub->add_option("--sigma-r", c.sigma_r, "Observation noise variance")
      ->capture_default_str();
  sub->add_option("--sigma-init", c.sigma_init, "Initial belief variance")
      ->capture_default_str();
  sub->add_option("--conf-threshold", c.conf_threshold,
                  "Detection confidence floor for clip building")
      ->capture_default_str();
  sub->add_option("--hidden", c.hidden, "Scorer hidden units")
      ->capture_default_str();
  sub->add_flag("--adam", c.adam, "Use Adam instead of plain SGD");
  sub->add_option("--seed", c.seed, "Random seed")->capture_default_str();
  sub->add_flag("--appearance", args->appearance,
                "Fine-tune an appearance head after association training");
  sub->add_option("--appearance-dim", args->appearance_dim,
                  "Appearance head output dimension (0 keeps the sidecar dim)")
      ->capture_default_str();
  sub->add_option("--jobs", args->jobs, "Sequences loaded in parallel")
      ->capture_default_str();
  sub->callback([args, sub] {
    if (!args->config_path.empty()) apply_config_file(*sub, args->config_path);
    run_train(*args);
  });
}

}  // namespace emtrack::cli
