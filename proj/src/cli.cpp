#include "rbmad/cli.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <stdexcept>

#include "CLI11.hpp"
#include "rbmad/config.hpp"
#include "rbmad/dataset.hpp"
#include "rbmad/detector.hpp"
#include "rbmad/evaluation.hpp"
#include "rbmad/model_io.hpp"
#include "rbmad/pgm.hpp"
#include "rbmad/report.hpp"

namespace fs = std::filesystem;

namespace rbmad {

namespace {

struct ConfigArgs {
  std::string config_file;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
};

void add_config_options(CLI::App* cmd, ConfigArgs& args) {
  cmd->add_option("--config", args.config_file, "key=value configuration file")
      ->check(CLI::ExistingFile);
  cmd->add_option("--set", args.overrides, "override one configuration key (key=value)");
  cmd->add_option("--seed", args.seed, "seed for every random stream");
}

RunConfig resolve_config(const ConfigArgs& args) {
  RunConfig config = args.config_file.empty() ? RunConfig{} : load_config(args.config_file);
  for (const std::string& kv : args.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("--set expects key=value, got '" + kv + "'");
    set_config_value(config, kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (args.seed) config.detector.seed = *args.seed;
  config.validate();
  return config;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

Plant parse_plant(const std::string& text) {
  std::vector<std::string> parts;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ':')) parts.push_back(item);
  if (parts.size() != 7) {
    throw std::invalid_argument("--plant expects first:last:top:left:h:w:intensity, got '" + text + "'");
  }
  try {
    Plant p;
    p.first_frame = std::stoi(parts[0]);
    p.last_frame = std::stoi(parts[1]);
    p.top = std::stoi(parts[2]);
    p.left = std::stoi(parts[3]);
    p.height = std::stoi(parts[4]);
    p.width = std::stoi(parts[5]);
    p.intensity = std::stod(parts[6]);
    return p;
  } catch (const std::logic_error&) {
    throw std::invalid_argument("--plant: bad number in '" + text + "'");
  }
}

class Stopwatch {
 public:
  double lap() {
    const auto now = std::chrono::steady_clock::now();
    const double s = std::chrono::duration<double>(now - last_).count();
    last_ = now;
    return s;
  }

 private:
  std::chrono::steady_clock::time_point last_ = std::chrono::steady_clock::now();
};

// --- train -----------------------------------------------------------------

struct TrainArgs {
  std::string data;
  std::string model;
  std::string cluster_maps;
  int kmeans = 0;
  ConfigArgs config;
};

int do_train(const TrainArgs& args, std::ostream& out) {
  const RunConfig config = resolve_config(args.config);
  const Dataset ds = load_dataset(DatasetLayout::under(args.data), config.resize_h, config.resize_w);
  const DetectorModel model = train_detector(ds.frames, config.detector);
  save_model(args.model, model);
  if (!args.cluster_maps.empty()) {
    fs::create_directories(args.cluster_maps);
    for (std::size_t s = 0; s < model.scales.size(); ++s) {
      char name[32];
      std::snprintf(name, sizeof name, "scale%zu.pgm", s);
      write_pgm(fs::path(args.cluster_maps) / name, cluster_map_image(model.scales[s].cluster_map));
      if (args.kmeans < 1) continue;
      std::vector<PatchGrid> grids;
      grids.reserve(ds.frames.size());
      for (const Frame& f : ds.frames) {
        grids.push_back(extract_patches_at_scale(f, config.detector.scales, model.scales[s].ratio));
      }
      const ClusterMap baseline =
          kmeans_baseline(grids, args.kmeans, derive_seed(config.detector.seed, 0x4B4D, s));
      std::snprintf(name, sizeof name, "kmeans%zu.pgm", s);
      write_pgm(fs::path(args.cluster_maps) / name, cluster_map_image(baseline));
    }
  }
  out << "trained on " << ds.frames.size() << " frames of " << model.frame_h << "x" << model.frame_w;
  for (const ScaleModel& sm : model.scales) {
    out << "; scale " << format_double(sm.ratio) << ": " << sm.detectors.size() << " clusters";
  }
  out << '\n';
  return 0;
}

// --- detect ----------------------------------------------------------------

struct DetectArgs {
  std::string model;
  std::string data;
  std::string out_dir;
  std::string save_model;
  bool streaming = false;
  bool overlays = false;
  std::optional<std::uint64_t> seed;
  std::optional<double> beta;
  std::optional<int> gamma;
};

int do_detect(const DetectArgs& args, std::ostream& out) {
  DetectorModel model = load_model(args.model);
  if (args.seed) model.config.seed = *args.seed;
  if (args.beta) model.config.beta = *args.beta;
  if (args.gamma) model.config.gamma = *args.gamma;
  model.config.validate();

  const Dataset ds = load_dataset(DatasetLayout::under(args.data), model.frame_h, model.frame_w);
  const auto chunks = detect_stream(ds.frames, model,
                                    args.streaming ? DetectMode::streaming : DetectMode::offline);
  const StreamVolumes vol = stitch_chunks(chunks);

  const fs::path dir(args.out_dir);
  fs::create_directories(dir);
  const VolumeHeader header{static_cast<std::uint32_t>(model.config.chunk_length),
                            static_cast<std::uint32_t>(model.config.gamma)};
  save_errors(dir / "errors.bin", vol.errors, header);
  save_indicator(dir / "detections.bin", vol.filtered, header);
  std::ostringstream csv;
  write_scores_csv(csv, vol.errors, vol.filtered);
  write_text(dir / "scores.csv", csv.str());

  if (args.overlays) {
    fs::create_directories(dir / "overlays");
    for (std::size_t t = 0; t < ds.frames.size(); ++t) {
      char name[32];
      std::snprintf(name, sizeof name, "%06zu.pgm", t);
      write_pgm(dir / "overlays" / name,
                detection_overlay(ds.frames[t].pixels, vol.filtered, static_cast<Eigen::Index>(t)));
    }
  }
  if (!args.save_model.empty()) save_model(args.save_model, model);

  std::size_t flagged = 0;
  const std::size_t n = vol.filtered.frame_size();
  for (Eigen::Index t = 0; t < vol.filtered.frames; ++t) {
    const auto first = vol.filtered.data.begin() + static_cast<std::ptrdiff_t>(t * n);
    if (std::find(first, first + static_cast<std::ptrdiff_t>(n), std::uint8_t{1}) !=
        first + static_cast<std::ptrdiff_t>(n)) {
      ++flagged;
    }
  }
  out << "scored " << ds.frames.size() << " frames in " << chunks.size() << " chunks ("
      << (args.streaming ? "streaming" : "offline") << "); " << flagged << " frames with detections\n";
  return 0;
}

// --- eval ------------------------------------------------------------------

struct EvalArgs {
  std::string detections;
  std::string data;
  std::string out_dir;
  double alpha = 0.05;
  int thresholds = 64;
};

int do_eval(const EvalArgs& args, std::ostream& out, std::ostream& err) {
  const fs::path det(args.detections);
  VolumeHeader header;
  const ErrorTensor errors = load_errors(det / "errors.bin", &header);
  const Dataset ds = load_dataset(DatasetLayout::under(args.data), errors.height, errors.width);
  if (!ds.truth) throw std::runtime_error("dataset has neither masks nor labels: " + args.data);
  const GroundTruth& gt = *ds.truth;
  if (static_cast<Eigen::Index>(gt.frame_labels.size()) != errors.frames) {
    throw std::runtime_error("ground truth has " + std::to_string(gt.frame_labels.size()) +
                             " frames, detections have " + std::to_string(errors.frames));
  }

  std::vector<std::pair<std::string, RocResult>> levels;
  levels.emplace_back("frame", frame_level_eval(frame_scores(errors), gt.frame_labels));
  if (gt.masks) {
    SweepOptions sweep;
    sweep.gamma = static_cast<int>(header.gamma);
    sweep.chunk_length = static_cast<int>(header.chunk_length);
    sweep.thresholds = quantile_thresholds(errors, args.thresholds);
    levels.emplace_back("pixel", pixel_level_eval(errors, gt, sweep));
    levels.emplace_back("dual", dual_pixel_eval(errors, gt, sweep, args.alpha));
  } else {
    err << "no masks: pixel and dual-pixel levels skipped\n";
  }

  const fs::path dir(args.out_dir);
  fs::create_directories(dir);
  std::ostringstream roc, summary;
  write_roc_header(roc);
  write_summary_header(summary);
  for (const auto& [level, result] : levels) {
    write_roc_rows(roc, level, result);
    write_summary_row(summary, level, result);
  }
  write_text(dir / "roc.csv", roc.str());
  write_text(dir / "summary.csv", summary.str());
  out << summary.str();
  return 0;
}

// --- synth -----------------------------------------------------------------

struct SynthArgs {
  std::string out_dir;
  SynthSpec spec;
  std::vector<std::string> plants;
};

int do_synth(SynthArgs args, std::ostream& out) {
  for (const std::string& p : args.plants) args.spec.plants.push_back(parse_plant(p));
  synth_generate(args.spec, args.out_dir);
  out << "wrote " << args.spec.n_frames << " frames of " << args.spec.height << "x"
      << args.spec.width << " to " << args.out_dir << '\n';
  return 0;
}

// --- bench -----------------------------------------------------------------

struct BenchArgs {
  std::string data;
  int frames = 40;
  ConfigArgs config;
};

int do_bench(const BenchArgs& args, std::ostream& out) {
  const RunConfig config = resolve_config(args.config);
  Stopwatch clock;
  std::vector<std::pair<std::string, double>> stages;

  std::vector<Frame> frames;
  if (args.data.empty()) {
    SynthSpec spec;
    spec.n_frames = args.frames;
    spec.seed = config.detector.seed;
    frames = synth_video(spec).frames;
    stages.emplace_back("synthesize", clock.lap());
  } else {
    frames = load_dataset(DatasetLayout::under(args.data), config.resize_h, config.resize_w).frames;
    stages.emplace_back("load", clock.lap());
  }

  std::vector<PatchGrid> grids;
  for (double ratio : config.detector.scales.ratios) {
    for (const Frame& f : frames) grids.push_back(extract_patches_at_scale(f, config.detector.scales, ratio));
  }
  stages.emplace_back("rescale+extract", clock.lap());
  grids.clear();

  DetectorModel model = train_detector(frames, config.detector);
  stages.emplace_back("train", clock.lap());

  ChunkScores scores = score_chunk(frames, model);
  stages.emplace_back("score", clock.lap());

  const IndicatorTensor filtered = filter_by_span(scores.raw, config.detector.gamma);
  stages.emplace_back("components", clock.lap());

  incremental_update(model, collect_cluster_patches(frames, model), config.detector.update_epochs,
                     derive_seed(config.detector.seed, 0x5EED, 0));
  stages.emplace_back("update", clock.lap());

  out << "stage,seconds\n";
  for (const auto& [name, seconds] : stages) out << name << ',' << seconds << '\n';
  (void)filtered;
  return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Video anomaly detection with per-region restricted Boltzmann machines", "rbmad"};
  app.require_subcommand(1);

  TrainArgs train_args;
  auto* train = app.add_subcommand("train", "fit a detector model on a frame directory");
  train->add_option("--data", train_args.data, "dataset root (frames/ inside)")
      ->required()
      ->check(CLI::ExistingDirectory);
  train->add_option("--model", train_args.model, "output model file")->required();
  train->add_option("--cluster-maps", train_args.cluster_maps, "directory for cluster map images");
  train->add_option("--kmeans", train_args.kmeans, "also write k-means baseline maps with this many clusters")
      ->check(CLI::NonNegativeNumber);
  add_config_options(train, train_args.config);

  DetectArgs detect_args;
  auto* detect = app.add_subcommand("detect", "score a frame directory with a trained model");
  detect->add_option("--model", detect_args.model, "model file")->required()->check(CLI::ExistingFile);
  detect->add_option("--data", detect_args.data, "dataset root (frames/ inside)")
      ->required()
      ->check(CLI::ExistingDirectory);
  detect->add_option("--out", detect_args.out_dir, "output directory")->required();
  detect->add_flag("--streaming", detect_args.streaming, "update the model after every chunk");
  detect->add_flag("--overlays", detect_args.overlays, "write per-frame overlay images");
  detect->add_option("--save-model", detect_args.save_model, "write the model after detection");
  detect->add_option("--seed", detect_args.seed, "seed for streaming updates");
  detect->add_option("--beta", detect_args.beta, "override the error threshold");
  detect->add_option("--gamma", detect_args.gamma, "override the minimum frame span");

  EvalArgs eval_args;
  auto* eval = app.add_subcommand("eval", "ROC, AUC and EER at frame, pixel and dual-pixel level");
  eval->add_option("--detections", eval_args.detections, "output directory of detect")
      ->required()
      ->check(CLI::ExistingDirectory);
  eval->add_option("--data", eval_args.data, "dataset root with masks/ or labels.txt")
      ->required()
      ->check(CLI::ExistingDirectory);
  eval->add_option("--out", eval_args.out_dir, "output directory")->required();
  eval->add_option("--alpha", eval_args.alpha, "dual-pixel precision floor")
      ->check(CLI::Range(0.0, 1.0));
  eval->add_option("--thresholds", eval_args.thresholds, "quantile thresholds in the sweep")
      ->check(CLI::PositiveNumber);

  SynthArgs synth_args;
  auto* synth = app.add_subcommand("synth", "generate a synthetic dataset");
  synth->add_option("--out", synth_args.out_dir, "output dataset root")->required();
  synth->add_option("--frames", synth_args.spec.n_frames, "number of frames");
  synth->add_option("--height", synth_args.spec.height, "frame height");
  synth->add_option("--width", synth_args.spec.width, "frame width");
  synth->add_option("--seed", synth_args.spec.seed, "sensor noise seed");
  synth->add_option("--texture-seed", synth_args.spec.texture_seed, "background texture seed");
  synth->add_option("--noise", synth_args.spec.noise_std, "sensor noise standard deviation");
  synth->add_option("--drift", synth_args.spec.drift_per_frame, "brightness drift per frame");
  synth->add_option("--base", synth_args.spec.base_level, "mean background level");
  synth->add_option("--contrast", synth_args.spec.contrast, "background texture contrast");
  synth->add_option("--cell", synth_args.spec.cell_size, "texture cell size in pixels");
  synth->add_option("--plant", synth_args.plants, "anomaly first:last:top:left:h:w:intensity");

  BenchArgs bench_args;
  auto* bench = app.add_subcommand("bench", "time each pipeline stage");
  bench->add_option("--data", bench_args.data, "dataset root; synthetic frames if omitted")
      ->check(CLI::ExistingDirectory);
  bench->add_option("--frames", bench_args.frames, "synthetic frame count")->check(CLI::PositiveNumber);
  add_config_options(bench, bench_args.config);

  std::vector<const char*> argv;
  argv.reserve(args.size());
  for (const std::string& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*train) return do_train(train_args, out);
    if (*detect) return do_detect(detect_args, out);
    if (*eval) return do_eval(eval_args, out, err);
    if (*synth) return do_synth(synth_args, out);
    if (*bench) return do_bench(bench_args, out);
  } catch (const std::exception& e) {
    err << "rbmad: " << e.what() << '\n';
    return 1;
  }
  return 2;
}

int run_cli(int argc, char** argv) {
  return run_cli(std::vector<std::string>(argv, argv + argc), std::cout, std::cerr);
}

}  // namespace rbmad
