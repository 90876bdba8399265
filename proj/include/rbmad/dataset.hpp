#pragma once

// Frame-directory datasets and the synthetic scene generator.
//
// Layout: <frames_dir>/<n>.pgm with zero-padded consecutive numbers, an
// optional <masks_dir> holding same-named binary masks, and an optional
// labels file with one 0/1 per line.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "rbmad/evaluation.hpp"
#include "rbmad/patches.hpp"

namespace rbmad {

struct DatasetLayout {
  std::filesystem::path frames_dir;
  std::optional<std::filesystem::path> masks_dir;
  std::optional<std::filesystem::path> labels_file;

  // frames/, masks/ and labels.txt under root, each included if present.
  static DatasetLayout under(const std::filesystem::path& root);
};

struct Dataset {
  std::vector<Frame> frames;
  std::optional<GroundTruth> truth;
};

// Frame files in numeric order; throws on an empty directory, non-numeric
// names or a gap in the numbering.
std::vector<std::filesystem::path> list_frame_files(const std::filesystem::path& dir);

// resize_h/resize_w of 0 keep the native size. Frames are resized bilinearly,
// masks by nearest neighbour.
Dataset load_dataset(const DatasetLayout& layout, Eigen::Index resize_h = 0,
                     Eigen::Index resize_w = 0);

struct Plant {
  int first_frame = 0;  // inclusive
  int last_frame = 0;   // inclusive
  int top = 0;
  int left = 0;
  int height = 0;
  int width = 0;
  double intensity = 1.0;
};

struct SynthSpec {
  int height = 160;
  int width = 240;
  int n_frames = 100;
  std::uint64_t seed = 1;          // per-frame sensor noise
  std::uint64_t texture_seed = 7;  // static background
  double base_level = 0.3;
  double contrast = 0.25;
  int cell_size = 16;
  double noise_std = 0.01;
  double drift_per_frame = 0.0;    // added brightness per frame index
  std::vector<Plant> plants;

  // Throws if a plant leaves the frame or its span is empty.
  void validate() const;
};

struct SynthVideo {
  std::vector<Frame> frames;  // quantized to 8 bits
  GroundTruth truth;          // labels and masks
};

SynthVideo synth_video(const SynthSpec& spec);

// Writes frames/, masks/ and labels.txt under out_dir.
DatasetLayout synth_generate(const SynthSpec& spec, const std::filesystem::path& out_dir);

// Writes frames (and masks when present) in the directory layout.
void write_dataset(const SynthVideo& video, const std::filesystem::path& out_dir);

}  // namespace rbmad
