#include "rbmad/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <stdexcept>
#include <string>

#include "rbmad/detector.hpp"
#include "rbmad/pgm.hpp"

namespace fs = std::filesystem;

namespace rbmad {

DatasetLayout DatasetLayout::under(const fs::path& root) {
  DatasetLayout layout;
  layout.frames_dir = root / "frames";
  if (fs::is_directory(root / "masks")) layout.masks_dir = root / "masks";
  if (fs::is_regular_file(root / "labels.txt")) layout.labels_file = root / "labels.txt";
  return layout;
}

std::vector<fs::path> list_frame_files(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw std::runtime_error("no such frame directory: " + dir.string());
  std::vector<std::pair<std::uint64_t, fs::path>> numbered;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file() || entry.path().extension() != ".pgm") continue;
    const std::string stem = entry.path().stem().string();
    if (stem.empty() || stem.size() > 18 ||
        !std::all_of(stem.begin(), stem.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); })) {
      throw std::runtime_error("frame file name is not a number: " + entry.path().string());
    }
    numbered.emplace_back(std::stoull(stem), entry.path());
  }
  if (numbered.empty()) throw std::runtime_error("no frames in " + dir.string());
  std::sort(numbered.begin(), numbered.end());
  for (std::size_t k = 1; k < numbered.size(); ++k) {
    if (numbered[k].first != numbered[k - 1].first + 1) {
      throw std::runtime_error("gap in frame numbering after " +
                               numbered[k - 1].second.filename().string());
    }
  }
  std::vector<fs::path> out;
  out.reserve(numbered.size());
  for (auto& [n, path] : numbered) out.push_back(std::move(path));
  return out;
}

namespace {

Image resize_mask(const Image& mask, Eigen::Index h, Eigen::Index w) {
  if (mask.rows() == h && mask.cols() == w) return mask;
  Image out(h, w);
  for (Eigen::Index r = 0; r < h; ++r) {
    const auto sr = std::min<Eigen::Index>(mask.rows() - 1, (2 * r + 1) * mask.rows() / (2 * h));
    for (Eigen::Index c = 0; c < w; ++c) {
      const auto sc = std::min<Eigen::Index>(mask.cols() - 1, (2 * c + 1) * mask.cols() / (2 * w));
      out(r, c) = mask(sr, sc);
    }
  }
  return out;
}

std::vector<std::uint8_t> read_labels(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open labels file " + path.string());
  std::vector<std::uint8_t> labels;
  std::string line;
  while (std::getline(in, line)) {
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    const char c = line[first];
    if (c != '0' && c != '1') throw std::runtime_error("labels file: expected 0 or 1, got '" + line + "'");
    labels.push_back(c == '1' ? 1 : 0);
  }
  return labels;
}

}  // namespace

Dataset load_dataset(const DatasetLayout& layout, Eigen::Index resize_h, Eigen::Index resize_w) {
  const std::vector<fs::path> files = list_frame_files(layout.frames_dir);
  Dataset ds;
  ds.frames.reserve(files.size());
  Eigen::Index native_h = -1, native_w = -1;
  for (std::size_t t = 0; t < files.size(); ++t) {
    const GrayImage img = read_pgm(files[t]);
    if (native_h < 0) {
      native_h = img.samples.rows();
      native_w = img.samples.cols();
    } else if (img.samples.rows() != native_h || img.samples.cols() != native_w) {
      throw std::runtime_error("frame " + files[t].string() + " has inconsistent dimensions");
    }
    Frame f = normalize_frame(img.samples, img.max_value, t);
    if (resize_h > 0 && resize_w > 0) f.pixels = resize_bilinear(f.pixels, resize_h, resize_w);
    ds.frames.push_back(std::move(f));
  }
  const Eigen::Index out_h = ds.frames.front().height();
  const Eigen::Index out_w = ds.frames.front().width();

  if (layout.masks_dir || layout.labels_file) {
    GroundTruth gt;
    if (layout.masks_dir) {
      IndicatorTensor masks(static_cast<Eigen::Index>(files.size()), out_h, out_w);
      for (std::size_t t = 0; t < files.size(); ++t) {
        const fs::path mask_path = *layout.masks_dir / files[t].filename();
        const GrayImage img = read_pgm(mask_path);
        if (img.samples.rows() != native_h || img.samples.cols() != native_w) {
          throw std::runtime_error("mask " + mask_path.string() + " does not match frame size");
        }
        Image binary = (img.samples.array() > 0).cast<double>().matrix();
        binary = resize_mask(binary, out_h, out_w);
        for (Eigen::Index k = 0; k < binary.size(); ++k) {
          masks.data[t * masks.frame_size() + static_cast<std::size_t>(k)] =
              binary.data()[k] > 0.5 ? 1 : 0;
        }
      }
      gt.masks = std::move(masks);
    }
    if (layout.labels_file) {
      gt.frame_labels = read_labels(*layout.labels_file);
      if (gt.frame_labels.size() != files.size()) {
        throw std::runtime_error("labels file has " + std::to_string(gt.frame_labels.size()) +
                                 " entries for " + std::to_string(files.size()) + " frames");
      }
    } else {
      gt.frame_labels.resize(files.size());
      for (std::size_t t = 0; t < files.size(); ++t) {
        const auto first = gt.masks->data.begin() + static_cast<std::ptrdiff_t>(t * gt.masks->frame_size());
        gt.frame_labels[t] = std::any_of(first, first + static_cast<std::ptrdiff_t>(gt.masks->frame_size()),
                                         [](std::uint8_t z) { return z != 0; });
      }
    }
    gt.validate();
    ds.truth = std::move(gt);
  }
  return ds;
}

void SynthSpec::validate() const {
  if (height < 1 || width < 1 || n_frames < 1) throw std::invalid_argument("synth: empty video");
  if (cell_size < 2) throw std::invalid_argument("synth: cell_size must be >= 2");
  for (const Plant& p : plants) {
    if (p.first_frame < 0 || p.last_frame < p.first_frame || p.last_frame >= n_frames) {
      throw std::invalid_argument("synth: plant frame span [" + std::to_string(p.first_frame) +
                                  "," + std::to_string(p.last_frame) + "] outside the video");
    }
    if (p.height < 1 || p.width < 1 || p.top < 0 || p.left < 0 || p.top + p.height > height ||
        p.left + p.width > width) {
      throw std::invalid_argument("synth: plant rectangle outside the frame");
    }
  }
}

namespace {

// Two octaves of bilinearly interpolated lattice noise in [0,1].
Image value_noise(int height, int width, int cell, std::uint64_t seed) {
  Rng rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Image total = Image::Zero(height, width);
  double amplitude = 1.0, norm = 0.0;
  for (int octave = 0; octave < 2; ++octave, cell = std::max(2, cell / 2), amplitude *= 0.5) {
    const int gh = height / cell + 2;
    const int gw = width / cell + 2;
    Image lattice(gh, gw);
    for (Eigen::Index k = 0; k < lattice.size(); ++k) lattice.data()[k] = unit(rng);
    for (int r = 0; r < height; ++r) {
      const double y = static_cast<double>(r) / cell;
      const int y0 = static_cast<int>(y);
      const double fy = y - y0;
      for (int c = 0; c < width; ++c) {
        const double x = static_cast<double>(c) / cell;
        const int x0 = static_cast<int>(x);
        const double fx = x - x0;
        const double top = (1 - fx) * lattice(y0, x0) + fx * lattice(y0, x0 + 1);
        const double bottom = (1 - fx) * lattice(y0 + 1, x0) + fx * lattice(y0 + 1, x0 + 1);
        total(r, c) += amplitude * ((1 - fy) * top + fy * bottom);
      }
    }
    norm += amplitude;
  }
  return total / norm;
}

Image quantize_unit(const Image& values) {
  Image out(values.rows(), values.cols());
  for (Eigen::Index k = 0; k < values.size(); ++k) {
    out.data()[k] = static_cast<double>(std::lround(std::clamp(values.data()[k], 0.0, 1.0) * 255.0)) / 255.0;
  }
  return out;
}

}  // namespace

SynthVideo synth_video(const SynthSpec& spec) {
  spec.validate();
  const Image background =
      (spec.base_level + spec.contrast * (2.0 * value_noise(spec.height, spec.width, spec.cell_size,
                                                            spec.texture_seed).array() - 1.0))
          .matrix();
  SynthVideo video;
  video.truth.frame_labels.assign(static_cast<std::size_t>(spec.n_frames), 0);
  IndicatorTensor masks(spec.n_frames, spec.height, spec.width);
  std::normal_distribution<double> noise(0.0, spec.noise_std);

  for (int t = 0; t < spec.n_frames; ++t) {
    Rng rng(derive_seed(spec.seed, 0xF7A3E, static_cast<std::uint64_t>(t)));
    Image pixels = background.array() + spec.drift_per_frame * t;
    for (const Plant& p : spec.plants) {
      if (t < p.first_frame || t > p.last_frame) continue;
      pixels.block(p.top, p.left, p.height, p.width).setConstant(p.intensity);
      for (int r = p.top; r < p.top + p.height; ++r) {
        for (int c = p.left; c < p.left + p.width; ++c) masks.at(t, r, c) = 1;
      }
      video.truth.frame_labels[static_cast<std::size_t>(t)] = 1;
    }
    if (spec.noise_std > 0.0) {
      for (Eigen::Index k = 0; k < pixels.size(); ++k) pixels.data()[k] += noise(rng);
    }
    Frame f;
    f.index = static_cast<std::size_t>(t);
    f.pixels = quantize_unit(pixels);
    video.frames.push_back(std::move(f));
  }
  video.truth.masks = std::move(masks);
  return video;
}

void write_dataset(const SynthVideo& video, const fs::path& out_dir) {
  fs::create_directories(out_dir / "frames");
  const bool has_masks = video.truth.masks.has_value();
  if (has_masks) fs::create_directories(out_dir / "masks");
  char name[32];
  for (std::size_t t = 0; t < video.frames.size(); ++t) {
    std::snprintf(name, sizeof name, "%06zu.pgm", t);
    write_pgm(out_dir / "frames" / name, quantize(video.frames[t].pixels));
    if (has_masks) {
      const IndicatorTensor& m = *video.truth.masks;
      GrayImage mask;
      mask.max_value = 255;
      mask.samples.resize(m.height, m.width);
      for (Eigen::Index k = 0; k < mask.samples.size(); ++k) {
        mask.samples.data()[k] = m.data[t * m.frame_size() + static_cast<std::size_t>(k)] ? 255 : 0;
      }
      write_pgm(out_dir / "masks" / name, mask);
    }
  }
  std::ofstream labels(out_dir / "labels.txt", std::ios::trunc);
  if (!labels) throw std::runtime_error("cannot write labels under " + out_dir.string());
  for (std::uint8_t l : video.truth.frame_labels) labels << int{l} << '\n';
}

DatasetLayout synth_generate(const SynthSpec& spec, const fs::path& out_dir) {
  write_dataset(synth_video(spec), out_dir);
  return DatasetLayout::under(out_dir);
}

}  // namespace rbmad
