#include "rbmad/model_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace rbmad {

namespace {

constexpr char kRbmMagic[8] = {'R', 'B', 'M', 'A', 'D', 'R', 'B', 'M'};
constexpr char kModelMagic[8] = {'R', 'B', 'M', 'A', 'D', 'M', 'D', 'L'};
constexpr char kIndicatorMagic[8] = {'R', 'B', 'M', 'A', 'D', 'I', 'N', 'D'};
constexpr char kErrorMagic[8] = {'R', 'B', 'M', 'A', 'D', 'E', 'R', 'R'};

class ByteWriter {
 public:
  void magic(const char (&m)[8]) { out_.append(m, 8); }
  void u8(std::uint8_t v) { out_.push_back(static_cast<char>(v)); }
  void u32(std::uint32_t v) { put(v, 4); }
  void u64(std::uint64_t v) { put(v, 8); }
  void i32(std::int32_t v) { u32(static_cast<std::uint32_t>(v)); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void str(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    out_ += s;
  }
  void count(Eigen::Index n) {
    if (n < 0 || static_cast<std::uint64_t>(n) > std::numeric_limits<std::uint32_t>::max()) {
      throw std::invalid_argument("serialize: value does not fit in u32");
    }
    u32(static_cast<std::uint32_t>(n));
  }
  std::string take() { return std::move(out_); }

 private:
  void put(std::uint64_t v, int n) {
    for (int k = 0; k < n; ++k) out_.push_back(static_cast<char>((v >> (8 * k)) & 0xFF));
  }
  std::string out_;
};

class ByteReader {
 public:
  ByteReader(const std::string& bytes, std::string what) : bytes_(bytes), what_(std::move(what)) {}

  void magic(const char (&m)[8]) {
    need(8);
    if (std::memcmp(bytes_.data() + pos_, m, 8) != 0) {
      throw std::runtime_error(what_ + ": bad magic header (expected " + std::string(m, 8) +
                               " format version " + std::to_string(kFormatVersion) + ")");
    }
    pos_ += 8;
  }
  void version() {
    const std::uint32_t v = u32();
    if (v != kFormatVersion) {
      throw std::runtime_error(what_ + ": unsupported format version " + std::to_string(v) +
                               " (this build reads version " + std::to_string(kFormatVersion) +
                               ")");
    }
  }
  std::uint8_t u8() {
    need(1);
    return static_cast<std::uint8_t>(bytes_[pos_++]);
  }
  std::uint32_t u32() { return static_cast<std::uint32_t>(get(4)); }
  std::uint64_t u64() { return get(8); }
  std::int32_t i32() { return static_cast<std::int32_t>(u32()); }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string str() {
    const std::uint32_t n = u32();
    need(n);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  // Rejects element counts that cannot fit in the remaining bytes.
  void need_elements(std::uint64_t n, std::uint64_t width) {
    if (width != 0 && n > (bytes_.size() - pos_) / width) truncated();
  }
  void finish() const {
    if (pos_ != bytes_.size()) throw std::runtime_error(what_ + ": trailing bytes after record");
  }

 private:
  void need(std::size_t n) {
    if (bytes_.size() - pos_ < n) truncated();
  }
  [[noreturn]] void truncated() const { throw std::runtime_error(what_ + ": truncated file"); }
  std::uint64_t get(int n) {
    need(static_cast<std::size_t>(n));
    std::uint64_t v = 0;
    for (int k = 0; k < n; ++k) {
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_ + k])) << (8 * k);
    }
    pos_ += static_cast<std::size_t>(n);
    return v;
  }

  const std::string& bytes_;
  std::string what_;
  std::size_t pos_ = 0;
};

void write_rbm_record(ByteWriter& w, const RbmParams& p) {
  p.check_consistent();
  w.u64(static_cast<std::uint64_t>(p.n_visible()));
  w.u64(static_cast<std::uint64_t>(p.n_hidden()));
  for (Eigen::Index i = 0; i < p.n_visible(); ++i) w.f64(p.visible_bias[i]);
  for (Eigen::Index j = 0; j < p.n_hidden(); ++j) w.f64(p.hidden_bias[j]);
  for (Eigen::Index i = 0; i < p.n_visible(); ++i) {
    for (Eigen::Index j = 0; j < p.n_hidden(); ++j) w.f64(p.weights(i, j));
  }
}

RbmParams read_rbm_record(ByteReader& r) {
  const std::uint64_t m = r.u64();
  const std::uint64_t k = r.u64();
  if (m == 0 || k == 0) throw std::runtime_error("rbm record: zero-sized layer");
  r.need_elements(m + k, 8);
  if (k != 0) r.need_elements(m, 8 * k);
  RbmParams p(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(k));
  for (Eigen::Index i = 0; i < p.n_visible(); ++i) p.visible_bias[i] = r.f64();
  for (Eigen::Index j = 0; j < p.n_hidden(); ++j) p.hidden_bias[j] = r.f64();
  for (Eigen::Index i = 0; i < p.n_visible(); ++i) {
    for (Eigen::Index j = 0; j < p.n_hidden(); ++j) p.weights(i, j) = r.f64();
  }
  return p;
}

void write_volume_header(ByteWriter& w, Eigen::Index l, Eigen::Index h, Eigen::Index wd,
                         const VolumeHeader& header) {
  w.u32(kFormatVersion);
  w.u64(static_cast<std::uint64_t>(l));
  w.u64(static_cast<std::uint64_t>(h));
  w.u64(static_cast<std::uint64_t>(wd));
  w.u32(header.chunk_length);
  w.u32(header.gamma);
}

template <typename T>
void read_volume_header(ByteReader& r, Volume<T>& v, VolumeHeader* header, std::uint64_t width) {
  r.version();
  const std::uint64_t l = r.u64();
  const std::uint64_t h = r.u64();
  const std::uint64_t w = r.u64();
  VolumeHeader hd;
  hd.chunk_length = r.u32();
  hd.gamma = r.u32();
  if (h != 0 && w != 0) {
    r.need_elements(l, width * h * w);
  }
  v = Volume<T>(static_cast<Eigen::Index>(l), static_cast<Eigen::Index>(h),
                static_cast<Eigen::Index>(w));
  if (header) *header = hd;
}

}  // namespace

std::string read_file(const std::filesystem::path& path) {
  std::ifstream file(path, std::ios::binary);
  if (!file) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream buffer;
  buffer << file.rdbuf();
  return buffer.str();
}

void write_file(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) throw std::runtime_error("cannot write " + path.string());
  file.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!file) throw std::runtime_error("write failed: " + path.string());
}

std::string serialize_rbm(const RbmParams& params) {
  ByteWriter w;
  w.magic(kRbmMagic);
  w.u32(kFormatVersion);
  write_rbm_record(w, params);
  return w.take();
}

RbmParams deserialize_rbm(const std::string& bytes) {
  ByteReader r(bytes, "rbm file");
  r.magic(kRbmMagic);
  r.version();
  RbmParams p = read_rbm_record(r);
  r.finish();
  return p;
}

void save_rbm(const std::filesystem::path& path, const RbmParams& params) {
  write_file(path, serialize_rbm(params));
}

RbmParams load_rbm(const std::filesystem::path& path) { return deserialize_rbm(read_file(path)); }

std::string serialize_model(const DetectorModel& model) {
  model.validate();
  const DetectorConfig& c = model.config;
  ByteWriter w;
  w.magic(kModelMagic);
  w.u32(kFormatVersion);
  w.u64(static_cast<std::uint64_t>(model.frame_h));
  w.u64(static_cast<std::uint64_t>(model.frame_w));
  w.count(static_cast<Eigen::Index>(c.scales.ratios.size()));
  for (double r : c.scales.ratios) w.f64(r);
  w.u32(static_cast<std::uint32_t>(c.scales.patch_h));
  w.u32(static_cast<std::uint32_t>(c.scales.patch_w));
  w.f64(c.scales.overlap_fraction);
  w.u32(static_cast<std::uint32_t>(c.cluster_hidden));
  w.u32(static_cast<std::uint32_t>(c.detect_hidden));
  w.f64(c.train.learning_rate);
  w.u32(static_cast<std::uint32_t>(c.train.cd_steps));
  w.u32(static_cast<std::uint32_t>(c.train.epochs));
  w.u32(static_cast<std::uint32_t>(c.train.batch_size));
  w.f64(c.train.init_weight_std);
  w.u8(c.train.persistent ? 1 : 0);
  w.f64(c.train.momentum);
  w.f64(c.train.weight_decay);
  w.f64(c.beta);
  w.u32(static_cast<std::uint32_t>(c.gamma));
  w.u32(static_cast<std::uint32_t>(c.chunk_length));
  w.u32(static_cast<std::uint32_t>(c.update_epochs));
  w.u64(c.seed);
  w.str(model.interpolation);

  for (const ScaleModel& s : model.scales) {
    w.f64(s.ratio);
    write_rbm_record(w, s.cluster_rbm);
    w.count(s.cluster_map.labels.rows());
    w.count(s.cluster_map.labels.cols());
    for (Eigen::Index k = 0; k < s.cluster_map.labels.size(); ++k) {
      w.i32(s.cluster_map.labels.data()[k]);
    }
    w.count(static_cast<Eigen::Index>(s.detectors.size()));
    for (const auto& [label, params] : s.detectors) {
      w.i32(label);
      write_rbm_record(w, params);
    }
  }
  return w.take();
}

DetectorModel deserialize_model(const std::string& bytes) {
  ByteReader r(bytes, "model file");
  r.magic(kModelMagic);
  r.version();
  DetectorModel model;
  model.frame_h = static_cast<Eigen::Index>(r.u64());
  model.frame_w = static_cast<Eigen::Index>(r.u64());
  DetectorConfig& c = model.config;
  const std::uint32_t n_scales = r.u32();
  r.need_elements(n_scales, 8);
  c.scales.ratios.resize(n_scales);
  for (double& ratio : c.scales.ratios) ratio = r.f64();
  c.scales.patch_h = static_cast<int>(r.u32());
  c.scales.patch_w = static_cast<int>(r.u32());
  c.scales.overlap_fraction = r.f64();
  c.cluster_hidden = static_cast<int>(r.u32());
  c.detect_hidden = static_cast<int>(r.u32());
  c.train.learning_rate = r.f64();
  c.train.cd_steps = static_cast<int>(r.u32());
  c.train.epochs = static_cast<int>(r.u32());
  c.train.batch_size = static_cast<int>(r.u32());
  c.train.init_weight_std = r.f64();
  c.train.persistent = r.u8() != 0;
  c.train.momentum = r.f64();
  c.train.weight_decay = r.f64();
  c.beta = r.f64();
  c.gamma = static_cast<int>(r.u32());
  c.chunk_length = static_cast<int>(r.u32());
  c.update_epochs = static_cast<int>(r.u32());
  c.seed = r.u64();
  model.interpolation = r.str();

  for (std::uint32_t s = 0; s < n_scales; ++s) {
    ScaleModel sm;
    sm.ratio = r.f64();
    sm.cluster_rbm = read_rbm_record(r);
    const std::uint32_t rows = r.u32();
    const std::uint32_t cols = r.u32();
    r.need_elements(std::uint64_t{rows} * cols, 4);
    sm.cluster_map.scale = sm.ratio;
    sm.cluster_map.labels.resize(rows, cols);
    for (Eigen::Index k = 0; k < sm.cluster_map.labels.size(); ++k) {
      sm.cluster_map.labels.data()[k] = r.i32();
    }
    sm.cluster_map.refresh_unique();
    const std::uint32_t n_clusters = r.u32();
    int previous = std::numeric_limits<int>::min();
    for (std::uint32_t k = 0; k < n_clusters; ++k) {
      const int label = r.i32();
      if (k > 0 && label <= previous) {
        throw std::runtime_error("model file: cluster labels not in ascending order");
      }
      previous = label;
      sm.detectors.emplace(label, read_rbm_record(r));
    }
    model.scales.push_back(std::move(sm));
  }
  r.finish();
  model.validate();
  return model;
}

void save_model(const std::filesystem::path& path, const DetectorModel& model) {
  write_file(path, serialize_model(model));
}

DetectorModel load_model(const std::filesystem::path& path) {
  return deserialize_model(read_file(path));
}

void ensure_patch_compatible(const DetectorModel& model, const ScaleConfig& scales) {
  if (model.config.scales.patch_size() != scales.patch_size() ||
      model.config.scales.patch_h != scales.patch_h) {
    throw std::invalid_argument(
        "model patch " + std::to_string(model.config.scales.patch_h) + "x" +
        std::to_string(model.config.scales.patch_w) + " (" +
        std::to_string(model.config.scales.patch_size()) + " visible units) is incompatible with " +
        std::to_string(scales.patch_h) + "x" + std::to_string(scales.patch_w));
  }
}

void save_indicator(const std::filesystem::path& path, const IndicatorTensor& z,
                    const VolumeHeader& header) {
  ByteWriter w;
  w.magic(kIndicatorMagic);
  write_volume_header(w, z.frames, z.height, z.width, header);
  std::string bytes = w.take();
  bytes.append(reinterpret_cast<const char*>(z.data.data()), z.data.size());
  write_file(path, bytes);
}

IndicatorTensor load_indicator(const std::filesystem::path& path, VolumeHeader* header) {
  const std::string bytes = read_file(path);
  ByteReader r(bytes, "indicator file");
  r.magic(kIndicatorMagic);
  IndicatorTensor z;
  read_volume_header(r, z, header, 1);
  for (auto& v : z.data) {
    v = r.u8();
    if (v > 1) throw std::runtime_error("indicator file: entry is not 0/1");
  }
  r.finish();
  return z;
}

void save_errors(const std::filesystem::path& path, const ErrorTensor& e,
                 const VolumeHeader& header) {
  ByteWriter w;
  w.magic(kErrorMagic);
  write_volume_header(w, e.frames, e.height, e.width, header);
  for (double v : e.data) w.f64(v);
  write_file(path, w.take());
}

ErrorTensor load_errors(const std::filesystem::path& path, VolumeHeader* header) {
  const std::string bytes = read_file(path);
  ByteReader r(bytes, "error file");
  r.magic(kErrorMagic);
  ErrorTensor e;
  read_volume_header(r, e, header, 8);
  for (double& v : e.data) v = r.f64();
  r.finish();
  return e;
}

}  // namespace rbmad
