#include "rbmad/config.hpp"

#include <charconv>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>

#include "rbmad/model_io.hpp"

namespace rbmad {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
  T value{};
  const char* first = text.data();
  const char* last = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc{} || ptr != last) {
    throw std::invalid_argument("config: bad value '" + text + "' for " + key);
  }
  return value;
}

bool parse_bool(const std::string& key, const std::string& text) {
  if (text == "1" || text == "true") return true;
  if (text == "0" || text == "false") return false;
  throw std::invalid_argument("config: bad boolean '" + text + "' for " + key);
}

std::vector<double> parse_list(const std::string& key, const std::string& text) {
  std::vector<double> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) out.push_back(parse_number<double>(key, trim(item)));
  if (out.empty()) throw std::invalid_argument("config: empty list for " + key);
  return out;
}

struct Field {
  std::function<void(RunConfig&, const std::string&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

#define RBMAD_FIELD(path, kind)                                                             \
  Field {                                                                                   \
    [](RunConfig& c, const std::string& k, const std::string& v) {                          \
      c.path = parse_number<kind>(k, v);                                                    \
    },                                                                                      \
        [](const RunConfig& c) {                                                            \
          if constexpr (std::is_floating_point_v<kind>) return format_double(c.path);       \
          else return std::to_string(c.path);                                               \
        }                                                                                   \
  }

// Emission order is the map's key order.
const std::map<std::string, Field>& fields() {
  static const std::map<std::string, Field> table = {
      {"scales",
       {[](RunConfig& c, const std::string& k, const std::string& v) {
          c.detector.scales.ratios = parse_list(k, v);
        },
        [](const RunConfig& c) {
          std::string out;
          for (double r : c.detector.scales.ratios) out += (out.empty() ? "" : ",") + format_double(r);
          return out;
        }}},
      {"patch_h", RBMAD_FIELD(detector.scales.patch_h, int)},
      {"patch_w", RBMAD_FIELD(detector.scales.patch_w, int)},
      {"overlap", RBMAD_FIELD(detector.scales.overlap_fraction, double)},
      {"cluster_hidden", RBMAD_FIELD(detector.cluster_hidden, int)},
      {"detect_hidden", RBMAD_FIELD(detector.detect_hidden, int)},
      {"learning_rate", RBMAD_FIELD(detector.train.learning_rate, double)},
      {"cd_steps", RBMAD_FIELD(detector.train.cd_steps, int)},
      {"epochs", RBMAD_FIELD(detector.train.epochs, int)},
      {"batch_size", RBMAD_FIELD(detector.train.batch_size, int)},
      {"init_weight_std", RBMAD_FIELD(detector.train.init_weight_std, double)},
      {"persistent",
       {[](RunConfig& c, const std::string& k, const std::string& v) {
          c.detector.train.persistent = parse_bool(k, v);
        },
        [](const RunConfig& c) { return std::string(c.detector.train.persistent ? "true" : "false"); }}},
      {"momentum", RBMAD_FIELD(detector.train.momentum, double)},
      {"weight_decay", RBMAD_FIELD(detector.train.weight_decay, double)},
      {"beta", RBMAD_FIELD(detector.beta, double)},
      {"gamma", RBMAD_FIELD(detector.gamma, int)},
      {"chunk_length", RBMAD_FIELD(detector.chunk_length, int)},
      {"update_epochs", RBMAD_FIELD(detector.update_epochs, int)},
      {"seed", RBMAD_FIELD(detector.seed, std::uint64_t)},
      {"resize_h", RBMAD_FIELD(resize_h, int)},
      {"resize_w", RBMAD_FIELD(resize_w, int)},
  };
  return table;
}

#undef RBMAD_FIELD

}  // namespace

void RunConfig::validate() const {
  detector.validate();
  if (resize_h < 0 || resize_w < 0 || (resize_h == 0) != (resize_w == 0)) {
    throw std::invalid_argument("config: resize_h and resize_w must both be 0 or both positive");
  }
}

std::string format_double(double value) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  if (ec != std::errc{}) throw std::runtime_error("format_double failed");
  return std::string(buf, ptr);
}

void set_config_value(RunConfig& config, const std::string& key, const std::string& value) {
  const auto it = fields().find(key);
  if (it == fields().end()) throw std::invalid_argument("config: unknown key '" + key + "'");
  it->second.set(config, key, trim(value));
}

RunConfig parse_config(const std::string& text) {
  RunConfig config;
  std::stringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("config line " + std::to_string(line_no) + ": expected key=value");
    }
    set_config_value(config, trim(line.substr(0, eq)), line.substr(eq + 1));
  }
  config.validate();
  return config;
}

std::string emit_config(const RunConfig& config) {
  std::string out;
  for (const auto& [key, field] : fields()) out += key + "=" + field.get(config) + "\n";
  return out;
}

RunConfig load_config(const std::filesystem::path& path) { return parse_config(read_file(path)); }

std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  for (const auto& [key, field] : fields()) keys.push_back(key);
  return keys;
}

}  // namespace rbmad
