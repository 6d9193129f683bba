#include "tadet/config.hpp"

#include <cctype>
#include <cerrno>
#include <cstdlib>
#include <functional>
#include <map>
#include <stdexcept>

#include "tadet/errors.hpp"
#include "tadet/rng.hpp"
#include "tadet/serialize.hpp"

namespace tadet {

using nlohmann::ordered_json;

namespace {

std::string trim(const std::string& s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

double to_double(const std::string& v) {
  errno = 0;
  char* end = nullptr;
  const double d = std::strtod(v.c_str(), &end);
  if (end != v.c_str() + v.size() || v.empty() || errno == ERANGE)
    throw std::invalid_argument("'" + v + "' is not a number");
  return d;
}

int to_int(const std::string& v) {
  const double d = to_double(v);
  const int i = static_cast<int>(d);
  if (static_cast<double>(i) != d)
    throw std::invalid_argument("'" + v + "' is not an integer");
  return i;
}

std::uint64_t to_u64(const std::string& v) {
  errno = 0;
  char* end = nullptr;
  const unsigned long long u = std::strtoull(v.c_str(), &end, 10);
  if (end != v.c_str() + v.size() || v.empty() || errno == ERANGE || v[0] == '-')
    throw std::invalid_argument("'" + v + "' is not an unsigned integer");
  return static_cast<std::uint64_t>(u);
}

bool to_bool(const std::string& v) {
  if (v == "true") return true;
  if (v == "false") return false;
  throw std::invalid_argument("'" + v + "' is not a bool (use true or false)");
}

template <typename T, typename Parse>
std::vector<T> to_list(const std::string& v, Parse parse) {
  std::vector<T> out;
  std::size_t start = 0;
  while (start <= v.size()) {
    const std::size_t comma = v.find(',', start);
    const std::string item = trim(v.substr(start, comma == std::string::npos
                                                      ? std::string::npos
                                                      : comma - start));
    if (item.empty()) throw std::invalid_argument("empty list element");
    out.push_back(parse(item));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  if (out.empty()) throw std::invalid_argument("list must be nonempty");
  return out;
}

using Setter = std::function<void(RunConfig&, const std::string&)>;
using SectionMap = std::map<std::string, Setter>;

const std::map<std::string, SectionMap>& registry() {
  static const std::map<std::string, SectionMap> reg = {
      {"network",
       {
           {"input_dim", [](RunConfig& c, const std::string& v) { c.network.input_dim = to_int(v); }},
           {"window_length",
            [](RunConfig& c, const std::string& v) { c.network.window_length = to_int(v); }},
           {"base_channels",
            [](RunConfig& c, const std::string& v) { c.network.base_channels = to_int(v); }},
           {"num_classes",
            [](RunConfig& c, const std::string& v) { c.network.num_classes = to_int(v); }},
           {"head_kernel",
            [](RunConfig& c, const std::string& v) { c.network.head_kernel = to_int(v); }},
           {"rho", [](RunConfig& c, const std::string& v) { c.network.rho = to_double(v); }},
           {"conv1_stride",
            [](RunConfig& c, const std::string& v) { c.network.base_conv1_stride = to_int(v); }},
           {"conv2_stride",
            [](RunConfig& c, const std::string& v) { c.network.base_conv2_stride = to_int(v); }},
           {"pool_kernel",
            [](RunConfig& c, const std::string& v) { c.network.base_pool_kernel = to_int(v); }},
           {"pool_stride",
            [](RunConfig& c, const std::string& v) { c.network.base_pool_stride = to_int(v); }},
       }},
      {"anchors",
       {
           {"layer_lengths",
            [](RunConfig& c, const std::string& v) {
              c.network.anchors.layer_lengths = to_list<int>(v, to_int);
            }},
           {"ratios",
            [](RunConfig& c, const std::string& v) {
              c.network.anchors.ratios = to_list<double>(v, to_double);
            }},
           {"alpha1",
            [](RunConfig& c, const std::string& v) { c.network.anchors.alpha1 = to_double(v); }},
           {"alpha2",
            [](RunConfig& c, const std::string& v) { c.network.anchors.alpha2 = to_double(v); }},
       }},
      {"train",
       {
           {"epochs", [](RunConfig& c, const std::string& v) { c.train.epochs = to_int(v); }},
           {"learning_rate",
            [](RunConfig& c, const std::string& v) { c.train.learning_rate = to_double(v); }},
           {"batch_size",
            [](RunConfig& c, const std::string& v) { c.train.batch_size = to_int(v); }},
           {"seed", [](RunConfig& c, const std::string& v) { c.train.seed = to_u64(v); }},
           {"ablation_mode",
            [](RunConfig& c, const std::string& v) {
              c.train.mode = ablation_mode_from_string(v);
            }},
           {"match_threshold",
            [](RunConfig& c, const std::string& v) { c.train.match_threshold = to_double(v); }},
           {"negative_ratio",
            [](RunConfig& c, const std::string& v) { c.train.negative_ratio = to_double(v); }},
           {"encoded_targets",
            [](RunConfig& c, const std::string& v) { c.train.encoded_targets = to_bool(v); }},
       }},
      {"loss",
       {
           {"alpha",
            [](RunConfig& c, const std::string& v) { c.train.weights.alpha = to_double(v); }},
           {"beta",
            [](RunConfig& c, const std::string& v) { c.train.weights.beta = to_double(v); }},
           {"gamma",
            [](RunConfig& c, const std::string& v) { c.train.weights.gamma = to_double(v); }},
           {"omega",
            [](RunConfig& c, const std::string& v) { c.train.weights.omega = to_double(v); }},
       }},
      {"synth",
       {
           {"num_videos",
            [](RunConfig& c, const std::string& v) { c.synth.num_videos = to_int(v); }},
           {"eval_videos",
            [](RunConfig& c, const std::string& v) { c.synth_eval_videos = to_int(v); }},
           {"min_actions",
            [](RunConfig& c, const std::string& v) { c.synth.min_actions = to_int(v); }},
           {"max_actions",
            [](RunConfig& c, const std::string& v) { c.synth.max_actions = to_int(v); }},
           {"min_width",
            [](RunConfig& c, const std::string& v) { c.synth.min_width = to_double(v); }},
           {"max_width",
            [](RunConfig& c, const std::string& v) { c.synth.max_width = to_double(v); }},
           {"noise_level",
            [](RunConfig& c, const std::string& v) { c.synth.noise_level = to_double(v); }},
           {"motif_amplitude",
            [](RunConfig& c, const std::string& v) { c.synth.motif_amplitude = to_double(v); }},
           {"frame_stride_seconds",
            [](RunConfig& c, const std::string& v) {
              c.synth.frame_stride_seconds = to_double(v);
            }},
           {"retry_limit",
            [](RunConfig& c, const std::string& v) { c.synth.retry_limit = to_int(v); }},
           {"seed", [](RunConfig& c, const std::string& v) { c.synth.seed = to_u64(v); }},
           {"id_prefix", [](RunConfig& c, const std::string& v) { c.synth.id_prefix = v; }},
       }},
      {"infer",
       {
           {"nms_threshold",
            [](RunConfig& c, const std::string& v) { c.infer.nms_threshold = to_double(v); }},
           {"min_score",
            [](RunConfig& c, const std::string& v) { c.infer.min_score = to_double(v); }},
           {"score_with_overlap",
            [](RunConfig& c, const std::string& v) { c.infer.score_with_overlap = to_bool(v); }},
       }},
      {"eval",
       {
           {"thresholds",
            [](RunConfig& c, const std::string& v) {
              c.eval_thresholds = to_list<double>(v, to_double);
            }},
       }},
  };
  return reg;
}

void mirror_synth_dims(RunConfig& c) {
  c.synth.window_length = c.network.window_length;
  c.synth.feature_dim = c.network.input_dim;
  c.synth.num_classes = c.network.num_classes;
}

}  // namespace

void RunConfig::validate() const {
  network.validate();
  train.validate();
  synth.validate();
  infer.validate();
  if (synth.window_length != network.window_length || synth.feature_dim != network.input_dim ||
      synth.num_classes != network.num_classes)
    throw std::invalid_argument("synthetic dimensions must mirror the network section");
  if (synth_eval_videos < 1) throw std::invalid_argument("eval_videos must be >= 1");
  if (eval_thresholds.empty())
    throw std::invalid_argument("evaluation threshold list must be nonempty");
  for (double t : eval_thresholds)
    if (!(t > 0.0 && t <= 1.0))
      throw std::invalid_argument("evaluation thresholds must lie in (0, 1]");
}

ordered_json RunConfig::echo() const {
  ordered_json j;
  j["network"] = {{"input_dim", network.input_dim},
                  {"window_length", network.window_length},
                  {"base_channels", network.base_channels},
                  {"num_classes", network.num_classes},
                  {"head_kernel", network.head_kernel},
                  {"rho", network.rho},
                  {"conv1_stride", network.base_conv1_stride},
                  {"conv2_stride", network.base_conv2_stride},
                  {"pool_kernel", network.base_pool_kernel},
                  {"pool_stride", network.base_pool_stride}};
  j["anchors"] = {{"layer_lengths", network.anchors.layer_lengths},
                  {"ratios", network.anchors.ratios},
                  {"alpha1", network.anchors.alpha1},
                  {"alpha2", network.anchors.alpha2}};
  j["train"] = {{"epochs", train.epochs},
                {"learning_rate", train.learning_rate},
                {"batch_size", train.batch_size},
                {"seed", train.seed},
                {"ablation_mode", to_string(train.mode)},
                {"match_threshold", train.match_threshold},
                {"negative_ratio", train.negative_ratio},
                {"encoded_targets", train.encoded_targets}};
  j["loss"] = {{"alpha", train.weights.alpha},
               {"beta", train.weights.beta},
               {"gamma", train.weights.gamma},
               {"omega", train.weights.omega}};
  j["synth"] = {{"num_videos", synth.num_videos},
                {"eval_videos", synth_eval_videos},
                {"min_actions", synth.min_actions},
                {"max_actions", synth.max_actions},
                {"min_width", synth.min_width},
                {"max_width", synth.max_width},
                {"noise_level", synth.noise_level},
                {"motif_amplitude", synth.motif_amplitude},
                {"frame_stride_seconds", synth.frame_stride_seconds},
                {"retry_limit", synth.retry_limit},
                {"seed", synth.seed},
                {"id_prefix", synth.id_prefix}};
  j["infer"] = {{"nms_threshold", infer.nms_threshold},
                {"min_score", infer.min_score},
                {"score_with_overlap", infer.score_with_overlap}};
  j["eval"] = {{"thresholds", eval_thresholds}};
  return j;
}

std::uint64_t RunConfig::network_init_seed() const { return mix_seed(train.seed, 0xA11CE); }

SyntheticSpec RunConfig::eval_synth_spec() const {
  SyntheticSpec s = synth;
  s.num_videos = synth_eval_videos;
  s.seed = mix_seed(synth.seed, 0xEA17);
  s.id_prefix = synth.id_prefix + "_val";
  return s;
}

RunConfig default_run_config() {
  RunConfig c;
  mirror_synth_dims(c);
  return c;
}

RunConfig parse_run_config_text(const std::string& text, const std::string& origin) {
  RunConfig c = default_run_config();
  const auto& reg = registry();
  const SectionMap* section = nullptr;
  std::string section_name;

  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t nl = text.find('\n', start);
    std::string line = text.substr(start, nl == std::string::npos ? std::string::npos
                                                                  : nl - start);
    ++line_no;
    start = nl == std::string::npos ? text.size() + 1 : nl + 1;
    const std::string where = origin + " line " + std::to_string(line_no);

    line = trim(line);
    if (line.empty() || line[0] == '#' || line[0] == ';') continue;

    if (line.front() == '[') {
      if (line.back() != ']') throw ParseError(where + ": unterminated section header");
      section_name = trim(line.substr(1, line.size() - 2));
      const auto it = reg.find(section_name);
      if (it == reg.end())
        throw ParseError(where + ": unknown section '[" + section_name + "]'");
      section = &it->second;
      continue;
    }

    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ParseError(where + ": expected 'key = value' or a section header");
    if (!section) throw ParseError(where + ": key before any section header");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const auto it = section->find(key);
    if (it == section->end())
      throw ParseError(where + ": unknown key '" + key + "' in section [" + section_name + "]");
    try {
      it->second(c, value);
    } catch (const ParseError&) {
      throw;
    } catch (const std::exception& e) {
      throw ParseError(where + ": key '" + key + "': " + e.what());
    }
  }

  mirror_synth_dims(c);
  try {
    c.validate();
  } catch (const std::exception& e) {
    throw ParseError(origin + ": " + e.what());
  }
  return c;
}

RunConfig parse_run_config(const std::string& path) {
  return parse_run_config_text(read_file_bytes(path), path);
}

}  // namespace tadet
