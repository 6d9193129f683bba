#include "tadet/formats.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <set>
#include <sstream>
#include <stdexcept>

#include "tadet/errors.hpp"
#include "tadet/serialize.hpp"

namespace tadet {

using nlohmann::json;
using nlohmann::ordered_json;

int ClassList::id_of(const std::string& name) const {
  for (std::size_t i = 0; i < names.size(); ++i)
    if (names[i] == name) return static_cast<int>(i) + 1;
  throw ParseError("unknown class name '" + name + "'");
}

const std::string& ClassList::name_of(int class_id) const {
  if (class_id < 1 || class_id > num_classes())
    throw std::invalid_argument("class id " + std::to_string(class_id) +
                                " is outside 1.." + std::to_string(num_classes()));
  return names[static_cast<std::size_t>(class_id - 1)];
}

std::string json_quote(const std::string& s) { return json(s).dump(); }

std::string format_seconds(double t) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", t);
  return buf;
}

namespace {

std::string format_score(double s) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.9f", s);
  return buf;
}

json parse_json(const std::string& text, const std::string& what) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded()) throw ParseError(what + ": malformed JSON");
  return j;
}

json parse_json_line(const std::string& line, const std::string& path, std::size_t line_no) {
  return parse_json(line, path + " line " + std::to_string(line_no));
}

std::vector<std::string> split_lines(const std::string& text) {
  std::vector<std::string> lines;
  std::string cur;
  for (char c : text) {
    if (c == '\n') {
      lines.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  if (!cur.empty()) lines.push_back(cur);
  return lines;
}

double require_number(const json& j, const char* key, const std::string& where) {
  if (!j.contains(key) || !j.at(key).is_number())
    throw ParseError(where + ": missing numeric field '" + key + "'");
  return j.at(key).get<double>();
}

std::string require_string(const json& j, const char* key, const std::string& where) {
  if (!j.contains(key) || !j.at(key).is_string())
    throw ParseError(where + ": missing string field '" + key + "'");
  return j.at(key).get<std::string>();
}

}  // namespace

void write_class_list(const std::string& path, const ClassList& classes) {
  if (classes.names.empty()) throw std::invalid_argument("class list must be nonempty");
  ordered_json j = ordered_json::object();
  for (std::size_t i = 0; i < classes.names.size(); ++i)
    j[classes.names[i]] = static_cast<int>(i) + 1;
  atomic_write_file(path, j.dump(2) + "\n");
}

ClassList read_class_list(const std::string& path) {
  const json j = parse_json(read_file_bytes(path), path);
  if (!j.is_object() || j.empty())
    throw ParseError(path + ": class list must be a nonempty JSON object");
  std::vector<std::string> names(j.size());
  std::set<int> seen;
  for (const auto& [name, id] : j.items()) {
    if (!id.is_number_integer())
      throw ParseError(path + ": class '" + name + "' has a non-integer id");
    const int v = id.get<int>();
    if (v < 1 || v > static_cast<int>(j.size()))
      throw ParseError(path + ": class '" + name + "' id " + std::to_string(v) +
                       " is outside 1.." + std::to_string(j.size()));
    if (!seen.insert(v).second)
      throw ParseError(path + ": duplicate class id " + std::to_string(v));
    names[static_cast<std::size_t>(v - 1)] = name;
  }
  return ClassList{std::move(names)};
}

void write_features(const std::string& path, const std::vector<Window>& windows) {
  if (windows.empty()) throw std::invalid_argument("feature file needs at least one window");
  const int d = windows.front().features.channels();
  const int t = windows.front().features.length();
  ByteWriter w;
  w.raw(kFeatureMagic, sizeof(kFeatureMagic));
  w.u32(kFeatureVersion);
  w.u32(static_cast<std::uint32_t>(windows.size()));
  w.u32(static_cast<std::uint32_t>(d));
  w.u32(static_cast<std::uint32_t>(t));
  for (const Window& win : windows) {
    if (win.features.channels() != d || win.features.length() != t)
      throw std::invalid_argument("window '" + win.video_id + "' has shape " +
                                  win.features.shape_str() + ", the file is [" +
                                  std::to_string(d) + " x " + std::to_string(t) + "]");
    w.str(win.video_id);
    w.f64(win.start_seconds);
    w.f64(win.stride_seconds);
    for (int c = 0; c < d; ++c)
      for (int i = 0; i < t; ++i) w.f32(static_cast<float>(win.features.at(c, i)));
  }
  atomic_write_file(path, w.take());
}

std::vector<Window> read_features(const std::string& path) {
  ByteReader r(read_file_bytes(path), path);
  char magic[4];
  r.raw(magic, sizeof(magic));
  if (std::memcmp(magic, kFeatureMagic, sizeof(magic)) != 0)
    throw ParseError(path + ": not a feature file (bad magic)");
  const std::uint32_t version = r.u32();
  if (version != kFeatureVersion) throw VersionError(version, kFeatureVersion);
  const std::uint32_t num_windows = r.u32();
  const std::uint32_t d = r.u32();
  const std::uint32_t t = r.u32();
  if (num_windows == 0) {
    r.expect_end();
    return {};
  }
  if (d == 0 || t == 0) throw ParseError(path + ": feature dimensions must be positive");

  std::vector<Window> windows;
  windows.reserve(num_windows);
  for (std::uint32_t i = 0; i < num_windows; ++i) {
    Window w;
    w.video_id = r.str();
    w.start_seconds = r.f64();
    w.stride_seconds = r.f64();
    if (!(w.stride_seconds > 0.0))
      throw ParseError(path + ": window '" + w.video_id + "' has non-positive frame stride");
    Tensor features(static_cast<int>(d), static_cast<int>(t));
    for (std::uint32_t c = 0; c < d; ++c)
      for (std::uint32_t j = 0; j < t; ++j)
        features.at(static_cast<int>(c), static_cast<int>(j)) = static_cast<double>(r.f32());
    w.features = std::move(features);
    windows.push_back(std::move(w));
  }
  r.expect_end();
  return windows;
}

void quantize_features(std::vector<Window>& windows) {
  for (Window& w : windows)
    for (int c = 0; c < w.features.channels(); ++c)
      for (int t = 0; t < w.features.length(); ++t)
        w.features.at(c, t) = static_cast<double>(static_cast<float>(w.features.at(c, t)));
}

void write_annotations(const std::string& path, const std::vector<Window>& windows,
                       const ClassList& classes,
                       const std::optional<nlohmann::ordered_json>& header) {
  std::string out;
  if (header) {
    ordered_json h;
    h["_header"] = *header;
    out += h.dump() + "\n";
  }
  for (const Window& w : windows) {
    for (const GroundTruth& g : w.actions) {
      out += "{\"video_id\":" + json_quote(w.video_id) +
             ",\"t_start\":" + format_seconds(w.to_seconds(g.segment.start())) +
             ",\"t_end\":" + format_seconds(w.to_seconds(g.segment.end())) +
             ",\"class\":" + json_quote(classes.name_of(g.class_id)) + "}\n";
    }
  }
  atomic_write_file(path, out);
}

std::vector<GtInstance> read_annotations(const std::string& path, const ClassList& classes) {
  const std::vector<std::string> lines = split_lines(read_file_bytes(path));
  std::vector<GtInstance> out;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const json j = parse_json_line(lines[i], path, i + 1);
    if (j.contains("_header")) continue;
    const std::string where = path + " line " + std::to_string(i + 1);
    GtInstance g;
    g.video_id = require_string(j, "video_id", where);
    const double t0 = require_number(j, "t_start", where);
    const double t1 = require_number(j, "t_end", where);
    if (!(t0 < t1))
      throw ParseError(where + ": t_start must be strictly before t_end");
    g.segment = Segment::from_range(t0, t1);
    g.class_id = classes.id_of(require_string(j, "class", where));
    out.push_back(std::move(g));
  }
  return out;
}

void write_detections(const std::string& path, const std::vector<Detection>& detections,
                      const ClassList& classes,
                      const std::optional<nlohmann::ordered_json>& header) {
  std::string out;
  if (header) {
    ordered_json h;
    h["_header"] = *header;
    out += h.dump() + "\n";
  }
  for (const Detection& d : detections) {
    out += "{\"video_id\":" + json_quote(d.video_id) +
           ",\"t_start\":" + format_seconds(d.segment.start()) +
           ",\"t_end\":" + format_seconds(d.segment.end()) +
           ",\"class\":" + json_quote(classes.name_of(d.class_id)) +
           ",\"score\":" + format_score(d.score) + "}\n";
  }
  atomic_write_file(path, out);
}

std::vector<Detection> read_detections(const std::string& path, const ClassList& classes) {
  const std::vector<std::string> lines = split_lines(read_file_bytes(path));
  std::vector<Detection> out;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const json j = parse_json_line(lines[i], path, i + 1);
    if (j.contains("_header")) continue;
    const std::string where = path + " line " + std::to_string(i + 1);
    Detection d;
    d.video_id = require_string(j, "video_id", where);
    const double t0 = require_number(j, "t_start", where);
    const double t1 = require_number(j, "t_end", where);
    if (!(t0 < t1)) throw ParseError(where + ": t_start must be strictly before t_end");
    d.segment = Segment::from_range(t0, t1);
    d.class_id = classes.id_of(require_string(j, "class", where));
    d.score = require_number(j, "score", where);
    if (!std::isfinite(d.score) || d.score < 0.0)
      throw ParseError(where + ": score must be finite and >= 0");
    out.push_back(std::move(d));
  }
  return out;
}

void write_jsonl(const std::string& path, const std::vector<std::string>& lines) {
  std::string out;
  for (const std::string& line : lines) out += line + "\n";
  atomic_write_file(path, out);
}

}  // namespace tadet
