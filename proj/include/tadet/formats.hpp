#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "tadet/dataset.hpp"
#include "tadet/eval.hpp"
#include "tadet/infer.hpp"

namespace tadet {

inline constexpr char kFeatureMagic[4] = {'T', 'A', 'D', 'F'};
inline constexpr std::uint32_t kFeatureVersion = 1;

// Bijective mapping between class names and ids 1..C (0 stays background).
struct ClassList {
  std::vector<std::string> names;  // names[i] is class id i + 1

  int num_classes() const { return static_cast<int>(names.size()); }
  int id_of(const std::string& name) const;        // ParseError if unknown
  const std::string& name_of(int class_id) const;  // invalid_argument if out of range
};

void write_class_list(const std::string& path, const ClassList& classes);
ClassList read_class_list(const std::string& path);

// Binary feature windows. All windows must share one feature_dim and one
// window_length; values are stored as little-endian f32, channel-major.
// Reading quantizes through f32, and quantize_features applies the identical
// rounding to an in-memory dataset so both routes feed the network the same
// numbers.
void write_features(const std::string& path, const std::vector<Window>& windows);
std::vector<Window> read_features(const std::string& path);  // actions left empty
void quantize_features(std::vector<Window>& windows);

// JSON-lines annotations in seconds. A leading {"_header": ...} line carries
// the resolved run configuration; readers skip it.
void write_annotations(const std::string& path, const std::vector<Window>& windows,
                       const ClassList& classes,
                       const std::optional<nlohmann::ordered_json>& header);
std::vector<GtInstance> read_annotations(const std::string& path, const ClassList& classes);

// JSON-lines detections in seconds, one per line, times with six decimal
// digits. Unknown class names on read are parse errors.
void write_detections(const std::string& path, const std::vector<Detection>& detections,
                      const ClassList& classes,
                      const std::optional<nlohmann::ordered_json>& header);
std::vector<Detection> read_detections(const std::string& path, const ClassList& classes);

// Generic JSON-lines writer used for metrics logs and tables; lines must be
// complete serialized objects.
void write_jsonl(const std::string& path, const std::vector<std::string>& lines);

// Small helpers shared by the writers.
std::string json_quote(const std::string& s);
std::string format_seconds(double t);  // fixed, six decimals

}  // namespace tadet
