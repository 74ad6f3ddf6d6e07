#pragma once

// Relational dataset records and their JSON-lines serialization.
//
// One image per line:
//   {"schema_version": 1, "image_id": 3, "width": 100.0, "height": 100.0,
//    "relations": [{"subject": {"name": "square", "box": {"x":..,"y":..,"w":..,"h":..}},
//                   "predicate": "is left of",
//                   "object": {"name": "circle", "box": {...}},
//                   "caption": {"subject": "the red square", "predicate": "is left of",
//                               "object": "the blue circle"}}],
//    "objects": [{"name": "square", "box": {...}, "attributes": ["red"]}],
//    "scene": [{"shape": "square", "color": "red", "box": {...}}]}
//
// "objects" and "scene" may be empty. Boxes are center format in pixels.

#include "relcap/caption.hpp"
#include "relcap/geometry.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace relcap {

inline constexpr int kDatasetSchemaVersion = 1;

struct Endpoint {
  std::string name;  ///< category word
  BoundingBox box;
  friend bool operator==(const Endpoint&, const Endpoint&) = default;
};

struct Relation {
  Endpoint subject;
  std::string predicate;
  Endpoint object;
  CaptionSegments caption;
  friend bool operator==(const Relation&, const Relation&) = default;
};

/// A box labeled with an object name and attributes.
struct AttributeRecord {
  BoundingBox box;
  std::string name;
  std::vector<std::string> attributes;
  friend bool operator==(const AttributeRecord&, const AttributeRecord&) = default;
};

struct SceneObject {
  std::string shape;
  std::string color;
  BoundingBox box;
  friend bool operator==(const SceneObject&, const SceneObject&) = default;
};

struct RelationalRecord {
  int image_id = 0;
  double width = 0;
  double height = 0;
  std::vector<Relation> relations;
  std::vector<AttributeRecord> objects;
  std::vector<SceneObject> scene;
  friend bool operator==(const RelationalRecord&, const RelationalRecord&) = default;
};

nlohmann::json box_to_json(const BoundingBox& b);
BoundingBox box_from_json(const nlohmann::json& j);

nlohmann::json record_to_json(const RelationalRecord& r);
/// Throws DataError naming the offending field.
RelationalRecord record_from_json(const nlohmann::json& j);
/// Checks geometry and caption invariants; throws DataError.
void validate_record(const RelationalRecord& r);

std::string dump_dataset(const std::vector<RelationalRecord>& records);
/// Parses JSON lines; errors carry "line N".
std::vector<RelationalRecord> parse_dataset(std::string_view text);

std::vector<RelationalRecord> load_dataset(const std::filesystem::path& path);
void save_dataset(const std::filesystem::path& path, const std::vector<RelationalRecord>& records);

Vocabulary build_vocab(const std::vector<RelationalRecord>& records, std::size_t min_count);

}  // namespace relcap
