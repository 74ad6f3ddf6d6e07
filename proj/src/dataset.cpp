#include "relcap/dataset.hpp"

#include "relcap/errors.hpp"
#include "relcap/io.hpp"

#include <cmath>
#include <map>
#include <sstream>

namespace relcap {

using nlohmann::json;

namespace {

const json& field(const json& j, const char* name) {
  if (!j.is_object() || !j.contains(name)) throw DataError(std::string("missing field '") + name + "'");
  return j.at(name);
}

double number(const json& j, const char* name) {
  const json& v = field(j, name);
  if (!v.is_number()) throw DataError(std::string("field '") + name + "' must be a number");
  return v.get<double>();
}

std::string text(const json& j, const char* name) {
  const json& v = field(j, name);
  if (!v.is_string()) throw DataError(std::string("field '") + name + "' must be a string");
  return v.get<std::string>();
}

const json& array(const json& j, const char* name) {
  if (!j.contains(name)) {
    static const json empty = json::array();
    return empty;
  }
  const json& v = j.at(name);
  if (!v.is_array()) throw DataError(std::string("field '") + name + "' must be an array");
  return v;
}

void check_box(const BoundingBox& b, const RelationalRecord& r, const std::string& what) {
  constexpr double tol = 1e-9;
  if (!b.valid()) throw DataError(what + ": box " + to_string(b) + " must have positive finite extent");
  if (b.left() < -tol || b.top() < -tol || b.right() > r.width + tol || b.bottom() > r.height + tol) {
    throw DataError(what + ": box " + to_string(b) + " lies outside the image");
  }
}

json endpoint_to_json(const Endpoint& e) { return {{"name", e.name}, {"box", box_to_json(e.box)}}; }

Endpoint endpoint_from_json(const json& j) {
  try {
    return {text(j, "name"), box_from_json(field(j, "box"))};
  } catch (const DataError& e) {
    throw DataError(std::string("endpoint: ") + e.what());
  }
}

}  // namespace

json box_to_json(const BoundingBox& b) { return {{"x", b.x}, {"y", b.y}, {"w", b.w}, {"h", b.h}}; }

BoundingBox box_from_json(const json& j) {
  return {number(j, "x"), number(j, "y"), number(j, "w"), number(j, "h")};
}

json record_to_json(const RelationalRecord& r) {
  json rels = json::array();
  for (const auto& rel : r.relations) {
    rels.push_back({{"subject", endpoint_to_json(rel.subject)},
                    {"predicate", rel.predicate},
                    {"object", endpoint_to_json(rel.object)},
                    {"caption",
                     {{"subject", rel.caption.subject},
                      {"predicate", rel.caption.predicate},
                      {"object", rel.caption.object}}}});
  }
  json objs = json::array();
  for (const auto& o : r.objects) {
    objs.push_back({{"name", o.name}, {"box", box_to_json(o.box)}, {"attributes", o.attributes}});
  }
  json scene = json::array();
  for (const auto& s : r.scene) {
    scene.push_back({{"shape", s.shape}, {"color", s.color}, {"box", box_to_json(s.box)}});
  }
  return {{"schema_version", kDatasetSchemaVersion},
          {"image_id", r.image_id},
          {"width", r.width},
          {"height", r.height},
          {"relations", std::move(rels)},
          {"objects", std::move(objs)},
          {"scene", std::move(scene)}};
}

RelationalRecord record_from_json(const json& j) {
  if (!j.is_object()) throw DataError("record must be a JSON object");
  const json& version = field(j, "schema_version");
  if (!version.is_number_integer() || version.get<int>() != kDatasetSchemaVersion) {
    throw DataError("field 'schema_version': expected " + std::to_string(kDatasetSchemaVersion));
  }
  RelationalRecord r;
  const json& id = field(j, "image_id");
  if (!id.is_number_integer()) throw DataError("field 'image_id' must be an integer");
  r.image_id = id.get<int>();
  r.width = number(j, "width");
  r.height = number(j, "height");
  const json& rels = array(j, "relations");
  for (std::size_t i = 0; i < rels.size(); ++i) {
    const json& rj = rels[i];
    const std::string where = "relations[" + std::to_string(i) + "]";
    try {
      Relation rel;
      rel.subject = endpoint_from_json(field(rj, "subject"));
      rel.predicate = text(rj, "predicate");
      rel.object = endpoint_from_json(field(rj, "object"));
      const json& cj = field(rj, "caption");
      rel.caption = {text(cj, "subject"), text(cj, "predicate"), text(cj, "object")};
      r.relations.push_back(std::move(rel));
    } catch (const DataError& e) {
      throw DataError(where + "." + e.what());
    }
  }
  const json& objs = array(j, "objects");
  for (std::size_t i = 0; i < objs.size(); ++i) {
    try {
      AttributeRecord a;
      a.name = text(objs[i], "name");
      a.box = box_from_json(field(objs[i], "box"));
      for (const auto& v : array(objs[i], "attributes")) {
        if (!v.is_string()) throw DataError("attributes must be strings");
        a.attributes.push_back(v.get<std::string>());
      }
      r.objects.push_back(std::move(a));
    } catch (const DataError& e) {
      throw DataError("objects[" + std::to_string(i) + "]." + e.what());
    }
  }
  const json& scene = array(j, "scene");
  for (std::size_t i = 0; i < scene.size(); ++i) {
    try {
      r.scene.push_back({text(scene[i], "shape"), text(scene[i], "color"), box_from_json(field(scene[i], "box"))});
    } catch (const DataError& e) {
      throw DataError("scene[" + std::to_string(i) + "]." + e.what());
    }
  }
  validate_record(r);
  return r;
}

void validate_record(const RelationalRecord& r) {
  if (!(r.width > 0) || !(r.height > 0)) throw DataError("image size must be positive");
  for (std::size_t i = 0; i < r.relations.size(); ++i) {
    const auto& rel = r.relations[i];
    const std::string where = "relations[" + std::to_string(i) + "]";
    check_box(rel.subject.box, r, where + ".subject");
    check_box(rel.object.box, r, where + ".object");
    if (tokenize(rel.caption.subject).empty() || tokenize(rel.caption.predicate).empty() ||
        tokenize(rel.caption.object).empty()) {
      throw DataError(where + ".caption: every segment must be non-empty");
    }
  }
  for (std::size_t i = 0; i < r.objects.size(); ++i) {
    check_box(r.objects[i].box, r, "objects[" + std::to_string(i) + "]");
    if (r.objects[i].name.empty()) throw DataError("objects[" + std::to_string(i) + "]: name must be non-empty");
  }
  for (std::size_t i = 0; i < r.scene.size(); ++i) check_box(r.scene[i].box, r, "scene[" + std::to_string(i) + "]");
}

std::string dump_dataset(const std::vector<RelationalRecord>& records) {
  std::string out;
  for (const auto& r : records) {
    out += record_to_json(r).dump();
    out += '\n';
  }
  return out;
}

std::vector<RelationalRecord> parse_dataset(std::string_view text_in) {
  std::vector<RelationalRecord> out;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text_in.size()) {
    std::size_t nl = text_in.find('\n', pos);
    if (nl == std::string_view::npos) nl = text_in.size();
    std::string_view line = text_in.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    try {
      out.push_back(record_from_json(json::parse(line)));
    } catch (const json::exception& e) {
      throw DataError("line " + std::to_string(line_no) + ": invalid JSON: " + e.what());
    } catch (const DataError& e) {
      throw DataError("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

std::vector<RelationalRecord> load_dataset(const std::filesystem::path& path) {
  try {
    return parse_dataset(io::read_file(path));
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

void save_dataset(const std::filesystem::path& path, const std::vector<RelationalRecord>& records) {
  for (const auto& r : records) validate_record(r);
  io::write_file_atomic(path, dump_dataset(records));
}

Vocabulary build_vocab(const std::vector<RelationalRecord>& records, std::size_t min_count) {
  std::map<std::string, std::size_t> counts;
  for (const auto& r : records) {
    for (const auto& rel : r.relations) {
      for (const auto& t : rel.caption.tagged_tokens().first) ++counts[t];
    }
  }
  return Vocabulary::from_counts(counts, min_count);
}

}  // namespace relcap
