#include "relcap/toy_world.hpp"

#include "relcap/errors.hpp"

#include <algorithm>
#include <cmath>

namespace relcap {

using nlohmann::json;

json ToyConfig::to_json() const {
  return {{"images", images},
          {"min_objects", min_objects},
          {"max_objects", max_objects},
          {"width", width},
          {"height", height},
          {"min_size", min_size},
          {"max_size", max_size},
          {"margin", margin},
          {"inside_probability", inside_probability},
          {"shapes", shapes},
          {"colors", colors}};
}

ToyConfig ToyConfig::from_json(const json& j) {
  ToyConfig c;
  c.images = j.value("images", c.images);
  c.min_objects = j.value("min_objects", c.min_objects);
  c.max_objects = j.value("max_objects", c.max_objects);
  c.width = j.value("width", c.width);
  c.height = j.value("height", c.height);
  c.min_size = j.value("min_size", c.min_size);
  c.max_size = j.value("max_size", c.max_size);
  c.margin = j.value("margin", c.margin);
  c.inside_probability = j.value("inside_probability", c.inside_probability);
  c.shapes = j.value("shapes", c.shapes);
  c.colors = j.value("colors", c.colors);
  return c;
}

void ToyConfig::validate() const {
  if (images == 0) throw ConfigError("toy world: images must be positive");
  if (shapes.empty() || colors.empty()) throw ConfigError("toy world: shape and color inventories must be non-empty");
  if (min_objects < 2 || max_objects < min_objects) {
    throw ConfigError("toy world: need 2 <= min_objects <= max_objects");
  }
  if (!(min_size > 0) || max_size < min_size) throw ConfigError("toy world: need 0 < min_size <= max_size");
  if (!(width >= 2 * max_size) || !(height >= 2 * max_size)) {
    throw ConfigError("toy world: image must be at least twice the maximum object size");
  }
  if (inside_probability < 0 || inside_probability > 1) throw ConfigError("toy world: inside_probability in [0,1]");
}

std::string spatial_predicate(const BoundingBox& subject, const BoundingBox& object, double margin) {
  if (contains(object, subject)) return "is inside";
  if (subject.x < object.x - margin) return "is left of";
  if (subject.y < object.y - margin) return "is above";
  return "is near";
}

FeatureProvider::FeatureProvider(std::vector<std::string> shapes, std::vector<std::string> colors, double width,
                                 double height)
    : shapes_(std::move(shapes)), colors_(std::move(colors)), image_w_(width), image_h_(height) {
  if (shapes_.empty() || colors_.empty()) throw ConfigError("feature provider: empty inventory");
}

std::size_t FeatureProvider::shape_index(const std::string& s) const {
  auto it = std::find(shapes_.begin(), shapes_.end(), s);
  if (it == shapes_.end()) throw DataError("feature provider: unknown shape '" + s + "'");
  return static_cast<std::size_t>(it - shapes_.begin());
}

std::size_t FeatureProvider::color_index(const std::string& c) const {
  auto it = std::find(colors_.begin(), colors_.end(), c);
  if (it == colors_.end()) throw DataError("feature provider: unknown color '" + c + "'");
  return static_cast<std::size_t>(it - colors_.begin());
}

Tensor FeatureProvider::features(const std::vector<SceneObject>& scene, const BoundingBox& box) const {
  Tensor f = Tensor::Zero(1, static_cast<Eigen::Index>(width()));
  const auto ns = static_cast<Eigen::Index>(shapes_.size());
  const auto nc = static_cast<Eigen::Index>(colors_.size());
  const Eigen::Index stats_at = ns + nc;
  const Eigen::Index coverage_at = stats_at + 6;
  const Eigen::Index size_at = coverage_at + nc;

  std::size_t best = scene.size();
  double best_iou = 0.0;
  for (std::size_t k = 0; k < scene.size(); ++k) {
    const double v = iou(scene[k].box, box);
    if (v > best_iou) {
      best_iou = v;
      best = k;
    }
  }
  if (best < scene.size()) {
    const SceneObject& o = scene[best];
    f(0, static_cast<Eigen::Index>(shape_index(o.shape))) = 1.0;
    f(0, ns + static_cast<Eigen::Index>(color_index(o.color))) = 1.0;
    const double l = std::max(o.box.left(), box.left());
    const double r = std::min(o.box.right(), box.right());
    const double t = std::max(o.box.top(), box.top());
    const double b = std::min(o.box.bottom(), box.bottom());
    const double inter = (r - l) * (b - t);
    f(0, stats_at + 0) = inter / box.area();
    f(0, stats_at + 1) = inter / o.box.area();
    f(0, stats_at + 2) = ((l + r) / 2 - box.x) / box.w;
    f(0, stats_at + 3) = ((t + b) / 2 - box.y) / box.h;
    f(0, stats_at + 4) = (r - l) / box.w;
    f(0, stats_at + 5) = (b - t) / box.h;
  }
  for (const auto& o : scene) {
    const Eigen::Index c = coverage_at + static_cast<Eigen::Index>(color_index(o.color));
    f(0, c) = std::min(1.0, f(0, c) + intersection_area(o.box, box) / box.area());
  }
  f(0, size_at) = box.w / image_w_;
  f(0, size_at + 1) = box.h / image_h_;
  return f;
}

json FeatureProvider::to_json() const {
  return {{"kind", "toy-occupancy"},
          {"width", width()},
          {"shapes", shapes_},
          {"colors", colors_},
          {"image_width", image_w_},
          {"image_height", image_h_}};
}

FeatureProvider FeatureProvider::from_json(const json& j) {
  try {
    FeatureProvider p(j.at("shapes").get<std::vector<std::string>>(), j.at("colors").get<std::vector<std::string>>(),
                      j.at("image_width").get<double>(), j.at("image_height").get<double>());
    if (j.contains("width") && j.at("width").get<std::size_t>() != p.width()) {
      throw DataError("provider spec width disagrees with its inventories");
    }
    return p;
  } catch (const json::exception& e) {
    throw DataError(std::string("provider spec: ") + e.what());
  }
}

namespace {

BoundingBox random_box(Rng& rng, const ToyConfig& cfg) {
  const double w = rng.uniform(cfg.min_size, cfg.max_size);
  const double h = rng.uniform(cfg.min_size, cfg.max_size);
  const double x = rng.uniform(w / 2, cfg.width - w / 2);
  const double y = rng.uniform(h / 2, cfg.height - h / 2);
  return {x, y, w, h};
}

std::vector<SceneObject> place_objects(Rng& rng, const ToyConfig& cfg) {
  const std::size_t n = cfg.min_objects + rng.uniform_index(cfg.max_objects - cfg.min_objects + 1);
  std::vector<SceneObject> scene;
  std::vector<bool> has_inner;
  for (std::size_t attempt = 0; scene.size() < n && attempt < 500; ++attempt) {
    BoundingBox box;
    std::size_t container = scene.size();
    if (!scene.empty() && rng.bernoulli(cfg.inside_probability)) {
      container = rng.uniform_index(scene.size());
      const BoundingBox& c = scene[container].box;
      if (has_inner[container] || c.w < 2 * cfg.min_size || c.h < 2 * cfg.min_size) continue;
      const double w = rng.uniform(cfg.min_size * 0.6, c.w * 0.5);
      const double h = rng.uniform(cfg.min_size * 0.6, c.h * 0.5);
      const double x = rng.uniform(c.left() + w / 2 + 1, c.right() - w / 2 - 1);
      const double y = rng.uniform(c.top() + h / 2 + 1, c.bottom() - h / 2 - 1);
      box = {x, y, w, h};
    } else {
      box = random_box(rng, cfg);
    }
    bool ok = true;
    for (std::size_t k = 0; k < scene.size() && ok; ++k) {
      if (k == container) continue;
      // Keep a one-pixel gap between unrelated objects.
      const BoundingBox grown{scene[k].box.x, scene[k].box.y, scene[k].box.w + 2, scene[k].box.h + 2};
      ok = intersection_area(grown, box) == 0.0;
    }
    if (!ok) continue;
    if (container < scene.size()) has_inner[container] = true;
    SceneObject obj;
    obj.shape = cfg.shapes[rng.uniform_index(cfg.shapes.size())];
    obj.color = cfg.colors[rng.uniform_index(cfg.colors.size())];
    obj.box = box;
    scene.push_back(std::move(obj));
    has_inner.push_back(false);
  }
  return scene;
}

}  // namespace

ToyWorld generate_toy_world(std::uint64_t seed, const ToyConfig& cfg) {
  cfg.validate();
  const Rng base(seed);
  ToyWorld world{{}, FeatureProvider(cfg)};
  for (std::size_t i = 0; i < cfg.images; ++i) {
    Rng rng = base.split(i);
    RelationalRecord rec;
    rec.image_id = static_cast<int>(i);
    rec.width = cfg.width;
    rec.height = cfg.height;
    rec.scene = place_objects(rng, cfg);
    for (const auto& o : rec.scene) rec.objects.push_back({o.box, o.shape, {o.color}});
    for (std::size_t s = 0; s < rec.scene.size(); ++s) {
      for (std::size_t o = 0; o < rec.scene.size(); ++o) {
        if (s == o) continue;
        const SceneObject& so = rec.scene[s];
        const SceneObject& oo = rec.scene[o];
        Relation rel;
        rel.subject = {so.shape, so.box};
        rel.object = {oo.shape, oo.box};
        rel.predicate = spatial_predicate(so.box, oo.box, cfg.margin);
        rel.caption = {"the " + so.color + " " + so.shape, rel.predicate, "the " + oo.color + " " + oo.shape};
        rec.relations.push_back(std::move(rel));
      }
    }
    world.records.push_back(std::move(rec));
  }
  return world;
}

json ProposalConfig::to_json() const {
  return {{"jitter_per_object", jitter_per_object},
          {"center_jitter", center_jitter},
          {"scale_jitter", scale_jitter},
          {"background", background},
          {"include_ground_truth", include_ground_truth}};
}

ProposalConfig ProposalConfig::from_json(const json& j) {
  ProposalConfig c;
  c.jitter_per_object = j.value("jitter_per_object", c.jitter_per_object);
  c.center_jitter = j.value("center_jitter", c.center_jitter);
  c.scale_jitter = j.value("scale_jitter", c.scale_jitter);
  c.background = j.value("background", c.background);
  c.include_ground_truth = j.value("include_ground_truth", c.include_ground_truth);
  return c;
}

std::vector<BoundingBox> scene_boxes(const RelationalRecord& record) {
  std::vector<BoundingBox> boxes;
  for (const auto& o : record.scene) boxes.push_back(o.box);
  return boxes;
}

std::vector<RegionProposal> generate_proposals(const RelationalRecord& record, const FeatureProvider& provider,
                                               const ProposalConfig& cfg, Rng rng) {
  std::vector<BoundingBox> boxes;
  auto clip = [&](BoundingBox b) {
    const double x1 = std::clamp(b.left(), 0.0, record.width - 1.0);
    const double y1 = std::clamp(b.top(), 0.0, record.height - 1.0);
    const double x2 = std::clamp(b.right(), x1 + 1.0, record.width);
    const double y2 = std::clamp(b.bottom(), y1 + 1.0, record.height);
    return BoundingBox::from_corners(x1, y1, x2, y2);
  };
  for (const auto& o : record.scene) {
    if (cfg.include_ground_truth) boxes.push_back(o.box);
    for (std::size_t k = 0; k < cfg.jitter_per_object; ++k) {
      BoundingBox b = o.box;
      b.x += rng.uniform(-cfg.center_jitter, cfg.center_jitter) * o.box.w;
      b.y += rng.uniform(-cfg.center_jitter, cfg.center_jitter) * o.box.h;
      b.w *= std::exp(rng.uniform(-cfg.scale_jitter, cfg.scale_jitter));
      b.h *= std::exp(rng.uniform(-cfg.scale_jitter, cfg.scale_jitter));
      boxes.push_back(clip(b));
    }
  }
  const auto gt = scene_boxes(record);
  for (std::size_t k = 0; k < cfg.background; ++k) {
    for (int attempt = 0; attempt < 50; ++attempt) {
      const double w = rng.uniform(8.0, 30.0);
      const double h = rng.uniform(8.0, 30.0);
      BoundingBox b{rng.uniform(w / 2, record.width - w / 2), rng.uniform(h / 2, record.height - h / 2), w, h};
      const bool clear = std::all_of(gt.begin(), gt.end(), [&](const BoundingBox& g) { return iou(g, b) < 0.1; });
      if (clear) {
        boxes.push_back(b);
        break;
      }
    }
  }
  std::vector<RegionProposal> out;
  out.reserve(boxes.size());
  for (std::size_t k = 0; k < boxes.size(); ++k) {
    out.push_back({boxes[k], 1.0, provider.features(record.scene, boxes[k]), static_cast<int>(k)});
  }
  return out;
}

}  // namespace relcap
