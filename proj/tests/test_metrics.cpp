#include "oracles.hpp"

#include "relcap/errors.hpp"
#include "relcap/io.hpp"
#include "relcap/metrics.hpp"
#include "relcap/porter.hpp"

#include <doctest.h>

#include <fstream>
#include <sstream>

using namespace relcap;

namespace {

std::vector<std::string> words(const std::string& s) { return tokenize(s); }

RelationPrediction pred(int image, BoundingBox s, BoundingBox o, const std::string& caption, double conf) {
  RelationPrediction p;
  p.image_id = image;
  p.subject_box = s;
  p.object_box = o;
  p.tokens = words(caption);
  p.confidence = conf;
  return p;
}

GroundTruthRelation truth(int image, BoundingBox s, BoundingBox o, const std::string& caption) {
  return {image, s, o, words(caption), {}};
}

const BoundingBox A{10, 10, 10, 10};
const BoundingBox B{40, 40, 10, 10};
const BoundingBox C{70, 20, 10, 10};

}  // namespace

TEST_CASE("porter stems match the reference fixture") {
  std::ifstream in(oracle::fixture("porter_stems.tsv"));
  REQUIRE(in.good());
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto tab = line.find('\t');
    const std::string word = line.substr(0, tab);
    const std::string stem = line.substr(tab + 1);
    CAPTURE(word);
    CHECK(porter_stem(word) == stem);
    ++n;
  }
  CHECK(n > 2000);
}

TEST_CASE("porter stemmer edge inputs") {
  CHECK(porter_stem("") == "");
  CHECK(porter_stem("is") == "is");
  CHECK(porter_stem("caresses") == "caress");
  CHECK(porter_stem("ponies") == "poni");
  CHECK(porter_stem("relational") == "relat");
}

TEST_CASE("METEOR-lite matches hand-computed fixtures") {
  std::ifstream in(oracle::fixture("meteor_cases.tsv"));
  REQUIRE(in.good());
  std::string line;
  int cases = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, '\t')) f.push_back(cell);
    REQUIRE(f.size() == 6);
    CAPTURE(line);
    const auto r = meteor_detail(words(f[0]), words(f[1]));
    CHECK(r.matches == std::stoul(f[2]));
    CHECK(r.chunks == std::stoul(f[3]));
    // Alignment counts are exact; the score may differ from the rational
    // value by floating-point rounding only.
    CHECK(r.score == doctest::Approx(std::stod(f[4]) / std::stod(f[5])).epsilon(1e-15));
    ++cases;
  }
  CHECK(cases == 10);
}

TEST_CASE("METEOR-lite properties") {
  CHECK(meteor_detail({}, words("a b")).empty_input);
  CHECK(meteor_lite(words("a b"), {}) == 0.0);
  const auto r = meteor_detail(words("x y z"), words("x y z"));
  CHECK(r.precision == 1.0);
  CHECK(r.recall == 1.0);
  Rng rng(1);
  const std::vector<std::string> pool = {"the", "red", "cat", "cats", "sit", "sitting", "on", "mat"};
  for (int i = 0; i < 200; ++i) {
    std::vector<std::string> a;
    std::vector<std::string> b;
    for (std::size_t k = 0, n = 1 + rng.uniform_index(6); k < n; ++k) a.push_back(pool[rng.uniform_index(8)]);
    for (std::size_t k = 0, n = 1 + rng.uniform_index(6); k < n; ++k) b.push_back(pool[rng.uniform_index(8)]);
    const double s = meteor_lite(a, b);
    CHECK(s >= 0.0);
    CHECK(s < 1.0);
  }
}

TEST_CASE("relational mAP equals the exhaustive matching oracle") {
  Rng rng(2024);
  MetricConfig cfg;
  for (int i = 0; i < 300; ++i) {
    const auto f = oracle::random_map_fixture(rng);
    CAPTURE(i);
    CHECK(relational_map(f.preds, f.gts, cfg) == doctest::Approx(oracle::exhaustive_map(f.preds, f.gts, cfg)).epsilon(1e-12));
  }
}

TEST_CASE("relational AP worked example") {
  const std::vector<GroundTruthRelation> gts = {truth(0, A, B, "red square near blue circle"),
                                                truth(0, B, C, "blue circle above green star")};
  // Ranked: TP, FP (duplicate of a claimed GT), TP.
  const std::vector<RelationPrediction> preds = {pred(0, A, B, "red square near blue circle", 0.9),
                                                 pred(0, A, B, "red square near blue circle", 0.8),
                                                 pred(0, B, C, "blue circle above green star", 0.7)};
  // AP = (1/2)(1/1 + 2/3).
  CHECK(relational_ap(preds, gts, 0.25, 0.5) == doctest::Approx((1.0 + 2.0 / 3.0) / 2.0));
  CHECK(relational_ap(preds, gts, 1.0, 0.5) == 0.0);
  CHECK(relational_ap({}, gts, 0.0, 0.5) == 0.0);
  CHECK_THROWS_AS(relational_map(preds, {}, MetricConfig{}), DataError);
  MetricConfig empty;
  empty.iou_thresholds.clear();
  CHECK_THROWS_AS(relational_map(preds, gts, empty), ConfigError);
}

TEST_CASE("mAP is invariant to prediction order when confidences are distinct") {
  Rng rng(5);
  MetricConfig cfg;
  for (int i = 0; i < 50; ++i) {
    auto f = oracle::random_map_fixture(rng);
    for (std::size_t k = 0; k < f.preds.size(); ++k) f.preds[k].confidence = 0.1 + 0.1 * static_cast<double>(k);
    const double base = relational_map(f.preds, f.gts, cfg);
    std::reverse(f.preds.begin(), f.preds.end());
    CHECK(relational_map(f.preds, f.gts, cfg) == doctest::Approx(base).epsilon(1e-12));
  }
}

TEST_CASE("image-level recall example") {
  // Four GT captions, three of them reproduced exactly.
  std::map<int, CaptionBag> gts{{1, {words("a b c"), words("d e f"), words("g h i"), words("x y z")}}};
  std::map<int, CaptionBag> preds{{1, {words("a b c"), words("d e f"), words("g h i")}}};
  CHECK(image_level_recall(preds, gts, {0.5}) == doctest::Approx(0.75));
  // An image with no predictions counts as zero.
  gts[2] = {words("q r s")};
  CHECK(image_level_recall(preds, gts, {0.5}) == doctest::Approx(0.375));
  CHECK_THROWS_AS(image_level_recall(preds, gts, {}), ConfigError);
}

TEST_CASE("VRD phrase versus relationship recall") {
  // Boxes are off for the relationship criterion but their union fits.
  const BoundingBox s{20, 20, 20, 20};
  const BoundingBox o{60, 20, 20, 20};
  const std::vector<GroundTruthRelation> gts = {truth(0, s, o, "cat left of dog")};
  const BoundingBox s2{14, 20, 8, 20};   // IoU with s = 0.4
  const BoundingBox o2{66, 20, 8, 20};   // IoU with o = 0.4
  const std::vector<RelationPrediction> preds = {pred(0, s2, o2, "cat left of dog", 0.9)};
  MetricConfig cfg;
  CHECK(vrd_recall_at_k(preds, gts, 50, VrdMode::relationship, cfg) == 0.0);
  CHECK(vrd_recall_at_k(preds, gts, 50, VrdMode::phrase, cfg) == 1.0);
  CHECK_THROWS_AS(vrd_recall_at_k(preds, gts, 0, VrdMode::phrase, cfg), ContractError);
  // K limits the ranked list per image.
  const std::vector<RelationPrediction> two = {pred(0, A, B, "junk", 0.9), pred(0, s, o, "cat left of dog", 0.5)};
  CHECK(vrd_recall_at_k(two, gts, 1, VrdMode::relationship, cfg) == 0.0);
  CHECK(vrd_recall_at_k(two, gts, 2, VrdMode::relationship, cfg) == 1.0);
}

TEST_CASE("POS accuracy") {
  using P = PosTag;
  const std::vector<std::vector<PosTag>> truth_tags = {{P::subj, P::subj, P::pred, P::obj}, {P::subj, P::pred, P::obj}};
  const std::vector<std::vector<PosTag>> predicted = {{P::subj, P::pred, P::pred, P::obj}, {P::subj, P::pred, P::pred}};
  const auto acc = pos_accuracy(predicted, truth_tags);
  CHECK(acc.tokens == 7);
  CHECK(acc.overall == doctest::Approx(5.0 / 7.0));
  CHECK(acc.per_class[0] == doctest::Approx(2.0 / 3.0));
  CHECK(acc.per_class[1] == doctest::Approx(1.0));
  CHECK(acc.per_class[2] == doctest::Approx(0.5));
  CHECK_THROWS_AS(pos_accuracy({{P::subj}}, {{P::subj, P::obj}}), ContractError);
}

TEST_CASE("diversity and mean METEOR") {
  const std::vector<RelationPrediction> preds = {pred(0, A, B, "a b c", 0.5), pred(0, B, A, "a b d", 0.4),
                                                 pred(1, A, B, "x", 0.3)};
  const auto d = diversity_stats(preds);
  CHECK(d.words_per_img == doctest::Approx((4.0 + 1.0) / 2.0));
  CHECK(d.words_per_box == doctest::Approx((3.0 + 3.0 + 1.0) / 3.0));
  const std::vector<GroundTruthRelation> gts = {truth(0, A, B, "a b c")};
  const double m = mean_meteor(preds, gts);
  CHECK(m == doctest::Approx((meteor_lite(words("a b c"), words("a b c")) + meteor_lite(words("a b d"), words("a b c"))) / 2.0));
}

TEST_CASE("evaluation report serialization") {
  const std::vector<GroundTruthRelation> gts = {truth(0, A, B, "a b c")};
  const std::vector<RelationPrediction> preds = {pred(0, A, B, "a b c", 0.5)};
  const EvalReport with = evaluate(preds, gts, MetricConfig{}, true);
  CHECK(with.map_percent.has_value());
  CHECK(*with.map_percent == doctest::Approx(100.0));
  const auto j = evaluate(preds, gts, MetricConfig{}, false).to_json();
  CHECK(j.at("map_percent").is_null());
  CHECK(with.to_table().find("mAP") != std::string::npos);
}
