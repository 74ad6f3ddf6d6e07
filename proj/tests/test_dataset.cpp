#include "oracles.hpp"

#include "relcap/dataset.hpp"
#include "relcap/enrich.hpp"
#include "relcap/errors.hpp"
#include "relcap/io.hpp"
#include "relcap/toy_world.hpp"

#include <doctest.h>
#include <nlohmann/json.hpp>

using namespace relcap;
using nlohmann::json;

TEST_CASE("tokenize and tag segments") {
  CHECK(tokenize("  The Red,  square. ") == std::vector<std::string>{"the", "red", "square"});
  CHECK(tokenize("").empty());
  const CaptionSegments c{"the red square", "is left of", "a circle"};
  CHECK(c.text() == "the red square is left of a circle");
  const auto [tokens, tags] = c.tagged_tokens();
  CHECK(tokens.size() == 8);
  CHECK(tags[2] == PosTag::subj);
  CHECK(tags[3] == PosTag::pred);
  CHECK(tags[5] == PosTag::pred);
  CHECK(tags[6] == PosTag::obj);
  CHECK(parse_pos_tag("PRED") == PosTag::pred);
  CHECK_FALSE(parse_pos_tag("VERB").has_value());
}

TEST_CASE("vocabulary") {
  const Vocabulary v = Vocabulary::from_counts({{"b", 3}, {"a", 3}, {"c", 5}, {"rare", 1}}, 2);
  CHECK(v.size() == Vocabulary::kReserved + 3);
  CHECK(v.words() == std::vector<std::string>{"c", "a", "b"});
  CHECK(v.id("c") == 4);
  CHECK(v.id("rare") == Vocabulary::kUnknown);
  CHECK(v.word(Vocabulary::kEnd) == "<end>");
  CHECK(v.decode({4, 5, Vocabulary::kEnd, 6}) == std::vector<std::string>{"c", "a"});
  CHECK(Vocabulary(v.words()) == v);
}

TEST_CASE("encode_caption appends the end token and truncates") {
  const Vocabulary v({"the", "cat", "sits", "on", "mat"});
  const CaptionSegments c{"the cat", "sits on", "the mat"};
  const auto e = encode_caption(c, v, 16);
  CHECK(e.tokens.size() == 7);
  CHECK(e.tokens.back() == Vocabulary::kEnd);
  CHECK(e.tags.back() == PosTag::obj);
  CHECK(e.tags.front() == PosTag::subj);
  const auto t = encode_caption(c, v, 3);
  CHECK(t.tokens.size() == 4);
  CHECK(t.tokens[2] == v.id("sits"));
  CHECK_THROWS_AS(encode_caption(CaptionSegments{}, v, 16), ContractError);
}

TEST_CASE("dataset JSON lines round trip") {
  const ToyWorld w = generate_toy_world(3, [] {
    ToyConfig c;
    c.images = 6;
    return c;
  }());
  const std::string text = dump_dataset(w.records);
  CHECK(parse_dataset(text) == w.records);
  CHECK(dump_dataset(parse_dataset(text)) == text);
}

TEST_CASE("dataset errors name the line") {
  const std::string good = dump_dataset(generate_toy_world(1, [] {
                                          ToyConfig c;
                                          c.images = 2;
                                          return c;
                                        }()).records);
  auto expect_error = [](const std::string& text, const std::string& needle) {
    try {
      parse_dataset(text);
      FAIL("no error for: " << text);
    } catch (const DataError& e) {
      CHECK(std::string(e.what()).find(needle) != std::string::npos);
    }
  };
  expect_error(good + "{not json\n", "line 3");
  json bad = json::parse(good.substr(0, good.find('\n')));
  bad["relations"][0]["subject"]["box"]["w"] = -1.0;
  expect_error(bad.dump() + "\n", "line 1");
  bad = json::parse(good.substr(0, good.find('\n')));
  bad["schema_version"] = 99;
  expect_error(bad.dump() + "\n", "schema");
  bad = json::parse(good.substr(0, good.find('\n')));
  bad.erase("image_id");
  expect_error(bad.dump() + "\n", "image_id");
  CHECK(parse_dataset("").empty());
  CHECK(parse_dataset("\n\n").empty());
}

TEST_CASE("toy world is deterministic and well formed") {
  const ToyConfig cfg;
  const ToyWorld a = generate_toy_world(7, cfg);
  const ToyWorld b = generate_toy_world(7, cfg);
  CHECK(a.records == b.records);
  CHECK(a.records.size() == 120);
  CHECK_FALSE(generate_toy_world(8, cfg).records == a.records);
  for (const auto& r : a.records) {
    CHECK_NOTHROW(validate_record(r));
    const std::size_t n = r.scene.size();
    CHECK(n >= cfg.min_objects);
    CHECK(n <= cfg.max_objects);
    CHECK(r.relations.size() == n * (n - 1));
    for (const auto& rel : r.relations) {
      CHECK(rel.predicate == spatial_predicate(rel.subject.box, rel.object.box, cfg.margin));
      CHECK(rel.caption.predicate == rel.predicate);
      CHECK(rel.caption.subject.rfind("the ", 0) == 0);
    }
  }
  ToyConfig bad;
  bad.images = 0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = ToyConfig{};
  bad.min_objects = 5;
  bad.max_objects = 3;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("spatial predicate priorities") {
  const BoundingBox big{50, 50, 40, 40};
  const BoundingBox small{45, 45, 10, 10};
  CHECK(spatial_predicate(small, big, 2) == "is inside");
  CHECK(spatial_predicate(big, small, 2) == "is near");
  CHECK(spatial_predicate({10, 90, 5, 5}, {30, 10, 5, 5}, 2) == "is left of");
  CHECK(spatial_predicate({30, 10, 5, 5}, {31, 50, 5, 5}, 2) == "is above");
  CHECK(spatial_predicate({30, 50, 5, 5}, {31, 51, 5, 5}, 2) == "is near");
}

TEST_CASE("feature provider describes the best-overlapping object") {
  const ToyConfig cfg;
  const FeatureProvider fp(cfg);
  const std::vector<SceneObject> scene = {{"circle", "blue", {30, 30, 20, 20}}, {"star", "red", {70, 70, 20, 20}}};
  const Tensor f = fp.features(scene, {70, 70, 20, 20});
  CHECK(f.cols() == static_cast<Eigen::Index>(fp.width()));
  CHECK(f(0, 3) == 1.0);  // star
  CHECK(f(0, 4 + 0) == 1.0);  // red
  CHECK(f.leftCols(4).sum() == 1.0);
  const FeatureProvider back = FeatureProvider::from_json(fp.to_json());
  CHECK(back.features(scene, {30, 30, 10, 10}) == fp.features(scene, {30, 30, 10, 10}));
}

TEST_CASE("proposals are seeded and cover the scene") {
  const ToyWorld w = generate_toy_world(7, ToyConfig{});
  const auto& r = w.records[0];
  ProposalConfig pc;
  const auto a = generate_proposals(r, w.provider, pc, Rng(3));
  const auto b = generate_proposals(r, w.provider, pc, Rng(3));
  REQUIRE(a.size() == r.scene.size() * pc.jitter_per_object + pc.background);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].box == b[i].box);
  pc.include_ground_truth = true;
  const auto c = generate_proposals(r, w.provider, pc, Rng(3));
  CHECK(c.size() == a.size() + r.scene.size());
}

TEST_CASE("lexicon parsing") {
  const PosLexicon lex = PosLexicon::parse("# comment\ntall\tJJ\n\nrunning\tVBG\r\n");
  CHECK(lex.size() == 2);
  CHECK(*lex.find("running") == "VBG");
  CHECK(lex.find("short") == nullptr);
  CHECK(PosLexicon::parse(lex.dump()).dump() == lex.dump());
  CHECK_THROWS_AS(PosLexicon::parse("tall JJ\n"), DataError);
}

TEST_CASE("enrichment fixture") {
  const json fx = json::parse(io::read_file(oracle::fixture("enrichment_cases.json")));
  std::map<std::string, std::string> entries = fx.at("lexicon").get<std::map<std::string, std::string>>();
  const PosLexicon lexicon(entries);
  const auto& rel_json = fx.at("relation");
  for (const auto& c : fx.at("cases")) {
    CAPTURE(c.at("name").get<std::string>());
    RelationalRecord rec;
    rec.image_id = c.at("image_id").get<int>();
    rec.width = rec.height = 100;
    Relation rel;
    rel.subject = {rel_json.at("subject").at("name"), box_from_json(rel_json.at("subject").at("box"))};
    rel.object = {rel_json.at("object").at("name"), box_from_json(rel_json.at("object").at("box"))};
    rel.predicate = rel_json.at("predicate");
    rel.caption = {rel.subject.name, rel.predicate, rel.object.name};
    rec.relations.push_back(rel);
    std::vector<RelationalRecord> attrs;
    if (c.at("has_attribute_image").get<bool>()) {
      RelationalRecord a;
      a.image_id = rec.image_id;
      a.width = a.height = 100;
      for (const auto& o : c.at("attributes")) {
        a.objects.push_back({box_from_json(o.at("box")), o.at("name"), o.at("attributes")});
      }
      attrs.push_back(a);
    }
    EnrichStats stats;
    const auto out = enrich_attributes({rec}, attrs, lexicon, Rng(c.at("seed").get<std::uint64_t>()), &stats);
    CHECK(out[0].relations[0].caption.subject == c.at("expected").at("subject").get<std::string>());
    CHECK(out[0].relations[0].caption.object == c.at("expected").at("object").get<std::string>());
    CHECK(out[0].relations[0].caption.predicate == "riding");
    CHECK(stats.endpoints == 2);
    CHECK(stats.enriched + stats.fallback == 2);
  }
}

TEST_CASE("enrichment reports attributes missing from the lexicon") {
  RelationalRecord rec;
  rec.image_id = 1;
  rec.width = rec.height = 100;
  const BoundingBox b{50, 50, 20, 20};
  rec.relations.push_back({{"man", b}, "on", {"horse", {20, 20, 10, 10}}, {"man", "on", "horse"}});
  RelationalRecord attrs = rec;
  attrs.relations.clear();
  attrs.objects.push_back({b, "Man", {"zzz", "Tall"}});
  EnrichStats stats;
  const auto out = enrich_attributes({rec}, {attrs}, PosLexicon(std::map<std::string, std::string>{{"tall", "JJ"}}), Rng(0), &stats);
  CHECK(out[0].relations[0].caption.subject == "tall man");
  CHECK(stats.missing_lexicon == std::vector<std::string>{"zzz"});
}
