// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails. Tolerances and budgets are fixed below.

#include "cli.hpp"
#include "oracles.hpp"
#include "synthetic.hpp"

#include "relcap/applications.hpp"
#include "relcap/enrich.hpp"
#include "relcap/io.hpp"
#include "relcap/pipeline.hpp"

#include <nlohmann/json.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

using namespace relcap;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr double kGradTol = 1e-4;
constexpr double kFdEpsilon = 1e-5;
constexpr double kGradBudgetSec = 60;
constexpr double kRemTol = 1e-10;
constexpr double kGeoTol = 1e-12;
constexpr double kMapTol = 1e-9;
constexpr double kMeteorRelTol = 1e-15;

constexpr std::uint64_t kToySeed = 7;
constexpr std::size_t kEpochs = 30;           // learning run and every ablation run
constexpr double kLearnBudgetSec = 20 * 60;
constexpr double kMinRecall = 0.90;
constexpr double kMinPos = 0.95;
constexpr double kMinMap = 30.0;
const std::vector<std::uint64_t> kAblationSeeds = {1, 2, 3};

constexpr std::size_t kMemorizeEpochs = 150;
constexpr std::size_t kRandomQueries = 200;
constexpr std::size_t kRandomObjects = 4;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass;
  std::string detail;
};

int failures = 0;

void report(int id, const std::string& name, const Outcome& o) {
  std::cout << (o.pass ? "[PASS] " : "[FAIL] ") << id << " " << name << ": " << o.detail << std::endl;
  if (!o.pass) ++failures;
}

std::string fmt(double v, int precision = 4) {
  std::ostringstream os;
  os.precision(precision);
  os << v;
  return os.str();
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("relcap_acceptance_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

int cli_run(std::vector<std::string> args) {
  args.insert(args.begin(), "relcap");
  std::ostringstream out;
  std::ostringstream err;
  const int code = cli::run(args, out, err);
  if (code != 0) std::cerr << err.str();
  return code;
}

// ------------------------------------------------------------------ 1

Outcome gradient_suite() {
  const auto t0 = Clock::now();
  ModelConfig cfg = synthetic::small_config("mttsnet,mtl,rem");
  cfg.hidden = 8;
  cfg.object_dim = 16;
  cfg.vocab_size = 20;
  Rng rng(1);
  MttsNet model(cfg, rng);
  const TrainingExample ex = synthetic::example(cfg, 4, rng);
  auto build = [&](ad::Graph& g) { return model.total_loss(g, ex, nullptr).total; };
  const auto per_param = ad::finite_diff_by_parameter(build, model.params(), {kFdEpsilon, 0, 0});
  // Group parameters by layer (name without the trailing ".W"/".b" etc.) and
  // compare the stacked gradient vectors of each group.
  struct Sums {
    double diff2 = 0, a2 = 0, n2 = 0, coord_max = 0;
  };
  std::map<std::string, Sums> groups;
  for (const auto& e : per_param) {
    const auto dot = e.name.rfind('.');
    auto& s = groups[e.name == "embed" ? e.name : e.name.substr(0, dot)];
    s.diff2 += e.diff_norm * e.diff_norm;
    s.a2 += e.analytic_norm * e.analytic_norm;
    s.n2 += e.numeric_norm * e.numeric_norm;
    s.coord_max = std::max(s.coord_max, e.max_relative_error);
  }
  double worst = 0;
  double coord_worst = 0;
  std::string worst_group;
  for (const auto& [g, s] : groups) {
    const double e = ad::vector_relative_error(std::sqrt(s.diff2), std::sqrt(s.a2), std::sqrt(s.n2));
    coord_worst = std::max(coord_worst, s.coord_max);
    if (e >= worst) {
      worst = e;
      worst_group = g;
    }
  }
  const double sec = seconds_since(t0);
  return {worst < kGradTol && sec < kGradBudgetSec,
          "max per-layer relative error " + fmt(worst, 3) + " (" + worst_group + ") over " +
              std::to_string(groups.size()) + " groups / " + std::to_string(model.params().scalar_count()) +
              " coordinates, tol " + fmt(kGradTol) + ", eps " + fmt(kFdEpsilon) + "; worst single coordinate " +
              fmt(coord_worst, 3) + "; " + fmt(sec, 3) + " s (budget " + fmt(kGradBudgetSec) + " s)"};
}

// ------------------------------------------------------------------ 2

Outcome rem_properties() {
  Rng rng(2);
  bool identity = true;
  double worst = 0;
  for (int trial = 0; trial < 100; ++trial) {
    ModelConfig cfg = synthetic::small_config("mttsnet,rem");
    cfg.object_dim = 4 + rng.uniform_index(12);
    cfg.rem_dim = 2 + rng.uniform_index(8);
    Rng init(static_cast<std::uint64_t>(trial) + 100);
    MttsNet model(cfg, init);
    const auto b = static_cast<Eigen::Index>(2 + rng.uniform_index(8));
    const Tensor x = synthetic::uniform(b, static_cast<Eigen::Index>(cfg.object_dim), rng) * 3.0;

    Eigen::PermutationMatrix<Eigen::Dynamic> perm(b);
    perm.setIdentity();
    for (Eigen::Index i = b - 1; i > 0; --i) {
      std::swap(perm.indices()[i], perm.indices()[static_cast<Eigen::Index>(rng.uniform_index(static_cast<std::size_t>(i) + 1))]);
    }
    ad::Graph g(false);
    const Tensor z = model.rem_forward(g, g.constant(x)).value();
    const Tensor zp = model.rem_forward(g, g.constant(perm * x)).value();
    worst = std::max(worst, (zp - perm * z).cwiseAbs().maxCoeff());

    for (const char* n : {"rem.Wa", "rem.Wb", "rem.Wx", "rem.Wz"}) model.params().at(n).value.setZero();
    ad::Graph g0(false);
    identity = identity && model.rem_forward(g0, g0.constant(x)).value() == x;
  }
  return {identity && worst < kRemTol, std::string("zero weights give Z = X exactly: ") + (identity ? "yes" : "no") +
                                           "; permutation deviation " + fmt(worst, 3) + " (tol " + fmt(kRemTol) +
                                           ") over 100 instances"};
}

// ------------------------------------------------------------------ 3

Outcome geometry_properties() {
  Rng rng(3);
  double worst_t = 0;
  double worst_s = 0;
  for (int i = 0; i < 1000; ++i) {
    const BoundingBox s{rng.uniform(0, 100), rng.uniform(0, 100), rng.uniform(1, 50), rng.uniform(1, 50)};
    const BoundingBox o{rng.uniform(0, 100), rng.uniform(0, 100), rng.uniform(1, 50), rng.uniform(1, 50)};
    const double dx = rng.uniform(-100, 100);
    const double dy = rng.uniform(-100, 100);
    const double k = rng.uniform(0.25, 4);
    const auto f = geometric_feature(s, o);
    const auto ft = geometric_feature(s.translated(dx, dy), o.translated(dx, dy));
    const auto fs = geometric_feature(s.scaled(k), o.scaled(k));
    for (int c = 0; c < 6; ++c) {
      worst_t = std::max(worst_t, std::abs(ft[c] - f[c]));
      worst_s = std::max(worst_s, std::abs(fs[c] - f[c]));
    }
  }
  bool identical = true;
  for (int i = 0; i < 100; ++i) {
    const BoundingBox b{rng.uniform(0, 100), rng.uniform(0, 100), rng.uniform(1, 50), rng.uniform(1, 50)};
    identical = identical && geometric_feature(b, b) == GeometricFeature{0, 0, 1, b.w / b.h, b.w / b.h, 1};
  }
  return {worst_t <= kGeoTol && worst_s <= kGeoTol && identical,
          "translation deviation " + fmt(worst_t, 3) + ", scale deviation " + fmt(worst_s, 3) + " (tol " +
              fmt(kGeoTol) + ") over 1000 pairs; identical boxes exact: " + (identical ? "yes" : "no")};
}

// ------------------------------------------------------------------ 4

Outcome metric_oracles() {
  Rng rng(4);
  MetricConfig cfg;
  double worst = 0;
  for (int i = 0; i < 50; ++i) {
    const auto f = oracle::random_map_fixture(rng);
    worst = std::max(worst, std::abs(relational_map(f.preds, f.gts, cfg) - oracle::exhaustive_map(f.preds, f.gts, cfg)));
  }
  std::ifstream in(oracle::fixture("meteor_cases.tsv"));
  std::string line;
  int cases = 0;
  int matched = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, '\t')) f.push_back(cell);
    const auto r = meteor_detail(tokenize(f[0]), tokenize(f[1]));
    const double expect = std::stod(f[4]) / std::stod(f[5]);
    ++cases;
    if (r.matches == std::stoul(f[2]) && r.chunks == std::stoul(f[3]) &&
        std::abs(r.score - expect) <= kMeteorRelTol * std::max(1.0, std::abs(expect))) {
      ++matched;
    }
  }
  return {worst < kMapTol && cases == 10 && matched == 10,
          "mAP vs exhaustive oracle max deviation " + fmt(worst, 3) + " (tol " + fmt(kMapTol) +
              ") on 50 fixtures; METEOR " + std::to_string(matched) + "/" + std::to_string(cases) +
              " hand-computed fixtures (alignment exact, score within " + fmt(kMeteorRelTol) + ")"};
}

// ------------------------------------------------------------------ 5, 6

struct ToyData {
  std::vector<RelationalRecord> train;
  std::vector<RelationalRecord> test;
  FeatureProvider provider;
};

ToyData toy_data() {
  const fs::path dir = scratch("toy");
  if (cli_run({"gen-toy", "--seed", std::to_string(kToySeed), "--images", "120", "--out", dir.string()}) != 0) {
    throw std::runtime_error("gen-toy failed");
  }
  return {load_dataset(dir / "train.jsonl"), load_dataset(dir / "test.jsonl"),
          FeatureProvider::from_json(json::parse(io::read_file(dir / "provider.json")))};
}

EvalReport train_and_eval(const ToyData& d, const std::string& spec, std::uint64_t seed, std::size_t epochs) {
  TrainConfig tc;
  tc.epochs = epochs;
  tc.seed = seed;
  TrainState st = init_training(ModelConfig::from_spec(spec), tc, build_vocab(d.train, 1), d.provider);
  const TrainingSet set(d.train, st.provider, st.vocab, st.model.config(), st.config.pipeline);
  while (st.epochs_done < st.config.epochs) train_epoch(st, set);
  return evaluate_model(st.model, st.vocab, d.test, st.provider, st.config.pipeline, MetricConfig{});
}

Outcome toy_learning(const ToyData& d) {
  const auto t0 = Clock::now();
  const EvalReport r = train_and_eval(d, "mttsnet,mtl,rem", kToySeed, kEpochs);
  const double sec = seconds_since(t0);
  const double pos = r.pos_accuracy ? r.pos_accuracy->overall : 0.0;
  const double map = r.map_percent.value_or(0.0);
  return {r.image_level_recall >= kMinRecall && pos >= kMinPos && map >= kMinMap && sec < kLearnBudgetSec,
          std::to_string(kEpochs) + " epochs: Img-Lv. recall " + fmt(r.image_level_recall) + " (>= " +
              fmt(kMinRecall) + "), POS accuracy " + fmt(pos) + " (>= " + fmt(kMinPos) + "), mAP " + fmt(map) +
              "% (>= " + fmt(kMinMap) + "); " + fmt(sec, 3) + " s (budget " + fmt(kLearnBudgetSec) + " s)"};
}

Outcome ablation(const ToyData& d) {
  const std::vector<std::string> variants = {"union", "tsnet", "mttsnet", "mttsnet,rem"};
  std::map<std::string, double> map;
  std::map<std::string, double> recall;
  for (const auto& v : variants) {
    for (std::uint64_t seed : kAblationSeeds) {
      const EvalReport r = train_and_eval(d, v, seed, kEpochs);
      map[v] += r.map_percent.value_or(0.0) / static_cast<double>(kAblationSeeds.size());
      recall[v] += r.image_level_recall / static_cast<double>(kAblationSeeds.size());
      std::cout << "       " << v << " seed " << seed << ": mAP " << fmt(r.map_percent.value_or(0.0))
                << "%, Img-Lv. recall " << fmt(r.image_level_recall) << std::endl;
    }
  }
  const bool order = map["mttsnet"] > map["tsnet"] && map["tsnet"] > map["union"];
  const bool rem = recall["mttsnet,rem"] >= recall["mttsnet"];
  return {order && rem, "mean mAP MTTSNet " + fmt(map["mttsnet"], 6) + " > TSNet " + fmt(map["tsnet"], 6) +
                            " > Union " + fmt(map["union"], 6) + ": " + (order ? "holds" : "violated") +
                            "; Img-Lv. recall +REM " + fmt(recall["mttsnet,rem"], 6) + " >= MTTSNet " +
                            fmt(recall["mttsnet"], 6) + ": " + (rem ? "holds" : "violated") + " (" +
                            std::to_string(kAblationSeeds.size()) + " seeds, " + std::to_string(kEpochs) +
                            " epochs each)"};
}

// ------------------------------------------------------------------ 7

Outcome retrieval_sanity() {
  // Memorized: a five-image world trained to convergence, every image queried.
  ToyConfig five;
  five.images = 5;
  const ToyWorld small = generate_toy_world(kToySeed, five);
  TrainConfig tc;
  tc.epochs = kMemorizeEpochs;
  tc.seed = kToySeed;
  ModelConfig mc = ModelConfig::from_spec("mttsnet,rem");
  mc.dropout = 0.0;
  TrainState st = init_training(mc, tc, build_vocab(small.records, 1), small.provider);
  const TrainingSet set(small.records, st.provider, st.vocab, st.model.config(), st.config.pipeline);
  while (st.epochs_done < st.config.epochs) train_epoch(st, set);
  RetrievalProtocol protocol;
  protocol.images = 5;
  protocol.query_images = 5;
  protocol.captions_per_image = 4;
  protocol.seeds = {1};
  protocol.ks = {1};
  const RetrievalReport memorized =
      retrieval_eval(st.model, st.vocab, small.records, st.provider, st.config.pipeline, protocol);
  const double r1 = memorized.recall_at_k.at(1);

  // Random parameters: a fresh model per protocol draw. Chance level is
  // 1/5 only when the pool images are exchangeable, so every image carries
  // the same number of objects; every proposal passes the detector.
  ToyConfig fixed;
  fixed.min_objects = fixed.max_objects = kRandomObjects;
  const ToyWorld world = generate_toy_world(kToySeed, fixed);
  const Vocabulary vocab = build_vocab(world.records, 1);
  PipelineConfig pc;
  pc.min_detection = 0.0;
  std::size_t hits = 0;
  std::size_t queries = 0;
  for (std::uint64_t s = 1; queries < kRandomQueries; ++s) {
    TrainConfig rc;
    rc.seed = 1000 + s;
    const TrainState random = init_training(ModelConfig::from_spec("mttsnet,rem"), rc, vocab, world.provider);
    protocol.seeds = {s};
    const RetrievalReport rep = retrieval_eval(random.model, random.vocab, world.records, world.provider, pc, protocol);
    for (const auto& q : rep.queries) {
      if (queries == kRandomQueries) break;
      ++queries;
      hits += q.rank == 1 ? 1 : 0;
    }
  }
  const double p = 1.0 / 5.0;
  const double rand_r1 = static_cast<double>(hits) / static_cast<double>(queries);
  const double se = std::sqrt(p * (1 - p) / static_cast<double>(queries));
  const bool ok = r1 == 1.0 && std::abs(rand_r1 - p) <= 3 * se;
  return {ok, "memorized R@1 " + fmt(r1) + " over " + std::to_string(memorized.queries.size()) +
                  " queries (need 1.0); random-parameter R@1 " + fmt(rand_r1) + " over " + std::to_string(queries) +
                  " queries, |R@1 - 0.2| = " + fmt(std::abs(rand_r1 - p), 3) + " (3 SE = " + fmt(3 * se, 3) + ")"};
}

// ------------------------------------------------------------------ 8

Outcome determinism() {
  std::vector<std::string> differing;
  auto compare = [&](const fs::path& a, const fs::path& b, const std::string& label) {
    if (!fs::exists(a) || !fs::exists(b) || io::read_file(a) != io::read_file(b)) differing.push_back(label);
  };
  const fs::path runs[2] = {scratch("det_a"), scratch("det_b")};
  for (const auto& dir : runs) {
    const std::string d = dir.string();
    bool ok = cli_run({"gen-toy", "--images", "30", "--out", d + "/toy"}) == 0;
    ok = ok && cli_run({"train", "--data", d + "/toy/train.jsonl", "--provider", d + "/toy/provider.json", "--epochs",
                        "2", "--seed", "3", "--model", "mttsnet,rem", "--out", d + "/m.ckpt", "--quiet"}) == 0;
    ok = ok && cli_run({"eval", "--checkpoint", d + "/m.ckpt", "--data", d + "/toy/test.jsonl", "--out",
                        d + "/eval.json"}) == 0;
    ok = ok && cli_run({"enrich", "--relations", d + "/toy/relations_raw.jsonl", "--attributes",
                        d + "/toy/attributes.jsonl", "--lexicon", d + "/toy/lexicon.tsv", "--seed", "5", "--out",
                        d + "/enriched.jsonl"}) == 0;
    if (!ok) return {false, "a command failed"};
  }
  std::size_t files = 0;
  for (const auto& entry : fs::recursive_directory_iterator(runs[0])) {
    if (!entry.is_regular_file()) continue;
    const fs::path rel = fs::relative(entry.path(), runs[0]);
    compare(entry.path(), runs[1] / rel, rel.string());
    ++files;
  }
  std::string detail = std::to_string(files) + " output files of gen-toy, train, eval and enrich compared";
  if (!differing.empty()) {
    detail += "; differing:";
    for (const auto& f : differing) detail += " " + f;
  } else {
    detail += ", all byte-identical";
  }
  return {differing.empty() && files > 0, detail};
}

// ------------------------------------------------------------------ 9

Outcome enrichment_conformance() {
  const json fx = json::parse(io::read_file(oracle::fixture("enrichment_cases.json")));
  const PosLexicon lexicon(fx.at("lexicon").get<std::map<std::string, std::string>>());
  const auto& rj = fx.at("relation");
  std::size_t total = 0;
  std::size_t matched = 0;
  std::set<int> steps;
  for (const auto& c : fx.at("cases")) {
    RelationalRecord rec;
    rec.image_id = c.at("image_id").get<int>();
    rec.width = rec.height = 100;
    Relation rel;
    rel.subject = {rj.at("subject").at("name"), box_from_json(rj.at("subject").at("box"))};
    rel.object = {rj.at("object").at("name"), box_from_json(rj.at("object").at("box"))};
    rel.predicate = rj.at("predicate");
    rel.caption = {rel.subject.name, rel.predicate, rel.object.name};
    rec.relations.push_back(rel);
    std::vector<RelationalRecord> attrs;
    if (c.at("has_attribute_image").get<bool>()) {
      RelationalRecord a;
      a.image_id = rec.image_id;
      a.width = a.height = 100;
      for (const auto& o : c.at("attributes")) a.objects.push_back({box_from_json(o.at("box")), o.at("name"), o.at("attributes")});
      attrs.push_back(a);
    }
    const auto out = enrich_attributes({rec}, attrs, lexicon, Rng(c.at("seed").get<std::uint64_t>()));
    const auto& cap = out[0].relations[0].caption;
    ++total;
    if (cap.subject == c.at("expected").at("subject") && cap.object == c.at("expected").at("object")) ++matched;
    for (int s : c.at("steps")) steps.insert(s);
  }
  return {total == 20 && matched == total && steps.size() == 6,
          std::to_string(matched) + "/" + std::to_string(total) + " fixture cases match, covering " +
              std::to_string(steps.size()) + "/6 steps"};
}

}  // namespace

int main(int argc, char** argv) {
  // Optional: run a subset, e.g. `relcap_acceptance 1 2 9`.
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));
  auto wanted = [&](int id) { return only.empty() || only.count(id) > 0; };
  try {
    if (wanted(1)) report(1, "gradient suite", gradient_suite());
    if (wanted(2)) report(2, "relational embedding properties", rem_properties());
    if (wanted(3)) report(3, "pair geometry properties", geometry_properties());
    if (wanted(4)) report(4, "metric oracle equivalence", metric_oracles());
    if (wanted(5) || wanted(6)) {
      const ToyData d = toy_data();
      if (wanted(5)) report(5, "toy-world learning", toy_learning(d));
      if (wanted(6)) report(6, "ablation ordering", ablation(d));
    }
    if (wanted(7)) report(7, "retrieval sanity", retrieval_sanity());
    if (wanted(8)) report(8, "determinism", determinism());
    if (wanted(9)) report(9, "enrichment conformance", enrichment_conformance());
  } catch (const std::exception& e) {
    std::cout << "[FAIL] acceptance run aborted: " << e.what() << std::endl;
    return 2;
  }
  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criterion(s) failed") << std::endl;
  return failures == 0 ? 0 : 1;
}
