#include "cli.hpp"

#include "relcap/applications.hpp"
#include "relcap/enrich.hpp"
#include "relcap/errors.hpp"
#include "relcap/io.hpp"
#include "relcap/pipeline.hpp"
#include "relcap/version.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <filesystem>
#include <functional>
#include <iomanip>
#include <ostream>
#include <set>
#include <sstream>

namespace relcap::cli {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

json provenance(const std::string& command, std::uint64_t seed, const json& settings, const json& inputs) {
  json p = {{"tool", "relcap"},     {"version", kVersion},   {"command", command},
            {"seed", seed},         {"settings", settings},  {"inputs", inputs}};
  p["config_hash"] = io::hex64(io::fnv1a(json{{"command", command}, {"seed", seed}, {"settings", settings}}.dump()));
  return p;
}

void require_file(const fs::path& p, const std::string& role) {
  if (!fs::is_regular_file(p)) throw ConfigError(role + " '" + p.string() + "' does not exist");
}

std::string content_hash(const fs::path& p) { return io::hex64(io::fnv1a(io::read_file(p))); }

void write_json(const fs::path& p, const json& j) { io::write_file_atomic(p, j.dump(2) + "\n"); }

json read_json(const fs::path& p) {
  try {
    return json::parse(io::read_file(p));
  } catch (const json::exception& e) {
    throw DataError("'" + p.string() + "': " + e.what());
  }
}

std::vector<RelationalRecord> load_all(const std::vector<std::string>& paths, json& inputs, const std::string& role) {
  std::vector<RelationalRecord> out;
  json hashes = json::array();
  for (const auto& p : paths) {
    require_file(p, role);
    auto recs = load_dataset(p);
    out.insert(out.end(), std::make_move_iterator(recs.begin()), std::make_move_iterator(recs.end()));
    hashes.push_back(content_hash(p));
  }
  inputs[role] = hashes;
  return out;
}

TrainState load_state(const std::string& path, json& inputs) {
  require_file(path, "checkpoint");
  inputs["checkpoint"] = content_hash(path);
  return from_checkpoint(load_checkpoint(path));
}

void print_provenance(std::ostream& out, const json& prov) { out << "provenance " << prov.dump() << '\n'; }

// Dataset words the checkpoint has never seen.
void check_vocabulary(const Vocabulary& vocab, const std::vector<RelationalRecord>& records) {
  std::set<std::string> missing;
  for (const auto& r : records) {
    for (const auto& rel : r.relations) {
      for (const auto& w : rel.caption.tagged_tokens().first) {
        if (!vocab.contains(w)) missing.insert(w);
      }
    }
  }
  if (!missing.empty()) {
    std::string list;
    for (const auto& w : missing) list += (list.empty() ? "" : ", ") + w;
    throw ContractError("dataset words missing from the checkpoint vocabulary: " + list);
  }
}

struct PipelineOptions {
  std::size_t keep_after_nms = PipelineConfig{}.keep_after_nms;
  double min_confidence = PipelineConfig{}.min_confidence;
  double nms_iou = PipelineConfig{}.nms_iou;
  double min_detection = PipelineConfig{}.min_detection;

  void add(CLI::App* app) {
    app->add_option("--keep-after-nms", keep_after_nms, "Regions kept after NMS")->capture_default_str();
    app->add_option("--min-confidence", min_confidence, "Caption-confidence filter")->capture_default_str();
    app->add_option("--nms-iou", nms_iou, "NMS overlap threshold")->capture_default_str();
    app->add_option("--min-detection", min_detection, "Minimum detection probability")->capture_default_str();
  }
  PipelineConfig apply(PipelineConfig c) const {
    c.keep_after_nms = keep_after_nms;
    c.min_confidence = min_confidence;
    c.nms_iou = nms_iou;
    c.min_detection = min_detection;
    return c;
  }
};

// ---------------------------------------------------------------- gen-toy

struct GenToyOptions {
  std::uint64_t seed = 7;
  std::size_t images = 120;
  std::size_t min_objects = 2;
  std::size_t max_objects = 6;
  std::string out;
};

int gen_toy(const GenToyOptions& o, std::ostream& out) {
  ToyConfig tc;
  tc.images = o.images;
  tc.min_objects = o.min_objects;
  tc.max_objects = o.max_objects;
  tc.validate();
  const ToyWorld world = generate_toy_world(o.seed, tc);
  const std::size_t n = world.records.size();
  const std::size_t n_train = n * 8 / 10;
  const std::size_t n_val = n / 10;
  const auto begin = world.records.begin();
  const std::vector<RelationalRecord> train(begin, begin + static_cast<std::ptrdiff_t>(n_train));
  const std::vector<RelationalRecord> val(begin + static_cast<std::ptrdiff_t>(n_train),
                                          begin + static_cast<std::ptrdiff_t>(n_train + n_val));
  const std::vector<RelationalRecord> test(begin + static_cast<std::ptrdiff_t>(n_train + n_val), world.records.end());

  // Enrichment inputs: bare category-word triplets and the attribute boxes.
  std::vector<RelationalRecord> raw = world.records;
  std::vector<RelationalRecord> attributes = world.records;
  for (auto& r : raw) {
    for (auto& rel : r.relations) rel.caption = {rel.subject.name, rel.predicate, rel.object.name};
    r.objects.clear();
  }
  for (auto& r : attributes) {
    r.relations.clear();
    r.scene.clear();
  }
  PosLexicon lexicon;
  for (const auto& s : tc.shapes) lexicon.set(s, "NN");
  for (const auto& c : tc.colors) lexicon.set(c, "JJ");

  const fs::path dir = o.out;
  fs::create_directories(dir);
  json files = json::object();
  auto emit = [&](const std::string& name, const std::string& bytes, json extra) {
    io::write_file_atomic(dir / name, bytes);
    extra["fnv1a"] = io::hex64(io::fnv1a(bytes));
    files[name] = extra;
  };
  auto count_relations = [](const std::vector<RelationalRecord>& recs) {
    std::size_t k = 0;
    for (const auto& r : recs) k += r.relations.size();
    return k;
  };
  for (const auto& [name, recs] : {std::pair<std::string, const std::vector<RelationalRecord>*>{"train.jsonl", &train},
                                   {"val.jsonl", &val},
                                   {"test.jsonl", &test}}) {
    emit(name, dump_dataset(*recs), {{"images", recs->size()}, {"relations", count_relations(*recs)}});
  }
  emit("provider.json", world.provider.to_json().dump(2) + "\n", json::object());
  emit("relations_raw.jsonl", dump_dataset(raw), {{"images", raw.size()}});
  emit("attributes.jsonl", dump_dataset(attributes), {{"images", attributes.size()}});
  emit("lexicon.tsv", lexicon.dump(), {{"entries", lexicon.size()}});

  const json prov = provenance("gen-toy", o.seed, {{"toy", tc.to_json()}}, json::object());
  write_json(dir / "manifest.json", {{"provenance", prov},
                                     {"seed", o.seed},
                                     {"split", {{"train", train.size()}, {"val", val.size()}, {"test", test.size()}}},
                                     {"files", files}});
  print_provenance(out, prov);
  out << "wrote " << train.size() << "/" << val.size() << "/" << test.size() << " train/val/test images to "
      << dir.string() << '\n';
  return kOk;
}

// ---------------------------------------------------------------- train

struct TrainOptions {
  std::vector<std::string> data;
  std::string provider;
  std::string model = "mttsnet";
  std::uint64_t seed = 7;
  std::size_t epochs = 30;
  double lr = ad::AdamConfig{}.learning_rate;
  double dropout = ModelConfig{}.dropout;
  std::size_t min_count = 1;
  std::size_t max_len = PipelineConfig{}.max_len;
  std::string out;
  std::string log;
  std::string resume;
  bool quiet = false;
  CLI::Option* epochs_opt = nullptr;
};

int train(const TrainOptions& o, std::ostream& out) {
  json inputs = json::object();
  const auto records = load_all(o.data, inputs, "data");
  if (records.empty()) throw DataError("training set is empty");

  std::optional<TrainState> state;
  if (!o.resume.empty()) {
    state.emplace(load_state(o.resume, inputs));
    if (o.epochs_opt != nullptr && o.epochs_opt->count() > 0) state->config.epochs = o.epochs;
    check_vocabulary(state->vocab, records);
  } else {
    require_file(o.provider, "provider");
    const FeatureProvider provider = FeatureProvider::from_json(read_json(o.provider));
    ModelConfig mc = ModelConfig::from_spec(o.model);
    mc.dropout = o.dropout;
    TrainConfig tc;
    tc.epochs = o.epochs;
    tc.adam.learning_rate = o.lr;
    tc.seed = o.seed;
    tc.min_count = o.min_count;
    tc.pipeline.max_len = o.max_len;
    state.emplace(init_training(mc, tc, build_vocab(records, o.min_count), provider));
  }
  TrainState& st = *state;
  const json prov = provenance("train", st.config.seed,
                               {{"model", st.model.config().to_json()}, {"train", st.config.to_json()}}, inputs);
  print_provenance(out, prov);
  const TrainingSet set(records, st.provider, st.vocab, st.model.config(), st.config.pipeline);
  const std::string log_path = o.log.empty() ? o.out + ".csv" : o.log;

  auto save = [&] {
    Checkpoint ck = to_checkpoint(st);
    ck.meta["provenance"] = prov;
    save_checkpoint(o.out, ck);
    io::write_file_atomic(log_path, loss_log_csv(st.history));
  };
  if (st.epochs_done >= st.config.epochs) save();
  while (st.epochs_done < st.config.epochs) {
    const EpochRecord rec = train_epoch(st, set);
    save();
    if (!o.quiet) {
      out << "epoch " << rec.epoch << "/" << st.config.epochs << std::setprecision(6) << " L_cap=" << rec.mean.caption
          << " L_POS=" << rec.mean.pos << " L_det=" << rec.mean.det << " L_box=" << rec.mean.box
          << " total=" << rec.mean.total << '\n';
    }
  }
  out << "checkpoint " << o.out << " (" << st.model.params().scalar_count() << " parameters, "
      << st.model.params().size() << " tensors)\n";
  return kOk;
}

// ---------------------------------------------------------------- eval / infer

struct EvalOptions {
  std::string checkpoint;
  std::vector<std::string> data;
  std::string provider;
  std::string predictions;
  std::string out;
  PipelineOptions pipeline;
};

const FeatureProvider& pick_provider(const TrainState& st, const std::string& path,
                                     std::optional<FeatureProvider>& holder, json& inputs) {
  if (path.empty()) return st.provider;
  require_file(path, "provider");
  inputs["provider"] = content_hash(path);
  holder.emplace(FeatureProvider::from_json(read_json(path)));
  return *holder;
}

int eval(const EvalOptions& o, std::ostream& out) {
  json inputs = json::object();
  const auto records = load_all(o.data, inputs, "data");
  const auto gts = ground_truth_relations(records);
  MetricConfig metrics;
  metrics.keep_after_nms = o.pipeline.keep_after_nms;
  json settings = {{"metrics", metrics.to_json()}};
  EvalReport report;
  if (!o.predictions.empty()) {
    require_file(o.predictions, "predictions");
    inputs["predictions"] = content_hash(o.predictions);
    const auto preds = parse_predictions(io::read_file(o.predictions));
    report = evaluate(preds, gts, metrics, true);
    if (!o.checkpoint.empty()) {
      const TrainState st = load_state(o.checkpoint, inputs);
      check_vocabulary(st.vocab, records);
      std::optional<FeatureProvider> holder;
      const FeatureProvider& provider = pick_provider(st, o.provider, holder, inputs);
      if (st.model.config().mtl) {
        report.pos_accuracy = teacher_forced_pos_accuracy(st.model, st.vocab, records, provider);
      }
    }
  } else {
    if (o.checkpoint.empty()) throw ConfigError("eval needs --checkpoint or --predictions");
    const TrainState st = load_state(o.checkpoint, inputs);
    check_vocabulary(st.vocab, records);
    std::optional<FeatureProvider> holder;
    const FeatureProvider& provider = pick_provider(st, o.provider, holder, inputs);
    const PipelineConfig pc = o.pipeline.apply(st.config.pipeline);
    settings["pipeline"] = pc.to_json();
    settings["model"] = st.model.config().to_json();
    report = evaluate_model(st.model, st.vocab, records, provider, pc, metrics);
  }
  const json prov = provenance("eval", 0, settings, inputs);
  print_provenance(out, prov);
  json j = report.to_json();
  j["provenance"] = prov;
  if (!o.out.empty()) write_json(o.out, j);
  out << report.to_table();
  return kOk;
}

struct InferOptions {
  std::string checkpoint;
  std::vector<std::string> data;
  std::string provider;
  std::string out;
  PipelineOptions pipeline;
};

int infer_cmd(const InferOptions& o, std::ostream& out) {
  json inputs = json::object();
  const auto records = load_all(o.data, inputs, "data");
  const TrainState st = load_state(o.checkpoint, inputs);
  std::optional<FeatureProvider> holder;
  const FeatureProvider& provider = pick_provider(st, o.provider, holder, inputs);
  const PipelineConfig pc = o.pipeline.apply(st.config.pipeline);
  const auto preds = infer(st.model, st.vocab, records, provider, pc);
  const json prov = provenance("infer", pc.proposal_seed, {{"pipeline", pc.to_json()}}, inputs);
  print_provenance(out, prov);
  io::write_file_atomic(o.out, dump_predictions(preds));
  write_json(o.out + ".meta.json", {{"provenance", prov}, {"predictions", preds.size()}, {"images", records.size()}});
  out << "wrote " << preds.size() << " predictions for " << records.size() << " images to " << o.out << '\n';
  return kOk;
}

// ---------------------------------------------------------------- graph

struct GraphOptions {
  std::string predictions;
  std::optional<int> image;
  double merge_iou = kNodeMergeIou;
  std::string dot;
  std::string json_out;
};

int graph(const GraphOptions& o, std::ostream& out, std::ostream& err) {
  require_file(o.predictions, "predictions");
  const auto preds = parse_predictions(io::read_file(o.predictions));
  std::set<int> images;
  for (const auto& p : preds) images.insert(p.image_id);
  int image = 0;
  if (o.image) {
    image = *o.image;
  } else if (images.size() == 1) {
    image = *images.begin();
  } else if (images.size() > 1) {
    throw ConfigError("predictions cover " + std::to_string(images.size()) + " images; choose one with --image");
  }
  std::vector<RelationPrediction> mine;
  for (const auto& p : preds) {
    if (p.image_id == image) mine.push_back(p);
  }
  std::size_t skipped = 0;
  CaptionGraph g = build_caption_graph(mine, o.merge_iou, &skipped);
  g.image_id = image;
  const json prov = provenance("graph", 0, {{"merge_iou", o.merge_iou}, {"image", image}},
                               {{"predictions", content_hash(o.predictions)}});
  const std::string dot = export_dot(g);
  if (o.dot.empty()) {
    out << dot;
  } else {
    io::write_file_atomic(o.dot, dot);
  }
  if (!o.json_out.empty()) {
    json j = graph_to_json(g);
    j["provenance"] = prov;
    write_json(o.json_out, j);
  }
  err << "provenance " << prov.dump() << '\n';
  err << "graph: " << g.nodes.size() << " nodes, " << g.edges.size() << " edges, " << skipped << " captions skipped\n";
  return kOk;
}

// ---------------------------------------------------------------- retrieve

struct RetrieveOptions {
  std::string checkpoint;
  std::vector<std::string> data;
  std::string provider;
  std::vector<std::size_t> ks{1, 5, 10};
  std::size_t images = RetrievalProtocol{}.images;
  std::size_t query_images = RetrievalProtocol{}.query_images;
  std::size_t captions = RetrievalProtocol{}.captions_per_image;
  std::vector<std::uint64_t> seeds{1, 2, 3};
  std::string query;
  std::string out;
  PipelineOptions pipeline;
};

int retrieve(const RetrieveOptions& o, std::ostream& out) {
  json inputs = json::object();
  const auto records = load_all(o.data, inputs, "data");
  const TrainState st = load_state(o.checkpoint, inputs);
  std::optional<FeatureProvider> holder;
  const FeatureProvider& provider = pick_provider(st, o.provider, holder, inputs);
  const PipelineConfig pc = o.pipeline.apply(st.config.pipeline);
  if (!o.query.empty()) {
    const auto tokens = tokenize(o.query);
    if (tokens.empty()) throw ConfigError("query has no words");
    const auto ranked = rank_images(st.model, st.vocab, tokens, records, provider, pc);
    const json prov = provenance("retrieve", 0, {{"query", join_tokens(tokens)}, {"pipeline", pc.to_json()}}, inputs);
    print_provenance(out, prov);
    json list = json::array();
    std::size_t rank = 0;
    for (const auto& s : ranked) {
      ++rank;
      list.push_back({{"rank", rank}, {"image_id", s.image_id}, {"log_score", std::isfinite(s.log_score) ? json(s.log_score) : json(nullptr)},
                      {"score", s.score()}, {"word_probs", s.word_probs}});
      out << std::setw(4) << rank << "  image " << s.image_id << "  score " << s.score() << '\n';
    }
    if (!o.out.empty()) write_json(o.out, {{"provenance", prov}, {"ranking", list}});
    return kOk;
  }
  RetrievalProtocol protocol;
  protocol.images = o.images;
  protocol.query_images = o.query_images;
  protocol.captions_per_image = o.captions;
  protocol.seeds = o.seeds;
  protocol.ks = o.ks;
  const RetrievalReport report = retrieval_eval(st.model, st.vocab, records, provider, pc, protocol);
  const json prov = provenance("retrieve", 0, {{"protocol", protocol.to_json()}, {"pipeline", pc.to_json()}}, inputs);
  print_provenance(out, prov);
  json j = report.to_json();
  j["provenance"] = prov;
  if (!o.out.empty()) write_json(o.out, j);
  out << report.to_table();
  return kOk;
}

// ---------------------------------------------------------------- enrich

struct EnrichOptions {
  std::string relations;
  std::string attributes;
  std::string lexicon;
  std::uint64_t seed = 0;
  std::string out;
};

int enrich(const EnrichOptions& o, std::ostream& out) {
  json inputs = json::object();
  const auto relations = load_all({o.relations}, inputs, "relations");
  const auto attributes = load_all({o.attributes}, inputs, "attributes");
  require_file(o.lexicon, "lexicon");
  inputs["lexicon"] = content_hash(o.lexicon);
  const PosLexicon lexicon = PosLexicon::load(o.lexicon);
  EnrichStats stats;
  const auto enriched = enrich_attributes(relations, attributes, lexicon, Rng(o.seed), &stats);
  const json prov = provenance("enrich", o.seed, json::object(), inputs);
  print_provenance(out, prov);
  save_dataset(o.out, enriched);
  write_json(o.out + ".meta.json", {{"provenance", prov},
                                    {"endpoints", stats.endpoints},
                                    {"enriched", stats.enriched},
                                    {"fallback", stats.fallback},
                                    {"missing_lexicon", stats.missing_lexicon}});
  out << "enriched " << stats.enriched << " of " << stats.endpoints << " endpoints (" << stats.fallback
      << " took \"the\"); wrote " << o.out << '\n';
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Relational captioning toolkit", "relcap"};
  app.set_config("--config", "", "TOML file with per-command sections; command-line flags take precedence");
  app.require_subcommand(1);
  std::function<int()> action;

  GenToyOptions gen;
  auto* gen_cmd = app.add_subcommand("gen-toy", "Generate the synthetic toy dataset");
  gen_cmd->add_option("--seed", gen.seed, "World seed")->capture_default_str();
  gen_cmd->add_option("--images", gen.images, "Number of images")->capture_default_str();
  gen_cmd->add_option("--min-objects", gen.min_objects)->capture_default_str();
  gen_cmd->add_option("--max-objects", gen.max_objects)->capture_default_str();
  gen_cmd->add_option("--out", gen.out, "Output directory")->required();
  gen_cmd->callback([&] { action = [&] { return gen_toy(gen, out); }; });

  TrainOptions tr;
  auto* train_cmd = app.add_subcommand("train", "Train a captioning model");
  train_cmd->add_option("--data", tr.data, "Training dataset (JSON lines); repeatable")->required();
  train_cmd->add_option("--provider", tr.provider, "Feature provider spec");
  train_cmd->add_option("--model", tr.model, "Variant[,mtl][,rem]")->capture_default_str();
  train_cmd->add_option("--seed", tr.seed)->capture_default_str();
  tr.epochs_opt = train_cmd->add_option("--epochs", tr.epochs, "Total epochs")->capture_default_str();
  train_cmd->add_option("--lr", tr.lr, "Adam learning rate")->capture_default_str();
  train_cmd->add_option("--dropout", tr.dropout)->capture_default_str();
  train_cmd->add_option("--min-count", tr.min_count, "Vocabulary frequency cut-off")->capture_default_str();
  train_cmd->add_option("--max-len", tr.max_len, "Caption length cap")->capture_default_str();
  train_cmd->add_option("--out", tr.out, "Checkpoint path")->required();
  train_cmd->add_option("--log", tr.log, "Loss log CSV (default: <out>.csv)");
  train_cmd->add_option("--resume", tr.resume, "Continue from this checkpoint");
  train_cmd->add_flag("--quiet", tr.quiet, "No per-epoch lines");
  train_cmd->callback([&] {
    if (tr.resume.empty() && tr.provider.empty()) throw CLI::ValidationError("--provider", "required unless --resume");
    action = [&] { return train(tr, out); };
  });

  EvalOptions ev;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a model or a predictions file");
  eval_cmd->add_option("--checkpoint", ev.checkpoint);
  eval_cmd->add_option("--data", ev.data, "Ground-truth dataset; repeatable")->required();
  eval_cmd->add_option("--provider", ev.provider, "Override the checkpoint's feature provider");
  eval_cmd->add_option("--predictions", ev.predictions, "Evaluate these predictions instead of running the model");
  eval_cmd->add_option("--out", ev.out, "Report JSON path");
  ev.pipeline.add(eval_cmd);
  eval_cmd->callback([&] { action = [&] { return eval(ev, out); }; });

  InferOptions in;
  auto* infer_sub = app.add_subcommand("infer", "Caption every detected region pair");
  infer_sub->add_option("--checkpoint", in.checkpoint)->required();
  infer_sub->add_option("--data", in.data)->required();
  infer_sub->add_option("--provider", in.provider);
  infer_sub->add_option("--out", in.out, "Predictions JSON-lines path")->required();
  in.pipeline.add(infer_sub);
  infer_sub->callback([&] { action = [&] { return infer_cmd(in, out); }; });

  GraphOptions gr;
  auto* graph_cmd = app.add_subcommand("graph", "Build a caption graph from predictions");
  graph_cmd->add_option("--predictions", gr.predictions)->required();
  graph_cmd->add_option("--image", gr.image, "Image id (needed when several are present)");
  graph_cmd->add_option("--merge-iou", gr.merge_iou, "Node merge IoU")->capture_default_str();
  graph_cmd->add_option("--dot", gr.dot, "DOT output path (default: stdout)");
  graph_cmd->add_option("--json", gr.json_out, "JSON output path");
  graph_cmd->callback([&] { action = [&] { return graph(gr, out, err); }; });

  RetrieveOptions rt;
  auto* retrieve_cmd = app.add_subcommand("retrieve", "Sentence-based image retrieval");
  retrieve_cmd->add_option("--checkpoint", rt.checkpoint)->required();
  retrieve_cmd->add_option("--data", rt.data, "Image pool; repeatable")->required();
  retrieve_cmd->add_option("--provider", rt.provider);
  retrieve_cmd->add_option("--k", rt.ks, "Recall cut-offs")->delimiter(',')->capture_default_str();
  retrieve_cmd->add_option("--images", rt.images, "Images per protocol draw")->capture_default_str();
  retrieve_cmd->add_option("--query-images", rt.query_images)->capture_default_str();
  retrieve_cmd->add_option("--captions", rt.captions, "Queries per query image")->capture_default_str();
  retrieve_cmd->add_option("--seeds", rt.seeds, "Protocol seeds")->delimiter(',')->capture_default_str();
  retrieve_cmd->add_option("--query", rt.query, "Rank the pool for this sentence instead");
  retrieve_cmd->add_option("--out", rt.out, "Report JSON path");
  rt.pipeline.add(retrieve_cmd);
  retrieve_cmd->callback([&] { action = [&] { return retrieve(rt, out); }; });

  EnrichOptions en;
  auto* enrich_cmd = app.add_subcommand("enrich", "Add attributes to relation captions");
  enrich_cmd->add_option("--relations", en.relations)->required();
  enrich_cmd->add_option("--attributes", en.attributes)->required();
  enrich_cmd->add_option("--lexicon", en.lexicon, "word<TAB>tag file")->required();
  enrich_cmd->add_option("--seed", en.seed)->capture_default_str();
  enrich_cmd->add_option("--out", en.out)->required();
  enrich_cmd->callback([&] { action = [&] { return enrich(en, out); }; });

  try {
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  }

  try {
    return action ? action() : kUsage;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kUsage;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << '\n';
    return kData;
  } catch (const ContractError& e) {
    err << "invariant violated: " << e.what() << '\n';
    return kInternal;
  } catch (const fs::filesystem_error& e) {
    err << "i/o error: " << e.what() << '\n';
    return kData;
  } catch (const std::runtime_error& e) {
    err << "error: " << e.what() << '\n';
    return kData;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return kInternal;
  }
}

}  // namespace relcap::cli
