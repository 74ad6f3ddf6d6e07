#include "cli.hpp"

#include "relcap/io.hpp"

#include <doctest.h>
#include <nlohmann/json.hpp>

#include <filesystem>
#include <sstream>

using namespace relcap;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "relcap");
  std::ostringstream out;
  std::ostringstream err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("relcap_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

}  // namespace

TEST_CASE("usage errors exit with 2") {
  CHECK(run({}).code == cli::kUsage);
  CHECK(run({"bogus"}).code == cli::kUsage);
  CHECK(run({"gen-toy"}).code == cli::kUsage);
  CHECK(run({"train", "--data", "/nonexistent.jsonl", "--provider", "x", "--out", "y"}).code == cli::kUsage);
  CHECK(run({"train", "--data", "a", "--out", "b"}).code == cli::kUsage);
  CHECK(run({"gen-toy", "--images", "0", "--out", scratch("zero").string()}).code == cli::kUsage);
  CHECK(run({"--help"}).code == cli::kOk);
}

TEST_CASE("malformed data exits with 3") {
  const fs::path dir = scratch("bad");
  io::write_file_atomic(dir / "bad.jsonl", "{oops\n");
  io::write_file_atomic(dir / "p.json", "{}");
  const Run r = run({"train", "--data", (dir / "bad.jsonl").string(), "--provider", (dir / "p.json").string(), "--out",
                     (dir / "m.ckpt").string()});
  CHECK(r.code == cli::kData);
  CHECK(r.err.find("line 1") != std::string::npos);
  io::write_file_atomic(dir / "junk.ckpt", "not a checkpoint");
  io::write_file_atomic(dir / "empty.jsonl", "");
  CHECK(run({"eval", "--checkpoint", (dir / "junk.ckpt").string(), "--data", (dir / "empty.jsonl").string()}).code ==
        cli::kData);
}

TEST_CASE("gen-toy writes the split and is byte-stable") {
  const fs::path a = scratch("toy_a");
  const fs::path b = scratch("toy_b");
  REQUIRE(run({"gen-toy", "--images", "20", "--out", a.string()}).code == 0);
  REQUIRE(run({"gen-toy", "--images", "20", "--out", b.string()}).code == 0);
  for (const char* f : {"train.jsonl", "val.jsonl", "test.jsonl", "provider.json", "relations_raw.jsonl",
                        "attributes.jsonl", "lexicon.tsv", "manifest.json"}) {
    CAPTURE(f);
    CHECK(io::read_file(a / f) == io::read_file(b / f));
  }
  const auto manifest = nlohmann::json::parse(io::read_file(a / "manifest.json"));
  CHECK(manifest.at("split").at("train") == 16);
  CHECK(manifest.at("split").at("val") == 2);
  CHECK(manifest.at("split").at("test") == 2);
  CHECK(manifest.at("provenance").at("seed") == 7);
}

TEST_CASE("config file values apply below command-line flags") {
  const fs::path dir = scratch("config");
  io::write_file_atomic(dir / "run.toml", "[gen-toy]\nimages = 10\nseed = 3\n");
  REQUIRE(run({"--config", (dir / "run.toml").string(), "gen-toy", "--seed", "4", "--out", (dir / "o").string()}).code ==
          0);
  const auto manifest = nlohmann::json::parse(io::read_file(dir / "o" / "manifest.json"));
  CHECK(manifest.at("provenance").at("seed") == 4);
  CHECK(manifest.at("provenance").at("settings").at("toy").at("images") == 10);
}

TEST_CASE("train, eval, infer, graph and enrich end to end") {
  const fs::path dir = scratch("e2e");
  REQUIRE(run({"gen-toy", "--images", "12", "--max-objects", "3", "--out", dir.string()}).code == 0);
  const std::string data = (dir / "train.jsonl").string();
  const std::string ckpt = (dir / "m.ckpt").string();
  const Run t = run({"train", "--data", data, "--provider", (dir / "provider.json").string(), "--epochs", "2",
                     "--model", "mttsnet,rem", "--out", ckpt});
  REQUIRE(t.code == 0);
  CHECK(t.out.find("epoch 2/2") != std::string::npos);
  CHECK(fs::exists(ckpt + ".csv"));

  const Run e = run({"eval", "--checkpoint", ckpt, "--data", data, "--out", (dir / "eval.json").string()});
  REQUIRE(e.code == 0);
  CHECK(e.out.find("POS accuracy") != std::string::npos);
  const auto report = nlohmann::json::parse(io::read_file(dir / "eval.json"));
  CHECK(report.contains("provenance"));

  const std::string preds = (dir / "p.jsonl").string();
  REQUIRE(run({"infer", "--checkpoint", ckpt, "--data", data, "--min-detection", "0", "--out", preds}).code == 0);
  CHECK(fs::exists(preds + ".meta.json"));
  CHECK(run({"eval", "--predictions", preds, "--data", data}).code == 0);
  CHECK(run({"graph", "--predictions", preds}).code == cli::kUsage);  // several images
  CHECK(run({"graph", "--predictions", preds, "--image", "0", "--json", (dir / "g.json").string()}).code == 0);

  const Run en = run({"enrich", "--relations", (dir / "relations_raw.jsonl").string(), "--attributes",
                      (dir / "attributes.jsonl").string(), "--lexicon", (dir / "lexicon.tsv").string(), "--out",
                      (dir / "enriched.jsonl").string()});
  REQUIRE(en.code == 0);
  CHECK(fs::exists(dir / "enriched.jsonl.meta.json"));

  // A dataset word the checkpoint never saw is a contract violation.
  io::write_file_atomic(dir / "odd.jsonl", [&] {
    std::string s = io::read_file(data);
    const auto pos = s.find("\"the ");
    return s.replace(pos, 5, "\"zebra ");
  }());
  CHECK(run({"eval", "--checkpoint", ckpt, "--data", (dir / "odd.jsonl").string()}).code == cli::kInternal);
}
