#include "oracles.hpp"
#include "synthetic.hpp"

#include "relcap/errors.hpp"
#include "relcap/model.hpp"
#include "relcap/optim.hpp"

#include <doctest.h>

#include <algorithm>
#include <set>

using namespace relcap;

namespace {

std::set<std::string> names(const MttsNet& m) {
  std::set<std::string> out;
  for (const auto& p : m.params()) {
    const auto dot = p.name.rfind('.');
    const std::string base = p.name.substr(0, dot);
    if (p.name == "embed") {
      out.insert("embed");
    } else {
      out.insert(base);
    }
  }
  return out;
}

}  // namespace

TEST_CASE("model spec parsing") {
  const auto m = ModelConfig::from_spec("mttsnet");
  CHECK(m.mtl);
  CHECK_FALSE(m.rem);
  CHECK(m.late_fusion());
  const auto r = ModelConfig::from_spec("mttsnet,mtl,rem");
  CHECK(r.rem);
  CHECK(r.spec() == "mttsnet,rem");
  const auto t = ModelConfig::from_spec("tsnet");
  CHECK_FALSE(t.mtl);
  CHECK(ModelConfig::from_spec("subj-obj-coord,mtl").spec() == "subj-obj-coord,mtl");
  CHECK(ModelConfig::from_spec("union").stream_count() == 1);
  CHECK_THROWS_AS(ModelConfig::from_spec("resnet"), ConfigError);
  CHECK_THROWS_AS(ModelConfig::from_spec("tsnet,fast"), ConfigError);
  ModelConfig bad = synthetic::small_config("union,rem");
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  const auto back = ModelConfig::from_json(synthetic::small_config("union-coord,mtl").to_json());
  CHECK(back.spec() == "union-coord,mtl");
  CHECK(back.hidden == 8);
}

TEST_CASE("variant parameter inventories") {
  Rng rng(1);
  auto inventory = [&](const std::string& spec) { return names(MttsNet(synthetic::small_config(spec), rng)); };
  const std::set<std::string> rpn = {"rpn.fc", "rpn.det", "rpn.box"};
  auto with = [&](std::set<std::string> s) {
    s.insert(rpn.begin(), rpn.end());
    s.insert({"embed", "head.word", "head.pos"});
    return s;
  };
  CHECK(inventory("union") == with({"enc.union", "enc.union_code", "lstm.single"}));
  CHECK(inventory("direct-union") == with({"enc.union", "enc.union_code", "lstm.single"}));
  CHECK(inventory("union-coord") == with({"enc.union", "enc.union_code", "enc.geo", "lstm.single"}));
  CHECK(inventory("subj-obj") == with({"enc.fc1", "enc.subj", "enc.obj", "lstm.single"}));
  CHECK(inventory("subj-obj-coord") ==
        with({"enc.fc1", "enc.subj", "enc.obj", "enc.geo", "enc.coord_code", "lstm.single"}));
  CHECK(inventory("union-union-union") ==
        with({"enc.union", "enc.union_code", "lstm.subj", "lstm.pred", "lstm.obj"}));
  const auto ts = with({"enc.fc1", "enc.subj", "enc.obj", "enc.geo", "enc.union", "enc.union_code", "lstm.subj",
                        "lstm.pred", "lstm.obj"});
  CHECK(inventory("tsnet") == ts);
  CHECK(inventory("mttsnet") == ts);
  auto rem = ts;
  rem.insert("rem");
  CHECK(inventory("mttsnet,rem") == rem);
}

TEST_CASE("variants share the proposal network initialization") {
  Rng a(5);
  Rng b(5);
  MttsNet union_model(synthetic::small_config("union"), a);
  MttsNet full(synthetic::small_config("mttsnet,rem"), b);
  for (const char* n : {"rpn.fc.W", "rpn.det.W", "rpn.box.W"}) {
    CHECK(union_model.params().at(n).value == full.params().at(n).value);
  }
}

TEST_CASE("lstm step matches a scalar recurrence") {
  Rng rng(2);
  ad::Graph g;
  const Tensor x = synthetic::uniform(3, 5, rng);
  const Tensor h = synthetic::uniform(3, 4, rng);
  const Tensor c = synthetic::uniform(3, 4, rng);
  const Tensor wx = synthetic::uniform(5, 16, rng);
  const Tensor wh = synthetic::uniform(4, 16, rng);
  const Tensor b = synthetic::uniform(1, 16, rng);
  const auto [h2, c2] = lstm_step(g.constant(x), g.constant(h), g.constant(c), g.constant(wx), g.constant(wh),
                                  g.constant(b));
  const auto [rh, rc] = oracle::lstm_reference(x, h, c, wx, wh, b);
  CHECK((h2.value() - rh).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((c2.value() - rc).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("relational embedding matches the reference and its properties") {
  Rng rng(3);
  MttsNet model(synthetic::small_config("mttsnet,rem"), rng);
  const auto& p = model.params();
  const Tensor x = synthetic::uniform(5, 16, rng);
  ad::Graph g(false);
  const Tensor z = model.rem_forward(g, g.constant(x)).value();
  const Tensor ref = oracle::rem_reference(x, p.at("rem.Wa").value, p.at("rem.Wb").value, p.at("rem.Wx").value,
                                           p.at("rem.Wz").value);
  CHECK((z - ref).cwiseAbs().maxCoeff() < 1e-12);

  const Tensor r = model.rem_association(x);
  for (Eigen::Index i = 0; i < r.rows(); ++i) CHECK(r.row(i).sum() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(r.minCoeff() >= 0.0);

  // Permutation equivariance.
  Eigen::PermutationMatrix<Eigen::Dynamic> perm(5);
  perm.indices() << 3, 0, 4, 1, 2;
  const Tensor px = perm * x;
  ad::Graph g2(false);
  const Tensor pz = model.rem_forward(g2, g2.constant(px)).value();
  CHECK((pz - perm * z).cwiseAbs().maxCoeff() < 1e-12);

  for (const char* n : {"rem.Wa", "rem.Wb", "rem.Wx", "rem.Wz"}) model.params().at(n).value.setZero();
  ad::Graph g3(false);
  CHECK(model.rem_forward(g3, g3.constant(x)).value() == x);
}

TEST_CASE("full model gradients match finite differences") {
  for (const char* spec : {"mttsnet,rem", "union-coord,mtl", "subj-obj-union", "union-union-union"}) {
    CAPTURE(spec);
    Rng rng(4);
    MttsNet model(synthetic::small_config(spec), rng);
    const TrainingExample ex = synthetic::example(model.config(), 3, rng);
    auto build = [&](ad::Graph& g) { return model.total_loss(g, ex, nullptr).total; };
    const auto worst = ad::finite_diff_check(build, model.params(), {1e-5, 6, 9});
    CHECK(worst.max_relative_error < 1e-4);
  }
}

TEST_CASE("loss report adds up") {
  Rng rng(6);
  MttsNet model(synthetic::small_config("mttsnet"), rng);
  const TrainingExample ex = synthetic::example(model.config(), 3, rng);
  ad::Graph g;
  const LossNodes l = model.total_loss(g, ex, nullptr);
  const auto& r = l.report;
  CHECK(r.total == doctest::Approx(r.caption + 0.1 * r.pos + 0.1 * r.det + 0.1 * r.box).epsilon(1e-12));
  CHECK(l.total.scalar() == doctest::Approx(r.total).epsilon(1e-12));
  CHECK(r.caption > 0);
  // Without POS supervision the POS term stays out of the total.
  MttsNet plain(synthetic::small_config("tsnet"), rng);
  ad::Graph g2;
  const LossNodes lp = plain.total_loss(g2, ex, nullptr);
  CHECK(lp.report.total == doctest::Approx(lp.report.caption + 0.1 * lp.report.det + 0.1 * lp.report.box));
}

TEST_CASE("greedy decoding is deterministic and consistent with word probabilities") {
  Rng rng(7);
  MttsNet model(synthetic::small_config("mttsnet"), rng);
  const ImageInput in = synthetic::image_input(model.config(), 3, rng);
  const auto a = model.decode(in, DecodeMode::greedy, nullptr, 6);
  const auto b = model.decode(in, DecodeMode::greedy, nullptr, 6);
  REQUIRE(a.size() == in.pairs());
  for (std::size_t k = 0; k < a.size(); ++k) {
    CHECK(a[k].tokens == b[k].tokens);
    CHECK(a[k].pos.size() == a[k].tokens.size());
    CHECK(a[k].word_probs.size() == a[k].tokens.size());
    CHECK(a[k].tokens.size() <= 7);
    double prod = 1.0;
    for (double p : a[k].word_probs) prod *= p;
    CHECK(a[k].confidence == doctest::Approx(prod));
  }
  // Teacher-forcing pair 0's own greedy words reproduces their probabilities.
  const auto words = a[0].words();
  if (!words.empty()) {
    const auto probs = model.word_probabilities(in, words);
    for (std::size_t t = 0; t < words.size(); ++t) CHECK(probs[0][t] == doctest::Approx(a[0].word_probs[t]));
  }
  Rng s1(1);
  Rng s2(1);
  const auto x = model.decode(in, DecodeMode::stochastic, &s1, 6);
  const auto y = model.decode(in, DecodeMode::stochastic, &s2, 6);
  for (std::size_t k = 0; k < x.size(); ++k) CHECK(x[k].tokens == y[k].tokens);
}

TEST_CASE("importance trace is centered per stream") {
  Rng rng(8);
  MttsNet model(synthetic::small_config("mttsnet"), rng);
  const ImageInput in = synthetic::image_input(model.config(), 3, rng);
  const Tensor t = model.importance_trace(in, 1, {5, 6, 7, 8});
  CHECK(t.rows() == 4);
  CHECK(t.cols() == 3);
  for (Eigen::Index k = 0; k < 3; ++k) CHECK(std::abs(t.col(k).sum()) < 1e-12);
  MttsNet single(synthetic::small_config("union"), rng);
  CHECK_THROWS_AS(single.importance_trace(in, 0, {5}), ContractError);
}

TEST_CASE("encode rejects inputs of the wrong width") {
  Rng rng(9);
  MttsNet model(synthetic::small_config("mttsnet"), rng);
  ImageInput in = synthetic::image_input(model.config(), 3, rng);
  in.regions = Tensor::Zero(3, 4);
  ad::Graph g(false);
  CHECK_THROWS_AS(model.encode(g, in, nullptr), DimensionError);
}
