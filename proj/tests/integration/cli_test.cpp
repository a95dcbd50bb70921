#include <gtest/gtest.h>

#include "json.hpp"
#include "nvis/documents.hpp"
#include "nvis/engine.hpp"
#include "nvis/model_io.hpp"
#include "test_support.hpp"

namespace nvis {
namespace {

using nlohmann::json;
using testing::Rng;
using testing::shell_quote;

std::string cli() { return shell_quote(NVIS_CLI_PATH); }

testing::CommandResult run(const std::string& args) {
  return testing::run_command(cli() + " " + args + " 2>/dev/null");
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    save_model_dir(testing::symmetric_model(), sym_dir());
    Rng rng(71);
    lenet_ = testing::lenet(rng);
    save_model_dir(lenet_, lenet_dir());
    x_ = testing::random_input(rng, lenet_.input_shape);
    write_file_bytes(path("x.json"), as_bytes(tensor_to_document(x_)));
    write_file_bytes(path("zero.json"), as_bytes(tensor_to_document(Tensor({1, 2, 2}))));
    write_file_bytes(path("empty_freeze.json"), as_bytes(R"({"freezes":[]})"));
  }
  std::string path(const std::string& name) const { return (dir_.path() / name).string(); }
  std::string q(const std::string& name) const { return shell_quote(path(name)); }
  std::string sym_dir() const { return path("sym"); }
  std::string lenet_dir() const { return path("lenet"); }

  testing::TempDir dir_{"cli"};
  Model lenet_;
  Tensor x_;
};

TEST_F(Cli, PredictSymmetricModel) {
  const auto r = run("predict " + q("sym") + " " + q("zero.json"));
  ASSERT_EQ(r.exit_code, 0) << r.out;
  const auto doc = json::parse(r.out);
  EXPECT_EQ(doc["predicted_class"], 0);
  EXPECT_EQ(doc["probs"], json::array({0.5, 0.5}));
}

TEST_F(Cli, ValidateReportsStructure) {
  const auto r = run("validate " + q("lenet"));
  ASSERT_EQ(r.exit_code, 0) << r.out;
  const auto doc = json::parse(r.out);
  EXPECT_EQ(doc["ok"], true);
  EXPECT_EQ(doc["parameter_count"], 61706);
  EXPECT_EQ(doc["layers"].size(), 8u);
}

TEST_F(Cli, PredictMatchesLibraryAndIsDeterministic) {
  const auto first = run("predict " + q("lenet") + " " + q("x.json"));
  ASSERT_EQ(first.exit_code, 0) << first.out;
  for (int i = 0; i < 3; ++i) EXPECT_EQ(run("predict " + q("lenet") + " " + q("x.json")).out, first.out);
  const auto doc = json::parse(first.out);
  const auto p = predict(lenet_, x_);
  EXPECT_EQ(doc["predicted_class"], p.label);
  const auto probs = doc["probs"].get<std::vector<float>>();
  for (std::size_t i = 0; i < probs.size(); ++i) EXPECT_EQ(probs[i], p.probs[i]);
}

TEST_F(Cli, TraceWithEmptyFreezeIsIdentical) {
  const auto plain = run("trace " + q("lenet") + " " + q("x.json"));
  const auto frozen = run("trace " + q("lenet") + " " + q("x.json") + " --freeze " + q("empty_freeze.json"));
  ASSERT_EQ(plain.exit_code, 0) << plain.out;
  EXPECT_EQ(plain.out, frozen.out);
}

TEST_F(Cli, TraceWritesRenders) {
  const auto r = run("trace " + q("lenet") + " " + q("x.json") + " --out " + q("out"));
  ASSERT_EQ(r.exit_code, 0) << r.out;
  EXPECT_TRUE(std::filesystem::exists(path("out/trace.json")));
  EXPECT_TRUE(std::filesystem::exists(path("out/layer000_ch005.png")));
  EXPECT_TRUE(std::filesystem::exists(path("out/layer007_ch000.png")));
  const Tensor png = load_input(path("out/layer000_ch000.png"));
  EXPECT_EQ(png.shape(), Shape({1, 28, 28}));
}

TEST_F(Cli, CompareSelfIsZero) {
  const auto r = run("compare " + q("lenet") + " " + q("x.json") + " " + q("x.json") + " --layer 2");
  ASSERT_EQ(r.exit_code, 0) << r.out;
  const auto doc = json::parse(r.out);
  EXPECT_EQ(doc["aggregate_l2"], 0.0);
  EXPECT_EQ(doc["per_channel"].size(), 16u);
}

TEST_F(Cli, AttackRespectsBudget) {
  const auto r = run("attack " + q("lenet") + " " + q("x.json") +
                     " --alg bim --eps 0.05 --steps 3 --step-size 0.02 --label 1 --out " + q("adv.json"));
  ASSERT_EQ(r.exit_code, 0) << r.out;
  const Tensor adv = load_input(path("adv.json"));
  ASSERT_EQ(adv.shape(), x_.shape());
  for (std::size_t i = 0; i < adv.size(); ++i) {
    EXPECT_LE(std::fabs(double(adv[i]) - x_[i]), 0.05f);
  }
  const auto doc = json::parse(r.out);
  EXPECT_LE(doc["linf"].get<double>(), 0.05f);
}

TEST_F(Cli, SaliencyShape) {
  const auto r = run("saliency " + q("lenet") + " " + q("x.json") + " --label 0 --out " + q("s.png"));
  ASSERT_EQ(r.exit_code, 0) << r.out;
  EXPECT_EQ(json::parse(r.out)["shape"], json::array({28, 28}));
  EXPECT_EQ(load_input(path("s.png")).shape(), Shape({1, 28, 28}));
}

TEST_F(Cli, ExitCodes) {
  EXPECT_EQ(run("").exit_code, 2);
  EXPECT_EQ(run("predict").exit_code, 2);
  EXPECT_EQ(run("bogus").exit_code, 2);

  // bad input shape: validation class
  auto r = run("predict " + q("lenet") + " " + q("zero.json"));
  EXPECT_EQ(r.exit_code, 3);
  EXPECT_EQ(json::parse(r.out)["error"]["kind"], "invalid_input");

  // corrupted weights: integrity
  std::filesystem::resize_file(path("sym/weights.bin"), 8);
  r = run("validate " + q("sym"));
  EXPECT_EQ(r.exit_code, 3);
  EXPECT_EQ(json::parse(r.out)["error"]["kind"], "integrity");

  // missing directory: runtime
  r = run("validate " + q("nowhere"));
  EXPECT_EQ(r.exit_code, 4);
  EXPECT_EQ(json::parse(r.out)["error"]["kind"], "io");
}

TEST_F(Cli, NonSoftmaxSaliencyIsRuntimeError) {
  Rng rng(72);
  testing::RandomModelOptions o;
  o.softmax_head = false;
  const Model m = testing::random_model(rng, o);
  save_model_dir(m, path("raw"));
  write_file_bytes(path("raw.json"), as_bytes(tensor_to_document(testing::random_input(rng, m.input_shape))));
  const auto r = run("saliency " + q("raw") + " " + q("raw.json") + " --label 0");
  EXPECT_EQ(r.exit_code, 4);
  EXPECT_EQ(json::parse(r.out)["error"]["kind"], "unsupported_model");
}

}  // namespace
}  // namespace nvis
