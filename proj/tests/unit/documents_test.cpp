#include <gtest/gtest.h>

#include "json.hpp"
#include "nvis/documents.hpp"
#include "nvis/model_io.hpp"
#include "test_support.hpp"

namespace nvis {
namespace {

using nlohmann::json;
using testing::Rng;

TEST(TensorDocument, RoundTripIsBitwise) {
  Rng rng(41);
  for (int i = 0; i < 20; ++i) {
    const Tensor t = testing::random_tensor(rng, {2, 3, 4}, -10, 10);
    EXPECT_TRUE(tensor_from_document(tensor_to_document(t)).bitwise_equal(t));
  }
  const auto j = json::parse(tensor_to_document(Tensor({2}, {0.5f, 1})));
  EXPECT_EQ(j["shape"], json::array({2}));
  EXPECT_EQ(j["data"], json::array({0.5, 1.0}));
}

TEST(TensorDocument, RejectsMalformed) {
  for (const char* bad : {"", "[]", R"({"shape":[2]})", R"({"shape":[-1],"data":[]})",
                          R"({"shape":[2],"data":[1,"x"]})", R"({"shape":[3],"data":[1,2]})"}) {
    EXPECT_THROW(tensor_from_document(bad), Error) << bad;
  }
}

TEST(TensorDocument, LoadInputAcceptsPngAndJson) {
  testing::TempDir dir("docs");
  const GrayImage img{2, 2, {0, 255, 51, 102}};
  const auto png = encode_png(img);
  write_file_bytes(dir.path() / "x.png", png);
  const Tensor a = load_input(dir.path() / "x.png");
  EXPECT_EQ(a.shape(), Shape({1, 2, 2}));
  EXPECT_EQ(a[1], 1.0f);
  const std::string doc = tensor_to_document(a);
  write_file_bytes(dir.path() / "x.json", as_bytes(doc));
  EXPECT_TRUE(load_input(dir.path() / "x.json").bitwise_equal(a));
  EXPECT_THROW(load_input(dir.path() / "missing.json"), Error);
}

TEST(TraceDocument, LayersFreezeAndRenders) {
  Rng rng(42);
  const Model m = testing::lenet(rng);
  const Tensor x = testing::random_input(rng, m.input_shape);
  FreezeConfig freeze;
  freeze.entries[0] = {1, 3};
  const auto trace = mutate_output(m, x, freeze);
  std::size_t calls = 0;
  const auto doc = json::parse(trace_to_document(
      m, trace,
      [&](std::size_t layer, std::size_t channel, const GrayImage& image) {
        ++calls;
        EXPECT_EQ(image.pixels.size(), trace.per_layer[layer].rank() == 3
                                           ? trace.per_layer[layer].dim(1) * trace.per_layer[layer].dim(2)
                                           : trace.per_layer[layer].size());
        return std::to_string(layer) + "/" + std::to_string(channel);
      },
      {{"model_id", "abc"}}));
  EXPECT_EQ(nlohmann::ordered_json::parse(trace_to_document(m, trace, {}, {{"model_id", "abc"}})).begin().key(),
            "model_id");
  EXPECT_EQ(doc["model_id"], "abc");
  ASSERT_EQ(doc["layers"].size(), m.layers.size());
  EXPECT_EQ(doc["layers"][0]["frozen_filters"], json::array({1, 3}));
  EXPECT_EQ(doc["layers"][1]["frozen_filters"], json::array());
  EXPECT_EQ(doc["layers"][0]["kind"], "conv2d");
  EXPECT_EQ(doc["layers"][0]["output_shape"], json::array({6, 28, 28}));
  EXPECT_EQ(doc["layers"][0]["renders"].size(), 6u);
  EXPECT_EQ(doc["layers"][0]["renders"][2], "0/2");
  EXPECT_EQ(doc["predicted_class"], trace.predicted_class);
  EXPECT_EQ(doc["probs"].size(), 10u);
  EXPECT_EQ(doc["freeze"], json::parse(freeze.to_json()));
  std::size_t expected_calls = 0;
  for (const auto& t : trace.per_layer) expected_calls += t.rank() == 3 ? t.dim(0) : 1;
  EXPECT_EQ(calls, expected_calls);
  const auto bare = json::parse(trace_to_document(m, trace));
  EXPECT_FALSE(bare["layers"][0].contains("renders"));
}

TEST(DiffDocument, MetricsAndRanking) {
  const auto r = compare_tensors(Tensor({2, 1, 2}, {0, 0, 1, 1}), Tensor({2, 1, 2}, {0, 0, 0, 0}), 4);
  std::vector<std::string> refs;
  const auto doc = json::parse(diff_to_document(r, [&](std::size_t l, std::size_t c, const GrayImage&) {
    refs.push_back(std::to_string(l) + ":" + std::to_string(c));
    return refs.back();
  }));
  EXPECT_EQ(doc["layer_index"], 4);
  EXPECT_EQ(doc["ranking"], json::array({1, 0}));
  EXPECT_EQ(doc["per_channel"].size(), 2u);
  EXPECT_EQ(doc["per_channel"][0]["l2"], 0.0);
  EXPECT_EQ(doc["heatmap_shape"], json::array({2, 1, 2}));
  EXPECT_EQ(doc["heatmap_renders"], json::array({"4:0", "4:1"}));
  EXPECT_NEAR(doc["aggregate_l2"].get<double>(), std::sqrt(2.0), 1e-6);
}

TEST(ErrorDocument, KindDetailAndViolations) {
  const auto plain = json::parse(error_to_document(ErrorKind::kNotFound, "no model 'x'"));
  EXPECT_EQ(plain, json::parse(R"({"error":{"kind":"not_found","detail":"no model 'x'"}})"));
  const ValidationError v({{2, "bad kernel"}, {std::nullopt, "empty"}});
  const auto doc = json::parse(error_to_document(v));
  EXPECT_EQ(doc["error"]["kind"], "validation");
  ASSERT_EQ(doc["error"]["violations"].size(), 2u);
  EXPECT_EQ(doc["error"]["violations"][0]["layer"], 2);
  EXPECT_EQ(doc["error"]["violations"][0]["message"], "bad kernel");
  EXPECT_TRUE(doc["error"]["violations"][1]["layer"].is_null());
  const auto generic = json::parse(error_to_document(Error(ErrorKind::kInvalidShape, "x")));
  EXPECT_FALSE(generic["error"].contains("violations"));
  EXPECT_EQ(generic["error"]["kind"], "invalid_shape");
}

TEST(LayersDocument, Fields) {
  Rng rng(43);
  const Model m = testing::lenet(rng);
  const auto doc = json::parse(layers_to_document(extract_layers(m)));
  ASSERT_EQ(doc.size(), 8u);
  EXPECT_EQ(doc[7]["kind"], "dense");
  EXPECT_EQ(doc[7]["filter_count"], 0);
  EXPECT_EQ(doc[2]["filter_count"], 16);
  EXPECT_EQ(doc[3]["index"], 3);
}

}  // namespace
}  // namespace nvis
