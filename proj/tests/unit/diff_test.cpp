#include <gtest/gtest.h>

#include <cmath>

#include "nvis/diff.hpp"
#include "nvis/engine.hpp"
#include "test_support.hpp"

namespace nvis {
namespace {

using testing::Rng;

// Naive double-precision metrics on flat vectors.
double ref_l2(std::span<const float> a, std::span<const float> b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (double(a[i]) - b[i]) * (double(a[i]) - b[i]);
  return std::sqrt(s);
}

double ref_cosine(std::span<const float> a, std::span<const float> b) {
  double ab = 0, aa = 0, bb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ab += double(a[i]) * b[i];
    aa += double(a[i]) * a[i];
    bb += double(b[i]) * b[i];
  }
  if (aa == 0 && bb == 0) return 1.0;
  if (aa == 0 || bb == 0) return 0.0;
  return ab / std::sqrt(aa * bb);
}

TEST(Diff, SelfComparisonIsZero) {
  Rng rng(21);
  for (int i = 0; i < 20; ++i) {
    const Tensor a = testing::random_tensor(rng, {4, 5, 6}, -1, 1);
    const auto r = compare_tensors(a, a, 3);
    EXPECT_EQ(r.layer_index, 3u);
    EXPECT_EQ(r.aggregate_l2, 0.0f);
    EXPECT_NEAR(r.aggregate_cosine, 1.0f, 1e-6);
    ASSERT_EQ(r.per_channel.size(), 4u);
    for (const auto& c : r.per_channel) {
      EXPECT_EQ(c.l2, 0.0f);
      EXPECT_EQ(c.max_abs, 0.0f);
      EXPECT_NEAR(c.cosine, 1.0f, 1e-6);
    }
    for (float v : r.heatmap.values()) EXPECT_EQ(v, 0.0f);
  }
}

TEST(Diff, NegationHasCosineMinusOne) {
  Rng rng(22);
  const Tensor a = testing::random_tensor(rng, {3, 4, 4}, -1, 1);
  Tensor b = a;
  for (std::size_t i = 0; i < b.size(); ++i) b[i] = -b[i];
  const auto r = compare_tensors(a, b);
  EXPECT_NEAR(r.aggregate_cosine, -1.0f, 1e-6);
  for (const auto& c : r.per_channel) EXPECT_NEAR(c.cosine, -1.0f, 1e-6);
}

TEST(Diff, MatchesFlatVectorOracle) {
  Rng rng(23);
  for (int i = 0; i < 100; ++i) {
    const Shape s = i % 2 ? Shape{3, 6, 5} : Shape{17};
    const Tensor a = testing::random_tensor(rng, s, -2, 2);
    const Tensor b = testing::random_tensor(rng, s, -2, 2);
    const auto r = compare_tensors(a, b);
    EXPECT_NEAR(r.aggregate_l2, ref_l2(a.values(), b.values()), 1e-5 * (1 + ref_l2(a.values(), b.values())));
    EXPECT_NEAR(r.aggregate_cosine, ref_cosine(a.values(), b.values()), 1e-5);
    for (const auto& c : r.per_channel) {
      const auto ca = s.size() == 3 ? a.channel(c.channel) : a.values();
      const auto cb = s.size() == 3 ? b.channel(c.channel) : b.values();
      EXPECT_NEAR(c.l2, ref_l2(ca, cb), 1e-5 * (1 + ref_l2(ca, cb)));
      EXPECT_NEAR(c.cosine, ref_cosine(ca, cb), 1e-5);
      double m = 0;
      for (std::size_t k = 0; k < ca.size(); ++k) m = std::max(m, std::fabs(double(ca[k]) - cb[k]));
      EXPECT_EQ(c.max_abs, static_cast<float>(m));
    }
  }
}

TEST(Diff, SymmetricAndTriangle) {
  Rng rng(24);
  for (int i = 0; i < 50; ++i) {
    const Tensor a = testing::random_tensor(rng, {2, 3, 3}, -1, 1);
    const Tensor b = testing::random_tensor(rng, {2, 3, 3}, -1, 1);
    const Tensor c = testing::random_tensor(rng, {2, 3, 3}, -1, 1);
    const auto ab = compare_tensors(a, b), ba = compare_tensors(b, a);
    EXPECT_EQ(ab.aggregate_l2, ba.aggregate_l2);
    EXPECT_EQ(ab.aggregate_cosine, ba.aggregate_cosine);
    EXPECT_TRUE(ab.heatmap.bitwise_equal(ba.heatmap));
    const float ac = compare_tensors(a, c).aggregate_l2, cb = compare_tensors(c, b).aggregate_l2;
    EXPECT_LE(ab.aggregate_l2, ac + cb + 1e-6f);
  }
}

TEST(Diff, AggregateSquaredIsSumOfChannelSquares) {
  Rng rng(25);
  for (int i = 0; i < 30; ++i) {
    const Tensor a = testing::random_tensor(rng, {5, 4, 3}, -1, 1);
    const Tensor b = testing::random_tensor(rng, {5, 4, 3}, -1, 1);
    const auto r = compare_tensors(a, b);
    double sum = 0;
    for (const auto& c : r.per_channel) sum += double(c.l2) * c.l2;
    EXPECT_NEAR(double(r.aggregate_l2) * r.aggregate_l2, sum, 1e-4 * (1 + sum));
  }
}

TEST(Diff, RankChannels) {
  DiffReport r;
  for (std::size_t c = 0; c < 5; ++c) r.per_channel.push_back({c, 0.0f, 1.0f, 0.0f});
  r.per_channel[1].l2 = 2.0f;
  r.per_channel[3].l2 = 2.0f;
  r.per_channel[4].l2 = 5.0f;
  EXPECT_EQ(rank_channels(r, 5), (std::vector<std::size_t>{4, 1, 3, 0, 2}));
  EXPECT_EQ(rank_channels(r, 2), (std::vector<std::size_t>{4, 1}));
  EXPECT_THROW(rank_channels(r, 0), Error);
  EXPECT_THROW(rank_channels(r, 6), Error);
}

TEST(Diff, TracesAtLayer) {
  Rng rng(26);
  const Model m = testing::lenet(rng);
  const Tensor x = testing::random_input(rng, m.input_shape);
  const Tensor y = testing::random_input(rng, m.input_shape);
  const auto tx = forward(m, x), ty = forward(m, y);
  for (std::size_t l = 0; l < m.layers.size(); ++l) {
    const auto r = compare_at_layer(tx, ty, l);
    const auto direct = compare_tensors(tx.per_layer[l], ty.per_layer[l], l);
    EXPECT_EQ(r.aggregate_l2, direct.aggregate_l2);
    EXPECT_EQ(r.heatmap.shape(), tx.per_layer[l].shape());
    EXPECT_EQ(r.per_channel.size(), tx.per_layer[l].rank() == 3 ? tx.per_layer[l].dim(0) : 1u);
  }
  try {
    compare_at_layer(tx, ty, m.layers.size());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kRange);
  }
}

TEST(Diff, IncomparableTraces) {
  Rng rng(27);
  const Model a = testing::lenet(rng);
  const Model b = testing::symmetric_model();
  const auto ta = forward(a, testing::random_input(rng, a.input_shape));
  const auto tb = forward(b, testing::random_input(rng, b.input_shape));
  try {
    compare_at_layer(ta, tb, 0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kIncomparableTraces);
  }
  try {
    compare_tensors(Tensor({2, 2}), Tensor({4}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kIncomparableTraces);
  }
}

}  // namespace
}  // namespace nvis
