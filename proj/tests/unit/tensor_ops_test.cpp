#include <gtest/gtest.h>

#include <cmath>

#include "nvis/error.hpp"
#include "nvis/ops.hpp"
#include "test_support.hpp"

namespace nvis {
namespace {

using testing::random_tensor;
using testing::Rng;

void expect_values(const Tensor& t, const std::vector<float>& expected, float tol = 0.0f) {
  ASSERT_EQ(t.size(), expected.size());
  for (std::size_t i = 0; i < expected.size(); ++i) {
    EXPECT_NEAR(t[i], expected[i], tol) << "element " << i;
  }
}

template <class Fn>
void expect_error(ErrorKind kind, Fn fn) {
  try {
    fn();
    FAIL() << "expected " << to_string(kind);
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), kind) << e.what();
  }
}

// Naive double-precision references, independent of ops.cpp.
std::vector<double> naive_conv(const Tensor& x, const Tensor& w, const Tensor& b, std::size_t s,
                               bool same) {
  const long cin = x.dim(0), h = x.dim(1), wd = x.dim(2);
  const long cout = w.dim(0), kh = w.dim(2), kw = w.dim(3);
  const long top = same ? (kh - 1) / 2 : 0, left = same ? (kw - 1) / 2 : 0;
  const long oh = same ? h : (h - kh) / static_cast<long>(s) + 1;
  const long ow = same ? wd : (wd - kw) / static_cast<long>(s) + 1;
  std::vector<double> out;
  for (long co = 0; co < cout; ++co)
    for (long oy = 0; oy < oh; ++oy)
      for (long ox = 0; ox < ow; ++ox) {
        double acc = b[co];
        for (long ci = 0; ci < cin; ++ci)
          for (long ky = 0; ky < kh; ++ky)
            for (long kx = 0; kx < kw; ++kx) {
              const long iy = oy * static_cast<long>(s) + ky - top;
              const long ix = ox * static_cast<long>(s) + kx - left;
              if (iy < 0 || ix < 0 || iy >= h || ix >= wd) continue;
              acc += static_cast<double>(w[((co * cin + ci) * kh + ky) * kw + kx]) *
                     x[(ci * h + iy) * wd + ix];
            }
        out.push_back(acc);
      }
  return out;
}

TEST(Tensor, RejectsBadShapesAndNonFiniteValues) {
  expect_error(ErrorKind::kInvalidShape, [] { Tensor(Shape{2, 2}, {1, 2, 3}); });
  expect_error(ErrorKind::kInvalidShape, [] { Tensor(Shape{}); });
  expect_error(ErrorKind::kInvalidShape, [] { Tensor(Shape{2, 0}); });
  expect_error(ErrorKind::kInvalidInput, [] { Tensor(Shape{1}, {NAN}); });
  expect_error(ErrorKind::kInvalidInput, [] { Tensor(Shape{1}, {INFINITY}); });
}

TEST(Tensor, AccessorsAndReshape) {
  Tensor t({2, 2, 3}, {0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11});
  EXPECT_EQ(t.at(1, 0, 2), 8.0f);
  EXPECT_EQ(t.channel(1).size(), 6u);
  EXPECT_EQ(t.channel(1)[0], 6.0f);
  EXPECT_EQ(t.reshaped({12}).shape(), Shape({12}));
  expect_error(ErrorKind::kInvalidShape, [&] { t.reshaped({5}); });
  expect_error(ErrorKind::kRange, [&] { t.channel(2); });
  EXPECT_TRUE(Tensor({1}, {0.0f}) == Tensor({1}, {-0.0f}));
  EXPECT_FALSE(Tensor({1}, {0.0f}).bitwise_equal(Tensor({1}, {-0.0f})));
}

TEST(Conv2D, ThreeByThreeAllOnesKernel) {
  const Tensor x({1, 3, 3}, {1, 2, 3, 4, 5, 6, 7, 8, 9});
  const auto y = conv2d(x, Tensor::filled({1, 1, 2, 2}, 1.0f), Tensor({1}, {0}), {});
  EXPECT_EQ(y.shape(), Shape({1, 2, 2}));
  expect_values(y, {12, 16, 24, 28});
}

TEST(Conv2D, ZeroWeightsGiveBias) {
  Rng rng(1);
  const auto x = random_tensor(rng, {2, 5, 4}, -1, 1);
  const auto y = conv2d(x, Tensor({3, 2, 2, 3}), Tensor({3}, {0.5f, -1.0f, 2.0f}), {});
  for (std::size_t c = 0; c < 3; ++c) {
    for (float v : y.channel(c)) EXPECT_EQ(v, std::vector<float>({0.5f, -1.0f, 2.0f})[c]);
  }
}

TEST(Conv2D, SameIdentityKernel) {
  const Tensor x = Tensor::filled({1, 2, 2}, 1.0f);
  const auto y = conv2d(x, Tensor::filled({1, 1, 1, 1}, 1.0f), Tensor({1}, {0}),
                        {1, Padding::kSame});
  EXPECT_TRUE(y.bitwise_equal(x));
}

TEST(Conv2D, SamePaddingPutsExtraOnBottomRight) {
  // 2x2 kernel picks (y, x) and (y+1, x+1); the odd pad goes after.
  const Tensor x({1, 2, 2}, {1, 2, 3, 4});
  const Tensor w({1, 1, 2, 2}, {1, 0, 0, 10});
  const auto y = conv2d(x, w, Tensor({1}, {0}), {1, Padding::kSame});
  expect_values(y, {41, 2, 3, 4});
}

TEST(Conv2D, Errors) {
  const Tensor x({2, 4, 4});
  expect_error(ErrorKind::kInvalidShape,
               [&] { conv2d(x, Tensor({1, 3, 2, 2}), Tensor({1}), {}); });
  expect_error(ErrorKind::kInvalidShape,
               [&] { conv2d(x, Tensor({1, 2, 5, 1}), Tensor({1}), {}); });
  expect_error(ErrorKind::kUnsupportedConfiguration,
               [&] { conv2d(x, Tensor({1, 2, 3, 3}), Tensor({1}), {2, Padding::kSame}); });
}

TEST(MaxPool2D, Examples) {
  const Tensor x({1, 3, 3}, {1, 2, 3, 4, 5, 6, 7, 8, 9});
  expect_values(maxpool2d(x, 2, 2, 1), {5, 6, 8, 9});
  const auto y = maxpool2d(Tensor({1, 2, 2}, {1, 2, 3, 4}), 2, 2, 2);
  EXPECT_EQ(y.shape(), Shape({1, 1, 1}));
  expect_values(y, {4});
  const auto c = maxpool2d(Tensor::filled({2, 5, 5}, 0.25f), 2, 3, 2);
  for (float v : c.values()) EXPECT_EQ(v, 0.25f);
  expect_error(ErrorKind::kInvalidShape, [&] { maxpool2d(x, 4, 1, 1); });
}

TEST(Dense, Examples) {
  expect_values(dense(Tensor({2}, {3, 7}), Tensor({2, 2}, {1, 0, 0, 1}), Tensor({2})), {3, 7});
  expect_values(dense(Tensor({2}, {2, 3}), Tensor({1, 2}, {1, 1}), Tensor({1}, {1})), {6});
  expect_values(dense(Tensor({3}, {2, 3, 4}), Tensor({2, 3}), Tensor({2}, {-1, 4})), {-1, 4});
  expect_error(ErrorKind::kInvalidShape,
               [] { dense(Tensor({3}), Tensor({2, 2}), Tensor({2})); });
}

TEST(Relu, Examples) {
  expect_values(relu(Tensor({3}, {-1, 0, 2})), {0, 0, 2});
  expect_values(relu(Tensor({3}, {0.5f, 0, 2})), {0.5f, 0, 2});
  expect_values(relu(Tensor({2}, {-3, -0.1f})), {0, 0});
}

TEST(Softmax, Examples) {
  expect_values(softmax(Tensor({2}, {0, 0})), {0.5f, 0.5f});
  expect_values(softmax(Tensor::filled({4}, 7.5f)), {0.25f, 0.25f, 0.25f, 0.25f});
  expect_values(softmax(Tensor({2}, {std::log(2.0f), 0})), {2.0f / 3, 1.0f / 3}, 1e-6f);
  const auto big = softmax(Tensor({3}, {1000, 1000, -1000}));
  expect_values(big, {0.5f, 0.5f, 0.0f}, 1e-6f);
}

TEST(Metrics, Examples) {
  EXPECT_EQ(l2_norm(Tensor({2}, {3, 4})), 5.0f);
  const Tensor a({3}, {1, -2, 0.5f});
  const Tensor neg({3}, {-1, 2, -0.5f});
  EXPECT_FLOAT_EQ(cosine(a, a), 1.0f);
  EXPECT_FLOAT_EQ(cosine(a, neg), -1.0f);
  EXPECT_EQ(cosine(Tensor({3}), Tensor({3})), 1.0f);
  EXPECT_EQ(cosine(a, Tensor({3})), 0.0f);
  EXPECT_EQ(max_abs(neg), 2.0f);
  expect_values(elementwise_sub_abs(a, neg), {2, 4, 1});
  expect_error(ErrorKind::kInvalidShape, [&] { cosine(a, Tensor({2})); });
  expect_error(ErrorKind::kInvalidShape, [&] { elementwise_sub_abs(a, Tensor({1, 3})); });
}

TEST(KernelProperties, AgreeWithNaiveOracleOver200Trials) {
  Rng rng(20240601);
  std::uniform_int_distribution<int> small(1, 4), hw(3, 12), k(1, 3), st(1, 2);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t cin = small(rng), cout = small(rng), h = hw(rng), w = hw(rng);
    const bool same = trial % 2 == 0;
    const std::size_t kh = k(rng), kw = k(rng), stride = same ? 1 : st(rng);
    const auto x = random_tensor(rng, {cin, h, w}, -1, 1);
    const auto wt = random_tensor(rng, {cout, cin, kh, kw}, -1, 1);
    const auto b = random_tensor(rng, {cout}, -1, 1);
    const auto y = conv2d(x, wt, b, {stride, same ? Padding::kSame : Padding::kValid});
    const auto ref = naive_conv(x, wt, b, stride, same);
    ASSERT_EQ(y.size(), ref.size());
    for (std::size_t i = 0; i < ref.size(); ++i) ASSERT_NEAR(y[i], ref[i], 1e-5) << trial;

    const std::size_t ph = k(rng) % 2 + 1, pw = k(rng) % 2 + 1, ps = st(rng);
    const auto p = maxpool2d(x, ph, pw, ps);
    const std::size_t oh = (h - ph) / ps + 1, ow = (w - pw) / ps + 1;
    ASSERT_EQ(p.shape(), Shape({cin, oh, ow}));
    for (std::size_t c = 0; c < cin; ++c)
      for (std::size_t oy = 0; oy < oh; ++oy)
        for (std::size_t ox = 0; ox < ow; ++ox) {
          float m = -INFINITY;
          for (std::size_t a = 0; a < ph; ++a)
            for (std::size_t bb = 0; bb < pw; ++bb) m = std::max(m, x.at(c, oy * ps + a, ox * ps + bb));
          ASSERT_EQ(p.at(c, oy, ox), m);
        }

    const std::size_t n = x.size(), m = small(rng) + 1;
    const auto dw = random_tensor(rng, {m, n}, -1, 1);
    const auto db = random_tensor(rng, {m}, -1, 1);
    const auto d = dense(x.reshaped({n}), dw, db);
    for (std::size_t r = 0; r < m; ++r) {
      double acc = db[r];
      for (std::size_t j = 0; j < n; ++j) acc += static_cast<double>(dw[r * n + j]) * x[j];
      ASSERT_NEAR(d[r], acc, 1e-5);
    }
  }
}

TEST(KernelProperties, ConvIsLinearInItsInput) {
  Rng rng(77);
  for (int trial = 0; trial < 50; ++trial) {
    const auto x = random_tensor(rng, {2, 7, 6}, -1, 1);
    const auto w = random_tensor(rng, {3, 2, 3, 2}, -1, 1);
    const Tensor zero_bias({3});
    const float a = std::uniform_real_distribution<float>(-4, 4)(rng);
    Tensor ax = x;
    for (auto& v : ax.values()) v *= a;
    const auto lhs = conv2d(ax, w, zero_bias, {});
    const auto rhs = conv2d(x, w, zero_bias, {});
    for (std::size_t i = 0; i < lhs.size(); ++i) {
      const double expected = static_cast<double>(a) * rhs[i];
      EXPECT_NEAR(lhs[i], expected, 1e-5 * std::max(1.0, std::fabs(expected)));
    }
  }
}

TEST(KernelProperties, SoftmaxShiftInvariantAndNormalized) {
  Rng rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    const auto x = random_tensor(rng, {7}, -10, 10);
    const float c = std::uniform_real_distribution<float>(-20, 20)(rng);
    Tensor shifted = x;
    for (auto& v : shifted.values()) v += c;
    const auto p = softmax(x), q = softmax(shifted);
    double total = 0;
    for (std::size_t i = 0; i < p.size(); ++i) {
      EXPECT_NEAR(p[i], q[i], 1e-5);
      total += p[i];
    }
    EXPECT_NEAR(total, 1.0, 1e-6);
  }
}

}  // namespace
}  // namespace nvis
