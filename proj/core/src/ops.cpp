#include "nvis/ops.hpp"

#include <algorithm>
#include <cmath>

#include "nvis/error.hpp"

namespace nvis {

namespace {

void require_rank(const Tensor& t, std::size_t rank, const char* what) {
  if (t.rank() != rank) {
    throw Error(ErrorKind::kInvalidShape,
                std::string(what) + " must have rank " + std::to_string(rank) +
                    ", got shape " + shape_to_string(t.shape()));
  }
}

void require_same_length(std::size_t a, std::size_t b) {
  if (a != b) {
    throw Error(ErrorKind::kInvalidShape,
                "length mismatch: " + std::to_string(a) + " vs " +
                    std::to_string(b));
  }
}

void require_same_shape(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) {
    throw Error(ErrorKind::kInvalidShape,
                "shape mismatch: " + shape_to_string(a.shape()) + " vs " +
                    shape_to_string(b.shape()));
  }
}

}  // namespace

std::size_t conv_output_extent(std::size_t in, std::size_t kernel,
                               const ConvParams& params) {
  if (params.stride == 0) {
    throw Error(ErrorKind::kUnsupportedConfiguration, "stride must be >= 1");
  }
  if (params.padding == Padding::kSame) {
    if (params.stride != 1) {
      throw Error(ErrorKind::kUnsupportedConfiguration,
                  "same padding requires stride 1, got stride " +
                      std::to_string(params.stride));
    }
    return in;
  }
  if (kernel == 0 || kernel > in) {
    throw Error(ErrorKind::kInvalidShape,
                "kernel extent " + std::to_string(kernel) +
                    " does not fit input extent " + std::to_string(in));
  }
  return (in - kernel) / params.stride + 1;
}

std::size_t pool_output_extent(std::size_t in, std::size_t pool,
                               std::size_t stride) {
  if (stride == 0) {
    throw Error(ErrorKind::kInvalidShape, "pool stride must be >= 1");
  }
  if (pool == 0 || pool > in) {
    throw Error(ErrorKind::kInvalidShape,
                "pool extent " + std::to_string(pool) +
                    " larger than input extent " + std::to_string(in));
  }
  return (in - pool) / stride + 1;
}

Tensor conv2d(const Tensor& input, const Tensor& weights, const Tensor& bias,
              const ConvParams& params) {
  require_rank(input, 3, "conv2d input");
  require_rank(weights, 4, "conv2d weights");
  require_rank(bias, 1, "conv2d bias");
  const std::size_t cin = input.dim(0), h = input.dim(1), w = input.dim(2);
  const std::size_t cout = weights.dim(0), kh = weights.dim(2),
                    kw = weights.dim(3);
  if (weights.dim(1) != cin || bias.dim(0) != cout) {
    throw Error(ErrorKind::kInvalidShape,
                "conv2d shape mismatch: input " + shape_to_string(input.shape()) +
                    ", weights " + shape_to_string(weights.shape()) +
                    ", bias " + shape_to_string(bias.shape()));
  }
  const std::size_t oh = conv_output_extent(h, kh, params);
  const std::size_t ow = conv_output_extent(w, kw, params);
  const bool same = params.padding == Padding::kSame;
  // Signed offsets: with same padding the window may start above/left of
  // the input.
  const long pad_top = same ? static_cast<long>(same_pad_before(kh)) : 0;
  const long pad_left = same ? static_cast<long>(same_pad_before(kw)) : 0;
  const long stride = static_cast<long>(params.stride);

  Tensor out({cout, oh, ow});
  const auto x = input.values();
  const auto wt = weights.values();
  const auto b = bias.values();
  auto y = out.values();
  for (std::size_t co = 0; co < cout; ++co) {
    for (std::size_t oy = 0; oy < oh; ++oy) {
      for (std::size_t ox = 0; ox < ow; ++ox) {
        const long y0 = static_cast<long>(oy) * stride - pad_top;
        const long x0 = static_cast<long>(ox) * stride - pad_left;
        float acc = 0.0f;
        for (std::size_t ci = 0; ci < cin; ++ci) {
          for (std::size_t ky = 0; ky < kh; ++ky) {
            const long iy = y0 + static_cast<long>(ky);
            if (iy < 0 || iy >= static_cast<long>(h)) continue;
            for (std::size_t kx = 0; kx < kw; ++kx) {
              const long ix = x0 + static_cast<long>(kx);
              if (ix < 0 || ix >= static_cast<long>(w)) continue;
              acc += wt[((co * cin + ci) * kh + ky) * kw + kx] *
                     x[(ci * h + static_cast<std::size_t>(iy)) * w +
                       static_cast<std::size_t>(ix)];
            }
          }
        }
        y[(co * oh + oy) * ow + ox] = acc + b[co];
      }
    }
  }
  return out;
}

Tensor maxpool2d(const Tensor& input, std::size_t pool_h, std::size_t pool_w,
                 std::size_t stride) {
  require_rank(input, 3, "maxpool2d input");
  const std::size_t c = input.dim(0), h = input.dim(1), w = input.dim(2);
  const std::size_t oh = pool_output_extent(h, pool_h, stride);
  const std::size_t ow = pool_output_extent(w, pool_w, stride);
  Tensor out({c, oh, ow});
  auto y = out.values();
  for (std::size_t ch = 0; ch < c; ++ch) {
    for (std::size_t oy = 0; oy < oh; ++oy) {
      for (std::size_t ox = 0; ox < ow; ++ox) {
        float best = input.at(ch, oy * stride, ox * stride);
        for (std::size_t py = 0; py < pool_h; ++py) {
          for (std::size_t px = 0; px < pool_w; ++px) {
            best = std::max(best, input.at(ch, oy * stride + py,
                                           ox * stride + px));
          }
        }
        y[(ch * oh + oy) * ow + ox] = best;
      }
    }
  }
  return out;
}

Tensor dense(const Tensor& input, const Tensor& weights, const Tensor& bias) {
  require_rank(input, 1, "dense input");
  require_rank(weights, 2, "dense weights");
  require_rank(bias, 1, "dense bias");
  const std::size_t m = weights.dim(0), n = weights.dim(1);
  if (input.dim(0) != n || bias.dim(0) != m) {
    throw Error(ErrorKind::kInvalidShape,
                "dense shape mismatch: input " + shape_to_string(input.shape()) +
                    ", weights " + shape_to_string(weights.shape()) +
                    ", bias " + shape_to_string(bias.shape()));
  }
  Tensor out({m});
  const auto x = input.values();
  const auto wt = weights.values();
  for (std::size_t row = 0; row < m; ++row) {
    float acc = 0.0f;
    for (std::size_t col = 0; col < n; ++col) {
      acc += wt[row * n + col] * x[col];
    }
    out[row] = acc + bias[row];
  }
  return out;
}

Tensor relu(const Tensor& input) {
  Tensor out = input;
  for (auto& v : out.values()) v = v > 0.0f ? v : 0.0f;
  return out;
}

Tensor softmax(const Tensor& input) {
  require_rank(input, 1, "softmax input");
  const auto x = input.values();
  const float peak = *std::max_element(x.begin(), x.end());
  Tensor out(input.shape());
  float total = 0.0f;
  for (std::size_t i = 0; i < x.size(); ++i) {
    out[i] = std::exp(x[i] - peak);
    total += out[i];
  }
  for (auto& v : out.values()) v /= total;
  return out;
}

Tensor elementwise_sub_abs(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b);
  Tensor out(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = std::fabs(a[i] - b[i]);
  return out;
}

float l2_norm(std::span<const float> v) {
  double sum = 0.0;
  for (float x : v) sum += static_cast<double>(x) * x;
  return static_cast<float>(std::sqrt(sum));
}

float max_abs(std::span<const float> v) {
  float m = 0.0f;
  for (float x : v) m = std::max(m, std::fabs(x));
  return m;
}

float l2_distance(std::span<const float> a, std::span<const float> b) {
  require_same_length(a.size(), b.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = static_cast<double>(a[i]) - b[i];
    sum += d * d;
  }
  return static_cast<float>(std::sqrt(sum));
}

float max_abs_difference(std::span<const float> a, std::span<const float> b) {
  require_same_length(a.size(), b.size());
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    m = std::max(m, std::fabs(static_cast<double>(a[i]) - b[i]));
  }
  return static_cast<float>(m);
}

float cosine(std::span<const float> a, std::span<const float> b) {
  require_same_length(a.size(), b.size());
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += static_cast<double>(a[i]) * b[i];
    na += static_cast<double>(a[i]) * a[i];
    nb += static_cast<double>(b[i]) * b[i];
  }
  if (na == 0.0 && nb == 0.0) return 1.0f;
  if (na == 0.0 || nb == 0.0) return 0.0f;
  const double c = dot / (std::sqrt(na) * std::sqrt(nb));
  return static_cast<float>(std::clamp(c, -1.0, 1.0));
}

float l2_norm(const Tensor& t) { return l2_norm(t.values()); }

float max_abs(const Tensor& t) { return max_abs(t.values()); }

float cosine(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b);
  return cosine(a.values(), b.values());
}

}  // namespace nvis
