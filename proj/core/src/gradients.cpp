#include "nvis/gradients.hpp"

#include <algorithm>
#include <cmath>

#include "nvis/engine.hpp"

namespace nvis {

namespace {

// What the backward pass needs from each layer: its input and, for
// parameterized layers, the pre-activation output.
struct Tape {
  std::vector<Tensor> inputs;
  std::vector<Tensor> pre_activations;
  Tensor probs;
};

Tape record(const Model& model, const Tensor& input) {
  Tape tape;
  const std::size_t n = model.layers.size();
  tape.inputs.reserve(n);
  tape.pre_activations.resize(n);
  Tensor x = input;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& spec = model.layers[i];
    tape.inputs.push_back(x);
    if (const auto* c = std::get_if<Conv2DSpec>(&spec)) {
      const auto& p = model.weights.at(i);
      Tensor z = conv2d(x, p.weights, p.bias,
                        {static_cast<std::size_t>(c->stride), c->padding});
      x = c->activation == Activation::kRelu ? relu(z) : z;
      tape.pre_activations[i] = std::move(z);
    } else if (const auto* d = std::get_if<DenseSpec>(&spec)) {
      const auto& p = model.weights.at(i);
      Tensor z = dense(x, p.weights, p.bias);
      x = d->activation == Activation::kRelu ? relu(z) : z;
      tape.pre_activations[i] = std::move(z);
    } else {
      x = inner_output(model, x, i);
    }
  }
  // The head's pre-activation holds the logits.
  tape.probs = softmax(tape.pre_activations[n - 1]);
  return tape;
}

Tensor conv2d_backward_input(const Tensor& grad_out, const Tensor& input,
                             const Tensor& weights, const Conv2DSpec& spec) {
  const std::size_t cin = input.dim(0), h = input.dim(1), w = input.dim(2);
  const std::size_t cout = weights.dim(0), kh = weights.dim(2),
                    kw = weights.dim(3);
  const std::size_t oh = grad_out.dim(1), ow = grad_out.dim(2);
  const bool same = spec.padding == Padding::kSame;
  const long pad_top = same ? static_cast<long>(same_pad_before(kh)) : 0;
  const long pad_left = same ? static_cast<long>(same_pad_before(kw)) : 0;
  const long stride = spec.stride;

  Tensor grad_in(input.shape());
  auto gi = grad_in.values();
  const auto wt = weights.values();
  for (std::size_t co = 0; co < cout; ++co) {
    for (std::size_t oy = 0; oy < oh; ++oy) {
      for (std::size_t ox = 0; ox < ow; ++ox) {
        const float g = grad_out.at(co, oy, ox);
        if (g == 0.0f) continue;
        const long y0 = static_cast<long>(oy) * stride - pad_top;
        const long x0 = static_cast<long>(ox) * stride - pad_left;
        for (std::size_t ci = 0; ci < cin; ++ci) {
          for (std::size_t ky = 0; ky < kh; ++ky) {
            const long iy = y0 + static_cast<long>(ky);
            if (iy < 0 || iy >= static_cast<long>(h)) continue;
            for (std::size_t kx = 0; kx < kw; ++kx) {
              const long ix = x0 + static_cast<long>(kx);
              if (ix < 0 || ix >= static_cast<long>(w)) continue;
              gi[(ci * h + static_cast<std::size_t>(iy)) * w +
                 static_cast<std::size_t>(ix)] +=
                  wt[((co * cin + ci) * kh + ky) * kw + kx] * g;
            }
          }
        }
      }
    }
  }
  return grad_in;
}

Tensor dense_backward_input(const Tensor& grad_out, const Tensor& weights) {
  const std::size_t m = weights.dim(0), n = weights.dim(1);
  Tensor grad_in({n});
  const auto wt = weights.values();
  for (std::size_t row = 0; row < m; ++row) {
    const float g = grad_out[row];
    for (std::size_t col = 0; col < n; ++col) grad_in[col] += wt[row * n + col] * g;
  }
  return grad_in;
}

Tensor maxpool_backward_input(const Tensor& grad_out, const Tensor& input,
                              const MaxPool2DSpec& spec) {
  const auto ph = static_cast<std::size_t>(spec.pool_h);
  const auto pw = static_cast<std::size_t>(spec.pool_w);
  const auto stride = static_cast<std::size_t>(spec.stride);
  const std::size_t h = input.dim(1), w = input.dim(2);
  Tensor grad_in(input.shape());
  for (std::size_t c = 0; c < grad_out.dim(0); ++c) {
    for (std::size_t oy = 0; oy < grad_out.dim(1); ++oy) {
      for (std::size_t ox = 0; ox < grad_out.dim(2); ++ox) {
        std::size_t by = oy * stride, bx = ox * stride;
        float best = input.at(c, by, bx);
        for (std::size_t py = 0; py < ph; ++py) {
          for (std::size_t px = 0; px < pw; ++px) {
            const float v = input.at(c, oy * stride + py, ox * stride + px);
            if (v > best) {
              best = v;
              by = oy * stride + py;
              bx = ox * stride + px;
            }
          }
        }
        grad_in[(c * h + by) * w + bx] += grad_out.at(c, oy, ox);
      }
    }
  }
  return grad_in;
}

void relu_backward(Tensor& grad, const Tensor& pre_activation) {
  for (std::size_t i = 0; i < grad.size(); ++i) {
    if (!(pre_activation[i] > 0.0f)) grad[i] = 0.0f;
  }
}

}  // namespace

float cross_entropy(const Tensor& probs, std::size_t label) {
  if (label >= probs.size()) {
    throw Error(ErrorKind::kRange, "label " + std::to_string(label) +
                                       " out of range for " +
                                       std::to_string(probs.size()) + " classes");
  }
  return -std::log(std::max(probs[label], kProbabilityFloor));
}

LossGradient loss_and_gradient(const Model& model, const Tensor& input,
                               std::size_t label) {
  require_valid(model);
  check_input(model, input);
  const auto& head = model.layers.back();
  if (!has_params(head) || activation_of(head) != Activation::kSoftmax) {
    throw Error(ErrorKind::kUnsupportedModel,
                "input gradients need a softmax classification head");
  }

  Tape tape = record(model, input);
  const std::size_t classes = tape.probs.size();
  if (label >= classes) {
    throw Error(ErrorKind::kRange, "label " + std::to_string(label) +
                                       " out of range for " +
                                       std::to_string(classes) + " classes");
  }

  LossGradient out;
  out.loss = cross_entropy(tape.probs, label);
  Tensor grad = tape.probs;
  grad[label] -= 1.0f;

  for (std::size_t i = model.layers.size(); i-- > 0;) {
    const auto& spec = model.layers[i];
    const Tensor& x = tape.inputs[i];
    if (const auto* c = std::get_if<Conv2DSpec>(&spec)) {
      if (c->activation == Activation::kRelu) relu_backward(grad, tape.pre_activations[i]);
      grad = conv2d_backward_input(grad, x, model.weights.at(i).weights, *c);
    } else if (const auto* d = std::get_if<DenseSpec>(&spec)) {
      if (d->activation == Activation::kRelu) relu_backward(grad, tape.pre_activations[i]);
      grad = dense_backward_input(grad, model.weights.at(i).weights);
    } else if (const auto* m = std::get_if<MaxPool2DSpec>(&spec)) {
      grad = maxpool_backward_input(grad, x, *m);
    } else {
      grad = grad.reshaped(x.shape());
    }
  }
  out.probs = std::move(tape.probs);
  out.gradient = std::move(grad);
  return out;
}

Tensor input_gradient(const Model& model, const Tensor& input,
                      std::size_t label) {
  return loss_and_gradient(model, input, label).gradient;
}

SaliencyMap saliency(const Model& model, const Tensor& input,
                     std::size_t label) {
  const Tensor grad = input_gradient(model, input, label);
  const std::size_t channels = grad.dim(0), h = grad.dim(1), w = grad.dim(2);
  Tensor map({h, w});
  for (std::size_t c = 0; c < channels; ++c) {
    for (std::size_t y = 0; y < h; ++y) {
      for (std::size_t x = 0; x < w; ++x) {
        map[y * w + x] = std::max(map[y * w + x], std::fabs(grad.at(c, y, x)));
      }
    }
  }
  return {std::move(map)};
}

}  // namespace nvis
