/* Copyright 2026 The CVSNet Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include "cvsnet/ops.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace cvsnet {

namespace {

template <typename Scalar>
using Span = std::span<Tensor<Scalar>* const>;

template <typename Scalar>
using RowMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

thread_local MacCounter* active_counter = nullptr;

void require_same_shape(const Shape& a, const Shape& b, const char* op) {
  CVSNET_CHECK(a == b, ShapeError, op, ": shape mismatch ", a, " vs ", b);
}

Shape scalar_shape() { return Shape{1, 1, 1, 1}; }

template <typename Scalar>
Var<Scalar> gather_channels(const Var<Scalar>& x, std::vector<Index> indices, std::string op) {
  const Shape in = x.shape();
  for (Index idx : indices) {
    CVSNET_CHECK(idx >= 0 && idx < in.c, ArgumentError, op, ": channel index ", idx,
                 " out of range for ", in.c, " channels");
  }
  const Shape out_shape{in.n, static_cast<Index>(indices.size()), in.h, in.w};
  Tensor<Scalar> out(out_shape);
  const Index plane = in.plane();
  for (Index n = 0; n < in.n; ++n) {
    for (Index j = 0; j < out_shape.c; ++j) {
      out.array().segment(out.offset(n, j, 0, 0), plane) =
          x.value().array().segment(x.value().offset(n, indices[j], 0, 0), plane);
    }
  }
  return record<Scalar>(std::move(op), std::move(out), {x},
                        [indices = std::move(indices), plane](const Tensor<Scalar>& g, const auto&,
                                                              Span<Scalar> grads) {
                          Tensor<Scalar>* gx = grads[0];
                          if (!gx) return;
                          const Shape s = g.shape();
                          for (Index n = 0; n < s.n; ++n) {
                            for (Index j = 0; j < s.c; ++j) {
                              gx->array().segment(gx->offset(n, indices[j], 0, 0), plane) +=
                                  g.array().segment(g.offset(n, j, 0, 0), plane);
                            }
                          }
                        });
}

}  // namespace

MacCounter::MacCounter() : previous_(active_counter) { active_counter = this; }
MacCounter::~MacCounter() {
  active_counter = previous_;
  if (previous_) previous_->macs_ += macs_;
}
void MacCounter::add(std::uint64_t macs) {
  if (active_counter) active_counter->macs_ += macs;
}

template <typename Scalar>
Var<Scalar> add(const Var<Scalar>& a, const Var<Scalar>& b) {
  require_same_shape(a.shape(), b.shape(), "add");
  Tensor<Scalar> out(a.shape(), a.value().array() + b.value().array());
  return record<Scalar>("add", std::move(out), {a, b},
                        [](const Tensor<Scalar>& g, const auto&, Span<Scalar> grads) {
                          if (grads[0]) grads[0]->array() += g.array();
                          if (grads[1]) grads[1]->array() += g.array();
                        });
}

template <typename Scalar>
Var<Scalar> sub(const Var<Scalar>& a, const Var<Scalar>& b) {
  require_same_shape(a.shape(), b.shape(), "sub");
  Tensor<Scalar> out(a.shape(), a.value().array() - b.value().array());
  return record<Scalar>("sub", std::move(out), {a, b},
                        [](const Tensor<Scalar>& g, const auto&, Span<Scalar> grads) {
                          if (grads[0]) grads[0]->array() += g.array();
                          if (grads[1]) grads[1]->array() -= g.array();
                        });
}

template <typename Scalar>
Var<Scalar> mul(const Var<Scalar>& a, const Var<Scalar>& b) {
  require_same_shape(a.shape(), b.shape(), "mul");
  Tensor<Scalar> out(a.shape(), a.value().array() * b.value().array());
  return record<Scalar>("mul", std::move(out), {a, b},
                        [](const Tensor<Scalar>& g, const auto& self, Span<Scalar> grads) {
                          const auto& av = self.inputs[0]->value.array();
                          const auto& bv = self.inputs[1]->value.array();
                          if (grads[0]) grads[0]->array() += g.array() * bv;
                          if (grads[1]) grads[1]->array() += g.array() * av;
                        });
}

template <typename Scalar>
Var<Scalar> scale(const Var<Scalar>& a, Scalar factor) {
  Tensor<Scalar> out(a.shape(), a.value().array() * factor);
  return record<Scalar>("scale", std::move(out), {a},
                        [factor](const Tensor<Scalar>& g, const auto&, Span<Scalar> grads) {
                          if (grads[0]) grads[0]->array() += g.array() * factor;
                        });
}

template <typename Scalar>
Var<Scalar> sum(const Var<Scalar>& a) {
  Tensor<Scalar> out = Tensor<Scalar>::constant(scalar_shape(), a.value().array().sum());
  return record<Scalar>("sum", std::move(out), {a},
                        [](const Tensor<Scalar>& g, const auto&, Span<Scalar> grads) {
                          if (grads[0]) grads[0]->array() += g.array()[0];
                        });
}

template <typename Scalar>
Var<Scalar> mean(const Var<Scalar>& a) {
  CVSNET_CHECK(a.value().size() > 0, ShapeError, "mean of empty tensor");
  const Scalar inv = Scalar(1) / static_cast<Scalar>(a.value().size());
  Tensor<Scalar> out = Tensor<Scalar>::constant(scalar_shape(), a.value().array().sum() * inv);
  return record<Scalar>("mean", std::move(out), {a},
                        [inv](const Tensor<Scalar>& g, const auto&, Span<Scalar> grads) {
                          if (grads[0]) grads[0]->array() += g.array()[0] * inv;
                        });
}

template <typename Scalar>
Var<Scalar> weighted_sum(const Var<Scalar>& a, const Tensor<Scalar>& weights) {
  require_same_shape(a.shape(), weights.shape(), "weighted_sum");
  Tensor<Scalar> out =
      Tensor<Scalar>::constant(scalar_shape(), (a.value().array() * weights.array()).sum());
  return record<Scalar>("weighted_sum", std::move(out), {a},
                        [weights](const Tensor<Scalar>& g, const auto&, Span<Scalar> grads) {
                          if (grads[0]) grads[0]->array() += g.array()[0] * weights.array();
                        });
}

template <typename Scalar>
Var<Scalar> scaled_relu(const Var<Scalar>& x, Scalar gain) {
  CVSNET_CHECK(std::isfinite(gain) && gain != Scalar(0), ArgumentError,
               "scaled_relu: gain must be finite and nonzero, got ", gain);
  Tensor<Scalar> out(x.shape(), x.value().array().max(Scalar(0)) * gain);
  return record<Scalar>("scaled_relu", std::move(out), {x},
                        [gain](const Tensor<Scalar>& g, const auto& self, Span<Scalar> grads) {
                          if (!grads[0]) return;
                          const auto& xv = self.inputs[0]->value.array();
                          grads[0]->array() +=
                              (xv > Scalar(0)).select(g.array() * gain, Scalar(0));
                        });
}

template <typename Scalar>
Var<Scalar> scaled_relu(const Var<Scalar>& x, std::span<const Scalar> gains) {
  const Shape s = x.shape();
  CVSNET_CHECK(static_cast<Index>(gains.size()) == s.c, ShapeError, "scaled_relu: ", gains.size(),
               " gains for ", s.c, " channels");
  for (Scalar g : gains) {
    CVSNET_CHECK(std::isfinite(g) && g != Scalar(0), ArgumentError,
                 "scaled_relu: gain must be finite and nonzero, got ", g);
  }
  std::vector<Scalar> gain_copy(gains.begin(), gains.end());
  const Index plane = s.plane();
  Tensor<Scalar> out(s);
  for (Index n = 0; n < s.n; ++n) {
    for (Index c = 0; c < s.c; ++c) {
      const Index off = out.offset(n, c, 0, 0);
      out.array().segment(off, plane) =
          x.value().array().segment(off, plane).max(Scalar(0)) * gain_copy[c];
    }
  }
  return record<Scalar>(
      "scaled_relu", std::move(out), {x},
      [gain_copy = std::move(gain_copy), plane](const Tensor<Scalar>& g, const auto& self,
                                                Span<Scalar> grads) {
        if (!grads[0]) return;
        const auto& xv = self.inputs[0]->value;
        const Shape s = g.shape();
        for (Index n = 0; n < s.n; ++n) {
          for (Index c = 0; c < s.c; ++c) {
            const Index off = g.offset(n, c, 0, 0);
            grads[0]->array().segment(off, plane) +=
                (xv.array().segment(off, plane) > Scalar(0))
                    .select(g.array().segment(off, plane) * gain_copy[c], Scalar(0));
          }
        }
      });
}

template <typename Scalar>
Var<Scalar> scale_channels(const Var<Scalar>& x, std::span<const Scalar> gains) {
  const Shape s = x.shape();
  CVSNET_CHECK(static_cast<Index>(gains.size()) == s.c, ShapeError, "scale_channels: ",
               gains.size(), " gains for ", s.c, " channels");
  std::vector<Scalar> gain_copy(gains.begin(), gains.end());
  const Index plane = s.plane();
  Tensor<Scalar> out(s);
  for (Index n = 0; n < s.n; ++n) {
    for (Index c = 0; c < s.c; ++c) {
      const Index off = out.offset(n, c, 0, 0);
      out.array().segment(off, plane) = x.value().array().segment(off, plane) * gain_copy[c];
    }
  }
  return record<Scalar>("scale_channels", std::move(out), {x},
                        [gain_copy = std::move(gain_copy), plane](
                            const Tensor<Scalar>& g, const auto&, Span<Scalar> grads) {
                          if (!grads[0]) return;
                          const Shape s = g.shape();
                          for (Index n = 0; n < s.n; ++n) {
                            for (Index c = 0; c < s.c; ++c) {
                              const Index off = g.offset(n, c, 0, 0);
                              grads[0]->array().segment(off, plane) +=
                                  g.array().segment(off, plane) * gain_copy[c];
                            }
                          }
                        });
}

template <typename Scalar>
Var<Scalar> tanh(const Var<Scalar>& x) {
  Tensor<Scalar> out(x.shape(), x.value().array().tanh());
  return record<Scalar>("tanh", std::move(out), {x},
                        [](const Tensor<Scalar>& g, const auto& self, Span<Scalar> grads) {
                          if (!grads[0]) return;
                          grads[0]->array() += g.array() * (Scalar(1) - self.value.array().square());
                        });
}

template <typename Scalar>
Var<Scalar> gelu(const Var<Scalar>& x) {
  const Scalar inv_sqrt2 = Scalar(1) / std::sqrt(Scalar(2));
  Tensor<Scalar> out(x.shape(), x.value().array().unaryExpr([inv_sqrt2](Scalar v) {
    return Scalar(0.5) * v * (Scalar(1) + std::erf(v * inv_sqrt2));
  }));
  return record<Scalar>("gelu", std::move(out), {x},
                        [inv_sqrt2](const Tensor<Scalar>& g, const auto& self, Span<Scalar> grads) {
                          if (!grads[0]) return;
                          const Scalar inv_sqrt_2pi =
                              Scalar(1) / std::sqrt(Scalar(2) * std::numbers::pi_v<Scalar>);
                          const auto d = self.inputs[0]->value.array().unaryExpr([&](Scalar v) {
                            return Scalar(0.5) * (Scalar(1) + std::erf(v * inv_sqrt2)) +
                                   v * inv_sqrt_2pi * std::exp(Scalar(-0.5) * v * v);
                          });
                          grads[0]->array() += g.array() * d;
                        });
}

std::vector<Index> channel_shuffle_permutation(Index channels, Index groups) {
  CVSNET_CHECK(groups > 0 && channels % groups == 0, ShapeError, "channel_shuffle: ", channels,
               " channels not divisible by ", groups, " groups");
  const Index per_group = channels / groups;
  std::vector<Index> perm(static_cast<std::size_t>(channels));
  for (Index a = 0; a < per_group; ++a) {
    for (Index b = 0; b < groups; ++b) perm[a * groups + b] = b * per_group + a;
  }
  return perm;
}

template <typename Scalar>
Var<Scalar> channel_shuffle(const Var<Scalar>& x, Index groups) {
  return gather_channels(x, channel_shuffle_permutation(x.shape().c, groups), "channel_shuffle");
}

template <typename Scalar>
Var<Scalar> select_channels(const Var<Scalar>& x, std::span<const Index> indices) {
  return gather_channels(x, std::vector<Index>(indices.begin(), indices.end()), "select_channels");
}

template <typename Scalar>
Var<Scalar> slice_channels(const Var<Scalar>& x, Index begin, Index count) {
  CVSNET_CHECK(begin >= 0 && count >= 0 && begin + count <= x.shape().c, ShapeError,
               "slice_channels: [", begin, ", ", begin + count, ") outside ", x.shape().c,
               " channels");
  std::vector<Index> idx(static_cast<std::size_t>(count));
  for (Index i = 0; i < count; ++i) idx[i] = begin + i;
  return gather_channels(x, std::move(idx), "slice_channels");
}

template <typename Scalar>
Var<Scalar> concat_channels(std::span<const Var<Scalar>> parts) {
  CVSNET_CHECK(!parts.empty(), ShapeError, "concat_channels: no inputs");
  const Shape first = parts.front().shape();
  Index total = 0;
  std::vector<Index> widths;
  for (const auto& p : parts) {
    const Shape s = p.shape();
    CVSNET_CHECK(s.n == first.n && s.h == first.h && s.w == first.w, ShapeError,
                 "concat_channels: misaligned inputs ", first, " and ", s);
    widths.push_back(s.c);
    total += s.c;
  }
  const Shape out_shape{first.n, total, first.h, first.w};
  Tensor<Scalar> out(out_shape);
  const Index plane = first.plane();
  for (Index n = 0; n < first.n; ++n) {
    Index c0 = 0;
    for (const auto& p : parts) {
      const Index len = p.shape().c * plane;
      out.array().segment(out.offset(n, c0, 0, 0), len) =
          p.value().array().segment(p.value().offset(n, 0, 0, 0), len);
      c0 += p.shape().c;
    }
  }
  std::vector<Var<Scalar>> inputs(parts.begin(), parts.end());
  return record<Scalar>(
      "concat_channels", std::move(out), std::move(inputs),
      [widths = std::move(widths), plane](const Tensor<Scalar>& g, const auto&, Span<Scalar> grads) {
        const Shape s = g.shape();
        for (Index n = 0; n < s.n; ++n) {
          Index c0 = 0;
          for (std::size_t i = 0; i < widths.size(); ++i) {
            const Index len = widths[i] * plane;
            if (grads[i]) {
              grads[i]->array().segment(grads[i]->offset(n, 0, 0, 0), len) +=
                  g.array().segment(g.offset(n, c0, 0, 0), len);
            }
            c0 += widths[i];
          }
        }
      });
}

template <typename Scalar>
Var<Scalar> reshape(const Var<Scalar>& x, const Shape& shape) {
  return record<Scalar>("reshape", x.value().reshaped(shape), {x},
                        [](const Tensor<Scalar>& g, const auto&, Span<Scalar> grads) {
                          if (grads[0]) grads[0]->array() += g.array();
                        });
}

template <typename Scalar>
Var<Scalar> token_linear(const Var<Scalar>& x, const Var<Scalar>& weight, const Var<Scalar>& bias) {
  const Shape s = x.shape();
  const Shape ws = weight.shape();
  const Index tokens = s.plane();
  CVSNET_CHECK(ws.n == 1 && ws.c == 1 && ws.w == tokens, ShapeError, "token_linear: weight ", ws,
               " does not map ", tokens, " tokens");
  const Index out_tokens = ws.h;
  if (bias.defined()) {
    CVSNET_CHECK(bias.shape() == (Shape{1, 1, 1, out_tokens}), ShapeError,
                 "token_linear: bias shape ", bias.shape());
  }
  const Index rows = s.n * s.c;
  MacCounter::add(static_cast<std::uint64_t>(rows * tokens * out_tokens));

  using ConstMap = Eigen::Map<const RowMatrix<Scalar>>;
  using MutMap = Eigen::Map<RowMatrix<Scalar>>;
  Tensor<Scalar> out(Shape{s.n, s.c, 1, out_tokens});
  ConstMap xm(x.value().data(), rows, tokens);
  ConstMap wm(weight.value().data(), out_tokens, tokens);
  MutMap om(out.data(), rows, out_tokens);
  om.noalias() = xm * wm.transpose();
  if (bias.defined()) {
    om.rowwise() += Eigen::Map<const Eigen::Matrix<Scalar, 1, Eigen::Dynamic>>(bias.value().data(),
                                                                               out_tokens);
  }
  std::vector<Var<Scalar>> inputs{x, weight};
  if (bias.defined()) inputs.push_back(bias);
  return record<Scalar>(
      "token_linear", std::move(out), std::move(inputs),
      [rows, tokens, out_tokens](const Tensor<Scalar>& g, const auto& self, Span<Scalar> grads) {
        ConstMap gm(g.data(), rows, out_tokens);
        ConstMap xm(self.inputs[0]->value.data(), rows, tokens);
        ConstMap wm(self.inputs[1]->value.data(), out_tokens, tokens);
        if (grads[0]) MutMap(grads[0]->data(), rows, tokens).noalias() += gm * wm;
        if (grads[1]) MutMap(grads[1]->data(), out_tokens, tokens).noalias() += gm.transpose() * xm;
        if (grads.size() > 2 && grads[2]) {
          MutMap(grads[2]->data(), 1, out_tokens) += gm.colwise().sum();
        }
      });
}

template <typename Scalar>
Var<Scalar> layer_norm_channels(const Var<Scalar>& x, const Var<Scalar>& gamma,
                                const Var<Scalar>& beta, Scalar eps) {
  const Shape s = x.shape();
  CVSNET_CHECK(gamma.shape() == (Shape{1, s.c, 1, 1}) && beta.shape() == gamma.shape(), ShapeError,
               "layer_norm_channels: affine shapes ", gamma.shape(), ", ", beta.shape(),
               " for input ", s);
  const Index plane = s.plane();
  // Per sample the data is a (c × plane) matrix; statistics run down columns.
  Tensor<Scalar> xhat(s);
  Tensor<Scalar> inv_std(Shape{s.n, 1, 1, plane});
  Tensor<Scalar> out(s);
  using ConstMap = Eigen::Map<const RowMatrix<Scalar>>;
  using MutMap = Eigen::Map<RowMatrix<Scalar>>;
  const auto gv = gamma.value().array();
  const auto bv = beta.value().array();
  for (Index n = 0; n < s.n; ++n) {
    ConstMap xm(x.value().plane_data(n, 0), s.c, plane);
    MutMap hm(xhat.plane_data(n, 0), s.c, plane);
    MutMap om(out.plane_data(n, 0), s.c, plane);
    const Eigen::Matrix<Scalar, 1, Eigen::Dynamic> mu = xm.colwise().mean();
    hm = xm.rowwise() - mu;
    const Eigen::Array<Scalar, 1, Eigen::Dynamic> var =
        hm.array().square().colwise().sum() / static_cast<Scalar>(s.c);
    const Eigen::Array<Scalar, 1, Eigen::Dynamic> istd = (var + eps).rsqrt();
    hm.array().rowwise() *= istd;
    Eigen::Map<Eigen::Array<Scalar, 1, Eigen::Dynamic>>(inv_std.plane_data(n, 0), plane) = istd;
    om.array() = (hm.array().colwise() * gv.matrix().array()).colwise() + bv.matrix().array();
  }
  return record<Scalar>(
      "layer_norm", std::move(out), {x, gamma, beta},
      [xhat = std::move(xhat), inv_std = std::move(inv_std), plane](
          const Tensor<Scalar>& g, const auto& self, Span<Scalar> grads) {
        const Shape s = g.shape();
        const auto& gv = self.inputs[1]->value.array();
        for (Index n = 0; n < s.n; ++n) {
          ConstMap gm(g.plane_data(n, 0), s.c, plane);
          ConstMap hm(xhat.plane_data(n, 0), s.c, plane);
          if (grads[1]) grads[1]->array() += (gm.array() * hm.array()).rowwise().sum();
          if (grads[2]) grads[2]->array() += gm.array().rowwise().sum();
          if (grads[0]) {
            const RowMatrix<Scalar> dh = (gm.array().colwise() * gv).matrix();
            const Eigen::Array<Scalar, 1, Eigen::Dynamic> m1 = dh.array().colwise().mean();
            const Eigen::Array<Scalar, 1, Eigen::Dynamic> m2 =
                (dh.array() * hm.array()).colwise().mean();
            Eigen::Map<const Eigen::Array<Scalar, 1, Eigen::Dynamic>> istd(inv_std.plane_data(n, 0),
                                                                           plane);
            MutMap(grads[0]->plane_data(n, 0), s.c, plane).array() +=
                ((dh.array().rowwise() - m1) - hm.array().rowwise() * m2).rowwise() * istd;
          }
        }
      });
}

template <typename Scalar>
Var<Scalar> global_avg_pool(const Var<Scalar>& x) {
  const Shape s = x.shape();
  CVSNET_CHECK(s.plane() > 0, ShapeError, "global_avg_pool: empty spatial extent");
  const Index plane = s.plane();
  const Scalar inv = Scalar(1) / static_cast<Scalar>(plane);
  Tensor<Scalar> out(Shape{s.n, s.c, 1, 1});
  Eigen::Map<const RowMatrix<Scalar>> xm(x.value().data(), s.n * s.c, plane);
  out.array() = (xm.rowwise().sum() * inv).array();
  return record<Scalar>("global_avg_pool", std::move(out), {x},
                        [inv, plane](const Tensor<Scalar>& g, const auto&, Span<Scalar> grads) {
                          if (!grads[0]) return;
                          Eigen::Map<RowMatrix<Scalar>> gx(grads[0]->data(), g.size(), plane);
                          gx.colwise() += (g.array() * inv).matrix();
                        });
}

template <typename Scalar>
Var<Scalar> smoothed_cross_entropy(const Var<Scalar>& logits, std::span<const int> labels,
                                   double eps) {
  const Shape s = logits.shape();
  CVSNET_CHECK(s.h == 1 && s.w == 1, ShapeError, "cross entropy expects (n, C, 1, 1) logits, got ",
               s);
  CVSNET_CHECK(static_cast<Index>(labels.size()) == s.n, ShapeError, "cross entropy: ",
               labels.size(), " labels for batch of ", s.n);
  CVSNET_CHECK(eps >= 0.0 && eps < 1.0, ArgumentError, "label smoothing must be in [0, 1), got ",
               eps);
  CVSNET_CHECK(s.c >= 2 || eps == 0.0, ArgumentError, "label smoothing needs at least 2 classes");
  const Index classes = s.c;
  RowMatrix<Scalar> target = RowMatrix<Scalar>::Constant(
      s.n, classes, classes > 1 ? static_cast<Scalar>(eps / static_cast<double>(classes - 1)) : 0);
  for (Index i = 0; i < s.n; ++i) {
    const int y = labels[i];
    CVSNET_CHECK(y >= 0 && y < classes, ArgumentError, "label ", y, " out of range [0, ", classes,
                 ")");
    target(i, y) = static_cast<Scalar>(1.0 - eps);
  }
  Eigen::Map<const RowMatrix<Scalar>> lm(logits.value().data(), s.n, classes);
  const Eigen::Matrix<Scalar, Eigen::Dynamic, 1> row_max = lm.rowwise().maxCoeff();
  const RowMatrix<Scalar> shifted = lm.colwise() - row_max;
  const Eigen::Array<Scalar, Eigen::Dynamic, 1> lse =
      shifted.array().exp().rowwise().sum().log();
  const RowMatrix<Scalar> log_probs = shifted.array().colwise() - lse;
  const Scalar loss = -(target.array() * log_probs.array()).sum() / static_cast<Scalar>(s.n);
  RowMatrix<Scalar> dlogits = (log_probs.array().exp() - target.array()) / static_cast<Scalar>(s.n);
  return record<Scalar>("cross_entropy", Tensor<Scalar>::constant(scalar_shape(), loss), {logits},
                        [dlogits = std::move(dlogits)](const Tensor<Scalar>& g, const auto&,
                                                       Span<Scalar> grads) {
                          if (!grads[0]) return;
                          Eigen::Map<RowMatrix<Scalar>>(grads[0]->data(), dlogits.rows(),
                                                        dlogits.cols()) += g.array()[0] * dlogits;
                        });
}

#define CVSNET_INSTANTIATE_OPS(S)                                                                 \
  template Var<S> add(const Var<S>&, const Var<S>&);                                              \
  template Var<S> sub(const Var<S>&, const Var<S>&);                                              \
  template Var<S> mul(const Var<S>&, const Var<S>&);                                              \
  template Var<S> scale(const Var<S>&, S);                                                        \
  template Var<S> sum(const Var<S>&);                                                             \
  template Var<S> mean(const Var<S>&);                                                            \
  template Var<S> weighted_sum(const Var<S>&, const Tensor<S>&);                                  \
  template Var<S> scaled_relu(const Var<S>&, S);                                                  \
  template Var<S> scaled_relu(const Var<S>&, std::span<const S>);                                 \
  template Var<S> gelu(const Var<S>&);                                                            \
  template Var<S> tanh(const Var<S>&);                                                            \
  template Var<S> scale_channels(const Var<S>&, std::span<const S>);                             \
  template Var<S> channel_shuffle(const Var<S>&, Index);                                          \
  template Var<S> select_channels(const Var<S>&, std::span<const Index>);                         \
  template Var<S> slice_channels(const Var<S>&, Index, Index);                                    \
  template Var<S> concat_channels(std::span<const Var<S>>);                                       \
  template Var<S> reshape(const Var<S>&, const Shape&);                                           \
  template Var<S> token_linear(const Var<S>&, const Var<S>&, const Var<S>&);                      \
  template Var<S> layer_norm_channels(const Var<S>&, const Var<S>&, const Var<S>&, S);            \
  template Var<S> global_avg_pool(const Var<S>&);                                                 \
  template Var<S> smoothed_cross_entropy(const Var<S>&, std::span<const int>, double);

CVSNET_INSTANTIATE_OPS(float)
CVSNET_INSTANTIATE_OPS(double)

#undef CVSNET_INSTANTIATE_OPS

}  // namespace cvsnet
