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

#include "cvsnet/conv.hpp"

#include "cvsnet/ops.hpp"

namespace cvsnet {

namespace {

template <typename Scalar>
using RowMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct Geometry {
  ConvSpec spec;
  Shape in;
  Shape out;
  Index cin_g() const { return spec.in_channels / spec.groups; }
  Index cout_g() const { return spec.out_channels / spec.groups; }
  Index patch() const { return cin_g() * spec.kernel_h * spec.kernel_w; }
  bool pointwise() const {
    return spec.kernel_h == 1 && spec.kernel_w == 1 && spec.stride == 1 && spec.pad_h == 0 &&
           spec.pad_w == 0;
  }
};

// Rows are (channel, kernel row, kernel col); columns are output positions.
template <typename Scalar>
void im2col(const Scalar* x, const Geometry& g, RowMatrix<Scalar>& cols) {
  const ConvSpec& s = g.spec;
  const Index H = g.in.h, W = g.in.w, OH = g.out.h, OW = g.out.w;
  cols.resize(g.patch(), OH * OW);
  Index row = 0;
  for (Index ci = 0; ci < g.cin_g(); ++ci) {
    const Scalar* plane = x + ci * H * W;
    for (Index ki = 0; ki < s.kernel_h; ++ki) {
      for (Index kj = 0; kj < s.kernel_w; ++kj, ++row) {
        Scalar* dst = cols.data() + row * OH * OW;
        for (Index oh = 0; oh < OH; ++oh) {
          const Index ih = oh * s.stride - s.pad_h + ki;
          Scalar* d = dst + oh * OW;
          if (ih < 0 || ih >= H) {
            std::fill(d, d + OW, Scalar(0));
            continue;
          }
          const Scalar* src = plane + ih * W;
          for (Index ow = 0; ow < OW; ++ow) {
            const Index iw = ow * s.stride - s.pad_w + kj;
            d[ow] = (iw >= 0 && iw < W) ? src[iw] : Scalar(0);
          }
        }
      }
    }
  }
}

template <typename Scalar>
void col2im_add(const RowMatrix<Scalar>& cols, const Geometry& g, Scalar* gx) {
  const ConvSpec& s = g.spec;
  const Index H = g.in.h, W = g.in.w, OH = g.out.h, OW = g.out.w;
  Index row = 0;
  for (Index ci = 0; ci < g.cin_g(); ++ci) {
    Scalar* plane = gx + ci * H * W;
    for (Index ki = 0; ki < s.kernel_h; ++ki) {
      for (Index kj = 0; kj < s.kernel_w; ++kj, ++row) {
        const Scalar* src = cols.data() + row * OH * OW;
        for (Index oh = 0; oh < OH; ++oh) {
          const Index ih = oh * s.stride - s.pad_h + ki;
          if (ih < 0 || ih >= H) continue;
          Scalar* d = plane + ih * W;
          const Scalar* srow = src + oh * OW;
          for (Index ow = 0; ow < OW; ++ow) {
            const Index iw = ow * s.stride - s.pad_w + kj;
            if (iw >= 0 && iw < W) d[iw] += srow[ow];
          }
        }
      }
    }
  }
}

}  // namespace

void ConvSpec::validate() const {
  CVSNET_CHECK(in_channels > 0 && out_channels > 0, ShapeError,
               "conv: channel counts must be positive, got ", in_channels, " -> ", out_channels);
  CVSNET_CHECK(kernel_h > 0 && kernel_w > 0 && stride > 0, ShapeError,
               "conv: kernel and stride must be positive");
  CVSNET_CHECK(pad_h >= 0 && pad_w >= 0, ShapeError, "conv: padding must be non-negative");
  CVSNET_CHECK(groups > 0 && in_channels % groups == 0 && out_channels % groups == 0, ShapeError,
               "conv: channels ", in_channels, " -> ", out_channels, " not divisible by ", groups,
               " groups");
}

Shape ConvSpec::output_shape(const Shape& in) const {
  validate();
  CVSNET_CHECK(in.c == in_channels, ShapeError, "conv: input has ", in.c,
               " channels, spec expects ", in_channels);
  const Index oh = in.h + 2 * pad_h >= kernel_h ? out_h(in.h) : 0;
  const Index ow = in.w + 2 * pad_w >= kernel_w ? out_w(in.w) : 0;
  CVSNET_CHECK(oh >= 1 && ow >= 1, ShapeError, "conv: kernel ", kernel_h, "x", kernel_w,
               " with stride ", stride, " and padding (", pad_h, ", ", pad_w,
               ") yields empty output for input ", in);
  return Shape{in.n, out_channels, oh, ow};
}

template <typename Scalar>
Var<Scalar> conv2d(const Var<Scalar>& x, const Var<Scalar>& weight, const Var<Scalar>& bias,
                   const ConvSpec& spec) {
  const Geometry geo{spec, x.shape(), spec.output_shape(x.shape())};
  CVSNET_CHECK(weight.shape() == spec.weight_shape(), ShapeError, "conv: weight shape ",
               weight.shape(), " expected ", spec.weight_shape());
  if (bias.defined()) {
    CVSNET_CHECK(bias.value().size() == spec.out_channels, ShapeError, "conv: bias has ",
                 bias.value().size(), " entries for ", spec.out_channels, " outputs");
  }
  const Index P = geo.out.plane();
  const Index K = geo.patch();
  const Index cin_g = geo.cin_g(), cout_g = geo.cout_g();
  MacCounter::add(static_cast<std::uint64_t>(geo.out.numel() * K));

  using ConstMap = Eigen::Map<const RowMatrix<Scalar>>;
  using MutMap = Eigen::Map<RowMatrix<Scalar>>;
  Tensor<Scalar> out(geo.out);
  RowMatrix<Scalar> cols;
  for (Index n = 0; n < geo.in.n; ++n) {
    for (Index g = 0; g < spec.groups; ++g) {
      const Scalar* xin = x.value().plane_data(n, g * cin_g);
      ConstMap wm(weight.value().data() + g * cout_g * K, cout_g, K);
      MutMap om(out.plane_data(n, g * cout_g), cout_g, P);
      if (geo.pointwise()) {
        om.noalias() = wm * ConstMap(xin, cin_g, P);
      } else {
        im2col(xin, geo, cols);
        om.noalias() = wm * cols;
      }
    }
    if (bias.defined()) {
      MutMap om(out.plane_data(n, 0), spec.out_channels, P);
      om.colwise() += Eigen::Map<const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>>(
          bias.value().data(), spec.out_channels);
    }
  }

  std::vector<Var<Scalar>> inputs{x, weight};
  if (bias.defined()) inputs.push_back(bias);
  return record<Scalar>(
      "conv2d", std::move(out), std::move(inputs),
      [geo](const Tensor<Scalar>& grad, const auto& self, std::span<Tensor<Scalar>* const> grads) {
        const ConvSpec& spec = geo.spec;
        const Index P = geo.out.plane();
        const Index K = geo.patch();
        const Index cin_g = geo.cin_g(), cout_g = geo.cout_g();
        const Tensor<Scalar>& xv = self.inputs[0]->value;
        const Tensor<Scalar>& wv = self.inputs[1]->value;
        Tensor<Scalar>* gx = grads[0];
        Tensor<Scalar>* gw = grads[1];
        Tensor<Scalar>* gb = grads.size() > 2 ? grads[2] : nullptr;
        RowMatrix<Scalar> cols;
        RowMatrix<Scalar> dcols;
        for (Index n = 0; n < geo.in.n; ++n) {
          for (Index g = 0; g < spec.groups; ++g) {
            ConstMap gm(grad.plane_data(n, g * cout_g), cout_g, P);
            ConstMap wm(wv.data() + g * cout_g * K, cout_g, K);
            const Scalar* xin = xv.plane_data(n, g * cin_g);
            if (geo.pointwise()) {
              if (gw) MutMap(gw->data() + g * cout_g * K, cout_g, K).noalias() +=
                  gm * ConstMap(xin, cin_g, P).transpose();
              if (gx) MutMap(gx->plane_data(n, g * cin_g), cin_g, P).noalias() +=
                  wm.transpose() * gm;
              continue;
            }
            if (gw) {
              im2col(xin, geo, cols);
              MutMap(gw->data() + g * cout_g * K, cout_g, K).noalias() += gm * cols.transpose();
            }
            if (gx) {
              dcols.noalias() = wm.transpose() * gm;
              col2im_add(dcols, geo, gx->plane_data(n, g * cin_g));
            }
          }
          if (gb) {
            ConstMap gm(grad.plane_data(n, 0), spec.out_channels, P);
            Eigen::Map<Eigen::Matrix<Scalar, Eigen::Dynamic, 1>>(gb->data(), spec.out_channels) +=
                gm.rowwise().sum();
          }
        }
      });
}

template Var<float> conv2d(const Var<float>&, const Var<float>&, const Var<float>&,
                           const ConvSpec&);
template Var<double> conv2d(const Var<double>&, const Var<double>&, const Var<double>&,
                            const ConvSpec&);

}  // namespace cvsnet
