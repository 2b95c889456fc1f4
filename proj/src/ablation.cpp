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

#include "cvsnet/ablation.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>

namespace cvsnet {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string value_label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

void rgb_to_hsv(double r, double g, double b, double& h, double& s, double& v) {
  const double mx = std::max({r, g, b});
  const double mn = std::min({r, g, b});
  const double d = mx - mn;
  v = mx;
  s = mx > 0 ? d / mx : 0;
  if (d == 0) {
    h = 0;
  } else if (mx == r) {
    h = 60.0 * std::fmod((g - b) / d + 6.0, 6.0);
  } else if (mx == g) {
    h = 60.0 * ((b - r) / d + 2.0);
  } else {
    h = 60.0 * ((r - g) / d + 4.0);
  }
}

void hsv_to_rgb(double h, double s, double v, double& r, double& g, double& b) {
  const double c = v * s;
  const double hp = h / 60.0;
  const double x = c * (1.0 - std::abs(std::fmod(hp, 2.0) - 1.0));
  const double m = v - c;
  double r1 = 0, g1 = 0, b1 = 0;
  switch (static_cast<int>(hp) % 6) {
    case 0: r1 = c; g1 = x; break;
    case 1: r1 = x; g1 = c; break;
    case 2: g1 = c; b1 = x; break;
    case 3: g1 = x; b1 = c; break;
    case 4: r1 = x; b1 = c; break;
    default: r1 = c; b1 = x; break;
  }
  r = r1 + m;
  g = g1 + m;
  b = b1 + m;
}

template <typename Scalar>
std::uint8_t quantize(Scalar v, Scalar lo, Scalar hi) {
  if (!(hi > lo)) return 128;
  const double t = (static_cast<double>(v) - lo) / (static_cast<double>(hi) - lo);
  return static_cast<std::uint8_t>(std::clamp<long>(std::lround(t * 255.0), 0, 255));
}

Image8 grey_image(const std::vector<std::uint8_t>& plane, Index h, Index w) {
  Image8 img;
  img.height = h;
  img.width = w;
  img.chw.resize(static_cast<std::size_t>(3 * h * w));
  for (Index c = 0; c < 3; ++c) std::copy(plane.begin(), plane.end(), img.chw.begin() + c * h * w);
  return img;
}

template <typename Scalar>
Image8 tensor_to_image(const Tensor<Scalar>& rgb) {
  const Shape s = rgb.shape();
  Image8 img;
  img.height = s.h;
  img.width = s.w;
  img.chw.resize(static_cast<std::size_t>(3 * s.h * s.w));
  for (Index i = 0; i < 3 * s.h * s.w; ++i) {
    const double v = std::clamp(static_cast<double>(rgb.data()[i]), 0.0, 1.0);
    img.chw[i] = static_cast<std::uint8_t>(std::lround(v * 255.0));
  }
  return img;
}

}  // namespace

template <typename Scalar>
Tensor<Scalar> adjust_brightness(const Tensor<Scalar>& images, double factor) {
  CVSNET_CHECK(factor > 0 && std::isfinite(factor), ArgumentError,
               "adjust_brightness: factor must be positive, got ", factor);
  Tensor<Scalar> out(images.shape());
  const Scalar f = static_cast<Scalar>(factor);
  out.array() = (images.array() * f).min(Scalar(1)).max(Scalar(0));
  return out;
}

template <typename Scalar>
Tensor<Scalar> rotate_hue(const Tensor<Scalar>& images, double degrees) {
  CVSNET_CHECK(std::isfinite(degrees), ArgumentError, "rotate_hue: degrees must be finite");
  const Shape s = images.shape();
  CVSNET_CHECK(s.c == 3, ShapeError, "rotate_hue: expected RGB images, got ", s);
  double shift = std::fmod(degrees, 360.0);
  if (shift < 0) shift += 360.0;
  Tensor<Scalar> out(s);
  for (Index n = 0; n < s.n; ++n) {
    const Scalar* r = images.plane_data(n, 0);
    const Scalar* g = images.plane_data(n, 1);
    const Scalar* b = images.plane_data(n, 2);
    Scalar* ro = out.plane_data(n, 0);
    Scalar* go = out.plane_data(n, 1);
    Scalar* bo = out.plane_data(n, 2);
    for (Index i = 0; i < s.plane(); ++i) {
      double h, sat, v;
      rgb_to_hsv(r[i], g[i], b[i], h, sat, v);
      h = std::fmod(h + shift, 360.0);
      double rr, gg, bb;
      hsv_to_rgb(h, sat, v, rr, gg, bb);
      ro[i] = static_cast<Scalar>(rr);
      go[i] = static_cast<Scalar>(gg);
      bo[i] = static_cast<Scalar>(bb);
    }
  }
  return out;
}

template <typename Scalar>
double feature_change(const Tensor<Scalar>& ref, const Tensor<Scalar>& var) {
  CVSNET_CHECK(ref.shape() == var.shape(), ShapeError, "feature_change: shapes ", ref.shape(),
               " and ", var.shape(), " differ");
  double diff = 0, norm = 0;
  for (Index i = 0; i < ref.size(); ++i) {
    const double a = ref.data()[i];
    const double d = static_cast<double>(var.data()[i]) - a;
    diff += d * d;
    norm += a * a;
  }
  return std::sqrt(diff) / (std::sqrt(norm) + 1e-8);
}

const char* sweep_kind_name(SweepKind k) { return k == SweepKind::kBrightness ? "brightness" : "hue"; }

StimulusSweep StimulusSweep::brightness(std::vector<double> factors) {
  return StimulusSweep{SweepKind::kBrightness, std::move(factors)};
}

StimulusSweep StimulusSweep::hue(std::vector<double> degrees) {
  return StimulusSweep{SweepKind::kHue, std::move(degrees)};
}

void StimulusSweep::validate() const {
  CVSNET_CHECK(!values.empty(), ArgumentError, "sweep: no variants");
  for (double v : values) {
    if (kind == SweepKind::kBrightness) {
      CVSNET_CHECK(v > 0 && v <= 1, ArgumentError, "sweep: brightness factor ", v,
                   " outside (0, 1]");
    } else {
      CVSNET_CHECK(v >= 0 && v < 360, ArgumentError, "sweep: hue rotation ", v,
                   " outside [0, 360)");
    }
  }
}

template <typename Scalar>
Tensor<Scalar> apply_variant(const Tensor<Scalar>& images, SweepKind kind, double value) {
  return kind == SweepKind::kBrightness ? adjust_brightness(images, value)
                                        : rotate_hue(images, value);
}

template <typename Scalar>
BaselineBlock<Scalar>::BaselineBlock(Index channels, Index stride, std::uint64_t seed) {
  Rng rng = Rng::derive(seed, {0xBA5E11E});
  conv1 = Conv2d<Scalar>(ConvSpec::same(3, channels, 3, 3, stride, 1, true), rng);
  conv2 = Conv2d<Scalar>(ConvSpec::same(channels, channels, 3, 3, 1, 1, true), rng);
  // Small positive biases.
  for (Conv2d<Scalar>* c : {&conv1, &conv2}) {
    auto& b = c->bias.mutable_value().array();
    for (Index i = 0; i < b.size(); ++i) b[i] = static_cast<Scalar>(rng.uniform(0.0, 0.1));
  }
}

template <typename Scalar>
Var<Scalar> BaselineBlock<Scalar>::operator()(const Var<Scalar>& x) const {
  return relu(conv2(relu(conv1(x))));
}

std::string pathway_ordering(double m, double p, double k) {
  struct Entry {
    double change;
    int rank;
    char name;
  };
  std::array<Entry, 3> v = {{{m, 0, 'M'}, {p, 1, 'P'}, {k, 2, 'K'}}};
  auto tied = [](double a, double b) {
    return std::abs(b - a) <= 1e-6 * std::max({std::abs(a), std::abs(b), 1e-12});
  };
  std::stable_sort(v.begin(), v.end(), [](const Entry& a, const Entry& b) { return a.change < b.change; });
  // runs of tied changes are listed in M, P, K order
  std::size_t start = 0;
  for (std::size_t i = 1; i <= v.size(); ++i) {
    if (i == v.size() || !tied(v[i - 1].change, v[i].change)) {
      std::sort(v.begin() + start, v.begin() + i,
                [](const Entry& a, const Entry& b) { return a.rank < b.rank; });
      start = i;
    }
  }
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i > 0) out += tied(v[i - 1].change, v[i].change) ? "=" : "<";
    out += v[i].name;
  }
  return out;
}

json ChangeReport::to_json_value() const {
  json metric_table = json::object();
  for (std::size_t t = 0; t < taps.size(); ++t) metric_table[taps[t]] = metrics[t];
  json j{{"kind", sweep_kind_name(kind)},
         {"values", values},
         {"taps", taps},
         {"metrics", metric_table},
         {"pathways", {{"M", m_change}, {"P", p_change}, {"K", k_change}}},
         {"ordering", ordering},
         {"baseline",
          {{"block", "conv3x3-relu-conv3x3-relu"},
           {"channels", baseline_channels},
           {"metrics", baseline_metrics}}},
         {"images", images}};
  if (expected_ordering.empty()) {
    j["expected_ordering"] = nullptr;
    j["ordering_matches_expected"] = nullptr;
  } else {
    j["expected_ordering"] = expected_ordering;
    j["ordering_matches_expected"] = ordering_matches_expected;
  }
  return j;
}

std::string ChangeReport::to_json() const { return to_json_value().dump(2) + "\n"; }

template <typename Scalar>
Image8 feature_map_image(const Tensor<Scalar>& t) {
  const Shape s = t.shape();
  CVSNET_CHECK(s.n == 1 && s.c >= 1, ShapeError,
               "export_feature_map: expected a single batch element, got ", s);
  std::vector<double> mean(static_cast<std::size_t>(s.plane()), 0.0);
  for (Index c = 0; c < s.c; ++c) {
    const Scalar* p = t.plane_data(0, c);
    for (Index i = 0; i < s.plane(); ++i) mean[i] += p[i];
  }
  for (double& m : mean) m /= static_cast<double>(s.c);
  const auto [lo, hi] = std::minmax_element(mean.begin(), mean.end());
  std::vector<std::uint8_t> q(mean.size());
  for (std::size_t i = 0; i < mean.size(); ++i) q[i] = quantize(mean[i], *lo, *hi);
  return grey_image(q, s.h, s.w);
}

template <typename Scalar>
Image8 export_feature_map(const Tensor<Scalar>& t, const std::string& path) {
  Image8 img = feature_map_image(t);
  write_ppm(path, img);
  return img;
}

template <typename Scalar>
Image8 export_channel_grid(const Tensor<Scalar>& t, const std::string& path, Index columns) {
  const Shape s = t.shape();
  CVSNET_CHECK(s.n == 1 && columns >= 1, ShapeError,
               "export_channel_grid: expected a single batch element, got ", s);
  const Index cols = std::min(columns, s.c);
  const Index rows = (s.c + cols - 1) / cols;
  const Index gw = cols * (s.w + 1) - 1;
  const Index gh = rows * (s.h + 1) - 1;
  std::vector<std::uint8_t> grid(static_cast<std::size_t>(gw * gh), 0);
  for (Index c = 0; c < s.c; ++c) {
    const Scalar* p = t.plane_data(0, c);
    const auto [lo, hi] = std::minmax_element(p, p + s.plane());
    const Index oy = (c / cols) * (s.h + 1);
    const Index ox = (c % cols) * (s.w + 1);
    for (Index y = 0; y < s.h; ++y) {
      for (Index x = 0; x < s.w; ++x) {
        grid[(oy + y) * gw + ox + x] = quantize(p[y * s.w + x], *lo, *hi);
      }
    }
  }
  Image8 img = grey_image(grid, gh, gw);
  write_ppm(path, img);
  return img;
}

Image8 tile_images(const std::vector<Image8>& images, Index cell) {
  CVSNET_CHECK(!images.empty() && cell > 0, ArgumentError, "tile_images: nothing to tile");
  const Index gutter = 2;
  const Index n = static_cast<Index>(images.size());
  Image8 out;
  out.height = cell;
  out.width = n * cell + (n - 1) * gutter;
  out.chw.assign(static_cast<std::size_t>(3 * out.height * out.width), 0);
  for (Index k = 0; k < n; ++k) {
    const Image8& img = images[k];
    const Index ox = k * (cell + gutter);
    for (Index c = 0; c < 3; ++c) {
      for (Index y = 0; y < cell; ++y) {
        const Index sy = y * img.height / cell;
        for (Index x = 0; x < cell; ++x) {
          const Index sx = x * img.width / cell;
          out.chw[(c * out.height + y) * out.width + ox + x] = img.at(c, sy, sx);
        }
      }
    }
  }
  return out;
}

template <typename Scalar>
ChangeReport run_sweep(const CvsNet<Scalar>& model, const Tensor<Scalar>& image,
                       const StimulusSweep& sweep, const std::vector<std::string>& taps,
                       const std::string& out_dir) {
  sweep.validate();
  const Index r = model.config().input_resolution;
  CVSNET_CHECK(image.shape() == (Shape{1, 3, r, r}), ShapeError, "run_sweep: image must be ",
               Shape{1, 3, r, r}, ", got ", image.shape());
  NoGradGuard no_grad;
  // Sample 0 is the identity variant, then one sample per sweep value.
  const Index variants = static_cast<Index>(sweep.values.size());
  Tensor<Scalar> batch(Shape{variants + 1, 3, r, r});
  std::vector<Tensor<Scalar>> stimuli;
  const Index per = 3 * r * r;
  for (Index v = 0; v <= variants; ++v) {
    const double value = v == 0 ? sweep.identity_value() : sweep.values[v - 1];
    stimuli.push_back(apply_variant(image, sweep.kind, value));
    std::copy(stimuli.back().data(), stimuli.back().data() + per, batch.data() + v * per);
  }
  const ForwardResult<Scalar> fwd = model.forward(batch);
  for (const auto& name : taps) fwd.taps.at(name);  // unknown tap → error listing valid ones

  auto sample = [](const Tensor<Scalar>& t, Index n) {
    const Shape s = t.shape();
    Tensor<Scalar> one(Shape{1, s.c, s.h, s.w});
    std::copy(t.data() + n * one.size(), t.data() + (n + 1) * one.size(), one.data());
    return one;
  };
  auto change_row = [&](const Tensor<Scalar>& t) {
    std::vector<double> row;
    const Tensor<Scalar> ref = sample(t, 0);
    for (Index v = 1; v <= variants; ++v) row.push_back(feature_change(ref, sample(t, v)));
    return row;
  };

  ChangeReport report;
  report.kind = sweep.kind;
  report.values = sweep.values;
  report.taps = taps;
  for (const auto& name : taps) report.metrics.push_back(change_row(fwd.taps.at(name).value()));

  auto pathway_mean = [&](const char* tap) {
    const std::vector<double> row = change_row(fwd.taps.at(tap).value());
    double sum = 0;
    Index count = 0;
    for (Index v = 0; v < variants; ++v) {
      if (sweep.values[v] == sweep.identity_value()) continue;
      sum += row[v];
      ++count;
    }
    return count ? sum / static_cast<double>(count) : 0.0;
  };
  report.m_change = pathway_mean("lgn.m");
  report.p_change = pathway_mean("lgn.p");
  report.k_change = pathway_mean("lgn.k");
  report.ordering = pathway_ordering(report.m_change, report.p_change, report.k_change);
  if (sweep.kind == SweepKind::kBrightness) {
    report.expected_ordering = "M<P<K";
    report.ordering_matches_expected = report.ordering == report.expected_ordering;
  }

  const BaselineBlock<Scalar> baseline(model.config().retina.inner_channels(),
                                       model.config().retina.inner_stride, model.config().seed);
  report.baseline_channels = model.config().retina.inner_channels();
  report.baseline_metrics = change_row(baseline(Var<Scalar>(batch)).value());

  if (!out_dir.empty()) {
    const std::string kind = sweep_kind_name(sweep.kind);
    const fs::path root = fs::path(out_dir) / kind;
    auto emit = [&](const fs::path& rel, const Image8& img) {
      write_ppm((fs::path(out_dir) / rel).string(), img);
      report.images.push_back(rel.generic_string());
    };
    std::vector<Image8> stimulus_row;
    for (Index v = 1; v <= variants; ++v) {
      stimulus_row.push_back(tensor_to_image(stimuli[v]));
      emit(fs::path(kind) / ("stimulus_" + value_label(sweep.values[v - 1]) + ".ppm"),
           stimulus_row.back());
    }
    emit(fs::path(kind) / "grid_stimulus.ppm", tile_images(stimulus_row, r));
    for (const auto& name : taps) {
      const Tensor<Scalar>& t = fwd.taps.at(name).value();
      std::vector<Image8> row;
      for (Index v = 1; v <= variants; ++v) {
        row.push_back(feature_map_image(sample(t, v)));
        emit(fs::path(kind) / name / (value_label(sweep.values[v - 1]) + ".ppm"), row.back());
      }
      emit(fs::path(kind) / ("grid_" + name + ".ppm"), tile_images(row, r));
    }
  }
  return report;
}

#define CVSNET_INSTANTIATE_ABLATION(S)                                                         \
  template Tensor<S> adjust_brightness(const Tensor<S>&, double);                             \
  template Tensor<S> rotate_hue(const Tensor<S>&, double);                                    \
  template double feature_change(const Tensor<S>&, const Tensor<S>&);                         \
  template Tensor<S> apply_variant(const Tensor<S>&, SweepKind, double);                      \
  template struct BaselineBlock<S>;                                                           \
  template Image8 feature_map_image(const Tensor<S>&);                                        \
  template Image8 export_feature_map(const Tensor<S>&, const std::string&);                   \
  template Image8 export_channel_grid(const Tensor<S>&, const std::string&, Index);           \
  template ChangeReport run_sweep(const CvsNet<S>&, const Tensor<S>&, const StimulusSweep&,   \
                                  const std::vector<std::string>&, const std::string&);

CVSNET_INSTANTIATE_ABLATION(float)
CVSNET_INSTANTIATE_ABLATION(double)

#undef CVSNET_INSTANTIATE_ABLATION

}  // namespace cvsnet
