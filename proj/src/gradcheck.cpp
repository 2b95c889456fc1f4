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

#include "cvsnet/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

namespace cvsnet {

namespace {

TensorD random_tensor(const Shape& s, Rng& rng, double scale = 1.0) {
  TensorD t(s);
  for (Index i = 0; i < t.size(); ++i) t.array()[i] = scale * rng.normal();
  return t;
}

// Scalar loss from an arbitrary output: a fixed random projection.
class Projection {
 public:
  explicit Projection(std::uint64_t seed) : seed_(seed) {}
  VarD operator()(const VarD& y) {
    if (y.value().size() == 1) return sum(y);
    if (!(weights_.shape() == y.shape())) {
      Rng rng = Rng::derive(seed_, {0x9607EC7});
      weights_ = random_tensor(y.shape(), rng);
    }
    return weighted_sum(y, weights_);
  }

 private:
  std::uint64_t seed_;
  TensorD weights_;
};

std::vector<Index> pick_coords(Index size, Index limit, Rng& rng) {
  std::vector<Index> all(static_cast<std::size_t>(size));
  std::iota(all.begin(), all.end(), Index{0});
  if (size <= limit) return all;
  for (Index i = 0; i < limit; ++i) {
    const Index j = i + static_cast<Index>(rng.below(static_cast<std::uint64_t>(size - i)));
    std::swap(all[i], all[j]);
  }
  all.resize(static_cast<std::size_t>(limit));
  std::sort(all.begin(), all.end());
  return all;
}

// Compares one coordinate; returns false when it is skipped as a kink.
bool compare(double analytic, double f_plus, double f_zero, double f_minus,
             const GradcheckOptions& opts, GradcheckResult& result, const std::string& where) {
  const double h = opts.step;
  const double central = (f_plus - f_minus) / (2 * h);
  const double forward = (f_plus - f_zero) / h;
  const double backward = (f_zero - f_minus) / h;
  if (std::abs(forward - backward) > opts.kink_threshold * std::max(1.0, std::abs(central))) {
    ++result.skipped;
    return false;
  }
  const double denom = std::max({std::abs(analytic), std::abs(central), opts.floor});
  const double err = std::abs(analytic - central) / denom;
  ++result.checked;
  if (err > result.max_error) {
    result.max_error = err;
    result.worst = where;
  }
  return true;
}

void finish(GradcheckResult& r, const GradcheckOptions& opts) {
  r.tolerance = opts.tolerance;
  const Index total = r.checked + r.skipped;
  r.passed = r.checked > 0 && r.max_error < opts.tolerance &&
             static_cast<double>(r.skipped) <= opts.max_skipped_fraction * static_cast<double>(total);
}

}  // namespace

std::string GradcheckResult::summary() const {
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%-32s %s  max_rel_err=%.3e (tol %.0e) checked=%lld skipped=%lld%s%s",
                name.c_str(), passed ? "PASS" : "FAIL", max_error, tolerance,
                static_cast<long long>(checked), static_cast<long long>(skipped),
                worst.empty() ? "" : " worst=", worst.c_str());
  return buf;
}

GradcheckResult check_gradients(const std::string& name, const std::vector<TensorD>& inputs,
                                const GradFn& fn, const GradcheckOptions& opts) {
  GradcheckResult result;
  result.name = name;
  Projection project(opts.seed);

  std::vector<VarD> vars;
  for (const auto& t : inputs) vars.emplace_back(t, true);
  const VarD loss = project(fn(vars));
  backward(loss);
  std::vector<TensorD> analytic;
  for (const auto& v : vars) analytic.push_back(v.has_grad() ? v.grad() : TensorD(v.shape()));

  auto evaluate = [&](const std::vector<TensorD>& values) {
    NoGradGuard no_grad;
    std::vector<VarD> vs;
    for (const auto& t : values) vs.emplace_back(t, false);
    return project(fn(vs)).value().data()[0];
  };
  const double f_zero = evaluate(inputs);
  Rng rng = Rng::derive(opts.seed, {0xC00D5});
  std::vector<TensorD> work = inputs;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    for (Index i : pick_coords(inputs[k].size(), opts.max_coords_per_input, rng)) {
      const double x = inputs[k].data()[i];
      work[k].data()[i] = x + opts.step;
      const double f_plus = evaluate(work);
      work[k].data()[i] = x - opts.step;
      const double f_minus = evaluate(work);
      work[k].data()[i] = x;
      compare(analytic[k].data()[i], f_plus, f_zero, f_minus, opts, result,
              "input " + std::to_string(k) + "[" + std::to_string(i) + "]");
    }
  }
  finish(result, opts);
  return result;
}

GradcheckResult check_parameter_gradients(
    const std::string& name, ParameterSet<double>& params, const std::function<VarD()>& loss,
    const std::vector<std::pair<std::size_t, Index>>& coords, const GradcheckOptions& opts) {
  GradcheckResult result;
  result.name = name;
  params.zero_grad();
  backward(loss());
  std::vector<TensorD> analytic;
  for (const auto& p : params) analytic.push_back(p.var.has_grad() ? p.var.grad() : TensorD(p.var.shape()));

  auto evaluate = [&] {
    NoGradGuard no_grad;
    return loss().value().data()[0];
  };
  const double f_zero = evaluate();
  for (const auto& [k, i] : coords) {
    VarD var = params[k].var;
    double& x = var.mutable_value().data()[i];
    const double x0 = x;
    x = x0 + opts.step;
    const double f_plus = evaluate();
    x = x0 - opts.step;
    const double f_minus = evaluate();
    x = x0;
    compare(analytic[k].data()[i], f_plus, f_zero, f_minus, opts, result,
            params[k].name + "[" + std::to_string(i) + "]");
  }
  finish(result, opts);
  return result;
}

GradcheckResult end_to_end_gradcheck(std::uint64_t seed, Index min_coords, double tolerance) {
  ModelConfig cfg = ModelConfig::preset("tiny");
  cfg.seed = seed;
  cfg.conv_bias = true;
  CvsNetD model(cfg);
  Rng rng = Rng::derive(seed, {0xE2E});
  const Index r = cfg.input_resolution;
  TensorD images(Shape{2, 3, r, r});
  for (Index i = 0; i < images.size(); ++i) images.array()[i] = rng.uniform();
  const std::vector<int> labels = {0, static_cast<int>(cfg.head.classes - 1)};

  ParameterSet<double>& params = model.parameters();
  const Index per = (min_coords + static_cast<Index>(params.size()) - 1) /
                    static_cast<Index>(params.size());
  std::vector<std::pair<std::size_t, Index>> coords;
  for (std::size_t k = 0; k < params.size(); ++k) {
    for (Index i : pick_coords(params[k].var.value().size(), std::max<Index>(per, 1), rng)) {
      coords.emplace_back(k, i);
    }
  }
  GradcheckOptions opts;
  opts.seed = seed;
  opts.tolerance = tolerance;
  return check_parameter_gradients(
      "end_to_end.tiny_model", params,
      [&] {
        const ForwardResult<double> out = model.forward(images);
        return smoothed_cross_entropy(out.logits, std::span<const int>(labels), 0.1);
      },
      coords, opts);
}

std::vector<GradcheckResult> run_gradcheck_suite(std::uint64_t seed) {
  std::vector<GradcheckResult> results;
  GradcheckOptions opts;
  opts.seed = seed;
  Rng rng = Rng::derive(seed, {0x5017E});
  auto rt = [&](const Shape& s, double scale = 1.0) { return random_tensor(s, rng, scale); };
  auto run = [&](const std::string& name, std::vector<TensorD> inputs, const GradFn& fn) {
    results.push_back(check_gradients(name, inputs, fn, opts));
  };

  const Shape s{2, 3, 4, 5};
  run("add", {rt(s), rt(s)}, [](const auto& v) { return v[0] + v[1]; });
  run("sub", {rt(s), rt(s)}, [](const auto& v) { return v[0] - v[1]; });
  run("mul", {rt(s), rt(s)}, [](const auto& v) { return mul(v[0], v[1]); });
  run("scale", {rt(s)}, [](const auto& v) { return v[0] * 1.7; });
  run("sum", {rt(s)}, [](const auto& v) { return sum(v[0]); });
  run("mean", {rt(s)}, [](const auto& v) { return mean(v[0]); });
  {
    const TensorD w = rt(s);
    run("weighted_sum", {rt(s)}, [w](const auto& v) { return weighted_sum(v[0], w); });
  }
  run("scaled_relu", {rt(s)}, [](const auto& v) { return scaled_relu(v[0], -0.3); });
  run("scaled_relu.per_channel", {rt(s)}, [](const auto& v) {
    const std::vector<double> g = {1.0, -0.3, 2.0};
    return scaled_relu(v[0], std::span<const double>(g));
  });
  run("scale_channels", {rt(s)}, [](const auto& v) {
    const std::vector<double> g = {0.5, -1.5, 3.0};
    return scale_channels(v[0], std::span<const double>(g));
  });
  run("gelu", {rt(s)}, [](const auto& v) { return gelu(v[0]); });
  run("tanh", {rt(s)}, [](const auto& v) { return cvsnet::tanh(v[0]); });
  run("channel_shuffle", {rt(Shape{2, 6, 3, 3})},
      [](const auto& v) { return channel_shuffle(v[0], Index{2}); });
  run("select_channels", {rt(Shape{2, 6, 3, 3})}, [](const auto& v) {
    const std::vector<Index> idx = {2, 0, 2, 5};
    return select_channels(v[0], std::span<const Index>(idx));
  });
  run("slice_channels", {rt(Shape{2, 6, 3, 3})},
      [](const auto& v) { return slice_channels(v[0], Index{1}, Index{3}); });
  run("concat_channels", {rt(Shape{2, 2, 3, 3}), rt(Shape{2, 4, 3, 3})},
      [](const auto& v) { return concat_channels({v[0], v[1]}); });
  run("reshape", {rt(s)}, [](const auto& v) { return reshape(v[0], Shape{2, 3, 1, 20}); });
  run("token_linear", {rt(Shape{2, 3, 2, 3}), rt(Shape{1, 1, 4, 6}), rt(Shape{1, 1, 1, 4})},
      [](const auto& v) { return token_linear(v[0], v[1], v[2]); });
  run("token_linear.no_bias", {rt(Shape{2, 3, 2, 3}), rt(Shape{1, 1, 4, 6})},
      [](const auto& v) { return token_linear(v[0], v[1], VarD()); });
  run("layer_norm", {rt(Shape{2, 5, 3, 3}), rt(Shape{1, 5, 1, 1}), rt(Shape{1, 5, 1, 1})},
      [](const auto& v) { return layer_norm_channels(v[0], v[1], v[2], 1e-5); });
  run("global_avg_pool", {rt(s)}, [](const auto& v) { return global_avg_pool(v[0]); });
  run("smoothed_cross_entropy", {rt(Shape{3, 5, 1, 1}, 2.0)}, [](const auto& v) {
    const std::vector<int> labels = {0, 4, 2};
    return smoothed_cross_entropy(v[0], std::span<const int>(labels), 0.1);
  });

  struct ConvCase {
    const char* name;
    ConvSpec spec;
    Index size;
  };
  const std::vector<ConvCase> convs = {
      {"conv2d.3x3_bias", ConvSpec::same(3, 4, 3, 3, 1, 1, true), 6},
      {"conv2d.5x5_stride2", ConvSpec::same(2, 3, 5, 5, 2), 7},
      {"conv2d.grouped", ConvSpec::same(4, 6, 3, 3, 1, 2), 5},
      {"conv2d.depthwise", ConvSpec::same(3, 6, 3, 3, 2, 3), 6},
      {"conv2d.pointwise", ConvSpec{4, 3, 1, 1, 1, 0, 0, 1, true}, 4},
      {"conv2d.1x5", ConvSpec{3, 2, 1, 5, 1, 0, 2, 1, false}, 6},
      {"conv2d.5x1", ConvSpec{3, 2, 5, 1, 1, 2, 0, 1, false}, 6},
  };
  for (const auto& c : convs) {
    std::vector<TensorD> in = {rt(Shape{2, c.spec.in_channels, c.size, c.size}),
                               rt(c.spec.weight_shape(), 0.5)};
    if (c.spec.has_bias) in.push_back(rt(Shape{1, 1, 1, c.spec.out_channels}));
    const ConvSpec spec = c.spec;
    run(c.name, in, [spec](const auto& v) {
      return conv2d(v[0], v[1], v.size() > 2 ? v[2] : VarD(), spec);
    });
  }

  for (Index k : {Index{1}, Index{2}}) {
    run("difference_map.k" + std::to_string(k), {rt(Shape{2, 2, 4, 5})}, [k](const auto& v) {
      std::vector<VarD> maps;
      for (Direction d : kComplexDirections) maps.push_back(difference_map(v[0], d, k));
      return concat_channels(std::span<const VarD>(maps));
    });
  }

  {
    Rng init = Rng::derive(seed, {0xC5});
    const std::vector<double> cg = {1.0, -0.3}, sg = {-0.3, 1.0};
    const CenterSurround<double> cs(1, 2, 1, 3, 5, 1, cg, sg, init);
    run("center_surround", {rt(Shape{2, 1, 6, 6}), cs.center.weight.value(), cs.surround.weight.value()},
        [cs](const auto& v) {
          CenterSurround<double> unit = cs;
          unit.center.weight = v[1];
          unit.surround.weight = v[2];
          return unit(v[0]);
        });
  }

  {
    Rng init = Rng::derive(seed, {0x313});
    const MixerBlockSpec spec{6, 3, 4, 5, Activation::kGelu};
    const MixerBlock<double> block(spec, 1e-5, init);
    run("mixer_block", {rt(Shape{2, 3, 2, 3}), block.token_w1.value(), block.token_w2.value(),
                        block.channel_fc1.weight.value()},
        [block](const auto& v) {
          MixerBlock<double> b = block;
          b.token_w1 = v[1];
          b.token_w2 = v[2];
          b.channel_fc1.weight = v[3];
          return group_mix(b, v[0]);
        });
  }

  results.push_back(end_to_end_gradcheck(seed));
  return results;
}

}  // namespace cvsnet
