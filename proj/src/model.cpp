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

#include "cvsnet/model.hpp"

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace cvsnet {

using nlohmann::json;

namespace {

Index same_out(Index size, Index stride) { return (size - 1) / stride + 1; }

template <typename Fn>
void in_block(const char* block, Fn&& fn) {
  try {
    fn();
  } catch (const ShapeError& e) {
    throw ShapeError(detail::concat("config block '", block, "': ", e.what()));
  }
}

// Reads the listed keys of `j` into their fields; any other key is an error.
class FieldReader {
 public:
  FieldReader(const json& j, std::string where) : j_(j), where_(std::move(where)) {
    CVSNET_CHECK(j.is_object(), ArgumentError, "config: '", where_, "' must be a JSON object");
  }
  template <typename T>
  FieldReader& field(const char* key, T& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return *this;
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception& e) {
      throw ArgumentError(detail::concat("config: bad value for '", where_, ".", key, "': ",
                                         e.what()));
    }
    return *this;
  }
  void finish() const {
    for (const auto& item : j_.items()) {
      CVSNET_CHECK(seen_.count(item.key()) > 0, ArgumentError, "config: unknown key '", where_,
                   where_.empty() ? "" : ".", item.key(), "'");
    }
  }

 private:
  const json& j_;
  std::string where_;
  std::set<std::string> seen_;
};

json retina_json(const RetinaConfig& c) {
  return json{{"units_per_cell_type", c.units_per_cell_type},
              {"small_kernel", c.small_kernel},
              {"large_kernel", c.large_kernel},
              {"m_center_kernel", c.m_center_kernel},
              {"m_surround_kernel", c.m_surround_kernel},
              {"inner_stride", c.inner_stride},
              {"outer_stride", c.outer_stride},
              {"inhibitory_gain", c.inhibitory_gain}};
}

json lgn_json(const LgnConfig& c) {
  return json{{"m_expand", c.m_expand}, {"p_expand", c.p_expand}, {"k_expand", c.k_expand},
              {"m_kernel", c.m_kernel}, {"p_kernel", c.p_kernel}, {"k_kernel", c.k_kernel},
              {"stride", c.stride}};
}

json striate_json(const StriateConfig& c) {
  return json{{"orient_n", c.orient_n},
              {"m_kernel", c.m_kernel},
              {"pib_kernel", c.pib_kernel},
              {"blob_kernel", c.blob_kernel},
              {"blob_branch_channels", c.blob_branch_channels},
              {"shift", c.shift},
              {"stride", c.stride}};
}

json head_json(const HeadConfig& c) {
  return json{{"classes", c.classes},
              {"token_expand", c.token_expand},
              {"channel_expand", c.channel_expand},
              {"ln_eps", c.ln_eps},
              {"activation", activation_name(c.activation)}};
}

}  // namespace

ModelConfig ModelConfig::preset(const std::string& name) {
  ModelConfig c;
  if (name == "default" || name == "imagenet") {
    c.name = name;
    return c;
  }
  if (name == "cifar") {
    c.name = name;
    c.input_resolution = 32;
    c.retina.inner_stride = 1;
    c.retina.outer_stride = 2;
    c.lgn.stride = 1;
    c.striate.stride = 2;
    c.head.classes = 10;
    return c;
  }
  if (name == "tiny") {
    c.name = name;
    c.input_resolution = 12;
    c.retina.units_per_cell_type = 1;
    c.retina.small_kernel = 3;
    c.retina.large_kernel = 5;
    c.retina.m_center_kernel = 3;
    c.retina.m_surround_kernel = 5;
    c.retina.inner_stride = 1;
    c.retina.outer_stride = 2;
    c.lgn.m_kernel = 3;
    c.lgn.stride = 1;
    c.striate.orient_n = 3;
    c.striate.m_kernel = 3;
    c.striate.blob_branch_channels = 2;
    c.striate.stride = 2;
    c.head.classes = 3;
    return c;
  }
  throw ArgumentError("unknown model preset '" + name + "' (expected default, imagenet, cifar, tiny)");
}

ModelGeometry model_geometry(const ModelConfig& cfg) {
  ModelGeometry g;
  const Index u = cfg.retina.units_per_cell_type;
  g.input = cfg.input_resolution;
  g.inner = same_out(g.input, cfg.retina.inner_stride);
  g.outer = same_out(g.inner, cfg.retina.outer_stride);
  g.lgn = same_out(g.outer, cfg.lgn.stride);
  g.striate = same_out(g.lgn, cfg.striate.stride);
  g.inner_channels = cfg.retina.inner_channels();
  g.outer_channels = cfg.retina.outer_channels();
  g.lgn_m = 2 * cfg.lgn.m_expand * 2 * u;
  g.lgn_p = 2 * cfg.lgn.p_expand * 4 * u;
  g.lgn_k = 2 * cfg.lgn.k_expand * 4 * u;
  const Index b = 3 * cfg.striate.blob_branch_channels;
  g.striate_channels = {2 * g.lgn_m, g.lgn_m, 2 * g.lgn_p, g.lgn_p, b, b};
  return g;
}

void ModelConfig::validate() const {
  CVSNET_CHECK(input_resolution > 0, ShapeError, "config: input resolution must be positive");
  in_block("retina", [&] { retina.validate(); });
  in_block("lgn", [&] { lgn.validate(); });
  in_block("striate", [&] { striate.validate(); });
  in_block("head", [&] { head.validate(); });
  const ModelGeometry g = model_geometry(*this);
  CVSNET_CHECK(g.striate >= 2, ShapeError, "config block 'striate': input ", input_resolution,
               " with the configured strides leaves a ", g.striate, "x", g.striate,
               " token grid, need at least 2x2");
  CVSNET_CHECK(striate.shift < g.lgn && striate.shift < g.striate, ShapeError,
               "config block 'striate': difference-map shift ", striate.shift,
               " must be smaller than the ", g.striate, "x", g.striate, " map");
}

json ModelConfig::to_json_value() const {
  return json{{"name", name},
              {"input_resolution", input_resolution},
              {"seed", seed},
              {"conv_bias", conv_bias},
              {"retina", retina_json(retina)},
              {"lgn", lgn_json(lgn)},
              {"striate", striate_json(striate)},
              {"head", head_json(head)}};
}

std::string ModelConfig::to_json() const { return to_json_value().dump(); }

ModelConfig ModelConfig::from_json_value(const json& j) {
  CVSNET_CHECK(j.is_object(), ArgumentError, "config: top level must be a JSON object");
  std::string preset_name = "default";
  if (j.contains("name")) {
    CVSNET_CHECK(j.at("name").is_string(), ArgumentError, "config: 'name' must be a string");
    preset_name = j.at("name").get<std::string>();
  }
  ModelConfig c = preset(preset_name);
  FieldReader top(j, "");
  top.field("name", c.name)
      .field("input_resolution", c.input_resolution)
      .field("seed", c.seed)
      .field("conv_bias", c.conv_bias);
  json unused = json::object();
  top.field("retina", unused).field("lgn", unused).field("striate", unused).field("head", unused);
  top.finish();

  if (j.contains("retina")) {
    FieldReader r(j.at("retina"), "retina");
    r.field("units_per_cell_type", c.retina.units_per_cell_type)
        .field("small_kernel", c.retina.small_kernel)
        .field("large_kernel", c.retina.large_kernel)
        .field("m_center_kernel", c.retina.m_center_kernel)
        .field("m_surround_kernel", c.retina.m_surround_kernel)
        .field("inner_stride", c.retina.inner_stride)
        .field("outer_stride", c.retina.outer_stride)
        .field("inhibitory_gain", c.retina.inhibitory_gain)
        .finish();
  }
  if (j.contains("lgn")) {
    FieldReader r(j.at("lgn"), "lgn");
    r.field("m_expand", c.lgn.m_expand)
        .field("p_expand", c.lgn.p_expand)
        .field("k_expand", c.lgn.k_expand)
        .field("m_kernel", c.lgn.m_kernel)
        .field("p_kernel", c.lgn.p_kernel)
        .field("k_kernel", c.lgn.k_kernel)
        .field("stride", c.lgn.stride)
        .finish();
  }
  if (j.contains("striate")) {
    FieldReader r(j.at("striate"), "striate");
    r.field("orient_n", c.striate.orient_n)
        .field("m_kernel", c.striate.m_kernel)
        .field("pib_kernel", c.striate.pib_kernel)
        .field("blob_kernel", c.striate.blob_kernel)
        .field("blob_branch_channels", c.striate.blob_branch_channels)
        .field("shift", c.striate.shift)
        .field("stride", c.striate.stride)
        .finish();
  }
  if (j.contains("head")) {
    FieldReader r(j.at("head"), "head");
    std::string act = activation_name(c.head.activation);
    r.field("classes", c.head.classes)
        .field("token_expand", c.head.token_expand)
        .field("channel_expand", c.head.channel_expand)
        .field("ln_eps", c.head.ln_eps)
        .field("activation", act)
        .finish();
    c.head.activation = parse_activation(act);
  }
  c.validate();
  return c;
}

ModelConfig ModelConfig::from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ArgumentError(detail::concat("config: invalid JSON: ", e.what()));
  }
  return from_json_value(j);
}

ModelConfig ModelConfig::load(const std::string& path) {
  std::ifstream in(path);
  CVSNET_CHECK(in.good(), IoError, "cannot open config file '", path, "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json(ss.str());
}

template <typename Scalar>
const Var<Scalar>& Taps<Scalar>::at(const std::string& name) const {
  for (const auto& [n, v] : entries) {
    if (n == name) return v;
  }
  std::string valid;
  for (const auto& [n, v] : entries) valid += (valid.empty() ? "" : ", ") + n;
  throw ArgumentError("unknown tap '" + name + "'; valid taps: " + valid);
}

template <typename Scalar>
bool Taps<Scalar>::contains(const std::string& name) const {
  for (const auto& [n, v] : entries) {
    if (n == name) return true;
  }
  return false;
}

template <typename Scalar>
std::vector<std::string> Taps<Scalar>::names() const {
  std::vector<std::string> out;
  for (const auto& [n, v] : entries) out.push_back(n);
  return out;
}

template <typename Scalar>
CvsNet<Scalar>::CvsNet(const ModelConfig& config) : cfg_(config) {
  cfg_.validate();
  geometry_ = model_geometry(cfg_);
  Rng rng(cfg_.seed);
  inner_ = InnerPlexiform<Scalar>(cfg_.retina, rng);
  outer_ = OuterPlexiform<Scalar>(cfg_.retina, rng);
  inner_partition_ = inner_.partition();
  outer_partition_ = outer_.partition();
  lgn_ = Lgn<Scalar>(cfg_.lgn, outer_partition_, cfg_.conv_bias, rng);
  striate_ = StriateCortex<Scalar>(cfg_.striate, geometry_.lgn_m, geometry_.lgn_p, geometry_.lgn_k,
                                   cfg_.conv_bias, rng);
  head_ = AbstractHead<Scalar>(cfg_.head, geometry_.striate_channels, geometry_.tokens(), rng);
  inner_.collect(params_, "inner");
  outer_.collect(params_, "outer");
  lgn_.collect(params_, "lgn");
  striate_.collect(params_, "striate");
  head_.collect(params_, "head");
}

template <typename Scalar>
void CvsNet<Scalar>::check_images(const Shape& s) const {
  const Index r = cfg_.input_resolution;
  CVSNET_CHECK(s.n >= 1 && s.c == 3 && s.h == r && s.w == r, ShapeError, "model '", cfg_.name,
               "' expects images of shape (n, 3, ", r, ", ", r, "), got ", s);
}

template <typename Scalar>
RetinaResult<Scalar> CvsNet<Scalar>::retina_forward(const Var<Scalar>& images) const {
  check_images(images.shape());
  RetinaResult<Scalar> r;
  r.inner = inner_(images);
  const Index color = inner_partition_.at("grey").begin;
  const ChannelRange& grey = inner_partition_.at("grey");
  r.outer = outer_(slice_channels(r.inner, Index{0}, color),
                   slice_channels(r.inner, grey.begin, grey.count));
  return r;
}

template <typename Scalar>
PathwayBundle<Scalar> CvsNet<Scalar>::lgn_forward(const Var<Scalar>& outer) const {
  return lgn_(outer, outer_partition_);
}

template <typename Scalar>
StriateOutputs<Scalar> CvsNet<Scalar>::striate_forward(const PathwayBundle<Scalar>& bundle) const {
  return striate_(bundle);
}

template <typename Scalar>
Var<Scalar> CvsNet<Scalar>::head_forward(const StriateOutputs<Scalar>& s) const {
  return head_(s);
}

template <typename Scalar>
ForwardResult<Scalar> CvsNet<Scalar>::forward(const Var<Scalar>& images) const {
  const RetinaResult<Scalar> retina = retina_forward(images);
  const PathwayBundle<Scalar> bundle = lgn_forward(retina.outer);
  const StriateOutputs<Scalar> s = striate_forward(bundle);
  ForwardResult<Scalar> out;
  auto& e = out.taps.entries;
  e.emplace_back("inner_out", retina.inner);
  e.emplace_back("outer_out", retina.outer);
  e.emplace_back("lgn.m", bundle.m);
  e.emplace_back("lgn.p", bundle.p);
  e.emplace_back("lgn.k", bundle.k);
  for (auto& [name, v] : s.named()) e.emplace_back("striate." + name, v);
  out.logits = head_forward(s);
  return out;
}

std::string CostReport::text() const {
  std::ostringstream os;
  char line[160];
  std::snprintf(line, sizeof(line), "%-10s %14s %18s\n", "block", "params", "flops");
  os << line;
  for (const auto& b : blocks) {
    std::snprintf(line, sizeof(line), "%-10s %14lld %18llu\n", b.name.c_str(),
                  static_cast<long long>(b.params), static_cast<unsigned long long>(b.flops()));
    os << line;
  }
  std::snprintf(line, sizeof(line), "%-10s %14lld %18llu\n", "total", static_cast<long long>(params),
                static_cast<unsigned long long>(flops()));
  os << line;
  std::snprintf(line, sizeof(line), "resolution %lld, params %.2fM, flops %.3fG\n",
                static_cast<long long>(resolution), static_cast<double>(params) / 1e6,
                static_cast<double>(flops()) / 1e9);
  os << line;
  return os.str();
}

json CostReport::to_json_value() const {
  json blocks_json = json::array();
  for (const auto& b : blocks) {
    blocks_json.push_back(json{{"name", b.name}, {"params", b.params}, {"macs", b.macs},
                               {"flops", b.flops()}});
  }
  return json{{"params", params},
              {"macs", macs},
              {"flops", flops()},
              {"resolution", resolution},
              {"blocks", blocks_json}};
}

template <typename Scalar>
CostReport count_params_flops(const CvsNet<Scalar>& model) {
  NoGradGuard no_grad;
  const ModelConfig& cfg = model.config();
  const Index r = cfg.input_resolution;
  const Var<Scalar> images(Tensor<Scalar>(Shape{1, 3, r, r}));

  auto block_params = [](const auto& block, const char* prefix) {
    ParameterSet<Scalar> p;
    block.collect(p, prefix);
    return p;
  };

  CostReport report;
  report.resolution = r;
  Var<Scalar> inner, outer;
  report.blocks.push_back(count_cost("inner", block_params(model.inner(), "inner"),
                                     [&] { inner = model.inner()(images); }));
  const ChannelPartition& ip = model.inner_partition();
  report.blocks.push_back(count_cost("outer", block_params(model.outer(), "outer"), [&] {
    const ChannelRange& grey = ip.at("grey");
    outer = model.outer()(slice_channels(inner, Index{0}, grey.begin),
                          slice_channels(inner, grey.begin, grey.count));
  }));
  PathwayBundle<Scalar> bundle;
  report.blocks.push_back(count_cost("lgn", block_params(model.lgn(), "lgn"),
                                     [&] { bundle = model.lgn_forward(outer); }));
  StriateOutputs<Scalar> s;
  report.blocks.push_back(count_cost("striate", block_params(model.striate(), "striate"),
                                     [&] { s = model.striate_forward(bundle); }));
  report.blocks.push_back(
      count_cost("head", block_params(model.head(), "head"), [&] { model.head_forward(s); }));
  for (const auto& b : report.blocks) {
    report.params += b.params;
    report.macs += b.macs;
  }
  return report;
}

template struct Taps<float>;
template struct Taps<double>;
template class CvsNet<float>;
template class CvsNet<double>;
template CostReport count_params_flops(const CvsNet<float>&);
template CostReport count_params_flops(const CvsNet<double>&);

}  // namespace cvsnet
