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

// Central finite-difference checks of reverse-mode gradients, in double.
//
// Non-scalar outputs are reduced with a fixed random projection. The error
// of one coordinate is |analytic − numeric| / max(|analytic|, |numeric|,
// floor). Coordinates whose one-sided differences disagree sit on a
// rectifier kink and are skipped.

#ifndef CVSNET_GRADCHECK_HPP_
#define CVSNET_GRADCHECK_HPP_

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "cvsnet/model.hpp"

namespace cvsnet {

struct GradcheckOptions {
  double step = 6e-6;
  double tolerance = 1e-4;
  double floor = 1e-6;
  double kink_threshold = 1e-4;
  Index max_coords_per_input = 48;
  double max_skipped_fraction = 0.1;
  std::uint64_t seed = 0;
};

struct GradcheckResult {
  std::string name;
  Index checked = 0;
  Index skipped = 0;
  double max_error = 0;
  double tolerance = 0;
  bool passed = false;
  std::string worst;  // location of max_error

  std::string summary() const;
};

using GradFn = std::function<VarD(const std::vector<VarD>&)>;

/// Checks d(fn)/d(inputs) for every input tensor.
GradcheckResult check_gradients(const std::string& name, const std::vector<TensorD>& inputs,
                                const GradFn& fn, const GradcheckOptions& opts);

/// Checks d(loss)/d(parameter) at the listed (parameter index, element)
/// coordinates, perturbing the parameters in place.
GradcheckResult check_parameter_gradients(
    const std::string& name, ParameterSet<double>& params,
    const std::function<VarD()>& loss,
    const std::vector<std::pair<std::size_t, Index>>& coords, const GradcheckOptions& opts);

/// Every differentiable operation plus the end-to-end tiny model.
std::vector<GradcheckResult> run_gradcheck_suite(std::uint64_t seed);

/// End-to-end check on the tiny preset over at least `min_coords`
/// parameter coordinates drawn from every parameter tensor.
GradcheckResult end_to_end_gradcheck(std::uint64_t seed, Index min_coords = 100,
                                     double tolerance = 1e-3);

}  // namespace cvsnet

#endif  // CVSNET_GRADCHECK_HPP_
