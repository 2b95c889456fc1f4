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

#ifndef CVSNET_PARTITION_HPP_
#define CVSNET_PARTITION_HPP_

#include <string>
#include <vector>

#include "cvsnet/tensor.hpp"

namespace cvsnet {

struct ChannelRange {
  std::string name;
  Index begin = 0;
  Index count = 0;

  friend bool operator==(const ChannelRange&, const ChannelRange&) = default;
};

/// Named contiguous channel groups of a block output, in channel order.
class ChannelPartition {
 public:
  ChannelPartition() = default;

  ChannelPartition& append(std::string name, Index count) {
    ranges_.push_back({std::move(name), total(), count});
    return *this;
  }

  const std::vector<ChannelRange>& ranges() const { return ranges_; }
  bool empty() const { return ranges_.empty(); }
  Index total() const { return ranges_.empty() ? 0 : ranges_.back().begin + ranges_.back().count; }

  bool contains(const std::string& name) const {
    for (const auto& r : ranges_) {
      if (r.name == name) return true;
    }
    return false;
  }

  const ChannelRange& at(const std::string& name) const {
    for (const auto& r : ranges_) {
      if (r.name == name) return r;
    }
    throw ShapeError("channel partition has no group named '" + name + "'");
  }

  friend bool operator==(const ChannelPartition&, const ChannelPartition&) = default;

 private:
  std::vector<ChannelRange> ranges_;
};

}  // namespace cvsnet

#endif  // CVSNET_PARTITION_HPP_
