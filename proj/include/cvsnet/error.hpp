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

#ifndef CVSNET_ERROR_HPP_
#define CVSNET_ERROR_HPP_

#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>

namespace cvsnet {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Tensor shapes or configuration values do not fit together.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Invalid argument value (bad selector, out-of-range shift, ...).
class ArgumentError : public Error {
 public:
  using Error::Error;
};

/// A computation produced NaN or Inf.
class NonFiniteError : public Error {
 public:
  using Error::Error;
};

/// Reading or writing a file failed.
class IoError : public Error {
 public:
  using Error::Error;
};

namespace detail {

template <typename... Args>
std::string concat(Args&&... args) {
  std::ostringstream os;
  (os << ... << std::forward<Args>(args));
  return os.str();
}

}  // namespace detail

#define CVSNET_CHECK(cond, ErrorType, ...)                         \
  do {                                                             \
    if (!(cond)) {                                                 \
      throw ErrorType(::cvsnet::detail::concat(__VA_ARGS__));      \
    }                                                              \
  } while (false)

}  // namespace cvsnet

#endif  // CVSNET_ERROR_HPP_
