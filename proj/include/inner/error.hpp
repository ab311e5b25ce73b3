// Copyright 2026 The inner-series Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef INNER_ERROR_HPP_
#define INNER_ERROR_HPP_

#include <stdexcept>
#include <string>
#include <string_view>

namespace inner {

/// Every failure the library can raise. The CLI maps these onto exit codes
/// through exit_code().
enum class Errc {
  kBadConfig,
  kInvalidRange,
  kPitchOutOfRange,
  kDimensionMismatch,
  kUnsupportedFormat,
  kCorruptHeader,
  kParseError,
  kIoError,
  kEmptyScore,
  kClipTooShort,
  kTooFewFrames,
  kInsufficientData,
  kZeroVariance,
  kNonUniformSampling,
  kNoOverlap,
  kEmptyField,
  kUnharmonizedField,
  kSingularC2,
  kDegenerateSpectrum,
  kSingularTransform,
};

std::string_view errc_name(Errc code);

/// 2 config, 3 input/IO, 4 numerical, 5 insufficient data.
int exit_code(Errc code);

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what),
        code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace inner

#endif  // INNER_ERROR_HPP_
