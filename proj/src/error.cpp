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

#include "inner/error.hpp"

namespace inner {

std::string_view errc_name(Errc code) {
  switch (code) {
    case Errc::kBadConfig: return "BadConfig";
    case Errc::kInvalidRange: return "InvalidRange";
    case Errc::kPitchOutOfRange: return "PitchOutOfRange";
    case Errc::kDimensionMismatch: return "DimensionMismatch";
    case Errc::kUnsupportedFormat: return "UnsupportedFormat";
    case Errc::kCorruptHeader: return "CorruptHeader";
    case Errc::kParseError: return "ParseError";
    case Errc::kIoError: return "IoError";
    case Errc::kEmptyScore: return "EmptyScore";
    case Errc::kClipTooShort: return "ClipTooShort";
    case Errc::kTooFewFrames: return "TooFewFrames";
    case Errc::kInsufficientData: return "InsufficientData";
    case Errc::kZeroVariance: return "ZeroVariance";
    case Errc::kNonUniformSampling: return "NonUniformSampling";
    case Errc::kNoOverlap: return "NoOverlap";
    case Errc::kEmptyField: return "EmptyField";
    case Errc::kUnharmonizedField: return "UnharmonizedField";
    case Errc::kSingularC2: return "SingularC2";
    case Errc::kDegenerateSpectrum: return "DegenerateSpectrum";
    case Errc::kSingularTransform: return "SingularTransform";
  }
  return "Unknown";
}

int exit_code(Errc code) {
  switch (code) {
    case Errc::kBadConfig:
    case Errc::kInvalidRange:
    case Errc::kPitchOutOfRange:
    case Errc::kDimensionMismatch:
      return 2;
    case Errc::kUnsupportedFormat:
    case Errc::kCorruptHeader:
    case Errc::kParseError:
    case Errc::kIoError:
      return 3;
    case Errc::kSingularC2:
    case Errc::kDegenerateSpectrum:
    case Errc::kSingularTransform:
      return 4;
    case Errc::kEmptyScore:
    case Errc::kClipTooShort:
    case Errc::kTooFewFrames:
    case Errc::kInsufficientData:
    case Errc::kZeroVariance:
    case Errc::kNonUniformSampling:
    case Errc::kNoOverlap:
    case Errc::kEmptyField:
    case Errc::kUnharmonizedField:
      return 5;
  }
  return 1;
}

}  // namespace inner
