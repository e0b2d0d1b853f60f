// Copyright 2026 The bevharmonize Authors.
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

#ifndef BEVHARMONIZE_ERROR_HPP_
#define BEVHARMONIZE_ERROR_HPP_

#include <stdexcept>
#include <string>
#include <string_view>

namespace bevh
{

enum class ErrorCode {
  // core_geometry
  kGhostCameraProjection,
  kBehindCamera,
  kZeroDimension,
  kInvalidCamera,
  kInvalidBox,
  // dataset_io
  kParseError,
  kUnknownCategory,
  kInvalidRig,
  kTargetTooSmall,
  kInvalidManifest,
  // pdir
  kDegenerateGeometry,
  kVerticalPlane,
  kNonPositiveDepth,
  kNoFrontCamera,
  kInsufficientGroundPoints,
  kInvalidSplit,
  // experts
  kEmptyInput,
  kNonFinitePdir,
  kZeroMax,
  kShapeMismatch,
  kBadK,
  kInvalidProbability,
  // metrics
  kUnknownSampleId,
  kEmptyGroundTruth,
  // plumbing
  kIoError,
};

std::string_view error_code_name(ErrorCode code);

/// Every failure raised by the library carries one of the codes above. The
/// CLI maps kIoError to exit status 3 and everything else to 2.
class Error : public std::runtime_error
{
public:
  Error(ErrorCode code, const std::string & message)
  : std::runtime_error(std::string(error_code_name(code)) + ": " + message), code_(code)
  {
  }

  ErrorCode code() const noexcept { return code_; }

private:
  ErrorCode code_;
};

}  // namespace bevh

#endif  // BEVHARMONIZE_ERROR_HPP_
