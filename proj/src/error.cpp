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

#include "bevharmonize/error.hpp"

namespace bevh
{

std::string_view error_code_name(ErrorCode code)
{
  switch (code) {
    case ErrorCode::kGhostCameraProjection:
      return "GhostCameraProjection";
    case ErrorCode::kBehindCamera:
      return "BehindCamera";
    case ErrorCode::kZeroDimension:
      return "ZeroDimension";
    case ErrorCode::kInvalidCamera:
      return "InvalidCamera";
    case ErrorCode::kInvalidBox:
      return "InvalidBox";
    case ErrorCode::kParseError:
      return "ParseError";
    case ErrorCode::kUnknownCategory:
      return "UnknownCategory";
    case ErrorCode::kInvalidRig:
      return "InvalidRig";
    case ErrorCode::kTargetTooSmall:
      return "TargetTooSmall";
    case ErrorCode::kInvalidManifest:
      return "InvalidManifest";
    case ErrorCode::kDegenerateGeometry:
      return "DegenerateGeometry";
    case ErrorCode::kVerticalPlane:
      return "VerticalPlane";
    case ErrorCode::kNonPositiveDepth:
      return "NonPositiveDepth";
    case ErrorCode::kNoFrontCamera:
      return "NoFrontCamera";
    case ErrorCode::kInsufficientGroundPoints:
      return "InsufficientGroundPoints";
    case ErrorCode::kInvalidSplit:
      return "InvalidSplit";
    case ErrorCode::kEmptyInput:
      return "EmptyInput";
    case ErrorCode::kNonFinitePdir:
      return "NonFinitePdir";
    case ErrorCode::kZeroMax:
      return "ZeroMax";
    case ErrorCode::kShapeMismatch:
      return "ShapeMismatch";
    case ErrorCode::kBadK:
      return "BadK";
    case ErrorCode::kInvalidProbability:
      return "InvalidProbability";
    case ErrorCode::kUnknownSampleId:
      return "UnknownSampleId";
    case ErrorCode::kEmptyGroundTruth:
      return "EmptyGroundTruth";
    case ErrorCode::kIoError:
      return "IoError";
  }
  return "Unknown";
}

}  // namespace bevh
