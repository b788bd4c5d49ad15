// Copyright 2026 The DMiner Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "dminer/error.hpp"

namespace dminer {

std::string_view ErrorName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kZeroVector: return "ZeroVector";
    case ErrorCode::kNonFiniteLoss: return "NonFiniteLoss";
    case ErrorCode::kCenterOutOfGrid: return "CenterOutOfGrid";
    case ErrorCode::kInvalidSize: return "InvalidSize";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kMalformedAnnotations: return "MalformedAnnotations";
    case ErrorCode::kCategoryOutOfRange: return "CategoryOutOfRange";
    case ErrorCode::kDatasetMismatch: return "DatasetMismatch";
    case ErrorCode::kEmptyReference: return "EmptyReference";
    case ErrorCode::kNotEnoughCells: return "NotEnoughCells";
    case ErrorCode::kInvalidTemperature: return "InvalidTemperature";
    case ErrorCode::kInvalidLevelConfig: return "InvalidLevelConfig";
    case ErrorCode::kNoGroundTruth: return "NoGroundTruth";
    case ErrorCode::kSceneTooCrowded: return "SceneTooCrowded";
    case ErrorCode::kDiverged: return "Diverged";
    case ErrorCode::kIo: return "Io";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& detail)
    : std::runtime_error(std::string(ErrorName(code)) + ": " + detail),
      code_(code) {}

}  // namespace dminer
