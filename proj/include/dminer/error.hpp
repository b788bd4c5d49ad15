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

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace dminer {

enum class ErrorCode {
  kZeroVector,
  kNonFiniteLoss,
  kCenterOutOfGrid,
  kInvalidSize,
  kInvalidArgument,
  kMalformedAnnotations,
  kCategoryOutOfRange,
  kDatasetMismatch,
  kEmptyReference,
  kNotEnoughCells,
  kInvalidTemperature,
  kInvalidLevelConfig,
  kNoGroundTruth,
  kSceneTooCrowded,
  kDiverged,
  kIo,
};

std::string_view ErrorName(ErrorCode code);

// All recoverable failures in the library surface as this exception type.
// what() is "<Name>: <detail>" so callers that only see the message can still
// branch on the name.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& detail);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace dminer
