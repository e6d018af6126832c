/*
 * Copyright 2026 The locust-sdm Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef LOCUST_SDM_ERRORS_H_
#define LOCUST_SDM_ERRORS_H_

#include <stdexcept>
#include <string>
#include <string_view>

namespace locust_sdm {

enum class ErrorCode {
  kParse,
  kOutOfBounds,
  kEmptyGrid,
  kCoverage,
  kConfig,
  kSingleClass,
  kNonFinite,
  kSchemaMismatch,
  kInsufficientCandidates,
  kNoViableExtent,
  kEmptyEvaluation,
  kDomain,
  kOmnibusNotRejected,
  kMissingArm,
  kIo,
  kUsage,
};

std::string_view ErrorCodeName(ErrorCode code);

// All library failures surface as this exception. The message is a single
// line so the CLI can print it verbatim.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(ErrorCodeName(code)) + ": " + message),
        code_(code),
        message_(message) {}

  ErrorCode code() const { return code_; }
  // The message without the code prefix.
  const std::string& message() const { return message_; }

 private:
  ErrorCode code_;
  std::string message_;
};

}  // namespace locust_sdm

#endif  // LOCUST_SDM_ERRORS_H_
