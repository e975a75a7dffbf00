// include/seqkd/errors.hpp
//
// Copyright 2026  The seqkd authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef SEQKD_ERRORS_HPP_
#define SEQKD_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace seqkd {

enum class ErrorCode {
  kInvalidArgument,
  kInvalidConfig,
  kIoError,
  kSchemaViolation,
  kDuplicateId,
  kEmptyReference,
  kEmptyInput,
  kLengthMismatch,
  kSequenceTooLong,
  kTokenOutOfRange,
  kIncompatibleConfig,
  kStudentLargerThanTeacher,
  kNonFiniteLoss,
  kCorruptCheckpoint,
  kVersionMismatch,
  kSizeExceedsCorpus,
  kBudgetExhausted,
  kStageFailed,
};

const char *ErrorCodeName(ErrorCode code);

// Single exception type for everything the library reports.  Callers that
// care about the kind of failure switch on code(); everyone else just sees
// a std::runtime_error with a readable message.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string &message)
      : std::runtime_error(std::string(ErrorCodeName(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void Fail(ErrorCode code, const std::string &message) {
  throw Error(code, message);
}

inline void Require(bool ok, ErrorCode code, const std::string &message) {
  if (!ok) Fail(code, message);
}

}  // namespace seqkd

#endif  // SEQKD_ERRORS_HPP_
