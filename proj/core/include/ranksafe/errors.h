/*
 * Copyright 2026 The ranksafe authors.
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

#ifndef RANKSAFE_ERRORS_H_
#define RANKSAFE_ERRORS_H_

#include <stdexcept>
#include <string>

namespace ranksafe {

// A caller-supplied value violates a precondition (bad dimensions,
// out-of-range parameters, inconsistent inputs).
class ArgumentError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Malformed input text. Carries a 1-based line number when one is known.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& message, int line)
      : std::runtime_error("line " + std::to_string(line) + ": " + message),
        line_(line) {}
  explicit ParseError(const std::string& message)
      : std::runtime_error(message), line_(0) {}

  int line() const { return line_; }

 private:
  int line_;
};

// An exact (enumeration) computation was requested on an instance whose
// ranking space exceeds the configured cap.
class SizeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A state the public contracts are supposed to rule out.
class InternalError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace ranksafe

#endif  // RANKSAFE_ERRORS_H_
