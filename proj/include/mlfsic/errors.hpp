/* Copyright 2026 The mlfsic Authors. All Rights Reserved.

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

#ifndef MLFSIC_ERRORS_HPP_
#define MLFSIC_ERRORS_HPP_

#include <cstddef>
#include <stdexcept>
#include <string>

namespace mlfsic {

// Root of every error the library throws.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

// Zero-norm vectors handed to a cosine.
class DegenerateInputError : public Error {
 public:
  using Error::Error;
};

class NumericalFaultError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class OutOfVocabularyError : public Error {
 public:
  explicit OutOfVocabularyError(const std::string& token)
      : Error("out-of-vocabulary token '" + token + "'"), token_(token) {}
  const std::string& token() const { return token_; }

 private:
  std::string token_;
};

class FormatError : public Error {
 public:
  FormatError(const std::string& what, std::size_t offset)
      : Error("byte " + std::to_string(offset) + ": " + what),
        offset_(offset) {}
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

class GenerationError : public Error {
 public:
  using Error::Error;
};

class SamplingError : public Error {
 public:
  SamplingError(const std::string& what, std::string label)
      : Error(what), label_(std::move(label)) {}
  const std::string& label() const { return label_; }

 private:
  std::string label_;
};

class NoSupportError : public Error {
 public:
  explicit NoSupportError(const std::string& label)
      : Error("no support features for label '" + label + "'"),
        label_(label) {}
  const std::string& label() const { return label_; }

 private:
  std::string label_;
};

class EvaluationError : public Error {
 public:
  using Error::Error;
};

}  // namespace mlfsic

#endif  // MLFSIC_ERRORS_HPP_
