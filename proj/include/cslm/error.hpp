// cslm/error.hpp

// Copyright 2026  The cslm-adapt Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <stdexcept>
#include <string>

namespace cslm {

// Base of everything the library throws.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A precondition on an argument or configuration was violated.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// Malformed input data (corpus, vocabulary, n-best list, weights file).
class ParseError : public Error {
 public:
  using Error::Error;
};

// Model file errors. Each failure mode has its own class so callers can
// tell a foreign file from a damaged one.
class ModelFileError : public Error {
 public:
  using Error::Error;
};

class VersionError : public ModelFileError {
 public:
  using ModelFileError::ModelFileError;
};

class TruncatedError : public ModelFileError {
 public:
  using ModelFileError::ModelFileError;
};

class DimensionError : public ModelFileError {
 public:
  using ModelFileError::ModelFileError;
};

class ChecksumError : public ModelFileError {
 public:
  using ModelFileError::ModelFileError;
};

}  // namespace cslm
