// Copyright 2026 The mixclust Authors
//
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

namespace mixclust {

// Base for every error the library raises on purpose.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed arguments: shape mismatches, non-finite data, bad files.
class InvalidInput : public Error {
 public:
  using Error::Error;
};

// Inconsistent configuration (too few speakers, missing references, ...).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Rejection sampling could not place the sources.
class InfeasibleScene : public Error {
 public:
  using Error::Error;
};

// An object was used out of order, e.g. backward() on a stale forward cache.
class InvalidState : public Error {
 public:
  using Error::Error;
};

}  // namespace mixclust
