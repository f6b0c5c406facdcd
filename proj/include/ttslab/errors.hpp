// Copyright 2026 The ttslab Authors
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

#pragma once

#include <stdexcept>
#include <string>

namespace ttslab {

/// Bad hyperparameters or inconsistent configuration values.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A caller passed arguments that violate an operation's preconditions.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A file on disk is missing, truncated or violates the container schema.
class LoadError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class BoundsError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NormalizationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Training diverged (non-finite loss) or hit an internal inconsistency.
class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace ttslab
