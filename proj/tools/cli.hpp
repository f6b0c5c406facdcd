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


// Command-line front end. Every subcommand resolves its parameters as
// defaults, then an optional --config JSON file, then explicit flags, and
// writes the result to <out>/config.resolved.json.

#pragma once

#include <ostream>

namespace ttslab::cli {

/// Exit codes: 0 success, 1 usage or configuration error, 2 runtime failure.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace ttslab::cli
