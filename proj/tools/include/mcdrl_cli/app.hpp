// Copyright 2026 The MCDRL Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//
#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace mcdrl::cli {

/// Record of one command invocation, written to `<out>/run.json` before the
/// command touches anything else. Only `end` is filled in afterwards.
struct RunManifest {
  std::string command;
  std::vector<std::string> args;
  std::string config_json;  // resolved configuration, "{}" when none applies
  std::uint64_t seed = 0;
  std::string git_describe;
  std::string start;
  std::optional<std::string> end;
  std::vector<std::string> outputs;

  std::string to_json() const;
  static RunManifest from_json(const std::string& text);
};

std::string utc_timestamp();
std::string git_describe();

void write_manifest(const std::filesystem::path& path, const RunManifest& manifest);
RunManifest read_manifest(const std::filesystem::path& path);

// Parses and runs one command line; returns the process exit code. Errors are
// reported on `err` as "error: <message>".
int run(const std::vector<std::string>& argv, std::ostream& out, std::ostream& err);

}  // namespace mcdrl::cli
