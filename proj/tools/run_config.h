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

// Flat key = value run configuration shared by every subcommand.

#ifndef LOCUST_SDM_TOOLS_RUN_CONFIG_H_
#define LOCUST_SDM_TOOLS_RUN_CONFIG_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "locust_sdm/geo.h"
#include "locust_sdm/io.h"

namespace locust_sdm::cli {

inline constexpr std::string_view kToolName = "locust-sdm";
inline constexpr std::string_view kSeedEnv = "LOCUST_SDM_SEED";

struct KeySpec {
  std::string_view name;
  std::string_view default_value;
  std::string_view help;
  // Keys that only say where results go are left out of the provenance
  // serialization, so the same run written elsewhere is byte-identical.
  bool recorded = true;
};

const std::vector<KeySpec>& ConfigKeys();

class RunConfig {
 public:
  // Every key at its default; LOCUST_SDM_SEED replaces the default seed.
  static RunConfig Defaults();

  // Throws Error(kUsage) for an unknown key or a value with ';' or a
  // line break.
  void Set(std::string_view key, std::string_view value);
  // Flat "key = value" lines, '#' comments and blank lines ignored. Throws
  // Error(kUsage) on unknown or repeated keys, malformed lines or an
  // unreadable file.
  void LoadFile(const std::filesystem::path& path);

  const std::string& Get(std::string_view key) const;
  // Typed views; malformed values throw Error(kUsage) naming the key.
  double GetDouble(std::string_view key) const;
  long long GetInt(std::string_view key) const;
  std::uint64_t GetUint(std::string_view key) const;
  bool GetBool(std::string_view key) const;
  Date GetDate(std::string_view key) const;
  // Comma-separated, trimmed, empty items dropped.
  std::vector<std::string> GetList(std::string_view key) const;
  std::vector<double> GetDoubleList(std::string_view key) const;
  geo::BBox GetBBox() const;
  geo::Grid GetGrid() const;

  // Path key, falling back to world/<fallback> when empty and `world` is
  // set. Throws Error(kUsage) when neither is given.
  std::filesystem::path InputPath(std::string_view key,
                                  std::string_view fallback) const;

  // "key=value;..." over the recorded keys in table order.
  std::string Serialize() const;
  // 16 hex digits of the serialization hash.
  std::string Hash() const;

  // One line: tool, version, subcommand, config hash, seed and the
  // serialized configuration.
  std::string Provenance(std::string_view subcommand) const;
  // Inverse of Provenance; returns the subcommand and fills `config`.
  // Throws Error(kParse) for a line that is not a provenance header.
  static std::string ParseProvenance(std::string_view line, RunConfig* config);

 private:
  std::map<std::string, std::string, std::less<>> values_;
};

}  // namespace locust_sdm::cli

#endif  // LOCUST_SDM_TOOLS_RUN_CONFIG_H_
