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

#ifndef LOCUST_SDM_IO_H_
#define LOCUST_SDM_IO_H_

#include <chrono>
#include <filesystem>
#include <functional>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace locust_sdm {

using Date = std::chrono::sys_days;

// Strict ISO-8601 calendar date, "YYYY-MM-DD".
std::optional<Date> ParseDate(std::string_view text);
std::string FormatDate(Date date);
int YearOf(Date date);

std::optional<double> ParseDouble(std::string_view text);
std::optional<long long> ParseInt(std::string_view text);

// Shortest representation that round-trips through ParseDouble.
std::string FormatDouble(double value);
// Fixed 17 significant digits, used by model files.
std::string FormatDoubleExact(double value);

std::vector<std::string_view> SplitCsvLine(std::string_view line);
std::string JoinCsv(const std::vector<std::string>& fields);

// Reads a comma-separated file, skipping blank lines and '#' comment lines
// (provenance headers). `on_row` receives the 1-based physical line number
// and the split fields; the first non-comment line is the header and is
// checked against `expected_header` when it is non-empty.
void ReadCsv(const std::filesystem::path& path,
             const std::vector<std::string>& expected_header,
             const std::function<void(std::size_t line,
                                      const std::vector<std::string_view>&)>&
                 on_row);

// Writes through a temporary sibling file and renames it into place.
void WriteFileAtomic(const std::filesystem::path& path,
                     const std::function<void(std::ostream&)>& writer);

}  // namespace locust_sdm

#endif  // LOCUST_SDM_IO_H_
