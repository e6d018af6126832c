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

#include "run_config.h"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>

#include "locust_sdm/errors.h"
#include "locust_sdm/random.h"

namespace locust_sdm::cli {

namespace {

std::string_view Trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

[[noreturn]] void BadValue(std::string_view key, const std::string& value,
                           std::string_view expected) {
  throw Error(ErrorCode::kUsage, "key '" + std::string(key) + "' expects " +
                                     std::string(expected) + ", got '" + value + "'");
}

constexpr std::string_view kProvenanceSeparator = " :: ";

}  // namespace

const std::vector<KeySpec>& ConfigKeys() {
  static const std::vector<KeySpec> kKeys = {
      {"seed", "42", "base seed of every random stream"},
      {"bbox", "10,15,0,5", "study area as lat_min,lat_max,lon_min,lon_max"},
      {"resolution", "0.25", "grid cell size in degrees"},
      {"train_end_year", "2014", "last year of the training split"},

      {"world", "", "directory with observations.csv, temporal.csv, static.csv, oracle.csv"},
      {"observations", "", "observation file (id,lat,lon,date,presence)"},
      {"temporal", "", "temporal raster file"},
      {"static", "", "static raster file"},
      {"oracle", "", "true-suitability parameters of a synthetic world"},
      {"pseudo_absences", "", "pseudo-absence files, comma-separated"},
      {"model", "", "trained model file"},
      {"results", "", "experiment results file"},
      {"explanation", "", "directory written by explain"},
      {"out", "", "output file or directory", false},

      {"start_date", "2014-01-01", "first day of a synthetic world"},
      {"end_date", "2015-12-31", "last day of a synthetic world"},
      {"presence_count", "100", "presences drawn in a synthetic world"},
      {"synth_bias", "-2", "bias of the true suitability margin"},
      {"synth_noise", "0.5", "sd of the suitability margin noise"},

      {"method", "rs", "rs, rsep, rs+, rsep+ or bs"},
      {"split", "train", "presences used: train or test"},
      {"buffer_km", "30", "exclusion buffer around presences"},
      {"target_count", "0", "pseudo-absences per set, 0 for the presence count"},
      {"ocsvm_nu", "0.5", "one-class SVM nu"},
      {"ocsvm_gamma", "0", "one-class SVM gamma, 0 for the data-scaled default"},
      {"ocsvm_features", "SoilMoi", "feature name prefixes used for profiling"},
      {"extent_radii", "50,100,200,400,800,1600,3200", "extent ladder in km"},
      {"extent_threshold", "0.95", "share of the saturation AUC to reach"},

      {"algorithm", "lr", "lr, xgboost, rf or maxent"},
      {"lr_l2", "0.0001", "logistic regression L2 penalty"},
      {"rf_trees", "200", "random forest size"},
      {"rf_max_depth", "15", "random forest depth limit"},
      {"rf_mtry", "0", "features tried per split, 0 for sqrt(p)"},
      {"rf_min_leaf", "1", "random forest minimum leaf size"},
      {"gbm_rounds", "100", "boosting rounds"},
      {"gbm_max_depth", "4", "boosted tree depth"},
      {"gbm_learning_rate", "0.1", "boosting shrinkage"},
      {"gbm_lambda", "1", "boosted leaf L2 penalty"},
      {"maxent_reg", "1", "MaxEnt regularization multiplier"},
      {"background_multiplier", "10", "MaxEnt background points per presence"},
      {"threshold", "0.5", "probability cut for a presence prediction"},

      {"runs", "100", "experiment repetitions"},
      {"arms", "all", "algorithm:method list, or 'all' for all 13"},
      {"metric", "accuracy", "accuracy, f1 or all"},
      {"test_labels", "nominal", "nominal, or oracle for true labels"},

      {"hypothesis", "focused", "focused or posthoc"},
      {"test_arms", "", "arms tested, empty for the default set"},
      {"alpha", "0.05", "significance level"},
      {"force", "false", "run post-hoc tests even without omnibus rejection"},

      {"shap_permutations", "1000", "permutations for sampled attributions"},
      {"shap_background", "100", "background rows for sampled attributions"},
      {"explain_limit", "0", "rows explained, 0 for all"},

      {"plot", "pa_map", "pa_map or shap"},
      {"inputs", "", "pseudo-absence files drawn by pa_map"},
      {"top_features", "20", "features drawn by shap"},
  };
  return kKeys;
}

RunConfig RunConfig::Defaults() {
  RunConfig c;
  for (const KeySpec& k : ConfigKeys()) {
    c.values_.emplace(std::string(k.name), std::string(k.default_value));
  }
  if (const char* env = std::getenv(std::string(kSeedEnv).c_str())) {
    c.Set("seed", env);
    c.GetUint("seed");
  }
  return c;
}

void RunConfig::Set(std::string_view key, std::string_view value) {
  auto it = values_.find(key);
  if (it == values_.end()) {
    throw Error(ErrorCode::kUsage, "unknown configuration key '" + std::string(key) + "'");
  }
  if (value.find_first_of(";\n\r") != std::string_view::npos) {
    throw Error(ErrorCode::kUsage,
                "value of '" + std::string(key) + "' contains ';' or a line break");
  }
  it->second = std::string(Trim(value));
}

void RunConfig::LoadFile(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kUsage, "cannot read config " + path.string());
  std::map<std::string, int, std::less<>> seen;
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    const std::string_view t = Trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto eq = t.find('=');
    const std::string where = path.string() + ":" + std::to_string(number);
    if (eq == std::string_view::npos) {
      throw Error(ErrorCode::kUsage, where + ": expected 'key = value'");
    }
    const std::string key(Trim(t.substr(0, eq)));
    if (!seen.emplace(key, number).second) {
      throw Error(ErrorCode::kUsage, where + ": key '" + key + "' repeated");
    }
    try {
      Set(key, t.substr(eq + 1));
    } catch (const Error& e) {
      throw Error(ErrorCode::kUsage, where + ": " + e.message());
    }
  }
}

const std::string& RunConfig::Get(std::string_view key) const {
  auto it = values_.find(key);
  if (it == values_.end()) {
    throw Error(ErrorCode::kUsage, "unknown configuration key '" + std::string(key) + "'");
  }
  return it->second;
}

double RunConfig::GetDouble(std::string_view key) const {
  const std::string& v = Get(key);
  const auto d = ParseDouble(v);
  if (!d || !std::isfinite(*d)) BadValue(key, v, "a finite number");
  return *d;
}

long long RunConfig::GetInt(std::string_view key) const {
  const std::string& v = Get(key);
  const auto i = ParseInt(v);
  if (!i) BadValue(key, v, "an integer");
  return *i;
}

std::uint64_t RunConfig::GetUint(std::string_view key) const {
  const std::string& v = Get(key);
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (v.empty() || ec != std::errc() || ptr != v.data() + v.size()) {
    BadValue(key, v, "a non-negative integer");
  }
  return out;
}

bool RunConfig::GetBool(std::string_view key) const {
  const std::string& v = Get(key);
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  BadValue(key, v, "true or false");
}

Date RunConfig::GetDate(std::string_view key) const {
  const std::string& v = Get(key);
  const auto d = ParseDate(v);
  if (!d) BadValue(key, v, "a YYYY-MM-DD date");
  return *d;
}

std::vector<std::string> RunConfig::GetList(std::string_view key) const {
  std::vector<std::string> out;
  for (std::string_view item : SplitCsvLine(Get(key))) {
    item = Trim(item);
    if (!item.empty()) out.emplace_back(item);
  }
  return out;
}

std::vector<double> RunConfig::GetDoubleList(std::string_view key) const {
  std::vector<double> out;
  for (const std::string& item : GetList(key)) {
    const auto d = ParseDouble(item);
    if (!d || !std::isfinite(*d)) BadValue(key, Get(key), "comma-separated numbers");
    out.push_back(*d);
  }
  return out;
}

geo::BBox RunConfig::GetBBox() const {
  const std::vector<double> v = GetDoubleList("bbox");
  if (v.size() != 4) BadValue("bbox", Get("bbox"), "lat_min,lat_max,lon_min,lon_max");
  return geo::BBox{v[0], v[1], v[2], v[3]};
}

geo::Grid RunConfig::GetGrid() const {
  try {
    return geo::Grid::Build(GetBBox(), GetDouble("resolution"));
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kUsage) throw;
    throw Error(ErrorCode::kUsage, "bad grid: " + std::string(e.what()));
  }
}

std::filesystem::path RunConfig::InputPath(std::string_view key,
                                           std::string_view fallback) const {
  const std::string& v = Get(key);
  if (!v.empty()) return v;
  const std::string& world = Get("world");
  if (!world.empty() && !fallback.empty()) {
    return std::filesystem::path(world) / std::string(fallback);
  }
  throw Error(ErrorCode::kUsage, "missing input: set '" + std::string(key) + "' or 'world'");
}

std::string RunConfig::Serialize() const {
  std::string out;
  for (const KeySpec& k : ConfigKeys()) {
    if (!k.recorded) continue;
    if (!out.empty()) out += ';';
    out += k.name;
    out += '=';
    out += Get(k.name);
  }
  return out;
}

std::string RunConfig::Hash() const {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(HashString(Serialize())));
  return buf;
}

std::string RunConfig::Provenance(std::string_view subcommand) const {
  return std::string(kToolName) + " " + LOCUST_SDM_VERSION + " cmd=" +
         std::string(subcommand) + " config=" + Hash() + " seed=" + Get("seed") +
         std::string(kProvenanceSeparator) + Serialize();
}

std::string RunConfig::ParseProvenance(std::string_view line, RunConfig* config) {
  if (line.starts_with("# ")) line.remove_prefix(2);
  const std::string prefix = std::string(kToolName) + " ";
  const auto sep = line.find(kProvenanceSeparator);
  const auto cmd = line.find(" cmd=");
  if (!line.starts_with(prefix) || sep == std::string_view::npos ||
      cmd == std::string_view::npos || cmd > sep) {
    throw Error(ErrorCode::kParse, "not a provenance header");
  }
  const std::string_view after_cmd = line.substr(cmd + 5);
  const std::string subcommand(after_cmd.substr(0, after_cmd.find(' ')));
  RunConfig c = Defaults();
  std::string_view body = line.substr(sep + kProvenanceSeparator.size());
  while (!body.empty()) {
    const auto end = body.find(';');
    const std::string_view item = body.substr(0, end);
    const auto eq = item.find('=');
    if (eq == std::string_view::npos) {
      throw Error(ErrorCode::kParse, "malformed provenance entry '" + std::string(item) + "'");
    }
    c.Set(item.substr(0, eq), item.substr(eq + 1));
    if (end == std::string_view::npos) break;
    body.remove_prefix(end + 1);
  }
  *config = std::move(c);
  return subcommand;
}

}  // namespace locust_sdm::cli
