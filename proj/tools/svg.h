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

// Minimal static SVG documents. Coordinates print with two decimals so the
// same drawing always serializes to the same bytes.

#ifndef LOCUST_SDM_TOOLS_SVG_H_
#define LOCUST_SDM_TOOLS_SVG_H_

#include <string>
#include <string_view>

namespace locust_sdm::cli {

class Svg {
 public:
  // The document opens with `comment` as an XML comment line; the prolog is
  // optional and left out.
  Svg(double width, double height, std::string_view comment);

  void Rect(double x, double y, double w, double h, std::string_view fill,
            std::string_view stroke = "none");
  void Circle(double cx, double cy, double r, std::string_view fill,
              double opacity = 1.0);
  void Line(double x1, double y1, double x2, double y2, std::string_view stroke,
            double width = 1.0);
  // anchor: start, middle or end.
  void Text(double x, double y, std::string_view text, double size = 12.0,
            std::string_view anchor = "start");

  std::string Finish() const;

 private:
  std::string body_;
  std::string head_;
};

// "#rrggbb" on a blue-to-red ramp, t clamped to [0, 1].
std::string Ramp(double t);

}  // namespace locust_sdm::cli

#endif  // LOCUST_SDM_TOOLS_SVG_H_
