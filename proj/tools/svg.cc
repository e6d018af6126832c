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

#include "svg.h"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace locust_sdm::cli {

namespace {

std::string Num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  std::string s = buf;
  if (s == "-0.00") s = "0.00";
  return s;
}

std::string Escape(std::string_view text) {
  std::string out;
  for (char c : text) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

Svg::Svg(double width, double height, std::string_view comment) {
  std::string safe(comment);
  // "--" may not appear inside an XML comment.
  for (std::size_t p; (p = safe.find("--")) != std::string::npos;) safe.replace(p, 2, "- -");
  head_ = "<!-- " + safe +
          " -->\n<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + Num(width) +
          "\" height=\"" + Num(height) + "\" viewBox=\"0 0 " + Num(width) + " " +
          Num(height) + "\" font-family=\"sans-serif\">\n";
  Rect(0, 0, width, height, "#ffffff");
}

void Svg::Rect(double x, double y, double w, double h, std::string_view fill,
               std::string_view stroke) {
  body_ += "<rect x=\"" + Num(x) + "\" y=\"" + Num(y) + "\" width=\"" + Num(w) +
           "\" height=\"" + Num(h) + "\" fill=\"" + std::string(fill) +
           "\" stroke=\"" + std::string(stroke) + "\"/>\n";
}

void Svg::Circle(double cx, double cy, double r, std::string_view fill, double opacity) {
  body_ += "<circle cx=\"" + Num(cx) + "\" cy=\"" + Num(cy) + "\" r=\"" + Num(r) +
           "\" fill=\"" + std::string(fill) + "\" fill-opacity=\"" + Num(opacity) +
           "\"/>\n";
}

void Svg::Line(double x1, double y1, double x2, double y2, std::string_view stroke,
               double width) {
  body_ += "<line x1=\"" + Num(x1) + "\" y1=\"" + Num(y1) + "\" x2=\"" + Num(x2) +
           "\" y2=\"" + Num(y2) + "\" stroke=\"" + std::string(stroke) +
           "\" stroke-width=\"" + Num(width) + "\"/>\n";
}

void Svg::Text(double x, double y, std::string_view text, double size,
               std::string_view anchor) {
  body_ += "<text x=\"" + Num(x) + "\" y=\"" + Num(y) + "\" font-size=\"" + Num(size) +
           "\" text-anchor=\"" + std::string(anchor) + "\">" + Escape(text) +
           "</text>\n";
}

std::string Svg::Finish() const { return head_ + body_ + "</svg>\n"; }

std::string Ramp(double t) {
  t = std::clamp(std::isfinite(t) ? t : 0.5, 0.0, 1.0);
  const int r = static_cast<int>(std::lround(30 + t * (220 - 30)));
  const int g = static_cast<int>(std::lround(110 - 80 * std::abs(2 * t - 1)));
  const int b = static_cast<int>(std::lround(230 - t * (230 - 40)));
  char buf[8];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", r, g, b);
  return buf;
}

}  // namespace locust_sdm::cli
