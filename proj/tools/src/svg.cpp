// Copyright 2026 The flowdict authors
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

#include "svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "flowdict/errors.hpp"

namespace flowdict::tools {

namespace {

constexpr double kWidth = 640.0;
constexpr double kHeight = 400.0;
constexpr double kLeft = 64.0;
constexpr double kRight = 616.0;
constexpr double kTop = 48.0;
constexpr double kBottom = 352.0;

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

std::string sweep_plot_svg(const std::string& title,
                           const std::string& x_label,
                           const std::string& y_label,
                           const std::string& series_a_label,
                           const std::string& series_b_label,
                           const std::vector<double>& xs,
                           const std::vector<double>& a,
                           const std::vector<double>& b) {
  if (xs.empty() || xs.size() != a.size() || xs.size() != b.size()) {
    throw DimensionError("sweep_plot_svg: mismatched or empty series");
  }

  double xmin = xs.front();
  double xmax = xs.back();
  if (!(xmax > xmin)) {
    xmin -= 0.5;
    xmax += 0.5;
  }
  double ymin = std::min(*std::min_element(a.begin(), a.end()),
                         *std::min_element(b.begin(), b.end()));
  double ymax = std::max(*std::max_element(a.begin(), a.end()),
                         *std::max_element(b.begin(), b.end()));
  const double pad = std::max(0.01, (ymax - ymin) * 0.1);
  ymin -= pad;
  ymax += pad;

  const auto px = [&](double x) {
    return kLeft + (x - xmin) / (xmax - xmin) * (kRight - kLeft);
  };
  const auto py = [&](double y) {
    return kBottom - (y - ymin) / (ymax - ymin) * (kBottom - kTop);
  };
  const auto polyline = [&](const std::vector<double>& ys) {
    std::string pts;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      pts += num(px(xs[i])) + "," + num(py(ys[i])) + " ";
    }
    return pts;
  };

  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 "
      << num(kWidth) << " " << num(kHeight) << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << num(kWidth / 2) << "\" y=\"24\" font-size=\"16\" "
         "text-anchor=\"middle\" font-family=\"sans-serif\">"
      << escape(title) << "</text>\n";

  // Difference band: down series a, back up series b.
  out << "<polygon fill=\"#c8c8c8\" fill-opacity=\"0.55\" stroke=\"none\" "
         "points=\"";
  for (std::size_t i = 0; i < xs.size(); ++i) {
    out << num(px(xs[i])) << "," << num(py(a[i])) << " ";
  }
  for (std::size_t i = xs.size(); i-- > 0;) {
    out << num(px(xs[i])) << "," << num(py(b[i])) << " ";
  }
  out << "\"/>\n";

  // Axes.
  out << "<line x1=\"" << num(kLeft) << "\" y1=\"" << num(kBottom)
      << "\" x2=\"" << num(kRight) << "\" y2=\"" << num(kBottom)
      << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << num(kLeft) << "\" y1=\"" << num(kTop) << "\" x2=\""
      << num(kLeft) << "\" y2=\"" << num(kBottom)
      << "\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 5; ++i) {
    const double fx = xmin + (xmax - xmin) * i / 5.0;
    const double fy = ymin + (ymax - ymin) * i / 5.0;
    out << "<text x=\"" << num(px(fx)) << "\" y=\"" << num(kBottom + 18)
        << "\" font-size=\"11\" text-anchor=\"middle\" "
           "font-family=\"sans-serif\">"
        << num(fx) << "</text>\n";
    out << "<text x=\"" << num(kLeft - 8) << "\" y=\"" << num(py(fy) + 4)
        << "\" font-size=\"11\" text-anchor=\"end\" "
           "font-family=\"sans-serif\">"
        << num(fy) << "</text>\n";
    out << "<line x1=\"" << num(px(fx)) << "\" y1=\"" << num(kBottom)
        << "\" x2=\"" << num(px(fx)) << "\" y2=\"" << num(kBottom + 4)
        << "\" stroke=\"black\"/>\n";
    out << "<line x1=\"" << num(kLeft - 4) << "\" y1=\"" << num(py(fy))
        << "\" x2=\"" << num(kLeft) << "\" y2=\"" << num(py(fy))
        << "\" stroke=\"black\"/>\n";
  }
  out << "<text x=\"" << num((kLeft + kRight) / 2) << "\" y=\""
      << num(kHeight - 10)
      << "\" font-size=\"13\" text-anchor=\"middle\" "
         "font-family=\"sans-serif\">"
      << escape(x_label) << "</text>\n";
  out << "<text x=\"16\" y=\"" << num((kTop + kBottom) / 2)
      << "\" font-size=\"13\" text-anchor=\"middle\" "
         "font-family=\"sans-serif\" transform=\"rotate(-90 16 "
      << num((kTop + kBottom) / 2) << ")\">" << escape(y_label)
      << "</text>\n";

  // Curves and markers.
  out << "<polyline fill=\"none\" stroke=\"#1f5fbf\" stroke-width=\"2\" "
         "points=\""
      << polyline(a) << "\"/>\n";
  out << "<polyline fill=\"none\" stroke=\"#bf3f1f\" stroke-width=\"2\" "
         "stroke-dasharray=\"6 3\" points=\""
      << polyline(b) << "\"/>\n";
  for (std::size_t i = 0; i < xs.size(); ++i) {
    out << "<circle cx=\"" << num(px(xs[i])) << "\" cy=\"" << num(py(a[i]))
        << "\" r=\"3\" fill=\"#1f5fbf\"/>\n";
    out << "<circle cx=\"" << num(px(xs[i])) << "\" cy=\"" << num(py(b[i]))
        << "\" r=\"3\" fill=\"#bf3f1f\"/>\n";
  }

  // Fixed legend, top right.
  const double lx = kRight - 190.0;
  out << "<rect x=\"" << num(lx) << "\" y=\"" << num(kTop + 6)
      << "\" width=\"184\" height=\"40\" fill=\"white\" stroke=\"#888\"/>\n";
  out << "<line x1=\"" << num(lx + 8) << "\" y1=\"" << num(kTop + 18)
      << "\" x2=\"" << num(lx + 36) << "\" y2=\"" << num(kTop + 18)
      << "\" stroke=\"#1f5fbf\" stroke-width=\"2\"/>\n";
  out << "<text x=\"" << num(lx + 42) << "\" y=\"" << num(kTop + 22)
      << "\" font-size=\"12\" font-family=\"sans-serif\">"
      << escape(series_a_label) << "</text>\n";
  out << "<line x1=\"" << num(lx + 8) << "\" y1=\"" << num(kTop + 34)
      << "\" x2=\"" << num(lx + 36) << "\" y2=\"" << num(kTop + 34)
      << "\" stroke=\"#bf3f1f\" stroke-width=\"2\" "
         "stroke-dasharray=\"6 3\"/>\n";
  out << "<text x=\"" << num(lx + 42) << "\" y=\"" << num(kTop + 38)
      << "\" font-size=\"12\" font-family=\"sans-serif\">"
      << escape(series_b_label) << "</text>\n";

  out << "</svg>\n";
  return out.str();
}

}  // namespace flowdict::tools
