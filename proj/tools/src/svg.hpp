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

#ifndef FLOWDICT_TOOLS_SVG_HPP
#define FLOWDICT_TOOLS_SVG_HPP

#include <string>
#include <vector>

namespace flowdict::tools {

/// Minimal static two-series line plot: linear axes, fixed legend, and a
/// gray band filling the area between the two curves (their pointwise
/// difference).  xs must be ascending and the three vectors equally long.
/// Output is deterministic for identical inputs.
std::string sweep_plot_svg(const std::string& title,
                           const std::string& x_label,
                           const std::string& y_label,
                           const std::string& series_a_label,
                           const std::string& series_b_label,
                           const std::vector<double>& xs,
                           const std::vector<double>& a,
                           const std::vector<double>& b);

}  // namespace flowdict::tools

#endif  // FLOWDICT_TOOLS_SVG_HPP
