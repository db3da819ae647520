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

#ifndef FLOWDICT_DATASET_HPP
#define FLOWDICT_DATASET_HPP

#include <string>
#include <vector>

#include <Eigen/Core>

namespace flowdict {

/// A labelled image collection.  Images share one height x width and hold
/// pixel values in [0, 1]; labels are class indices starting at 0.
struct RawDataset {
  std::vector<Eigen::MatrixXd> images;
  std::vector<int> labels;
  std::string name;
  std::string split;

  int size() const { return static_cast<int>(images.size()); }
  /// 1 + max label; 0 when empty.
  int num_classes() const;
};

/// Throws DataFormatError unless sizes match, dimensions are uniform,
/// pixels lie in [0, 1], and labels are nonnegative.
void validate_dataset(const RawDataset& data);

}  // namespace flowdict

#endif  // FLOWDICT_DATASET_HPP
