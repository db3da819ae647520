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

#ifndef FLOWDICT_DATA_IO_HPP
#define FLOWDICT_DATA_IO_HPP

#include <string>

#include <Eigen/Core>

#include "flowdict/dataset.hpp"
#include "flowdict/model.hpp"

namespace flowdict {

/// Parses the standard big-endian IDX pair (image magic 0x00000803, label
/// magic 0x00000801).  Pixels are unsigned bytes rescaled to [0, 1] by
/// /255.  Throws DataFormatError on bad magic, wrong byte count, or a
/// count mismatch between the two files.
RawDataset read_idx(const std::string& images_path,
                    const std::string& labels_path);

/// Parses the sparse text distribution: one sample per line, integer label
/// then 1-based index:value pairs over 256 features with values in
/// [-1, 1].  Values map affinely to [0, 1] by (v+1)/2; unlisted features
/// stay 0.  Images are 16x16, row-major feature order.
RawDataset read_usps(const std::string& path);

/// A single parametric test-time deformation.
struct DeformSpec {
  enum class Kind { translate_x, translate_xy, rotate, scale };
  Kind kind = Kind::translate_x;
  /// Pixels for translations, degrees (counterclockwise) for rotate,
  /// ratio (> 0, 1 = identity) for scale.
  double magnitude = 0.0;
};

/// Throws ConfigError on a non-finite magnitude or a nonpositive scale.
void validate_deform_spec(const DeformSpec& spec);

/// Inverse-mapped bilinear warp about the image center ((H-1)/2, (W-1)/2);
/// sample points outside the source take background value 0.  Identity
/// parameters reproduce the input bit for bit, and integer translations
/// are exact.
Eigen::MatrixXd deform(const Eigen::MatrixXd& image, const DeformSpec& spec);

/// Contiguous sub-dataset [offset, offset+count); count past the end is
/// clipped.  Metadata tags are preserved.
RawDataset subset(const RawDataset& data, int offset, int count);

/// Binary model container.  Layout: 8-byte magic "FLOWDICT", then
/// little-endian u32 version (currently 1), then nine little-endian u32
/// fields (atoms, vector_dim, positions, grid_rows, grid_cols, patch,
/// stride, window_side, classes), then the dictionary as little-endian
/// doubles atom-major and column-major within each atom, then the
/// classifier weights row-major, then a u32 byte length and the verbatim
/// config snapshot.  Class hints are bookkeeping and are not serialized.
///
/// save_model writes atomically (temp file + rename): a failed save never
/// leaves a partial file at `path`.  load_model validates the exact file
/// size implied by the header before reading any payload.
void save_model(const Model& model, const std::string& path);
Model load_model(const std::string& path);

}  // namespace flowdict

#endif  // FLOWDICT_DATA_IO_HPP
