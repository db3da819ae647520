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

#include "flowdict/data_io.hpp"

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <utility>
#include <vector>

#include "flowdict/errors.hpp"

namespace flowdict {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr std::uint32_t kImageMagic = 0x00000803;
constexpr std::uint32_t kLabelMagic = 0x00000801;
constexpr char kModelMagic[8] = {'F', 'L', 'O', 'W', 'D', 'I', 'C', 'T'};
constexpr std::uint32_t kModelVersion = 1;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataFormatError("cannot open file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  if (!in.good() && !in.eof()) {
    throw DataFormatError("cannot read file: " + path);
  }
  return std::move(buf).str();
}

std::uint32_t get_u32be(const std::string& bytes, std::size_t offset) {
  const auto b = [&](std::size_t i) {
    return static_cast<std::uint32_t>(
        static_cast<unsigned char>(bytes[offset + i]));
  };
  return (b(0) << 24) | (b(1) << 16) | (b(2) << 8) | b(3);
}

void put_u32le(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) {
    out.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
  }
}

std::uint32_t get_u32le(const std::string& bytes, std::size_t offset) {
  const auto b = [&](std::size_t i) {
    return static_cast<std::uint32_t>(
        static_cast<unsigned char>(bytes[offset + i]));
  };
  return b(0) | (b(1) << 8) | (b(2) << 16) | (b(3) << 24);
}

void put_f64le(std::string& out, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, sizeof(bits));
  for (int i = 0; i < 8; ++i) {
    out.push_back(static_cast<char>((bits >> (8 * i)) & 0xffu));
  }
}

double get_f64le(const std::string& bytes, std::size_t offset) {
  std::uint64_t bits = 0;
  for (int i = 7; i >= 0; --i) {
    bits = (bits << 8) | static_cast<unsigned char>(
                             bytes[offset + static_cast<std::size_t>(i)]);
  }
  double v;
  std::memcpy(&v, &bits, sizeof(v));
  return v;
}

double bilinear_or_zero(const Eigen::MatrixXd& image, double sr, double sc) {
  const double rmax = static_cast<double>(image.rows() - 1);
  const double cmax = static_cast<double>(image.cols() - 1);
  if (!(sr >= 0.0) || !(sr <= rmax) || !(sc >= 0.0) || !(sc <= cmax)) {
    return 0.0;
  }
  const auto r0 = static_cast<Eigen::Index>(std::floor(sr));
  const auto c0 = static_cast<Eigen::Index>(std::floor(sc));
  const Eigen::Index r1 = std::min(r0 + 1, image.rows() - 1);
  const Eigen::Index c1 = std::min(c0 + 1, image.cols() - 1);
  const double fr = sr - static_cast<double>(r0);
  const double fc = sc - static_cast<double>(c0);
  const double top = (1.0 - fc) * image(r0, c0) + fc * image(r0, c1);
  const double bot = (1.0 - fc) * image(r1, c0) + fc * image(r1, c1);
  return (1.0 - fr) * top + fr * bot;
}

}  // namespace

int RawDataset::num_classes() const {
  int top = -1;
  for (int label : labels) top = std::max(top, label);
  return top + 1;
}

void validate_dataset(const RawDataset& data) {
  if (data.images.size() != data.labels.size()) {
    throw DataFormatError("dataset: image/label count mismatch");
  }
  if (data.images.empty()) return;
  const Eigen::Index rows = data.images.front().rows();
  const Eigen::Index cols = data.images.front().cols();
  for (std::size_t i = 0; i < data.images.size(); ++i) {
    const Eigen::MatrixXd& img = data.images[i];
    if (img.rows() != rows || img.cols() != cols) {
      throw DataFormatError("dataset: non-uniform image dimensions");
    }
    if (!img.allFinite() || img.minCoeff() < 0.0 || img.maxCoeff() > 1.0) {
      throw DataFormatError("dataset: pixel outside [0, 1]");
    }
    if (data.labels[i] < 0) {
      throw DataFormatError("dataset: negative label");
    }
  }
}

RawDataset read_idx(const std::string& images_path,
                    const std::string& labels_path) {
  const std::string ib = read_file(images_path);
  if (ib.size() < 16) throw DataFormatError(images_path + ": truncated header");
  if (get_u32be(ib, 0) != kImageMagic) {
    throw DataFormatError(images_path + ": bad image magic");
  }
  const std::uint64_t count = get_u32be(ib, 4);
  const std::uint64_t rows = get_u32be(ib, 8);
  const std::uint64_t cols = get_u32be(ib, 12);
  if (rows == 0 || cols == 0) {
    throw DataFormatError(images_path + ": zero image dimensions");
  }
  if (ib.size() != 16 + count * rows * cols) {
    throw DataFormatError(images_path + ": size does not match header");
  }

  const std::string lb = read_file(labels_path);
  if (lb.size() < 8) throw DataFormatError(labels_path + ": truncated header");
  if (get_u32be(lb, 0) != kLabelMagic) {
    throw DataFormatError(labels_path + ": bad label magic");
  }
  const std::uint64_t label_count = get_u32be(lb, 4);
  if (lb.size() != 8 + label_count) {
    throw DataFormatError(labels_path + ": size does not match header");
  }
  if (label_count != count) {
    throw DataFormatError("idx: image and label counts differ");
  }

  RawDataset out;
  out.images.reserve(count);
  out.labels.reserve(count);
  std::size_t at = 16;
  for (std::uint64_t i = 0; i < count; ++i) {
    Eigen::MatrixXd img(rows, cols);
    for (std::uint64_t r = 0; r < rows; ++r) {
      for (std::uint64_t c = 0; c < cols; ++c) {
        img(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
            static_cast<double>(static_cast<unsigned char>(ib[at++])) / 255.0;
      }
    }
    out.images.push_back(std::move(img));
    out.labels.push_back(static_cast<unsigned char>(lb[8 + i]));
  }
  return out;
}

RawDataset read_usps(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataFormatError("cannot open file: " + path);
  RawDataset out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ls(line);
    std::string token;
    if (!(ls >> token)) continue;  // blank line

    const auto bad = [&](const std::string& what) {
      return DataFormatError(path + " line " + std::to_string(line_no) +
                             ": " + what);
    };
    int label;
    try {
      std::size_t used = 0;
      const double parsed = std::stod(token, &used);
      label = static_cast<int>(std::lround(parsed));
      if (used != token.size() || std::abs(parsed - label) > 1e-9 ||
          label < 0) {
        throw bad("bad label '" + token + "'");
      }
    } catch (const std::logic_error&) {
      throw bad("bad label '" + token + "'");
    }

    Eigen::MatrixXd img = Eigen::MatrixXd::Zero(16, 16);
    while (ls >> token) {
      const std::size_t colon = token.find(':');
      if (colon == std::string::npos || colon == 0 ||
          colon + 1 >= token.size()) {
        throw bad("malformed feature '" + token + "'");
      }
      int index;
      double value;
      try {
        std::size_t used = 0;
        index = std::stoi(token.substr(0, colon), &used);
        if (used != colon) throw bad("malformed feature '" + token + "'");
        const std::string vs = token.substr(colon + 1);
        value = std::stod(vs, &used);
        if (used != vs.size()) throw bad("malformed feature '" + token + "'");
      } catch (const std::logic_error&) {
        throw bad("malformed feature '" + token + "'");
      }
      if (index < 1 || index > 256) {
        throw bad("feature index out of [1, 256]");
      }
      if (value < -1.0 - 1e-9 || value > 1.0 + 1e-9) {
        throw bad("feature value outside [-1, 1]");
      }
      value = std::min(1.0, std::max(-1.0, value));
      img((index - 1) / 16, (index - 1) % 16) = (value + 1.0) / 2.0;
    }
    out.images.push_back(std::move(img));
    out.labels.push_back(label);
  }
  return out;
}

void validate_deform_spec(const DeformSpec& spec) {
  if (!std::isfinite(spec.magnitude)) {
    throw ConfigError("deform: magnitude must be finite");
  }
  if (spec.kind == DeformSpec::Kind::scale && !(spec.magnitude > 0.0)) {
    throw ConfigError("deform: scale magnitude must be positive");
  }
}

Eigen::MatrixXd deform(const Eigen::MatrixXd& image, const DeformSpec& spec) {
  validate_deform_spec(spec);
  using Kind = DeformSpec::Kind;
  const bool identity =
      (spec.kind == Kind::scale) ? spec.magnitude == 1.0
                                 : spec.magnitude == 0.0;
  if (identity) return image;

  const Eigen::Index h = image.rows();
  const Eigen::Index w = image.cols();
  const double cr = static_cast<double>(h - 1) / 2.0;
  const double cc = static_cast<double>(w - 1) / 2.0;
  Eigen::MatrixXd out(h, w);

  const double theta = spec.magnitude * kPi / 180.0;
  const double ct = std::cos(theta);
  const double st = std::sin(theta);

  for (Eigen::Index r = 0; r < h; ++r) {
    for (Eigen::Index c = 0; c < w; ++c) {
      double sr = 0.0;
      double sc = 0.0;
      switch (spec.kind) {
        case Kind::translate_x:
          sr = static_cast<double>(r);
          sc = static_cast<double>(c) - spec.magnitude;
          break;
        case Kind::translate_xy:
          sr = static_cast<double>(r) - spec.magnitude;
          sc = static_cast<double>(c) - spec.magnitude;
          break;
        case Kind::rotate: {
          // Counterclockwise in the usual math sense (rows point down),
          // sampled through the inverse rotation.
          const double dx = static_cast<double>(c) - cc;
          const double dy = -(static_cast<double>(r) - cr);
          const double sx = ct * dx + st * dy;
          const double sy = -st * dx + ct * dy;
          sc = cc + sx;
          sr = cr - sy;
          break;
        }
        case Kind::scale: {
          const double dr = static_cast<double>(r) - cr;
          const double dc = static_cast<double>(c) - cc;
          sr = cr + dr / spec.magnitude;
          sc = cc + dc / spec.magnitude;
          break;
        }
      }
      out(r, c) = bilinear_or_zero(image, sr, sc);
    }
  }
  return out;
}

RawDataset subset(const RawDataset& data, int offset, int count) {
  if (offset < 0 || count < 0) {
    throw DimensionError("subset: negative offset or count");
  }
  RawDataset out;
  out.name = data.name;
  out.split = data.split;
  const int begin = std::min(offset, data.size());
  const int end = std::min(begin + count, data.size());
  out.images.assign(data.images.begin() + begin, data.images.begin() + end);
  out.labels.assign(data.labels.begin() + begin, data.labels.begin() + end);
  return out;
}

void save_model(const Model& model, const std::string& path) {
  const int atoms = model.dict.size();
  if (atoms == 0) throw DimensionError("save_model: empty dictionary");
  const PatchGrid& grid = model.dict.grid();
  const int classes = model.classifier.classes();
  if (model.classifier.code_dim() != atoms) {
    throw DimensionError("save_model: classifier width does not match atoms");
  }
  if (model.window_side < 1 || model.window_side % 2 == 0) {
    throw DimensionError("save_model: invalid window side");
  }

  std::string buf;
  buf.append(kModelMagic, sizeof(kModelMagic));
  put_u32le(buf, kModelVersion);
  put_u32le(buf, static_cast<std::uint32_t>(atoms));
  put_u32le(buf, static_cast<std::uint32_t>(grid.vector_dim()));
  put_u32le(buf, static_cast<std::uint32_t>(grid.positions()));
  put_u32le(buf, static_cast<std::uint32_t>(grid.rows));
  put_u32le(buf, static_cast<std::uint32_t>(grid.cols));
  put_u32le(buf, static_cast<std::uint32_t>(grid.patch));
  put_u32le(buf, static_cast<std::uint32_t>(grid.stride));
  put_u32le(buf, static_cast<std::uint32_t>(model.window_side));
  put_u32le(buf, static_cast<std::uint32_t>(classes));
  for (int n = 0; n < atoms; ++n) {
    const Eigen::MatrixXd& a = model.dict.atom(n).data();
    for (Eigen::Index p = 0; p < a.cols(); ++p) {
      for (Eigen::Index i = 0; i < a.rows(); ++i) put_f64le(buf, a(i, p));
    }
  }
  for (int c = 0; c < classes; ++c) {
    for (Eigen::Index j = 0; j < model.classifier.weights.cols(); ++j) {
      put_f64le(buf, model.classifier.weights(c, j));
    }
  }
  put_u32le(buf, static_cast<std::uint32_t>(model.config_text.size()));
  buf.append(model.config_text);

  const std::string tmp = path + ".tmp";
  {
    std::ofstream outf(tmp, std::ios::binary | std::ios::trunc);
    if (!outf) throw DataFormatError("cannot create file: " + tmp);
    outf.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    outf.flush();
    if (!outf.good()) {
      outf.close();
      std::remove(tmp.c_str());
      throw DataFormatError("cannot write file: " + tmp);
    }
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    std::remove(tmp.c_str());
    throw DataFormatError("cannot move model into place: " + path);
  }
}

Model load_model(const std::string& path) {
  const std::string buf = read_file(path);
  constexpr std::size_t kFixed = 8 + 4 + 9 * 4;
  if (buf.size() < kFixed + 4) {
    throw DataFormatError(path + ": truncated model header");
  }
  if (std::memcmp(buf.data(), kModelMagic, sizeof(kModelMagic)) != 0) {
    throw DataFormatError(path + ": bad model magic");
  }
  const std::uint32_t version = get_u32le(buf, 8);
  if (version != kModelVersion) {
    throw DataFormatError(path + ": unsupported model version " +
                          std::to_string(version));
  }
  const std::uint64_t atoms = get_u32le(buf, 12);
  const std::uint64_t vector_dim = get_u32le(buf, 16);
  const std::uint64_t positions = get_u32le(buf, 20);
  const std::uint64_t rows = get_u32le(buf, 24);
  const std::uint64_t cols = get_u32le(buf, 28);
  const std::uint64_t patch = get_u32le(buf, 32);
  const std::uint64_t stride = get_u32le(buf, 36);
  const std::uint64_t window = get_u32le(buf, 40);
  const std::uint64_t classes = get_u32le(buf, 44);

  if (atoms == 0 || classes < 2 || patch == 0 || stride == 0 || rows == 0 ||
      cols == 0 || window == 0 || window % 2 == 0 ||
      vector_dim != patch * patch || positions != rows * cols) {
    throw DataFormatError(path + ": inconsistent model header");
  }
  const std::uint64_t dict_doubles = atoms * vector_dim * positions;
  const std::uint64_t w_doubles = classes * (atoms + 1);
  const std::uint64_t payload = kFixed + 8 * (dict_doubles + w_doubles);
  if (buf.size() < payload + 4) {
    throw DataFormatError(path + ": size does not match header");
  }
  const std::uint64_t text_len = get_u32le(buf, payload);
  if (buf.size() != payload + 4 + text_len) {
    throw DataFormatError(path + ": size does not match header");
  }

  PatchGrid grid;
  grid.rows = static_cast<int>(rows);
  grid.cols = static_cast<int>(cols);
  grid.patch = static_cast<int>(patch);
  grid.stride = static_cast<int>(stride);
  grid.source_rows = grid.patch + (grid.rows - 1) * grid.stride;
  grid.source_cols = grid.patch + (grid.cols - 1) * grid.stride;
  validate_grid(grid);

  std::size_t at = kFixed;
  std::vector<TensorAtom> dict_atoms;
  dict_atoms.reserve(atoms);
  for (std::uint64_t n = 0; n < atoms; ++n) {
    Eigen::MatrixXd a(vector_dim, positions);
    for (std::uint64_t p = 0; p < positions; ++p) {
      for (std::uint64_t i = 0; i < vector_dim; ++i) {
        a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(p)) =
            get_f64le(buf, at);
        at += 8;
      }
    }
    dict_atoms.emplace_back(std::move(a), grid);
  }
  ClassifierParams classifier;
  classifier.weights.resize(classes, atoms + 1);
  for (std::uint64_t c = 0; c < classes; ++c) {
    for (std::uint64_t j = 0; j < atoms + 1; ++j) {
      classifier.weights(static_cast<Eigen::Index>(c),
                         static_cast<Eigen::Index>(j)) = get_f64le(buf, at);
      at += 8;
    }
  }
  validate_classifier(classifier);

  Model model{Dictionary(std::move(dict_atoms)), std::move(classifier),
              static_cast<int>(window), buf.substr(payload + 4, text_len)};
  return model;
}

}  // namespace flowdict
