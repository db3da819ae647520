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

#include "commands.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <utility>
#include <vector>

#include "flowdict/data_io.hpp"
#include "flowdict/errors.hpp"
#include "flowdict/evaluate.hpp"
#include "flowdict/learn.hpp"
#include "flowdict/model.hpp"
#include "flowdict/tensor.hpp"

#include "config.hpp"
#include "svg.hpp"

namespace flowdict::tools {

namespace {

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_file_atomic(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataFormatError("cannot create file: " + tmp);
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out.good()) {
      out.close();
      std::remove(tmp.c_str());
      throw DataFormatError("cannot write file: " + tmp);
    }
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    std::remove(tmp.c_str());
    throw DataFormatError("cannot move file into place: " + path);
  }
}

/// Echo block: one "# key=value" line per setting, key-sorted.
std::string echo_header(const std::map<std::string, std::string>& settings) {
  std::string out;
  for (const auto& [key, value] : settings) {
    out += "# " + key + "=" + value + "\n";
  }
  return out;
}

RawDataset load_dataset(const std::string& images_path,
                        const std::string& labels_path) {
  RawDataset data = labels_path.empty() ? read_usps(images_path)
                                        : read_idx(images_path, labels_path);
  validate_dataset(data);
  return data;
}

DeformSpec parse_deform(const std::string& token) {
  const std::size_t eq = token.find('=');
  if (eq == std::string::npos || eq == 0 || eq + 1 >= token.size()) {
    throw ConfigError("deform: expected kind=value, got '" + token + "'");
  }
  const std::string kind = token.substr(0, eq);
  const std::string value = token.substr(eq + 1);
  DeformSpec spec;
  if (kind == "translate_x") {
    spec.kind = DeformSpec::Kind::translate_x;
  } else if (kind == "translate_xy") {
    spec.kind = DeformSpec::Kind::translate_xy;
  } else if (kind == "rotate") {
    spec.kind = DeformSpec::Kind::rotate;
  } else if (kind == "scale") {
    spec.kind = DeformSpec::Kind::scale;
  } else {
    throw ConfigError("deform: unknown kind '" + kind + "'");
  }
  try {
    std::size_t used = 0;
    spec.magnitude = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
  } catch (const std::logic_error&) {
    throw ConfigError("deform: bad magnitude '" + value + "'");
  }
  validate_deform_spec(spec);
  return spec;
}

LearnConfig learn_config_from(const Config& cfg) {
  LearnConfig lc;
  lc.atoms = static_cast<int>(cfg.get_int("atoms", lc.atoms));
  lc.rho0 = cfg.get_double("rho0", lc.rho0);
  lc.batch_size = static_cast<int>(cfg.get_int("batch_size", lc.batch_size));
  lc.epochs = static_cast<int>(cfg.get_int("epochs", lc.epochs));
  lc.decay_halflife =
      static_cast<int>(cfg.get_int("decay_halflife", lc.decay_halflife));
  lc.lambda = cfg.get_double("lambda", lc.lambda);
  lc.mu = cfg.get_double("mu", lc.mu);
  lc.window_side = static_cast<int>(cfg.get_int("window", lc.window_side));
  lc.patch_size = static_cast<int>(cfg.get_int("patch", lc.patch_size));
  lc.stride = static_cast<int>(cfg.get_int("stride", lc.stride));
  lc.seed = static_cast<std::uint64_t>(cfg.get_int("seed", 0));
  lc.refit_svm = cfg.get_bool("refit_svm", lc.refit_svm);
  validate_learn_config(lc);
  return lc;
}

RawDataset load_train_dataset(const Config& cfg) {
  const std::string kind = cfg.get_string("dataset");
  if (kind == "idx") {
    return load_dataset(cfg.get_string("train_images"),
                        cfg.get_string("train_labels"));
  }
  if (kind == "usps") {
    return load_dataset(cfg.get_string("train_path"), "");
  }
  throw ConfigError("dataset must be idx or usps, got '" + kind + "'");
}

RawDataset load_test_dataset(const Config& cfg) {
  const std::string kind = cfg.get_string("dataset");
  if (kind == "idx") {
    return load_dataset(cfg.get_string("test_images"),
                        cfg.get_string("test_labels"));
  }
  if (kind == "usps") {
    return load_dataset(cfg.get_string("test_path"), "");
  }
  throw ConfigError("dataset must be idx or usps, got '" + kind + "'");
}

void learn_config_echo(const LearnConfig& lc,
                       std::map<std::string, std::string>& s) {
  s["atoms"] = std::to_string(lc.atoms);
  s["rho0"] = fmt(lc.rho0);
  s["batch_size"] = std::to_string(lc.batch_size);
  s["epochs"] = std::to_string(lc.epochs);
  s["decay_halflife"] = std::to_string(lc.decay_halflife);
  s["lambda"] = fmt(lc.lambda);
  s["mu"] = fmt(lc.mu);
  s["window"] = std::to_string(lc.window_side);
  s["patch"] = std::to_string(lc.patch_size);
  s["stride"] = std::to_string(lc.stride);
  s["seed"] = std::to_string(lc.seed);
  s["refit_svm"] = lc.refit_svm ? "true" : "false";
}

double model_lambda(const Model& model, double override_lambda) {
  if (override_lambda > 0.0) return override_lambda;
  try {
    const Config mc = Config::parse_text(model.config_text, "model config");
    return mc.get_double("lambda", 0.01);
  } catch (const Error&) {
    return 0.01;
  }
}

std::string deform_kind_name(DeformSpec::Kind kind) {
  switch (kind) {
    case DeformSpec::Kind::translate_x: return "translate_x";
    case DeformSpec::Kind::translate_xy: return "translate_xy";
    case DeformSpec::Kind::rotate: return "rotate";
    case DeformSpec::Kind::scale: return "scale";
  }
  return "?";
}

std::vector<double> parse_value_list(const std::string& raw,
                                     const std::string& key) {
  std::vector<double> values;
  std::istringstream in(raw);
  std::string token;
  while (std::getline(in, token, ',')) {
    try {
      std::size_t used = 0;
      values.push_back(std::stod(token, &used));
      if (used != token.size()) throw std::invalid_argument(token);
    } catch (const std::logic_error&) {
      throw ConfigError("key '" + key + "': bad number '" + token + "'");
    }
  }
  if (values.empty()) throw ConfigError("key '" + key + "': empty list");
  return values;
}

}  // namespace

int cmd_train(const std::string& config_path, bool full) {
  const Config cfg = Config::parse_file(config_path);
  const LearnConfig lc = learn_config_from(cfg);
  const std::string model_out = cfg.get_string("model_out");
  const std::string metrics_out =
      cfg.get_string("metrics_out", model_out + ".metrics.csv");
  const long long limit = full ? 0 : cfg.get_int("train_limit", 0);

  RawDataset data = load_train_dataset(cfg);
  if (limit > 0) data = subset(data, 0, static_cast<int>(limit));

  const TrainResult result = train(data, lc, cfg.text());
  save_model(result.model, model_out);

  std::map<std::string, std::string> settings;
  learn_config_echo(lc, settings);
  settings["dataset"] = cfg.get_string("dataset");
  settings["train_limit"] = std::to_string(limit);
  settings["train_samples"] = std::to_string(data.size());
  settings["model_out"] = model_out;
  settings["command"] = full ? "train --full" : "train";

  std::string csv = echo_header(settings);
  csv += "epoch,mean_loss,train_error,mean_active_set,wall_seconds\n";
  for (const EpochMetrics& row : result.epochs) {
    csv += std::to_string(row.epoch) + "," + fmt(row.mean_loss) + "," +
           fmt(row.train_error) + "," + fmt(row.mean_active_set) + "," +
           fmt(row.wall_seconds) + "\n";
  }
  write_file_atomic(metrics_out, csv);

  std::cout << "model: " << model_out << "\n";
  std::cout << "metrics: " << metrics_out << "\n";
  if (result.epochs.empty()) {
    std::cout << "final training error: n/a (0 epochs)\n";
  } else {
    std::cout << "final training error: "
              << fmt(result.epochs.back().train_error) << "\n";
  }
  return 0;
}

int cmd_eval(const EvalArgs& args) {
  const Model model = load_model(args.model_path);
  RawDataset data = load_dataset(args.images_path, args.labels_path);
  if (args.limit > 0) data = subset(data, 0, args.limit);

  EvalOptions opts;
  opts.window_override = args.window;
  if (!args.deform.empty()) opts.deform = parse_deform(args.deform);
  opts.solver.lambda = model_lambda(model, args.lambda);

  const EvalReport report = evaluate_model(model, data, opts);
  const int window =
      args.window != 0 ? args.window : model.window_side;

  std::map<std::string, std::string> settings;
  settings["model"] = args.model_path;
  settings["images"] = args.images_path;
  if (!args.labels_path.empty()) settings["labels"] = args.labels_path;
  settings["window"] = std::to_string(window);
  settings["deform"] = args.deform.empty() ? "none" : args.deform;
  settings["lambda"] = fmt(opts.solver.lambda);
  settings["limit"] = std::to_string(args.limit);
  settings["n_test"] = std::to_string(report.n_test);
  settings["errors"] = std::to_string(report.errors);
  settings["error_rate"] = fmt(report.error_rate);
  settings["accuracy"] = fmt(1.0 - report.error_rate);
  settings["mean_active_set"] = fmt(report.mean_active);

  std::string csv = echo_header(settings);
  for (std::size_t c = 0; c < report.per_class_total.size(); ++c) {
    csv += "# class " + std::to_string(c) +
           ": total=" + std::to_string(report.per_class_total[c]) +
           " errors=" + std::to_string(report.per_class_errors[c]) + "\n";
  }
  csv += "index,truth,predicted\n";
  for (std::size_t i = 0; i < report.predictions.size(); ++i) {
    csv += std::to_string(i) + "," + std::to_string(data.labels[i]) + "," +
           std::to_string(report.predictions[i]) + "\n";
  }

  if (args.out_path.empty()) {
    std::cout << csv;
  } else {
    write_file_atomic(args.out_path, csv);
    std::cout << "report: " << args.out_path << "\n";
    std::cout << "error rate: " << fmt(report.error_rate) << "\n";
  }
  return 0;
}

namespace {

struct SweepRow {
  double value = 0.0;
  std::string method;
  double accuracy = 0.0;
  int n_test = 0;
};

std::vector<double> default_sweep_values(const std::string& kind) {
  if (kind == "train_size") {
    return {300, 1000, 2000, 5000, 10000, 20000, 40000, 60000};
  }
  std::vector<double> values;
  if (kind == "translate_x") {
    for (int v = -5; v <= 5; ++v) values.push_back(v);
  } else if (kind == "rotate") {
    for (int v = -30; v <= 30; v += 5) values.push_back(v);
  } else if (kind == "scale") {
    for (int i = 0; i <= 6; ++i) values.push_back(0.7 + 0.1 * i);
  }
  return values;
}

}  // namespace

int cmd_sweep(const std::string& config_path) {
  const Config cfg = Config::parse_file(config_path);
  const std::string kind = cfg.get_string("sweep");
  const bool is_train_size = kind == "train_size";
  const bool is_deform =
      kind == "translate_x" || kind == "rotate" || kind == "scale";
  if (!is_train_size && !is_deform) {
    throw ConfigError("sweep must be one of train_size, translate_x, "
                      "rotate, scale; got '" + kind + "'");
  }

  const std::string out_csv = cfg.get_string("out_csv");
  const std::string out_svg = cfg.get_string("out_svg", out_csv + ".svg");
  const auto seed = static_cast<std::uint64_t>(cfg.get_int("seed", 0));

  RawDataset test = load_test_dataset(cfg);
  const long long test_limit = cfg.get_int("test_limit", 0);
  if (test_limit > 0) test = subset(test, 0, static_cast<int>(test_limit));

  std::vector<double> values =
      cfg.has("values") ? parse_value_list(cfg.get_string("values"), "values")
                        : default_sweep_values(kind);
  if (is_train_size && cfg.has("sizes")) {
    values = parse_value_list(cfg.get_string("sizes"), "sizes");
  }

  std::map<std::string, std::string> settings;
  settings["sweep"] = kind;
  settings["seed"] = std::to_string(seed);
  settings["n_test"] = std::to_string(test.size());
  settings["dataset"] = cfg.get_string("dataset");

  std::vector<SweepRow> rows;
  std::vector<double> acc_proposed, acc_baseline;

  if (is_train_size) {
    LearnConfig lc = learn_config_from(cfg);
    lc.seed = seed;
    RawDataset full_train = load_train_dataset(cfg);
    learn_config_echo(lc, settings);

    for (double raw : values) {
      const int size = static_cast<int>(raw);
      const RawDataset part = subset(full_train, 0, size);
      for (const bool proposed : {true, false}) {
        LearnConfig run_cfg = lc;
        run_cfg.window_side = proposed ? lc.window_side : 1;
        const TrainResult result = train(part, run_cfg, cfg.text());
        EvalOptions opts;
        opts.solver.lambda = lc.lambda;
        const EvalReport rep = evaluate_model(result.model, test, opts);
        const double acc = 1.0 - rep.error_rate;
        rows.push_back(SweepRow{static_cast<double>(part.size()),
                                proposed ? "proposed" : "baseline", acc,
                                rep.n_test});
        (proposed ? acc_proposed : acc_baseline).push_back(acc);
      }
    }
  } else {
    const Model proposed_model = load_model(cfg.get_string("model_proposed"));
    const Model baseline_model = load_model(cfg.get_string("model_baseline"));
    const double lambda = cfg.get_double(
        "lambda", model_lambda(proposed_model, 0.0));
    settings["lambda"] = fmt(lambda);
    settings["model_proposed"] = cfg.get_string("model_proposed");
    settings["model_baseline"] = cfg.get_string("model_baseline");

    DeformSpec::Kind dk = DeformSpec::Kind::translate_x;
    if (kind == "rotate") dk = DeformSpec::Kind::rotate;
    if (kind == "scale") dk = DeformSpec::Kind::scale;

    for (double v : values) {
      DeformSpec spec;
      spec.kind = dk;
      spec.magnitude = v;
      validate_deform_spec(spec);
      for (const bool proposed : {true, false}) {
        const Model& model = proposed ? proposed_model : baseline_model;
        EvalOptions opts;
        opts.deform = spec;
        opts.solver.lambda = lambda;
        const EvalReport rep = evaluate_model(model, test, opts);
        const double acc = 1.0 - rep.error_rate;
        rows.push_back(SweepRow{
            v, proposed ? "proposed" : "baseline", acc, rep.n_test});
        (proposed ? acc_proposed : acc_baseline).push_back(acc);
      }
    }
  }

  std::string csv = echo_header(settings);
  csv += "sweep_kind,sweep_value,method,accuracy,n_test,seed\n";
  std::vector<double> xs;
  for (const SweepRow& row : rows) {
    csv += kind + "," + fmt(row.value) + "," + row.method + "," +
           fmt(row.accuracy) + "," + std::to_string(row.n_test) + "," +
           std::to_string(seed) + "\n";
    if (row.method == "proposed") xs.push_back(row.value);
  }
  write_file_atomic(out_csv, csv);

  const std::string svg = sweep_plot_svg(
      kind + " sweep", is_train_size ? "training samples" : kind, "accuracy",
      "proposed", "baseline (window 1)", xs, acc_proposed, acc_baseline);
  write_file_atomic(out_svg, svg);

  std::cout << "sweep: " << out_csv << "\n";
  std::cout << "plot: " << out_svg << "\n";
  return 0;
}

int cmd_export_dict(const std::string& model_path,
                    const std::string& out_dir) {
  const Model model = load_model(model_path);
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw DataFormatError("cannot create directory: " + out_dir);

  const PatchGrid& grid = model.dict.grid();
  for (int n = 0; n < model.dict.size(); ++n) {
    const Eigen::MatrixXd img =
        reconstruct_image(model.dict.atom(n).data(), grid);
    const double lo = img.minCoeff();
    const double hi = img.maxCoeff();
    const double range = hi - lo;

    std::string pgm = "P5\n" + std::to_string(img.cols()) + " " +
                      std::to_string(img.rows()) + "\n255\n";
    for (Eigen::Index r = 0; r < img.rows(); ++r) {
      for (Eigen::Index c = 0; c < img.cols(); ++c) {
        const double unit = range > 0.0 ? (img(r, c) - lo) / range : 0.0;
        pgm.push_back(static_cast<char>(
            static_cast<unsigned char>(std::lround(unit * 255.0))));
      }
    }
    char name[32];
    std::snprintf(name, sizeof(name), "atom_%04d.pgm", n);
    write_file_atomic(
        (std::filesystem::path(out_dir) / name).string(), pgm);
  }
  std::cout << "wrote " << model.dict.size() << " atom images to " << out_dir
            << "\n";
  return 0;
}

}  // namespace flowdict::tools
