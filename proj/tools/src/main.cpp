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

#include <exception>
#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "flowdict/errors.hpp"

#include "commands.hpp"

namespace {

// Exit codes: 0 success, 1 usage/config, 2 data, 3 numerical failure.
int run(int argc, char** argv) {
  CLI::App app{"misalignment-robust sparse coding for image classification"};
  app.require_subcommand(1);

  std::string train_config;
  bool train_full = false;
  CLI::App* train = app.add_subcommand(
      "train", "learn a dictionary and classifier from a config file");
  train->add_option("config", train_config, "key=value config file")
      ->required();
  train->add_flag("--full", train_full,
                  "ignore train_limit and use the whole training set");

  flowdict::tools::EvalArgs eval_args;
  CLI::App* eval = app.add_subcommand(
      "eval", "classify a dataset with a trained model and report errors");
  eval->add_option("model", eval_args.model_path, "model file")->required();
  eval->add_option("images", eval_args.images_path,
                   "IDX image file, or combined text file when no labels "
                   "file is given")
      ->required();
  eval->add_option("labels", eval_args.labels_path,
                   "IDX label file (omit for single-file text datasets)");
  eval->add_option("--deform", eval_args.deform,
                   "test-time warp, kind=value (translate_x, translate_xy, "
                   "rotate, scale)");
  eval->add_option("--window", eval_args.window,
                   "override the model's registration window side (odd)");
  eval->add_option("--limit", eval_args.limit,
                   "evaluate only the first N samples");
  eval->add_option("--lambda", eval_args.lambda,
                   "override the sparsity weight stored with the model");
  eval->add_option("--out", eval_args.out_path,
                   "write the per-sample report CSV here instead of stdout");

  std::string sweep_config;
  CLI::App* sweep = app.add_subcommand(
      "sweep", "compare proposed vs window-1 baseline across a parameter");
  sweep->add_option("config", sweep_config, "key=value config file")
      ->required();

  std::string export_model, export_dir;
  CLI::App* export_dict = app.add_subcommand(
      "export-dict", "write each dictionary atom as a PGM image");
  export_dict->add_option("model", export_model, "model file")->required();
  export_dict->add_option("dir", export_dir, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  if (train->parsed()) return flowdict::tools::cmd_train(train_config, train_full);
  if (eval->parsed()) return flowdict::tools::cmd_eval(eval_args);
  if (sweep->parsed()) return flowdict::tools::cmd_sweep(sweep_config);
  if (export_dict->parsed()) {
    return flowdict::tools::cmd_export_dict(export_model, export_dir);
  }
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const flowdict::ConfigError& e) {
    std::cerr << "flowdict: config error: " << e.what() << "\n";
    return 1;
  } catch (const flowdict::DataFormatError& e) {
    std::cerr << "flowdict: data error: " << e.what() << "\n";
    return 2;
  } catch (const flowdict::DimensionError& e) {
    std::cerr << "flowdict: data error: " << e.what() << "\n";
    return 2;
  } catch (const flowdict::NumericalError& e) {
    std::cerr << "flowdict: numerical error: " << e.what() << "\n";
    return 3;
  } catch (const flowdict::Error& e) {
    std::cerr << "flowdict: error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "flowdict: error: " << e.what() << "\n";
    return 1;
  }
}
