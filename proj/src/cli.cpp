// Copyright 2026 The coembed Authors
// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "coembed/cli.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <map>
#include <numeric>
#include <ostream>

#include "coembed/embedstore.hpp"
#include "coembed/errors.hpp"
#include "coembed/evalkit.hpp"
#include "coembed/projhead.hpp"
#include "coembed/synthgen.hpp"
#include "coembed/text.hpp"
#include "coembed/trainer.hpp"

namespace coembed {

namespace {

struct SynthArgs {
  SynthConfig config;
  std::string out;
  std::string truth;
};

struct TrainArgs {
  TrainConfig config;
  std::string data;
  std::string out = "model.prjw";
  std::string report;
  std::size_t hidden = 0;
  std::string activation = "relu";
  bool quiet = false;
};

struct EvalArgs {
  std::string data;
  std::string model;
  std::string model_b;
  std::vector<std::size_t> ks{1, 5, 10};
  double split = 0.67;
  std::uint64_t seed = 0;
  bool all = false;
  std::string report;
  std::string out;  // project only
};

std::ofstream open_text(const std::string& path) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw DataError("cannot open " + path + " for writing");
  return f;
}

int do_synth(const SynthArgs& args, std::ostream& out) {
  const SynthResult result = generate(args.config);
  const std::size_t bytes = save_dataset(result.dataset, args.out);
  out << "wrote " << args.out << ": " << result.dataset.size() << " records, dims "
      << result.dataset.dim_a << '/' << result.dataset.dim_b << ", " << bytes << " bytes\n";
  if (!args.truth.empty()) {
    if (args.config.nonlinear) {
      throw DataError("--truth is only defined for linear instances");
    }
    save_head(ground_truth_head(result.truth), args.truth);
    out << "wrote ground-truth map " << args.truth << '\n';
  }
  return kExitOk;
}

int do_inspect(const std::string& path, std::ostream& out) {
  const PairDataset ds = load_dataset(path);
  out << "format=EMBD\n";
  out << "version=" << kEmbdVersion << '\n';
  out << "dim_a=" << ds.dim_a << '\n';
  out << "dim_b=" << ds.dim_b << '\n';
  out << "records=" << ds.size() << '\n';
  out << "labeled=" << format_bool(ds.labeled) << '\n';
  if (ds.labeled) {
    std::map<std::int32_t, std::size_t> counts;
    for (const auto& r : ds.records) ++counts[r.label];
    out << "classes=" << counts.size() << '\n';
    for (const auto& [label, n] : counts) out << "label." << label << '=' << n << '\n';
  }
  return kExitOk;
}

int do_train(TrainArgs& args, std::ostream& out) {
  TrainConfig& config = args.config;
  if (args.hidden > 0) config.hidden = {args.hidden};
  config.activation = parse_activation(args.activation);

  const PairDataset ds = load_dataset(args.data);
  FitOptions options;
  if (config.checkpoint_every > 0) options.checkpoint_prefix = args.out;
  if (!args.quiet) {
    options.on_epoch = [&](const EpochStats& e) {
      out << "epoch " << e.epoch << '/' << config.epochs
          << " train_loss=" << format_double(e.train_loss)
          << " val_loss=" << format_double(e.val_loss) << '\n';
    };
  }
  const FitResult result = fit(ds, config, options);
  save_head(result.heads.head_a, args.out);
  if (result.heads.head_b) save_head(*result.heads.head_b, args.out + ".b");

  const std::string report_path = args.report.empty() ? args.out + ".report.txt" : args.report;
  std::ofstream rep = open_text(report_path);
  write_report(result.report, rep);
  out << "wrote " << args.out << (result.heads.head_b ? " (+ .b)" : "") << " and "
      << report_path << '\n';
  return kExitOk;
}

Heads load_heads(const EvalArgs& args) {
  Heads heads;
  heads.head_a = load_head(args.model);
  if (!args.model_b.empty()) heads.head_b = load_head(args.model_b);
  return heads;
}

std::vector<std::size_t> eval_indices(const PairDataset& ds, const EvalArgs& args) {
  if (args.all) {
    std::vector<std::size_t> all(ds.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    return all;
  }
  return split_dataset(ds, args.split, args.seed).val;
}

int do_eval(const EvalArgs& args, std::ostream& out) {
  const PairDataset ds = load_dataset(args.data);
  const EvalResult result = evaluate(ds, load_heads(args), eval_indices(ds, args), args.ks);
  if (args.report.empty()) {
    write_eval_report(result.report, out);
  } else {
    std::ofstream rep = open_text(args.report);
    write_eval_report(result.report, rep);
    out << "wrote " << args.report << '\n';
  }
  return kExitOk;
}

int do_project(const EvalArgs& args, std::ostream& out) {
  const PairDataset ds = load_dataset(args.data);
  const std::vector<std::size_t> ks{1};
  const EvalResult result = evaluate(ds, load_heads(args), eval_indices(ds, args), ks);
  std::ofstream csv = open_text(args.out);
  write_points_csv(result.points, csv);
  out << "wrote " << args.out << ": " << result.points.size() << " points\n";
  return kExitOk;
}

void add_model_flags(CLI::App* cmd, EvalArgs& a) {
  cmd->add_option("--data", a.data, "EMBD dataset")->required();
  cmd->add_option("--model", a.model, "PRJW head for modality A")->required();
  cmd->add_option("--model-b", a.model_b, "PRJW head for modality B (two-sided models)");
  cmd->add_option("--split", a.split, "train fraction used to recover the validation subset");
  cmd->add_option("--seed", a.seed, "split seed used at training time");
  cmd->add_flag("--all", a.all, "use every record instead of the validation subset");
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err) {
  CLI::App app{"coembed: learn a joint embedding space over two frozen embedding spaces"};
  app.option_defaults()->always_capture_default();
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "help for every subcommand");

  SynthArgs synth;
  auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic paired dataset");
  synth_cmd->add_option("--out", synth.out, "output EMBD path")->required();
  synth_cmd->add_option("--latent-dim", synth.config.latent_dim, "shared latent dimension");
  synth_cmd->add_option("--dim-a", synth.config.dim_a, "modality A dimension");
  synth_cmd->add_option("--dim-b", synth.config.dim_b, "modality B dimension");
  synth_cmd->add_option("--classes", synth.config.n_classes, "number of classes");
  synth_cmd->add_option("--pairs", synth.config.n_pairs, "number of pairs");
  synth_cmd->add_option("--within-sigma", synth.config.within_class_sigma, "within-class latent spread");
  synth_cmd->add_option("--noise-sigma", synth.config.noise_sigma, "additive observation noise");
  synth_cmd->add_flag("--nonlinear", synth.config.nonlinear, "apply tanh to modality A");
  synth_cmd->add_option("--seed", synth.config.seed, "generator seed");
  synth_cmd->add_option("--truth", synth.truth, "also write the exact A->B map as PRJW");

  std::string inspect_path;
  auto* inspect_cmd = app.add_subcommand("inspect", "print an EMBD header and label counts");
  inspect_cmd->add_option("path", inspect_path, "EMBD file")->required();

  TrainArgs train;
  TrainConfig& tc = train.config;
  auto* train_cmd = app.add_subcommand("train", "fit a projection head");
  train_cmd->add_option("--data", train.data, "EMBD dataset")->required();
  train_cmd->add_option("--out", train.out, "output PRJW path (two-sided adds <out>.b)");
  train_cmd->add_option("--epochs", tc.epochs, "training epochs");
  train_cmd->add_option("--batch", tc.batch_size, "batch size")->check(CLI::Range(std::size_t{2}, SIZE_MAX));
  train_cmd->add_option("--lr", tc.lr, "Adam learning rate")->check(CLI::PositiveNumber);
  train_cmd->add_option("--split", tc.train_fraction, "train fraction")->check(CLI::Range(0.0, 1.0));
  train_cmd->add_option("--tau", tc.tau, "softmax temperature")->check(CLI::Range(0.01, 1e6));
  train_cmd->add_flag("--learnable-tau", tc.learnable_tau, "train the temperature");
  train_cmd->add_option("--hidden", train.hidden, "hidden layer width, 0 = single affine layer");
  train_cmd->add_option("--activation", train.activation, "hidden activation")
      ->check(CLI::IsMember({"identity", "relu"}));
  train_cmd->add_flag("--two-sided", tc.two_sided, "train a head on modality B as well");
  train_cmd->add_option("--out-dim", tc.out_dim, "shared space dim, 0 = dim_b (two-sided only)");
  train_cmd->add_option("--seed", tc.seed, "seed for split, init and batching");
  train_cmd->add_option("--report", train.report, "report path (default <out>.report.txt)");
  train_cmd->add_option("--checkpoint-every", tc.checkpoint_every, "write <out>.epochN every N epochs, 0 = off");
  train_cmd->add_flag("--quiet", train.quiet, "suppress per-epoch lines");

  EvalArgs eval;
  auto* eval_cmd = app.add_subcommand("eval", "score retrieval and class separation");
  add_model_flags(eval_cmd, eval);
  eval_cmd->add_option("--k", eval.ks, "comma-separated recall cutoffs")->delimiter(',');
  eval_cmd->add_option("--report", eval.report, "report path (default stdout)");

  EvalArgs project;
  auto* project_cmd = app.add_subcommand("project", "export joint 2-D PCA points as CSV");
  add_model_flags(project_cmd, project);
  project_cmd->add_option("--out", project.out, "output CSV path")->required();

  std::vector<const char*> argv{"coembed"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << (app.get_subcommands().empty() ? app.help() : app.get_subcommands().back()->help());
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n";
    err << (app.get_subcommands().empty() ? app.help() : app.get_subcommands().back()->help());
    return kExitUsage;
  }

  try {
    if (*synth_cmd) return do_synth(synth, out);
    if (*inspect_cmd) return do_inspect(inspect_path, out);
    if (*train_cmd) return do_train(train, out);
    if (*eval_cmd) return do_eval(eval, out);
    if (*project_cmd) return do_project(project, out);
  } catch (const NumericError& e) {
    err << "numeric failure: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  }
  return kExitUsage;
}

}  // namespace coembed
