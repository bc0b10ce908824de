// Copyright 2026 The cutmixsl Authors
// SPDX-License-Identifier: Apache-2.0

#include "cutmixsl/runner/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>

#include "CLI11.hpp"
#include "cutmixsl/errors.hpp"
#include "cutmixsl/model/checkpoint.hpp"
#include "cutmixsl/runner/attack_suite.hpp"

namespace cutmixsl::runner {

namespace {

std::string dashed(std::string name) {
  std::replace(name.begin(), name.end(), '_', '-');
  return name;
}

// CLI values for the experiment flags, applied over the config file.
struct ExperimentFlags {
  std::string config_file;
  std::map<std::string, std::string> values;
  std::map<std::string, CLI::Option*> options;
  std::map<std::string, CLI::Option*> negations;

  void bind(CLI::App* app) {
    app->add_option("--config", config_file, "JSON config file (flags override it)");
    for (const auto& f : experiment_flags()) {
      if (f.is_switch) {
        options[f.name] = app->add_flag("--" + dashed(f.name))->description(f.help);
        negations[f.name] = app->add_flag("--no-" + dashed(f.name))->description("disable --" + dashed(f.name));
      } else {
        options[f.name] = app->add_option("--" + dashed(f.name), values[f.name], f.help);
      }
    }
  }

  ExperimentConfig resolve() const {
    ExperimentConfig c = config_file.empty() ? ExperimentConfig{} : load_config(config_file);
    for (const auto& f : experiment_flags()) {
      if (f.is_switch) {
        if (options.at(f.name)->count()) f.set(c, "true");
        if (negations.at(f.name)->count()) f.set(c, "false");
      } else if (options.at(f.name)->count()) {
        f.set(c, values.at(f.name));
      }
    }
    return c;
  }
};

struct AttackFlags {
  std::string checkpoint, output, representation, target = "first_client";
  double fraction = 0.0;
  std::vector<double> fractions = {0.1, 1.0};
  privacy::AttackConfig attack;

  void bind(CLI::App* app) {
    app->add_option("--checkpoint", checkpoint, "model.ckpt to attack instead of training inline");
    app->add_option("--attack-output", output, "write the report JSON here");
    app->add_option("--representation", representation, "run one attack on this representation");
    app->add_option("--fraction", fraction, "train fraction for a single attack");
    app->add_option("--fractions", fractions, "train fractions for the suite");
    app->add_option("--attack-target", target, "first_client | mixed_image");
    app->add_option("--attack-width", attack.decoder_width, "decoder hidden width");
    app->add_option("--attack-depth", attack.decoder_depth, "decoder hidden layers");
    app->add_option("--attack-epochs", attack.epochs, "decoder epochs");
    app->add_option("--attack-batch-size", attack.batch_size, "decoder batch size");
    app->add_option("--attack-lr", attack.lr, "decoder learning rate");
    app->add_option("--attack-keep-ratio", attack.keep_ratio, "CutSmashed keep ratio");
    app->add_option("--attack-mix-alpha", attack.mix_alpha, "mixing concentration");
    app->add_option("--attack-sigma-x", attack.sigma_x, "noise on the observations");
    app->add_option("--attack-seed", attack.seed, "decoder seed");
  }
};

int usage(std::ostream& err, const std::string& msg) {
  err << "error: " << msg << "\n";
  return 2;
}

int cmd_train(const ExperimentFlags& flags, bool print_config, std::ostream& out) {
  const auto config = flags.resolve();
  config.validate();
  if (print_config) {
    out << to_json(config).dump(2) << "\n";
    return 0;
  }
  const auto result = run_experiment(config);
  out << result.summary.dump(2) << "\n";
  return 0;
}

int cmd_attack(const ExperimentFlags& flags, AttackFlags a, std::ostream& out) {
  AttackSuiteConfig suite;
  suite.training = flags.resolve();
  suite.training.validate();
  suite.checkpoint = a.checkpoint;
  suite.attack = a.attack;
  suite.attack.target = privacy::parse_target(a.target);
  suite.fractions = a.fractions;
  if (!a.representation.empty()) {
    suite.attack.representation = privacy::parse_representation(a.representation);
    suite.attack.train_fraction = a.fraction > 0.0 ? a.fraction : 1.0;
    suite.fractions = {suite.attack.train_fraction};
  }
  suite.attack.validate();
  if (!a.representation.empty()) {
    const auto data = load_data(suite.training);
    const auto model = suite.training.model_config();
    model::ClientSegment client = model::init_parameters(model, suite.training.seed).first;
    if (a.checkpoint.empty()) {
      client = run_experiment(suite.training, data).client.clone();
    } else {
      model::assign(model::load_checkpoint(a.checkpoint), client.named_parameters());
    }
    const auto report = privacy::run_attack(suite.attack, {model, client, data.train, data.test});
    const auto j = privacy::to_json(report);
    if (!a.output.empty()) {
      std::ofstream file(a.output);
      file << j.dump(2) << "\n";
    }
    out << j.dump(2) << "\n";
    return 0;
  }
  suite.output = a.output;
  const auto result = run_attack_suite(suite);
  out << result.table.dump(2) << "\n";
  return 0;
}

int cmd_replay(const std::string& path, std::ostream& out) {
  const auto records = protocol::read_transcript(path);
  const auto summary = protocol::summarize(records);
  if (summary.preamble.empty()) throw IngestionError(path + ": transcript has no config preamble");
  const auto config = config_from_json(nlohmann::json::parse(summary.preamble));
  const auto model = config.model_config();
  auto server = model::init_parameters(model, config.seed).second;
  const auto replay = protocol::replay_server(records, model, server, config.optimizer);
  out << nlohmann::json{{"server_steps", replay.server_steps},
                        {"gradients_checked", replay.gradients_checked},
                        {"mismatches", replay.mismatches}}
             .dump(2)
      << "\n";
  return replay.mismatches == 0 ? 0 : 1;
}

int cmd_transcript(const std::string& path, std::ostream& out) {
  const auto s = protocol::summarize(protocol::read_transcript(path));
  out << nlohmann::json{{"rounds", s.rounds},
                        {"server_steps", s.server_steps},
                        {"uploads", s.uploads},
                        {"upload_bytes", s.upload_bytes},
                        {"sequence_bytes", s.sequence_bytes}}
             .dump(2)
      << "\n";
  return 0;
}

int cmd_dump_synthetic(const ExperimentFlags& flags, const std::string& dir, std::ostream& out) {
  auto config = flags.resolve();
  config.data.kind = "synthetic";
  config.validate();
  const auto& spec = config.data.synthetic;
  if (spec.image_size != 32 || spec.channels != 3 || spec.classes > 10) {
    throw ContractError("dump-synthetic writes CIFAR-10 records: needs 32x32x3 images and at most 10 classes");
  }
  const auto data = load_data(config);
  std::filesystem::create_directories(dir);
  // Five train batches as CIFAR-10 ships them.
  const std::size_t n = data.train.size();
  for (std::size_t b = 0; b < 5; ++b) {
    std::vector<std::size_t> idx;
    for (std::size_t i = b * n / 5; i < (b + 1) * n / 5; ++i) idx.push_back(i);
    data::write_cifar_batch((std::filesystem::path(dir) / ("data_batch_" + std::to_string(b + 1) + ".bin")).string(),
                            data::subset(data.train, idx));
  }
  data::write_cifar_batch((std::filesystem::path(dir) / "test_batch.bin").string(), data.test);
  out << "wrote " << n << " train and " << data.test.size() << " test records to " << dir << "\n";
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"cutmixsl: split learning with token CutMix for vision transformers"};
  app.require_subcommand(1);

  ExperimentFlags train_flags, attack_flags, dump_flags;
  AttackFlags attack_opts;
  std::string transcript_path, dump_dir;

  auto* train = app.add_subcommand("train", "run one training experiment");
  train_flags.bind(train);
  bool print_config = false;
  train->add_flag("--print-config", print_config, "print the resolved config and exit");
  auto* attack = app.add_subcommand("attack", "train or load a snapshot and run reconstruction attacks");
  attack_flags.bind(attack);
  attack_opts.bind(attack);
  auto* replay = app.add_subcommand("replay", "re-execute the server side of a transcript and check gradients");
  replay->add_option("transcript", transcript_path, "transcript file")->required();
  auto* summary = app.add_subcommand("transcript", "summarize a round transcript");
  summary->add_option("transcript", transcript_path, "transcript file")->required();
  auto* dump = app.add_subcommand("dump-synthetic", "write the synthetic dataset as CIFAR-10 binary batches");
  dump_flags.bind(dump);
  dump->add_option("--dir", dump_dir, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    if (*train) return cmd_train(train_flags, print_config, out);
    if (*attack) return cmd_attack(attack_flags, attack_opts, out);
    if (*replay) return cmd_replay(transcript_path, out);
    if (*summary) return cmd_transcript(transcript_path, out);
    if (*dump) return cmd_dump_synthetic(dump_flags, dump_dir, out);
  } catch (const ContractError& e) {
    return usage(err, e.what());
  } catch (const DimensionError& e) {
    return usage(err, e.what());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

}  // namespace cutmixsl::runner
