// Copyright 2026 The cutmixsl Authors
// SPDX-License-Identifier: Apache-2.0

#include "cutmixsl/runner/attack_suite.hpp"

#include <cstdio>
#include <fstream>

#include "cutmixsl/errors.hpp"
#include "cutmixsl/model/checkpoint.hpp"

namespace cutmixsl::runner {

namespace {

std::string fraction_key(double f) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f", f);
  return buf;
}

}  // namespace

AttackSuiteResult run_attack_suite(const AttackSuiteConfig& config, const privacy::AttackSnapshot& snapshot) {
  if (config.fractions.empty()) throw ContractError("attack suite needs at least one train fraction");
  AttackSuiteResult out;
  nlohmann::json rows = nlohmann::json::array();
  for (auto rep : privacy::kTableRepresentations) {
    nlohmann::json row = {{"representation", privacy::representation_name(rep)}};
    for (double f : config.fractions) {
      auto ac = config.attack;
      ac.representation = rep;
      ac.train_fraction = f;
      auto report = privacy::run_attack(ac, snapshot);
      row["mse"][fraction_key(f)] = report.test_mse;
      row["relative_mse"][fraction_key(f)] = report.relative_mse;
      out.reports.push_back(std::move(report));
    }
    rows.push_back(std::move(row));
  }
  nlohmann::json reports = nlohmann::json::array();
  for (const auto& r : out.reports) reports.push_back(privacy::to_json(r));
  out.table = {{"decoder", "mlp"},
               {"target", privacy::target_name(config.attack.target)},
               {"columns", nlohmann::json::array()},
               {"rows", rows},
               {"reports", reports}};
  for (double f : config.fractions) out.table["columns"].push_back(fraction_key(f));
  if (!config.output.empty()) {
    std::ofstream file(config.output);
    if (!file) throw IngestionError("cannot write " + config.output);
    file << out.table.dump(2) << "\n";
  }
  return out;
}

AttackSuiteResult run_attack_suite(const AttackSuiteConfig& config) {
  config.training.validate();
  const auto data = load_data(config.training);
  model::ModelConfig model = config.training.model_config();
  model::ClientSegment client;
  if (config.checkpoint.empty()) {
    auto trained = run_experiment(config.training, data);
    client = trained.client.clone();
  } else {
    client = model::init_parameters(model, config.training.seed).first;
    const auto stored = model::load_checkpoint(config.checkpoint);
    std::vector<model::StoredTensor> own;
    for (const auto& s : stored) {
      if (s.name.rfind("client.", 0) == 0) own.push_back(s);
    }
    model::assign(own, client.named_parameters());
  }
  return run_attack_suite(config, privacy::AttackSnapshot{model, client, data.train, data.test});
}

}  // namespace cutmixsl::runner
