// Copyright 2026 The cutmixsl Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "cutmixsl/data/dataset.hpp"
#include "cutmixsl/mixer/mixer.hpp"
#include "cutmixsl/model/optimizer.hpp"
#include "cutmixsl/protocol/protocol.hpp"
#include "cutmixsl/protocol/round.hpp"
#include "json.hpp"

namespace cutmixsl::runner {

enum class Method { kParallelSl, kSplitFed, kCutMixSl, kCutMixSfl, kCutMixSlKTimes };

std::string method_name(Method m);
Method parse_method(const std::string& name);
bool method_mixes(Method m);
bool method_averages(Method m);

struct DataConfig {
  /// "synthetic" or "cifar10".
  std::string kind = "synthetic";
  /// CIFAR-10 binary directory; empty falls back to $CUTMIXSL_DATA_DIR.
  std::string path;
  /// Training samples drawn (synthetic) or kept from the front of the
  /// shuffled train split (cifar10, 0 keeps all).
  std::size_t train_samples = 2000;
  std::size_t test_samples = 1000;
  bool standardize = true;
  data::SyntheticSpec synthetic = desk_synthetic();

  /// Class patterns 100 noise units apart under per-sample bumps: separable,
  /// but small enough per client to overfit.
  static data::SyntheticSpec desk_synthetic() {
    data::SyntheticSpec s;
    s.separation = 100.0;
    s.variation = 0.3;
    return s;
  }
};

struct ExperimentConfig {
  Method method = Method::kCutMixSl;
  std::size_t n_clients = 4;
  /// 0 follows the method: 1 without mixing, 2 with.
  std::size_t k_way = 0;
  double alpha = 6.0;  // mixer::kAlphaInfinity for even splits
  bool shuffle = false;
  protocol::GradientMode gradient_mode = protocol::GradientMode::kUnicast;
  /// Unset follows the method (splitfed and cutmixsfl average).
  std::optional<bool> fedavg;
  /// Rounds between client averages; 0 averages at the end of each epoch.
  std::size_t fedavg_every = 0;
  double keep_ratio = 1.0;
  mixer::CutoutMode mask_mode = mixer::CutoutMode::kPerIteration;
  double sigma_x = 0.0;
  double sigma_y = 0.0;
  DataConfig data;
  data::PartitionMode partition = data::PartitionMode::kIid;
  double dirichlet_mu = 0.5;
  /// "desk" or "paper".
  std::string profile = "desk";
  std::size_t patch_size = 0;  // 0 keeps the profile's
  model::AdamWConfig optimizer;
  std::size_t warmup_epochs = 5;
  std::size_t epochs = 30;
  std::size_t batch_size = 16;
  std::size_t eval_every = 1;  // epochs
  std::uint64_t seed = 0;
  /// Output directory for metrics.csv and summary.json; empty writes nothing.
  std::string output;
  /// Optional round transcript path.
  std::string transcript;

  std::size_t resolved_k_way() const { return k_way ? k_way : (method_mixes(method) ? 2 : 1); }
  bool resolved_fedavg() const { return fedavg.value_or(method_averages(method)); }
  /// Throws ContractError on inconsistent settings.
  void validate() const;
  model::ModelConfig model_config() const;
  protocol::ServerStepping stepping() const;
};

nlohmann::json to_json(const ExperimentConfig& c);
/// Unknown keys are rejected. Missing keys keep the values already in `base`.
ExperimentConfig config_from_json(const nlohmann::json& j, ExperimentConfig base = {});
ExperimentConfig load_config(const std::string& path);

/// Accepts a number, "inf" or "uniform" (Dir(1)).
double parse_alpha(const std::string& text);
std::string alpha_string(double alpha);

/// One command-line flag bound to a config field.
struct Flag {
  std::string name;  // without dashes
  std::string help;
  bool is_switch = false;
  std::function<void(ExperimentConfig&, const std::string&)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

const std::vector<Flag>& experiment_flags();

}  // namespace cutmixsl::runner
