// Copyright 2026 The cutmixsl Authors
// SPDX-License-Identifier: Apache-2.0

#include "cutmixsl/runner/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include "cutmixsl/errors.hpp"

namespace cutmixsl::runner {

namespace {

struct MethodName {
  Method m;
  const char* name;
};
constexpr MethodName kMethods[] = {{Method::kParallelSl, "parallel_sl"},
                                   {Method::kSplitFed, "splitfed"},
                                   {Method::kCutMixSl, "cutmixsl"},
                                   {Method::kCutMixSfl, "cutmixsfl"},
                                   {Method::kCutMixSlKTimes, "cutmixsl_ktimes"}};

std::string real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double to_real(const std::string& flag, const std::string& s) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ContractError("--" + flag + ": expected a number, got '" + s + "'");
  }
}

std::uint64_t to_uint(const std::string& flag, const std::string& s) {
  if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos) {
    throw ContractError("--" + flag + ": expected a non-negative integer, got '" + s + "'");
  }
  try {
    return std::stoull(s);
  } catch (const std::exception&) {
    throw ContractError("--" + flag + ": integer out of range '" + s + "'");
  }
}

bool to_bool(const std::string& flag, const std::string& s) {
  if (s == "true" || s == "1") return true;
  if (s == "false" || s == "0") return false;
  throw ContractError("--" + flag + ": expected true or false, got '" + s + "'");
}

std::string boolean(bool b) { return b ? "true" : "false"; }

enum class Kind { kString, kUint, kReal, kBool, kAlpha };

struct Entry {
  Flag flag;
  Kind kind;
};

#define CFG_SIZE(key, field, text)                                                                  \
  Entry{{key, text, false, [](ExperimentConfig& c, const std::string& s) { c.field = to_uint(key, s); }, \
         [](const ExperimentConfig& c) { return std::to_string(c.field); }},                         \
        Kind::kUint}
#define CFG_REAL(key, field, text)                                                                  \
  Entry{{key, text, false, [](ExperimentConfig& c, const std::string& s) { c.field = to_real(key, s); }, \
         [](const ExperimentConfig& c) { return real(c.field); }},                                   \
        Kind::kReal}
#define CFG_TEXT(key, field, text)                                                          \
  Entry{{key, text, false, [](ExperimentConfig& c, const std::string& s) { c.field = s; }, \
         [](const ExperimentConfig& c) { return c.field; }},                                \
        Kind::kString}
#define CFG_SWITCH(key, field, text)                                                               \
  Entry{{key, text, true, [](ExperimentConfig& c, const std::string& s) { c.field = to_bool(key, s); }, \
         [](const ExperimentConfig& c) { return boolean(c.field); }},                               \
        Kind::kBool}

const std::vector<Entry>& entries() {
  static const std::vector<Entry> table = {
      Entry{{"method", "parallel_sl | splitfed | cutmixsl | cutmixsfl | cutmixsl_ktimes", false,
             [](ExperimentConfig& c, const std::string& s) { c.method = parse_method(s); },
             [](const ExperimentConfig& c) { return method_name(c.method); }},
            Kind::kString},
      CFG_SIZE("n_clients", n_clients, "number of clients"),
      CFG_SIZE("k_way", k_way, "clients mixed per group, 0 follows the method"),
      Entry{{"alpha", "Dirichlet concentration: number, inf or uniform", false,
             [](ExperimentConfig& c, const std::string& s) { c.alpha = parse_alpha(s); },
             [](const ExperimentConfig& c) { return alpha_string(c.alpha); }},
            Kind::kAlpha},
      CFG_SWITCH("shuffle", shuffle, "shuffle mixed token rows"),
      Entry{{"gradient_mode", "unicast | broadcast", false,
             [](ExperimentConfig& c, const std::string& s) {
               if (s == "unicast") {
                 c.gradient_mode = protocol::GradientMode::kUnicast;
               } else if (s == "broadcast") {
                 c.gradient_mode = protocol::GradientMode::kBroadcast;
               } else {
                 throw ContractError("--gradient-mode: expected unicast or broadcast, got '" + s + "'");
               }
             },
             [](const ExperimentConfig& c) {
               return std::string(c.gradient_mode == protocol::GradientMode::kUnicast ? "unicast" : "broadcast");
             }},
            Kind::kString},
      Entry{{"fedavg", "auto | true | false (auto follows the method)", false,
             [](ExperimentConfig& c, const std::string& s) {
               if (s == "auto") {
                 c.fedavg.reset();
               } else {
                 c.fedavg = to_bool("fedavg", s);
               }
             },
             [](const ExperimentConfig& c) { return c.fedavg ? boolean(*c.fedavg) : std::string("auto"); }},
            Kind::kString},
      CFG_SIZE("fedavg_every", fedavg_every, "rounds between averages, 0 = once per epoch"),
      CFG_REAL("keep_ratio", keep_ratio, "CutSmashed-only keep ratio"),
      Entry{{"mask_mode", "fixed | per_iteration", false,
             [](ExperimentConfig& c, const std::string& s) {
               if (s == "fixed") {
                 c.mask_mode = mixer::CutoutMode::kFixed;
               } else if (s == "per_iteration") {
                 c.mask_mode = mixer::CutoutMode::kPerIteration;
               } else {
                 throw ContractError("--mask-mode: expected fixed or per_iteration, got '" + s + "'");
               }
             },
             [](const ExperimentConfig& c) {
               return std::string(c.mask_mode == mixer::CutoutMode::kFixed ? "fixed" : "per_iteration");
             }},
            Kind::kString},
      CFG_REAL("sigma_x", sigma_x, "Gaussian noise std on uploads"),
      CFG_REAL("sigma_y", sigma_y, "Gaussian noise std on labels"),
      CFG_TEXT("dataset", data.kind, "synthetic | cifar10"),
      CFG_TEXT("data_dir", data.path, "CIFAR-10 binary directory"),
      CFG_SIZE("train_samples", data.train_samples, "training samples"),
      CFG_SIZE("test_samples", data.test_samples, "test samples"),
      CFG_SWITCH("standardize", data.standardize, "per-channel standardization"),
      CFG_SIZE("synthetic_classes", data.synthetic.classes, "synthetic classes"),
      CFG_SIZE("synthetic_image_size", data.synthetic.image_size, "synthetic image side"),
      CFG_SIZE("synthetic_channels", data.synthetic.channels, "synthetic channels"),
      CFG_REAL("synthetic_separation", data.synthetic.separation, "class mean distance in noise units"),
      CFG_REAL("synthetic_noise", data.synthetic.noise, "per-pixel noise std"),
      CFG_REAL("synthetic_variation", data.synthetic.variation, "per-sample bump amplitude"),
      CFG_SIZE("synthetic_blobs", data.synthetic.blobs, "bumps per class pattern"),
      CFG_SIZE("synthetic_variation_blobs", data.synthetic.variation_blobs, "bumps per sample"),
      CFG_SIZE("synthetic_seed", data.synthetic.seed, "synthetic pattern seed"),
      Entry{{"partition", "iid | dirichlet", false,
             [](ExperimentConfig& c, const std::string& s) {
               if (s == "iid") {
                 c.partition = data::PartitionMode::kIid;
               } else if (s == "dirichlet") {
                 c.partition = data::PartitionMode::kDirichlet;
               } else {
                 throw ContractError("--partition: expected iid or dirichlet, got '" + s + "'");
               }
             },
             [](const ExperimentConfig& c) {
               return std::string(c.partition == data::PartitionMode::kIid ? "iid" : "dirichlet");
             }},
            Kind::kString},
      CFG_REAL("dirichlet_mu", dirichlet_mu, "Dirichlet partition concentration"),
      CFG_TEXT("profile", profile, "desk | paper"),
      CFG_SIZE("patch_size", patch_size, "patch side, 0 keeps the profile's"),
      CFG_REAL("lr", optimizer.lr, "peak learning rate"),
      CFG_REAL("beta1", optimizer.beta1, "AdamW beta1"),
      CFG_REAL("beta2", optimizer.beta2, "AdamW beta2"),
      CFG_REAL("eps", optimizer.eps, "AdamW epsilon"),
      CFG_REAL("weight_decay", optimizer.weight_decay, "AdamW decoupled weight decay"),
      CFG_SIZE("warmup_epochs", warmup_epochs, "linear warmup epochs"),
      CFG_SIZE("epochs", epochs, "training epochs"),
      CFG_SIZE("batch_size", batch_size, "per-client batch size"),
      CFG_SIZE("eval_every", eval_every, "epochs between evaluations, 0 = final only"),
      CFG_SIZE("seed", seed, "experiment seed"),
      CFG_TEXT("output", output, "output directory"),
      CFG_TEXT("transcript", transcript, "round transcript file"),
  };
  return table;
}

#undef CFG_SIZE
#undef CFG_REAL
#undef CFG_TEXT
#undef CFG_SWITCH

}  // namespace

std::string method_name(Method m) {
  for (const auto& e : kMethods) {
    if (e.m == m) return e.name;
  }
  return "unknown";
}

Method parse_method(const std::string& name) {
  for (const auto& e : kMethods) {
    if (name == e.name) return e.m;
  }
  throw ContractError("unknown method '" + name + "'");
}

bool method_mixes(Method m) {
  return m == Method::kCutMixSl || m == Method::kCutMixSfl || m == Method::kCutMixSlKTimes;
}

bool method_averages(Method m) { return m == Method::kSplitFed || m == Method::kCutMixSfl; }

double parse_alpha(const std::string& text) {
  if (text == "inf") return mixer::kAlphaInfinity;
  if (text == "uniform") return 1.0;
  const double a = to_real("alpha", text);
  if (!(a > 0.0)) throw ContractError("--alpha: must be positive, got '" + text + "'");
  return a;
}

std::string alpha_string(double alpha) { return std::isinf(alpha) ? "inf" : real(alpha); }

void ExperimentConfig::validate() const {
  auto fail = [](const std::string& msg) { throw ContractError("config: " + msg); };
  if (n_clients == 0) fail("n_clients must be positive");
  if (batch_size == 0) fail("batch_size must be positive");
  if (epochs == 0) fail("epochs must be positive");
  const std::size_t k = resolved_k_way();
  if (method_mixes(method)) {
    if (k < 2) fail(method_name(method) + " needs k_way >= 2");
    if (k > n_clients) fail("k_way " + std::to_string(k) + " exceeds n_clients " + std::to_string(n_clients));
  } else {
    if (k != 1) fail(method_name(method) + " forbids k_way > 1");
    if (shuffle) fail(method_name(method) + " does not mix, so shuffle is not allowed");
  }
  if (!(alpha > 0.0)) fail("alpha must be positive");
  if (!(keep_ratio > 0.0) || keep_ratio > 1.0) fail("keep_ratio must lie in (0, 1]");
  if (keep_ratio < 1.0 && method_mixes(method)) fail("keep_ratio < 1 is the CutSmashed-only baseline; use k_way 1");
  if (fedavg && *fedavg != method_averages(method)) {
    fail(method_name(method) + (method_averages(method) ? " requires" : " forbids") + " fedavg");
  }
  if (sigma_x < 0.0 || sigma_y < 0.0) fail("noise std must be non-negative");
  if (data.kind != "synthetic" && data.kind != "cifar10") fail("dataset must be synthetic or cifar10");
  if (data.kind == "synthetic" && data.train_samples < n_clients) fail("fewer training samples than clients");
  if (data.test_samples == 0) fail("test_samples must be positive");
  if (partition == data::PartitionMode::kDirichlet && !(dirichlet_mu > 0.0)) fail("dirichlet_mu must be positive");
  if (profile != "desk" && profile != "paper") fail("profile must be desk or paper");
  if (!(optimizer.lr >= 0.0)) fail("lr must be non-negative");
  model_config().validate();
}

model::ModelConfig ExperimentConfig::model_config() const {
  auto m = profile == "paper" ? model::ModelConfig::paper() : model::ModelConfig::desk();
  if (data.kind == "synthetic") {
    m.image_size = data.synthetic.image_size;
    m.channels = data.synthetic.channels;
    m.num_classes = data.synthetic.classes;
  }
  if (patch_size) m.patch_size = patch_size;
  return m;
}

protocol::ServerStepping ExperimentConfig::stepping() const {
  return method == Method::kCutMixSlKTimes ? protocol::ServerStepping::kPerMember : protocol::ServerStepping::kPerGroup;
}

const std::vector<Flag>& experiment_flags() {
  static const std::vector<Flag> flags = [] {
    std::vector<Flag> out;
    for (const auto& e : entries()) out.push_back(e.flag);
    return out;
  }();
  return flags;
}

nlohmann::json to_json(const ExperimentConfig& c) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& e : entries()) {
    const std::string v = e.flag.get(c);
    switch (e.kind) {
      case Kind::kUint:
        j[e.flag.name] = std::stoull(v);
        break;
      case Kind::kReal:
        j[e.flag.name] = std::stod(v);
        break;
      case Kind::kBool:
        j[e.flag.name] = v == "true";
        break;
      case Kind::kAlpha:
        if (v == "inf") {
          j[e.flag.name] = v;
        } else {
          j[e.flag.name] = std::stod(v);
        }
        break;
      case Kind::kString:
        j[e.flag.name] = v;
        break;
    }
  }
  return j;
}

ExperimentConfig config_from_json(const nlohmann::json& j, ExperimentConfig base) {
  if (!j.is_object()) throw ContractError("config file: expected a JSON object");
  for (const auto& [key, value] : j.items()) {
    const Entry* entry = nullptr;
    for (const auto& e : entries()) {
      if (e.flag.name == key) entry = &e;
    }
    if (!entry) throw ContractError("config file: unknown key '" + key + "'");
    std::string text;
    if (value.is_string()) {
      text = value.get<std::string>();
    } else if (value.is_boolean()) {
      text = boolean(value.get<bool>());
    } else if (value.is_number_unsigned()) {
      text = std::to_string(value.get<std::uint64_t>());
    } else if (value.is_number_integer()) {
      text = std::to_string(value.get<std::int64_t>());
    } else if (value.is_number_float()) {
      text = real(value.get<double>());
    } else {
      throw ContractError("config file: unsupported value for '" + key + "'");
    }
    entry->flag.set(base, text);
  }
  return base;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IngestionError("cannot open config file " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw IngestionError("config file " + path + ": " + e.what());
  }
  return config_from_json(j);
}

}  // namespace cutmixsl::runner
