// Copyright 2026 The cutmixsl Authors
// SPDX-License-Identifier: Apache-2.0

// Acceptance suite. Each criterion prints one PASS/FAIL line; extra lines
// starting with "  " are diagnostics. Usage: cutmixsl_acceptance [N ...]

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "cutmixsl/errors.hpp"
#include "cutmixsl/runner/attack_suite.hpp"
#include "cutmixsl/tensor/ops.hpp"

namespace cutmixsl {
namespace {

using model::ModelConfig;
using protocol::ClientBatch;
using protocol::RoundOptions;
using protocol::ServerStepping;
using protocol::SystemState;
using tensor::Tensor;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* spec, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

void info(const std::string& line) { std::printf("  %s\n", line.c_str()); }

ModelConfig tiny_model(std::size_t image, std::size_t patch, std::size_t channels, std::size_t d, std::size_t depth,
                       std::size_t heads, std::size_t classes) {
  ModelConfig c;
  c.image_size = image;
  c.patch_size = patch;
  c.channels = channels;
  c.d_m = d;
  c.depth = depth;
  c.heads = heads;
  c.mlp_ratio = 2;
  c.num_classes = classes;
  c.validate();
  return c;
}

std::vector<ClientBatch> random_batches(const ModelConfig& cfg, std::size_t n, std::size_t b, Rng& rng) {
  std::vector<ClientBatch> out(n);
  for (auto& cb : out) {
    cb.batch = b;
    cb.images.resize(b * cfg.image_pixels());
    for (auto& x : cb.images) x = static_cast<float>(rng.normal());
    cb.labels.assign(b * cfg.num_classes, 0.0f);
    for (std::size_t s = 0; s < b; ++s) cb.labels[s * cfg.num_classes + rng.below(cfg.num_classes)] = 1.0f;
  }
  return out;
}

model::AdamWConfig zero_decay() {
  model::AdamWConfig o;
  o.weight_decay = 0.0;
  return o;
}

// 1. Activation payload under even and Dirichlet splits.
Outcome payload() {
  const auto cfg = tiny_model(16, 4, 1, 8, 1, 2, 4);
  const std::size_t m = cfg.tokens(), b = 4;
  const std::size_t full = m * cfg.d_m * 4 * b;
  bool ok = true;
  std::string detail;

  {
    const std::size_t n = 4, rounds = 20;
    auto par = SystemState::create(cfg, n, 1, zero_decay());
    auto mix = SystemState::create(cfg, n, 1, zero_decay());
    RoundOptions po, mo;
    po.server_lr = po.client_lr = mo.server_lr = mo.client_lr = 0.0;
    mo.k_way = 2;
    mo.alpha = mixer::kAlphaInfinity;
    Rng rng(1, Stream::kData, 77);
    std::size_t exact = 0, checked = 0;
    for (std::size_t r = 0; r < rounds; ++r) {
      const auto batches = random_batches(cfg, n, b, rng);
      const auto a = protocol::run_round(par, batches, po);
      const auto c = protocol::run_round(mix, batches, mo);
      for (std::size_t i = 0; i < n; ++i, ++checked) exact += 2 * c.client_activation_bytes[i] == a.client_activation_bytes[i];
    }
    ok = ok && exact == checked;
    detail += "2-way even: " + std::to_string(exact) + "/" + std::to_string(checked) + " client-rounds at exactly 50%";
  }

  // Summed over a group the counts are always M, so the aggregate fraction is
  // 1/k by construction; the per-client long-run means are the real check.
  const std::size_t n = 12, rounds = 5000;
  double worst_dev = 0.0;
  for (double alpha : {6.0, 1.0}) {
    for (std::size_t k : {2u, 3u, 4u}) {
      auto state = SystemState::create(cfg, n, 2, zero_decay());
      RoundOptions o;
      o.server_lr = o.client_lr = 0.0;
      o.k_way = k;
      o.alpha = alpha;
      o.seed = 2;
      Rng rng(2, Stream::kData, 78);
      const auto batches = random_batches(cfg, n, b, rng);
      std::vector<double> sent(n, 0.0);
      for (std::size_t r = 0; r < rounds; ++r) {
        const auto metrics = protocol::run_round(state, batches, o);
        for (std::size_t i = 0; i < n; ++i) sent[i] += static_cast<double>(metrics.client_activation_bytes[i]);
      }
      const double target = 1.0 / static_cast<double>(k);
      double total = 0.0, dev = 0.0;
      for (auto v : sent) {
        const double frac = v / (static_cast<double>(full) * rounds);
        total += frac / static_cast<double>(n);
        dev = std::max(dev, std::fabs(frac - target));
      }
      worst_dev = std::max(worst_dev, dev);
      const bool hit = dev <= 0.02 && std::fabs(total - target) <= 0.02;
      ok = ok && hit;
      info("k=" + std::to_string(k) + " alpha=" + fmt("%g", alpha) + ": mean fraction " + fmt("%.4f", total) +
           " target " + fmt("%.4f", target) + ", worst client off by " + fmt("%.4f", dev) + (hit ? "" : " (off)"));
    }
  }
  detail += "; Dirichlet k in {2,3,4}, alpha in {6,1}, n=12, 5000 rounds: every client's mean fraction within " +
            fmt("%.4f", worst_dev) + " of 1/k (tolerance 0.02)";
  return {ok, detail};
}

// 2. Server optimizer steps as recorded in the transcript.
Outcome server_updates() {
  const auto cfg = tiny_model(8, 4, 1, 8, 1, 2, 4);
  const std::size_t n = 10;
  struct Case {
    const char* name;
    std::size_t k;
    ServerStepping stepping;
    std::size_t expected;
  };
  const Case cases[] = {{"cutmixsl", 2, ServerStepping::kPerGroup, 5},
                        {"parallel_sl", 1, ServerStepping::kPerGroup, 10},
                        {"cutmixsl_ktimes", 2, ServerStepping::kPerMember, 10}};
  bool ok = true;
  std::string detail;
  for (const auto& c : cases) {
    auto state = SystemState::create(cfg, n, 4, zero_decay());
    protocol::TranscriptWriter log;
    state.transcript = &log;
    RoundOptions o;
    o.k_way = c.k;
    o.alpha = 6.0;
    o.stepping = c.stepping;
    o.seed = 4;
    Rng rng(4, Stream::kData, 79);
    const auto metrics = protocol::run_round(state, random_batches(cfg, n, 2, rng), o);
    const auto steps = protocol::summarize(log.records()).server_steps;
    ok = ok && steps == c.expected && metrics.server_updates == c.expected;
    if (!detail.empty()) detail += ", ";
    detail += std::string(c.name) + " " + std::to_string(steps) + " (want " + std::to_string(c.expected) + ")";
  }
  return {ok, "n=10 k=2 transcript server steps: " + detail};
}

// 3. cutmix_assemble against a per-position brute-force oracle.
Outcome mixing_oracle() {
  Rng rng(2026, Stream::kInit, 1ull << 40);
  const std::size_t ms[] = {4, 8, 16};
  const double alphas[] = {0.5, 1.0, 6.0, mixer::kAlphaInfinity};
  std::size_t bitwise = 0, masks_ok = 0, labels_ok = 0;
  double worst_label = 0.0;
  const std::size_t instances = 1000;
  for (std::size_t t = 0; t < instances; ++t) {
    const std::size_t m = ms[rng.below(3)], k = 1 + rng.below(5), b = 1 + rng.below(3), d = 1 + rng.below(4);
    const std::size_t classes = 2 + rng.below(6);
    const double alpha = alphas[rng.below(4)];
    const auto alloc = mixer::sample_mixing_counts(k, alpha, m, rng);
    const auto set = mixer::generate_mask_set(alloc, m, rng);

    std::vector<int> claims(m, 0);
    bool counts_match = set.masks.size() == k;
    for (std::size_t i = 0; i < set.masks.size(); ++i) {
      counts_match = counts_match && set.masks[i].popcount() == alloc.counts[i];
      for (std::size_t j = 0; j < m; ++j) claims[j] += set.masks[i].bits[j];
    }
    bool valid = true;
    try {
      set.validate(m);
    } catch (const std::exception&) {
      valid = false;
    }
    masks_ok += valid && counts_match && std::all_of(claims.begin(), claims.end(), [](int c) { return c == 1; });

    std::vector<mixer::TokenGrid> full(k);
    std::vector<mixer::CutSmashed> parts;
    std::vector<std::vector<float>> labels(k);
    for (std::size_t i = 0; i < k; ++i) {
      full[i] = mixer::TokenGrid::zeros(b, m, d);
      for (auto& v : full[i].values) v = static_cast<float>(rng.normal());
      parts.push_back(mixer::cut(full[i], set.masks[i], static_cast<std::uint32_t>(i)));
      labels[i].resize(b * classes);
      for (std::size_t s = 0; s < b; ++s) {
        double z = 0.0;
        for (std::size_t c = 0; c < classes; ++c) z += labels[i][s * classes + c] = static_cast<float>(rng.uniform());
        for (std::size_t c = 0; c < classes; ++c) labels[i][s * classes + c] /= static_cast<float>(z);
      }
    }
    const auto mixed = mixer::cutmix_assemble(parts, labels, alloc, m);

    bool same = mixed.tokens.batch == b && mixed.tokens.tokens == m && mixed.tokens.dim == d;
    for (std::size_t s = 0; same && s < b; ++s) {
      for (std::size_t j = 0; same && j < m; ++j) {
        std::size_t owner = k;
        for (std::size_t i = 0; i < k; ++i) {
          if (set.masks[i].bits[j]) owner = i;
        }
        if (owner == k) {
          same = false;
          break;
        }
        same = std::memcmp(mixed.tokens.row(s, j), full[owner].row(s, j), d * sizeof(float)) == 0;
      }
    }
    bitwise += same;

    double worst = 0.0;
    bool label_shape = mixed.soft_label.size() == b * classes;
    for (std::size_t s = 0; label_shape && s < b; ++s) {
      for (std::size_t c = 0; c < classes; ++c) {
        double want = 0.0;
        for (std::size_t i = 0; i < k; ++i) {
          want += static_cast<double>(alloc.counts[i]) / static_cast<double>(m) * labels[i][s * classes + c];
        }
        worst = std::max(worst, std::fabs(want - mixed.soft_label[s * classes + c]));
      }
    }
    worst_label = std::max(worst_label, worst);
    labels_ok += label_shape && worst <= 1e-7;
  }
  const bool ok = bitwise == instances && masks_ok == instances && labels_ok == instances;
  return {ok, "1000 instances: tokens bitwise " + std::to_string(bitwise) + ", masks disjoint+complete " +
                  std::to_string(masks_ok) + ", labels<=1e-7 " + std::to_string(labels_ok) + " (worst " +
                  fmt("%.2e", worst_label) + ")"};
}

// 4. Pipeline gradients against central finite differences.
struct GradStats {
  std::size_t checked = 0, failures = 0;
  double worst = -1e300;  // max of |g - fd| - (atol + rtol |fd|)
  std::string first;
};

void compare(GradStats& st, const std::string& name, std::size_t idx, double analytic, double fd) {
  constexpr double kRtol = 2e-2, kAtol = 1e-4;
  const double excess = std::fabs(analytic - fd) - (kAtol + kRtol * std::fabs(fd));
  ++st.checked;
  st.worst = std::max(st.worst, excess);
  if (excess > 0.0) {
    if (st.failures++ == 0) {
      st.first = name + "[" + std::to_string(idx) + "] autodiff " + fmt("%.6g", analytic) + " fd " + fmt("%.6g", fd);
    }
  }
}

double central(const std::function<double()>& f, Tensor& p, std::size_t idx, float h) {
  auto v = p.mutable_values();
  const float w = v[idx];
  v[idx] = w + h;
  const double up = f();
  v[idx] = w - h;
  const double down = f();
  v[idx] = w;
  return (up - down) / (2.0 * static_cast<double>(h));
}

GradStats gradient_case(protocol::GradientMode mode) {
  const auto cfg = tiny_model(8, 4, 1, 8, 1, 2, 5);
  const std::size_t n = 4, b = 2;
  // The round loss is float32 (about 4e-7 absolute noise at this size); at
  // h = 1e-3 that noise alone reaches the absolute tolerance.
  const float h = 1e-2f;
  auto state = SystemState::create(cfg, n, 11, zero_decay());
  // Spread the parameters so every path carries a visible gradient.
  {
    Rng rng(11, Stream::kInit, 1ull << 41);
    auto spread = [&](std::vector<model::NamedTensor> params) {
      for (auto& [name, t] : params) {
        auto tv = t.mutable_values();
        for (auto& x : tv) x += static_cast<float>(0.2 * rng.normal());
      }
    };
    spread(state.server.named_parameters());
    for (auto& c : state.clients) spread(c.segment.named_parameters());
  }
  Rng rng(11, Stream::kData, 80);
  const auto batches = random_batches(cfg, n, b, rng);
  RoundOptions o;
  o.k_way = 2;
  o.alpha = 6.0;
  o.gradient_mode = mode;
  o.server_lr = o.client_lr = 0.0;
  o.seed = 11;

  const auto server_params = state.server.named_parameters();
  std::vector<std::vector<double>> server_grad(server_params.size());
  for (std::size_t p = 0; p < server_params.size(); ++p) server_grad[p].assign(server_params[p].second.numel(), 0.0);
  std::vector<mixer::CutMixBatch> mixed;
  RoundOptions capture = o;
  capture.on_server_backward = [&](const model::ServerSegment& server, const mixer::CutMixBatch& batch) {
    const auto params = server.named_parameters();
    for (std::size_t p = 0; p < params.size(); ++p) {
      const auto g = params[p].second.grad();
      for (std::size_t i = 0; i < g.size(); ++i) server_grad[p][i] += g[i];
    }
    mixed.push_back(batch);
  };
  state.round = 0;
  const auto first = protocol::run_round(state, batches, capture);
  const std::size_t passes = mixed.size();

  std::vector<std::vector<std::vector<float>>> client_grad(n);
  for (std::size_t c = 0; c < n; ++c) {
    for (const auto& [name, t] : state.clients[c].segment.named_parameters()) {
      client_grad[c].emplace_back(t.grad().begin(), t.grad().end());
    }
  }

  auto total_loss = [&]() {
    state.round = 0;
    const auto metrics = protocol::run_round(state, batches, o);
    return metrics.train_loss * static_cast<double>(passes);
  };
  GradStats st;
  if (std::fabs(total_loss() - first.train_loss * static_cast<double>(passes)) > 1e-9) {
    st.failures = 1;
    st.first = "round loss not reproducible at lr 0";
    return st;
  }

  for (std::size_t p = 0; p < server_params.size(); ++p) {
    Tensor t = server_params[p].second;
    for (std::size_t i = 0; i < t.numel(); ++i) {
      compare(st, "server." + server_params[p].first, i, server_grad[p][i], central(total_loss, t, i, h));
    }
  }

  for (std::size_t c = 0; c < n; ++c) {
    auto params = state.clients[c].segment.named_parameters();
    std::function<double()> target = total_loss;
    std::vector<float> s0;
    const mixer::CutMixBatch* group = nullptr;
    if (mode == protocol::GradientMode::kBroadcast) {
      // Broadcast returns the gradient of the whole mixed grid; its target is
      // the group loss with this client's activation shifted in every row.
      for (const auto& mb : mixed) {
        for (auto member : mb.group.members) {
          if (member == c) group = &mb;
        }
      }
      tensor::NoGradGuard guard;
      const auto s = model::client_forward(cfg, state.clients[c].segment, batches[c].images, b);
      s0.assign(s.values().begin(), s.values().end());
      target = [&, group]() {
        tensor::NoGradGuard inner;
        const auto s = model::client_forward(cfg, state.clients[c].segment, batches[c].images, b);
        std::vector<float> tokens = group->tokens.values;
        for (std::size_t i = 0; i < tokens.size(); ++i) tokens[i] += s.values()[i] - s0[i];
        const auto t = Tensor::from_values({b, cfg.tokens(), cfg.d_m}, std::move(tokens));
        return tensor::cross_entropy(model::server_forward(cfg, state.server, t), group->soft_label).item_f64();
      };
    }
    for (std::size_t p = 0; p < params.size(); ++p) {
      Tensor t = params[p].second;
      for (std::size_t i = 0; i < t.numel(); ++i) {
        compare(st, "client" + std::to_string(c) + "." + params[p].first, i, client_grad[c][p][i],
                central(target, t, i, h));
      }
    }
  }
  return st;
}

Outcome gradients() {
  bool ok = true;
  std::string detail;
  for (auto mode : {protocol::GradientMode::kUnicast, protocol::GradientMode::kBroadcast}) {
    const auto st = gradient_case(mode);
    const char* name = mode == protocol::GradientMode::kUnicast ? "unicast" : "broadcast";
    ok = ok && st.failures == 0 && st.checked > 0;
    if (!detail.empty()) detail += "; ";
    detail += std::string(name) + " " + std::to_string(st.checked - st.failures) + "/" + std::to_string(st.checked) +
              " within rtol 2e-2 atol 1e-4";
    if (st.failures) info(std::string(name) + " first failure: " + st.first);
    info(std::string(name) + " worst excess over tolerance " + fmt("%.3g", st.worst));
  }
  return {ok, "M=4 d_m=8 depth=1 grads vs central FD: " + detail};
}

// 5. k = 1 with full masks against an un-split model trained directly.
Outcome degenerate() {
  const auto cfg = tiny_model(16, 4, 3, 16, 2, 2, 6);
  const std::size_t n = 4, b = 8, rounds = 20;
  const std::uint64_t seed = 21;
  model::AdamWConfig opt;
  auto state = SystemState::create(cfg, n, seed, opt);
  RoundOptions o;
  o.k_way = 1;
  o.server_lr = o.client_lr = 1e-3;
  o.seed = seed;

  auto [client0, server] = model::init_parameters(cfg, seed);
  std::vector<model::ClientSegment> clients;
  std::vector<model::AdamW> client_opts;
  for (std::size_t c = 0; c < n; ++c) clients.push_back(client0.clone());
  for (auto& c : clients) client_opts.emplace_back(c.named_parameters(), opt);
  model::AdamW server_opt(server.named_parameters(), opt);

  Rng data_rng(seed, Stream::kData, 81);
  double worst = 0.0;
  for (std::size_t r = 0; r < rounds; ++r) {
    const auto batches = random_batches(cfg, n, b, data_rng);
    const double split_loss = protocol::run_round(state, batches, o).train_loss;

    std::vector<std::uint32_t> ids(n);
    for (std::size_t i = 0; i < n; ++i) ids[i] = static_cast<std::uint32_t>(i);
    Rng group_rng(seed, Stream::kGrouping, r);
    const auto groups = protocol::form_groups(ids, 1, group_rng);
    double sum = 0.0;
    for (const auto& g : groups) {
      const auto c = g.members[0];
      const auto logits = model::server_forward(cfg, server, model::client_forward(cfg, clients[c], batches[c].images, b));
      const auto loss = tensor::cross_entropy(logits, batches[c].labels);
      tensor::backward(loss);
      sum += loss.item_f64();
      server_opt.step(o.server_lr);
      server_opt.zero_grad();
    }
    for (auto& co : client_opts) {
      co.step(o.client_lr);
      co.zero_grad();
    }
    const double ref_loss = sum / static_cast<double>(groups.size());
    worst = std::max(worst, std::fabs(ref_loss - split_loss));
    if (r == 0 || r + 1 == rounds) info("round " + std::to_string(r) + ": split " + fmt("%.9f", split_loss) +
                                        " reference " + fmt("%.9f", ref_loss));
  }
  return {worst <= 1e-5, "20 rounds, max |split - unsplit| loss " + fmt("%.3e", worst) + " (tolerance 1e-5)"};
}

double median3(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return v[v.size() / 2];
}

// 6. Final accuracy ordering at desk scale.
Outcome accuracy() {
  const runner::Method methods[] = {runner::Method::kParallelSl, runner::Method::kCutMixSl,
                                    runner::Method::kCutMixSfl};
  std::map<runner::Method, std::vector<double>> acc;
  double seconds = 0.0;
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    runner::ExperimentConfig base;
    base.seed = seed;
    base.eval_every = 0;
    const auto data = runner::load_data(base);
    for (auto m : methods) {
      auto c = base;
      c.method = m;
      const auto r = runner::run_experiment(c, data);
      acc[m].push_back(r.final_accuracy);
      seconds += r.wall_time_s;
      info("seed " + std::to_string(seed) + " " + runner::method_name(m) + ": " + fmt("%.4f", r.final_accuracy) +
           " (" + fmt("%.0f", r.wall_time_s) + " s)");
    }
  }
  const double par = median3(acc[runner::Method::kParallelSl]);
  const double sl = median3(acc[runner::Method::kCutMixSl]);
  const double sfl = median3(acc[runner::Method::kCutMixSfl]);
  const bool ok = sfl >= sl && sl >= par && sl - par >= 0.02;
  return {ok, "median final accuracy cutmixsfl " + fmt("%.4f", sfl) + " >= cutmixsl " + fmt("%.4f", sl) +
                  " >= parallel_sl " + fmt("%.4f", par) + ", margin " + fmt("%.1f", 100.0 * (sl - par)) +
                  " points (need >= 2), training " + fmt("%.0f", seconds) + " s"};
}

// 7. Reconstruction MSE ordering over the table representations.
Outcome privacy_ordering() {
  using privacy::AttackTarget;
  std::size_t held = 0, held_mixed = 0;
  const double fraction = 0.1;
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    runner::AttackSuiteConfig suite;
    suite.training.seed = seed;
    suite.training.epochs = 10;
    suite.training.eval_every = 0;
    suite.attack.seed = seed;
    suite.fractions = {fraction};
    const auto data = runner::load_data(suite.training);
    const auto trained = runner::run_experiment(suite.training, data);
    const privacy::AttackSnapshot snap{trained.model, trained.client, data.train, data.test};

    auto ordering = [&](AttackTarget target, bool relative, std::string& line) {
      auto s = suite;
      s.attack.target = target;
      const auto result = runner::run_attack_suite(s, snap);
      std::vector<double> v;
      for (auto rep : privacy::kTableRepresentations) {
        for (const auto& r : result.reports) {
          if (r.representation == privacy::representation_name(rep)) v.push_back(relative ? r.relative_mse : r.test_mse);
        }
      }
      bool strict = v.size() == privacy::kTableRepresentations.size();
      for (std::size_t i = 0; i + 1 < v.size(); ++i) strict = strict && v[i] > v[i + 1];
      for (std::size_t i = 0; i < v.size(); ++i) {
        line += (i ? " > " : "") + privacy::representation_name(privacy::kTableRepresentations[i]) + " " +
                fmt("%.4f", v[i]);
      }
      return strict;
    };
    std::string line, mixed_line;
    const bool ok = ordering(AttackTarget::kFirstClient, false, line);
    held += ok;
    info("seed " + std::to_string(seed) + " mse (first_client): " + line + (ok ? "  holds" : "  violated"));
    const bool ok_mixed = ordering(AttackTarget::kMixedImage, true, mixed_line);
    held_mixed += ok_mixed;
    info("seed " + std::to_string(seed) + " relative mse (mixed_image, diagnostic): " + mixed_line +
         (ok_mixed ? "  holds" : "  violated"));
  }
  info("diagnostic: mixed_image relative ordering holds on " + std::to_string(held_mixed) + "/3 seeds");
  return {held >= 2, "ordering shuffled_cutmix > cutsmashed > patch_cutmix > mixup > smashed at 10% train data holds on " +
                         std::to_string(held) + "/3 seeds (need 2)"};
}

// 8. Byte-identical metrics on rerun.
std::string read_bytes(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome determinism() {
  auto base = [](runner::Method m) {
    runner::ExperimentConfig c;
    c.method = m;
    c.n_clients = 4;
    c.data.train_samples = 256;
    c.data.test_samples = 100;
    c.data.synthetic.image_size = 16;
    c.epochs = 3;
    c.batch_size = 16;
    c.seed = 9;
    return c;
  };
  std::vector<std::pair<std::string, runner::ExperimentConfig>> cases;
  cases.emplace_back("parallel_sl", base(runner::Method::kParallelSl));
  cases.emplace_back("splitfed", base(runner::Method::kSplitFed));
  auto shuffled = base(runner::Method::kCutMixSl);
  shuffled.shuffle = true;
  shuffled.gradient_mode = protocol::GradientMode::kBroadcast;
  cases.emplace_back("cutmixsl shuffle broadcast", shuffled);
  auto noisy = base(runner::Method::kCutMixSfl);
  noisy.sigma_x = 0.1;
  noisy.sigma_y = 0.05;
  noisy.alpha = 1.0;
  noisy.partition = data::PartitionMode::kDirichlet;
  cases.emplace_back("cutmixsfl noise dirichlet", noisy);
  auto ktimes = base(runner::Method::kCutMixSlKTimes);
  ktimes.k_way = 3;
  cases.emplace_back("cutmixsl_ktimes k=3", ktimes);
  auto cutout = base(runner::Method::kParallelSl);
  cutout.keep_ratio = 0.5;
  cases.emplace_back("cutout keep 0.5", cutout);

  const auto root = std::filesystem::temp_directory_path() / "cutmixsl_acceptance_determinism";
  std::filesystem::remove_all(root);
  std::size_t identical = 0;
  for (std::size_t i = 0; i < cases.size(); ++i) {
    std::string files[2];
    for (int rep = 0; rep < 2; ++rep) {
      auto c = cases[i].second;
      c.output = (root / (std::to_string(i) + "_" + std::to_string(rep))).string();
      runner::run_experiment(c);
      files[rep] = read_bytes(std::filesystem::path(c.output) / "metrics.csv");
    }
    const bool same = !files[0].empty() && files[0] == files[1];
    identical += same;
    info(cases[i].first + ": " + std::to_string(files[0].size()) + " bytes, " + (same ? "identical" : "DIFFERENT"));
  }
  std::filesystem::remove_all(root);
  return {identical == cases.size(),
          std::to_string(identical) + "/" + std::to_string(cases.size()) + " configs rerun to byte-identical metrics.csv"};
}

}  // namespace
}  // namespace cutmixsl

int main(int argc, char** argv) {
  using namespace cutmixsl;
  const std::vector<std::pair<const char*, Outcome (*)()>> criteria = {
      {"payload reduction", payload},       {"server update imbalance", server_updates},
      {"mixing oracle", mixing_oracle},     {"gradient correctness", gradients},
      {"degenerate equivalence", degenerate}, {"accuracy ordering", accuracy},
      {"privacy ordering", privacy_ordering}, {"determinism", determinism}};
  std::vector<std::size_t> chosen;
  for (int i = 1; i < argc; ++i) chosen.push_back(std::strtoul(argv[i], nullptr, 10));
  if (chosen.empty()) {
    for (std::size_t i = 1; i <= criteria.size(); ++i) chosen.push_back(i);
  }
  int failed = 0;
  for (auto id : chosen) {
    if (id < 1 || id > criteria.size()) {
      std::fprintf(stderr, "unknown criterion %zu\n", id);
      return 2;
    }
    const auto& [name, fn] = criteria[id - 1];
    const auto start = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = fn();
    } catch (const std::exception& e) {
      out = {false, std::string("threw: ") + e.what()};
    }
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("criterion %zu (%s): %s - %s [%.1f s]\n", id, name, out.pass ? "PASS" : "FAIL", out.detail.c_str(), s);
    std::fflush(stdout);
    failed += !out.pass;
  }
  return failed ? 1 : 0;
}
