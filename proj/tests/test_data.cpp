// Copyright 2026 The cutmixsl Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <filesystem>
#include <set>

#include "cutmixsl/data/dataset.hpp"
#include "cutmixsl/errors.hpp"
#include "doctest.h"

using namespace cutmixsl;
using namespace cutmixsl::data;

namespace {

std::vector<std::uint8_t> random_records(std::size_t n, std::uint64_t seed) {
  Rng rng(seed, Stream::kData, 77);
  std::vector<std::uint8_t> bytes(n * kCifarRecordBytes);
  for (std::size_t r = 0; r < n; ++r) {
    bytes[r * kCifarRecordBytes] = static_cast<std::uint8_t>(rng.below(10));
    for (std::size_t e = 1; e < kCifarRecordBytes; ++e) bytes[r * kCifarRecordBytes + e] = rng.below(256);
  }
  return bytes;
}

Dataset labels_only(std::size_t n, std::size_t classes) {
  Dataset ds;
  ds.num_classes = classes;
  for (std::size_t i = 0; i < n; ++i) ds.labels.push_back(static_cast<std::uint32_t>(i % classes));
  return ds;
}

double entropy(const std::vector<double>& h) {
  double total = 0, e = 0;
  for (double v : h) total += v;
  for (double v : h) {
    if (v > 0) e -= (v / total) * std::log(v / total);
  }
  return e;
}

}  // namespace

TEST_CASE("cifar batch decode and re-encode") {
  const auto bytes = random_records(10000, 1);
  const auto ds = decode_cifar_batch(bytes, "mem");
  CHECK(ds.size() == 10000);
  CHECK(ds.image(0).size() == 3 * 32 * 32);
  CHECK(ds.labels[5] == bytes[5 * kCifarRecordBytes]);
  CHECK(ds.image(5)[1024] == bytes[5 * kCifarRecordBytes + 1 + 1024] / 255.0f);  // first green pixel
  CHECK_NOTHROW(ds.validate());
  for (float v : ds.images) REQUIRE((v >= 0.0f && v <= 1.0f));
  CHECK(encode_cifar_batch(ds) == bytes);
}

TEST_CASE("cifar ingestion errors") {
  auto bytes = random_records(3, 2);
  auto truncated = bytes;
  truncated.resize(2 * kCifarRecordBytes + 100);
  try {
    decode_cifar_batch(truncated, "batch.bin");
    FAIL("expected an error");
  } catch (const IngestionError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("batch.bin") != std::string::npos);
    CHECK(msg.find("6146") != std::string::npos);
  }
  bytes[kCifarRecordBytes] = 255;
  try {
    decode_cifar_batch(bytes, "batch.bin");
    FAIL("expected an error");
  } catch (const IngestionError& e) {
    CHECK(std::string(e.what()).find("255") != std::string::npos);
    CHECK(std::string(e.what()).find("3073") != std::string::npos);
  }
  CHECK_THROWS_AS(read_cifar_batch("/nonexistent/cutmixsl/batch.bin"), IngestionError);
}

TEST_CASE("cifar directory loader") {
  const auto dir = std::filesystem::temp_directory_path() / "cutmixsl_cifar_test";
  std::filesystem::create_directories(dir);
  for (int i = 1; i <= 5; ++i) {
    write_cifar_batch((dir / ("data_batch_" + std::to_string(i) + ".bin")).string(),
                      decode_cifar_batch(random_records(20, 10 + i), "mem"));
  }
  write_cifar_batch((dir / "test_batch.bin").string(), decode_cifar_batch(random_records(7, 3), "mem"));
  const auto split = load_cifar10(dir.string());
  CHECK(split.train.size() == 100);
  CHECK(split.test.size() == 7);
  const auto standardized = load_cifar10(dir.string(), true);
  const auto st = channel_stats(standardized.train);
  for (int c = 0; c < 3; ++c) {
    CHECK(std::abs(st.mean[c]) < 1e-4);
    CHECK(std::abs(st.stddev[c] - 1.0) < 1e-3);
  }
  CHECK(standardized.train.normalization == "standardized");
  std::filesystem::remove_all(dir);
  CHECK_THROWS_AS(load_cifar10(dir.string()), IngestionError);
}

TEST_CASE("synthetic dataset") {
  SyntheticSpec spec;
  spec.num_samples = 200;
  spec.seed = 4;
  const auto a = make_synthetic(spec), b = make_synthetic(spec);
  CHECK(a.images == b.images);
  CHECK(a.labels == b.labels);
  CHECK_NOTHROW(a.validate());
  CHECK(make_synthetic(spec, 1).images != a.images);
  for (auto h : a.class_histogram()) CHECK(h == 20);

  spec.num_samples = 0;
  const auto empty = make_synthetic(spec);
  CHECK(empty.size() == 0);
  CHECK_NOTHROW(empty.validate());

  // Synthetic images round-trip through the binary record format.
  spec.num_samples = 5;
  const auto small = make_synthetic(spec);
  const auto again = decode_cifar_batch(encode_cifar_batch(small), "mem");
  CHECK(again.labels == small.labels);
  for (std::size_t e = 0; e < small.images.size(); ++e) REQUIRE(std::abs(again.images[e] - small.images[e]) <= 0.5f / 255);
}

TEST_CASE("two synthetic classes 5 sigma apart are linearly separable") {
  SyntheticSpec spec;
  spec.classes = 2;
  spec.separation = 5.0;
  spec.noise = 0.1;
  spec.seed = 5;
  const auto means = synthetic_class_means(spec);
  double d2 = 0;
  for (std::size_t e = 0; e < means[0].size(); ++e) d2 += std::pow(means[0][e] - means[1][e], 2);
  CHECK(std::sqrt(d2) == doctest::Approx(0.5).epsilon(1e-4));

  // Nearest estimated class mean is a linear rule; Bayes accuracy is
  // Phi(2.5) ~ 0.994.
  spec.num_samples = 400;
  const auto train = make_synthetic(spec, 0);
  spec.num_samples = 1000;
  const auto test = make_synthetic(spec, 1);
  std::vector<std::vector<double>> mu(2, std::vector<double>(train.image_size(), 0.0));
  std::vector<double> count(2, 0);
  for (std::size_t i = 0; i < train.size(); ++i) {
    const auto img = train.image(i);
    for (std::size_t e = 0; e < img.size(); ++e) mu[train.labels[i]][e] += img[e];
    ++count[train.labels[i]];
  }
  for (int c = 0; c < 2; ++c)
    for (auto& v : mu[c]) v /= count[c];
  std::size_t correct = 0;
  for (std::size_t i = 0; i < test.size(); ++i) {
    const auto img = test.image(i);
    double d0 = 0, d1 = 0;
    for (std::size_t e = 0; e < img.size(); ++e) {
      d0 += std::pow(img[e] - mu[0][e], 2);
      d1 += std::pow(img[e] - mu[1][e], 2);
    }
    correct += (d1 < d0 ? 1u : 0u) == test.labels[i];
  }
  CHECK(correct / double(test.size()) > 0.95);
}

TEST_CASE("iid partition") {
  const auto ds = labels_only(50000, 10);
  Rng rng(6, Stream::kData);
  const auto p = partition(ds, 10, PartitionMode::kIid, 0.0, rng);
  std::set<std::size_t> all;
  for (const auto& c : p.clients) {
    CHECK(c.size() == 5000);
    all.insert(c.begin(), c.end());
  }
  CHECK(all.size() == 50000);
  CHECK(*all.rbegin() == 49999);
  const auto uneven = partition(labels_only(23, 2), 4, PartitionMode::kIid, 0.0, rng);
  CHECK(uneven.clients[0].size() == 6);
  CHECK(uneven.clients[3].size() == 5);
  CHECK_THROWS_AS(partition(labels_only(3, 2), 4, PartitionMode::kIid, 0.0, rng), ContractError);
  CHECK_THROWS_AS(partition(ds, 0, PartitionMode::kIid, 0.0, rng), ContractError);
}

TEST_CASE("dirichlet partition") {
  const auto ds = labels_only(20000, 10);
  Rng rng(7, Stream::kData);
  const auto flat = partition(ds, 10, PartitionMode::kDirichlet, 1e6, rng);
  std::set<std::size_t> all;
  for (const auto& c : flat.clients) {
    std::vector<double> h(10, 0);
    for (auto i : c) h[ds.labels[i]] += 1;
    for (double v : h) CHECK(std::abs(v / c.size() - 0.1) < 0.1 * 0.05);
    for (auto i : c) CHECK(all.insert(i).second);
  }
  CHECK(all.size() == ds.size());

  const auto small = labels_only(1000, 10);
  double skewed = 0, iid = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    Rng r(seed, Stream::kData);
    for (auto [mode, acc] : {std::pair{PartitionMode::kDirichlet, &skewed}, std::pair{PartitionMode::kIid, &iid}}) {
      const auto p = partition(small, 10, mode, 0.1, r);
      double mean_entropy = 0;
      std::size_t nonempty = 0;
      for (const auto& c : p.clients) {
        if (c.empty()) continue;
        std::vector<double> h(10, 0);
        for (auto i : c) h[small.labels[i]] += 1;
        mean_entropy += entropy(h);
        ++nonempty;
      }
      *acc += mean_entropy / nonempty;
    }
  }
  CHECK(skewed < iid);
  CHECK(skewed / 100 < 0.8 * std::log(10.0));
}
