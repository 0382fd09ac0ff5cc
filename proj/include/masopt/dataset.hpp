#pragma once

#include <charconv>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "masopt/rng.hpp"
#include "masopt/vector.hpp"

namespace masopt {

struct DatasetSpec {
  std::size_t samples = 600;
  std::size_t features = 8;
  std::size_t classes = 3;
  std::uint64_t seed = 0;
  /// Standard deviation of the class centroids; noise around them is unit.
  double separation = 1.5;
  /// Labels drawn independently of the features.
  bool random_labels = false;

  bool operator==(const DatasetSpec&) const = default;
};

/// Gaussian-blob classification data, fully determined by its spec.
struct SyntheticDataset {
  DatasetSpec spec;
  std::vector<double> inputs;  // samples x features, row-major
  std::vector<int> labels;

  std::size_t size() const noexcept { return labels.size(); }
  std::size_t features() const noexcept { return spec.features; }
  std::size_t classes() const noexcept { return spec.classes; }

  std::span<const double> row(std::size_t i) const {
    return std::span<const double>(inputs).subspan(i * spec.features, spec.features);
  }
};

/// Labels are i mod classes, then shuffled, so class counts differ by at
/// most one.
inline SyntheticDataset generate_dataset(const DatasetSpec& spec) {
  if (spec.samples == 0 || spec.features == 0) {
    throw ArgumentError("generate_dataset: samples and features must be >= 1");
  }
  if (spec.classes < 2) throw ArgumentError("generate_dataset: need at least 2 classes");

  Rng rng(spec.seed);
  Rng centroid_rng = rng.split();
  Rng label_rng = rng.split();
  Rng noise_rng = rng.split();

  std::vector<double> centroids(spec.classes * spec.features);
  for (double& c : centroids) c = centroid_rng.normal(0.0, spec.separation);

  SyntheticDataset ds{spec, std::vector<double>(spec.samples * spec.features),
                      std::vector<int>(spec.samples)};
  for (std::size_t i = 0; i < spec.samples; ++i) {
    ds.labels[i] = static_cast<int>(i % spec.classes);
  }
  label_rng.shuffle(std::span<int>(ds.labels));

  // Features follow the labels as generated; random_labels then reshuffles
  // the labels so they carry no information about the features.
  for (std::size_t i = 0; i < spec.samples; ++i) {
    const auto cls = static_cast<std::size_t>(ds.labels[i]);
    for (std::size_t f = 0; f < spec.features; ++f) {
      ds.inputs[i * spec.features + f] =
          centroids[cls * spec.features + f] + noise_rng.normal();
    }
  }
  if (spec.random_labels) label_rng.shuffle(std::span<int>(ds.labels));
  return ds;
}

struct DataSplit {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

/// Seeded shuffle, first `train_fraction` of the samples go to train.
inline DataSplit split_dataset(std::size_t samples, double train_fraction,
                               std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw ArgumentError("split_dataset: train_fraction must be in (0, 1)");
  }
  std::vector<std::size_t> order(samples);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  rng.shuffle(std::span<std::size_t>(order));
  const auto n_train = static_cast<std::size_t>(static_cast<double>(samples) * train_fraction);
  DataSplit split;
  split.train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
  split.test.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end());
  return split;
}

/// Writes a header row (x0..x{f-1},label) then one row per sample. Feature
/// values use the shortest representation that parses back exactly.
inline void write_dataset_csv(std::ostream& out, const SyntheticDataset& ds) {
  for (std::size_t f = 0; f < ds.features(); ++f) out << 'x' << f << ',';
  out << "label\n";
  char buf[32];
  for (std::size_t i = 0; i < ds.size(); ++i) {
    for (double v : ds.row(i)) {
      auto res = std::to_chars(buf, buf + sizeof buf, v);
      out.write(buf, res.ptr - buf);
      out << ',';
    }
    out << ds.labels[i] << '\n';
  }
}

}  // namespace masopt
