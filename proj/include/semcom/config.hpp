#pragma once

// Experiment configuration: a single struct covering model, codebook, training,
// evaluation channel, and dataset settings, plus an INI-style text format with
// an exact round-trip guarantee: parse_experiment_config(serialize(cfg)) == cfg.
//
// File format:
//   - "[section]" headers, "key = value" pairs, "#" starts a comment.
//   - Unknown sections or keys are errors (ConfigError), not silently ignored,
//     so typos in experiment files surface immediately.
//   - Doubles are written with enough digits to survive the round trip.

#include <cstdint>
#include <string>

#include "semcom/channel.hpp"
#include "semcom/dataset.hpp"
#include "semcom/pipeline.hpp"
#include "semcom/train.hpp"

namespace semcom {

// Which dataset the harness should load.
struct DatasetConfig {
  std::string kind = "synthetic";  // "synthetic" or "cifar10"
  SyntheticSpec synthetic;
  std::string cifar_dir = "data/cifar10";
  std::size_t cifar_train_limit = 2000;  // per-run subsample sizes; 0 = all
  std::size_t cifar_test_limit = 500;

  void validate() const;
  bool operator==(const DatasetConfig&) const = default;
};

struct ExperimentConfig {
  SystemConfig system;
  TrainConfig train;
  ChannelConfig channel;  // evaluation link (training link lives in train.channel)
  DatasetConfig dataset;
  std::string output_dir = "out";
  std::uint64_t seed = 1;

  void validate() const;
  bool operator==(const ExperimentConfig&) const = default;
};

// Serializes every field in a fixed section/key order.
std::string serialize_experiment_config(const ExperimentConfig& cfg);

// Parses the INI text; throws ConfigError with the offending line/key/value.
ExperimentConfig parse_experiment_config(const std::string& text);

// Convenience wrappers. read_experiment_config throws IoError if the file
// cannot be opened.
ExperimentConfig read_experiment_config(const std::string& path);
void write_experiment_config(const ExperimentConfig& cfg, const std::string& path);

}  // namespace semcom
