#pragma once

#include "kgalign/power_mean.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace kgalign {

/// Flat key = value run configuration. Key names mirror the usual symbols
/// (gamma, theta, zeta, d_s, d_g, ...) and defaults follow the reference
/// hyperparameter setting; everything is overridable.
struct RunConfig {
  // inputs
  std::string source_triples;
  std::string target_triples;
  std::string alignment;                  // gold pairs, split by train_fraction
  std::vector<std::string> word_vectors;  // one file per embedding space
  std::string structural_embeddings;      // optional precomputed matrix; empty = train baseline
  std::string out_dir = "out";

  // model dimensions and margins
  Index d_s = 300;
  Index d_g = 300;
  int d_max = 50;
  double gamma = 0.8;
  PowerSpec powers = PowerSpec::standard();

  // fusion training
  double lr = 0.1;
  int batch = 32;
  int fusion_max_epochs = 200;
  int fusion_patience = 5;
  double fusion_val_fraction = 0.10;

  // structural baseline training
  int struct_epochs = 50;
  double struct_lr = 0.05;
  double struct_margin = 1.0;
  bool struct_hogwild = false;

  // iterative completion
  double theta = 0.05;
  int zeta = 3;
  std::string selection = "confident";  // confident | threshold | greedy
  double tau = 0.0;

  // evaluation
  double train_fraction = 0.30;
  std::string candidate_pool = "test";  // test | all

  // runtime
  std::uint64_t seed = 0;
  int threads = 0;  // 0 = all hardware threads

  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

RunConfig parse_run_config_text(const std::string& text);
RunConfig parse_run_config(const std::filesystem::path& path);

/// Emits every key; parse(serialize(c)) == c.
std::string serialize_run_config(const RunConfig& config);
void save_run_config(const RunConfig& config, const std::filesystem::path& path);

}  // namespace kgalign
