#pragma once

#include "kgalign/completion.hpp"
#include "kgalign/config.hpp"
#include "kgalign/name_encoder.hpp"

#include <string>
#include <vector>

namespace kgalign {

/// Effective worker count: 0 means all hardware threads.
int resolve_threads(int requested);

/// Graphs, gold-split alignment, and word-vector spaces named by the config.
struct LoadedInputs {
  Dataset dataset;
  std::vector<WordEmbeddingSpace> spaces;
};

LoadedInputs load_inputs(const RunConfig& config);

IterationConfig make_iteration_config(const RunConfig& config);

/// Everything a full run produces. The serialized reports carry no wall-clock
/// values; timings live in their own document so repeated runs with the same
/// config and seed stay byte-identical.
struct PipelineResult {
  Dataset dataset;
  NameEmbeddingMatrix names_source;
  NameEmbeddingMatrix names_target;
  AlignmentState state;
  std::string rounds_json;
  std::string report_json;  // final round's evaluation
  std::string report_table;
  std::string timings_json;
};

PipelineResult run_pipeline(const RunConfig& config);

/// Writes reports, anchors, embeddings, and parameters under config.out_dir.
void write_run_artifacts(const PipelineResult& result, const RunConfig& config);

// Single-stage entry points backing the CLI subcommands. Later stages prefer
// artifacts already present in out_dir (struct.f32, fusion.params) and fall
// back to computing their inputs in-process, so the stages compose in order
// but each also works standalone.
void cmd_encode_names(const RunConfig& config);
void cmd_train_struct(const RunConfig& config);
void cmd_train_fusion(const RunConfig& config);
void cmd_align(const RunConfig& config);
void cmd_evaluate(const RunConfig& config);
void cmd_run(const RunConfig& config);

}  // namespace kgalign
