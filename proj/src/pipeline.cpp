#include "kgalign/pipeline.hpp"

#include "kgalign/matrix_io.hpp"
#include "kgalign/similarity.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <numeric>
#include <thread>
#include <utility>

namespace kgalign {

namespace fs = std::filesystem;

int resolve_threads(int requested) {
  if (requested > 0) return requested;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

namespace {

/// Re-throws stage failures with the stage name prefixed, preserving the
/// error class (and so the exit code).
template <typename Fn>
decltype(auto) stage(const char* name, Fn&& fn) {
  try {
    return fn();
  } catch (const UsageError& e) {
    throw UsageError(std::string(name) + ": " + e.what());
  } catch (const DataError& e) {
    throw DataError(std::string(name) + ": " + e.what());
  } catch (const NumericError& e) {
    throw NumericError(std::string(name) + ": " + e.what());
  }
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
  if (!out.flush()) throw DataError("failed writing " + path.string());
}

StructTrainConfig make_struct_config(const RunConfig& cfg, int threads) {
  StructTrainConfig s;
  s.d_s = cfg.d_s;
  s.epochs = cfg.struct_epochs;
  s.lr = cfg.struct_lr;
  s.margin = cfg.struct_margin;
  // Matches round 0 of the iterative run, so the standalone stage reproduces it.
  s.seed = derive_seed(cfg.seed, "round-struct", 0);
  s.hogwild = cfg.struct_hogwild;
  s.threads = threads;
  return s;
}

FusionTrainConfig make_fusion_config(const RunConfig& cfg, int threads) {
  FusionTrainConfig f;
  f.lr = cfg.lr;
  f.batch = cfg.batch;
  f.max_epochs = cfg.fusion_max_epochs;
  f.patience = cfg.fusion_patience;
  f.val_fraction = cfg.fusion_val_fraction;
  f.gamma = cfg.gamma;
  f.d_g = cfg.d_g;
  f.d_max = cfg.d_max;
  f.seed = derive_seed(cfg.seed, "round-fusion", 0);
  f.threads = threads;
  return f;
}

CandidatePool parse_pool(const std::string& name) {
  if (name == "test") return CandidatePool::TestTargets;
  if (name == "all") return CandidatePool::AllTargets;
  throw UsageError("unknown candidate_pool '" + name + "' (expected test or all)");
}

StructuralEmbeddingMatrix obtain_structure(const RunConfig& cfg, const Dataset& ds, int threads) {
  if (!cfg.structural_embeddings.empty())
    return stage("load-struct",
                 [&] { return load_structural_embeddings(cfg.structural_embeddings, ds); });
  const fs::path cached = fs::path(cfg.out_dir) / "struct.f32";
  if (fs::exists(cached))
    return stage("load-struct", [&] { return load_structural_embeddings(cached, ds); });
  const StructTrainConfig scfg = make_struct_config(cfg, threads);
  return stage("train-struct",
               [&] { return train_baseline_structural(ds, ds.train, scfg).embeddings; });
}

/// Inputs, channels, parameters, and fused scores for the single-stage
/// commands; the iterative run builds its own state per round instead.
struct ScoredState {
  LoadedInputs in;
  NameEmbeddingMatrix names_source;
  NameEmbeddingMatrix names_target;
  StructuralEmbeddingMatrix structure;
  FusionParams params;
  Matrix name_sim;
  Matrix struct_sim;
  Matrix fwd;
  Matrix bwd;
};

ScoredState make_scored_state(const RunConfig& cfg, int threads) {
  ScoredState s;
  s.in = load_inputs(cfg);
  const Dataset& ds = s.in.dataset;
  s.names_source =
      stage("encode-names", [&] { return encode_all(ds.source, s.in.spaces, cfg.powers, threads); });
  s.names_target =
      stage("encode-names", [&] { return encode_all(ds.target, s.in.spaces, cfg.powers, threads); });
  s.structure = obtain_structure(cfg, ds, threads);

  const FusionInputs inputs{s.names_source.rows, s.names_target.rows, s.structure,
                            ds.source.degrees(), ds.target.degrees()};
  const fs::path cached = fs::path(cfg.out_dir) / "fusion.params";
  if (fs::exists(cached))
    s.params = stage("load-fusion", [&] { return load_fusion_params(cached); });
  else
    s.params = stage("train-fusion", [&] {
      return train_fusion(inputs, ds.train, make_fusion_config(cfg, threads)).params;
    });

  s.name_sim = pairwise_cosine(s.names_source.rows, s.names_target.rows, threads);
  const Matrix z1 = s.structure.values().topRows(ds.source.num_entities());
  const Matrix z2 = s.structure.values().bottomRows(ds.target.num_entities());
  s.struct_sim = pairwise_cosine(z1, z2, threads);
  auto scores = stage("score", [&] {
    return fused_score_matrices(inputs, s.params, s.struct_sim, s.name_sim, threads);
  });
  s.fwd = std::move(scores.first);
  s.bwd = std::move(scores.second);
  return s;
}

std::vector<int> candidate_ids(const SeedAlignment& test, CandidatePool pool, int num_targets) {
  std::vector<int> ids;
  if (pool == CandidatePool::AllTargets) {
    ids.resize(static_cast<std::size_t>(num_targets));
    std::iota(ids.begin(), ids.end(), 0);
  } else {
    ids.reserve(test.size());
    for (const auto& [s, t] : test.pairs()) ids.push_back(t);
    std::sort(ids.begin(), ids.end());
  }
  return ids;
}

}  // namespace

LoadedInputs load_inputs(const RunConfig& cfg) {
  if (cfg.source_triples.empty() || cfg.target_triples.empty())
    throw UsageError("config must set source_triples and target_triples");
  if (cfg.alignment.empty()) throw UsageError("config must set alignment");
  if (cfg.word_vectors.empty()) throw UsageError("config must set word_vectors");
  if (cfg.train_fraction <= 0.0 || cfg.train_fraction >= 1.0)
    throw UsageError("train_fraction must be in (0, 1)");

  LoadedInputs in;
  in.dataset.source =
      stage("load-source", [&] { return load_knowledge_graph(cfg.source_triples); });
  in.dataset.target =
      stage("load-target", [&] { return load_knowledge_graph(cfg.target_triples); });
  const SeedAlignment gold = stage("load-alignment", [&] {
    return load_alignment(cfg.alignment, in.dataset.source, in.dataset.target);
  });
  auto [train, test] = split_alignment(gold, cfg.train_fraction, derive_seed(cfg.seed, "split"));
  if (train.empty() || test.empty())
    throw DataError("train/test split left a partition empty (" + std::to_string(gold.size()) +
                    " gold pairs, train_fraction " + std::to_string(cfg.train_fraction) + ")");
  in.dataset.train = std::move(train);
  in.dataset.test = std::move(test);
  in.dataset.validate();
  in.spaces.reserve(cfg.word_vectors.size());
  for (const auto& path : cfg.word_vectors)
    in.spaces.push_back(stage("load-words", [&] { return WordEmbeddingSpace::load(path); }));
  return in;
}

IterationConfig make_iteration_config(const RunConfig& cfg) {
  IterationConfig it;
  it.rounds = cfg.zeta;
  it.threads = resolve_threads(cfg.threads);
  it.seed = cfg.seed;
  it.structure = make_struct_config(cfg, it.threads);
  it.fusion = make_fusion_config(cfg, it.threads);
  it.selection.strategy = parse_selection_strategy(cfg.selection);
  it.selection.theta = cfg.theta;
  it.selection.tau = cfg.tau;
  it.evaluation.pool = parse_pool(cfg.candidate_pool);
  return it;
}

PipelineResult run_pipeline(const RunConfig& cfg) {
  const int threads = resolve_threads(cfg.threads);
  LoadedInputs in = load_inputs(cfg);
  PipelineResult r;
  r.names_source = stage("encode-names",
                         [&] { return encode_all(in.dataset.source, in.spaces, cfg.powers, threads); });
  r.names_target = stage("encode-names",
                         [&] { return encode_all(in.dataset.target, in.spaces, cfg.powers, threads); });
  const IterationConfig it = make_iteration_config(cfg);
  r.state = run_iterative_alignment(in.dataset, r.names_source, r.names_target, it);
  r.dataset = std::move(in.dataset);
  r.rounds_json = rounds_to_json(r.state.rounds);
  const EvaluationReport& final_report = r.state.rounds.back().evaluation;
  r.report_json = report_to_json(final_report);
  r.report_table = report_to_table(final_report);
  r.timings_json = timings_to_json(r.state.rounds);
  return r;
}

void write_run_artifacts(const PipelineResult& r, const RunConfig& cfg) {
  const fs::path out(cfg.out_dir);
  fs::create_directories(out);
  write_text(out / "rounds.json", r.rounds_json);
  write_text(out / "report.json", r.report_json);
  write_text(out / "report.txt", r.report_table);
  write_text(out / "timings.json", r.timings_json);
  save_run_config(cfg, out / "config.used.cfg");
  save_alignment(r.state.anchors.as_alignment(), r.dataset.source, r.dataset.target,
                 out / "anchors.tsv");
  save_matrix_f32(r.names_source.rows, out / "names_source.f32");
  save_matrix_f32(r.names_target.rows, out / "names_target.f32");
  save_structural_embeddings(r.state.structure, r.dataset, out / "struct.f32");
  save_fusion_params(r.state.fusion, out / "fusion.params");
}

void cmd_encode_names(const RunConfig& cfg) {
  const int threads = resolve_threads(cfg.threads);
  const LoadedInputs in = load_inputs(cfg);
  const NameEmbeddingMatrix ns = stage(
      "encode-names", [&] { return encode_all(in.dataset.source, in.spaces, cfg.powers, threads); });
  const NameEmbeddingMatrix nt = stage(
      "encode-names", [&] { return encode_all(in.dataset.target, in.spaces, cfg.powers, threads); });
  fs::create_directories(cfg.out_dir);
  save_matrix_f32(ns.rows, fs::path(cfg.out_dir) / "names_source.f32");
  save_matrix_f32(nt.rows, fs::path(cfg.out_dir) / "names_target.f32");
  std::cout << "encoded " << ns.rows.rows() << " source + " << nt.rows.rows()
            << " target names, dimension " << ns.rows.cols() << " (all-OOV: " << ns.oov_entities
            << " source, " << nt.oov_entities << " target)\n";
}

void cmd_train_struct(const RunConfig& cfg) {
  const int threads = resolve_threads(cfg.threads);
  const LoadedInputs in = load_inputs(cfg);
  const StructTrainConfig scfg = make_struct_config(cfg, threads);
  const StructTrainResult res = stage(
      "train-struct", [&] { return train_baseline_structural(in.dataset, in.dataset.train, scfg); });
  fs::create_directories(cfg.out_dir);
  save_structural_embeddings(res.embeddings, in.dataset, fs::path(cfg.out_dir) / "struct.f32");
  std::cout << "trained structural embeddings: " << res.embeddings.values().rows() << " rows x "
            << res.embeddings.dimension() << ", final epoch loss "
            << (res.epoch_loss.empty() ? 0.0 : res.epoch_loss.back()) << "\n";
}

void cmd_train_fusion(const RunConfig& cfg) {
  const int threads = resolve_threads(cfg.threads);
  const LoadedInputs in = load_inputs(cfg);
  const Dataset& ds = in.dataset;
  const NameEmbeddingMatrix ns = stage(
      "encode-names", [&] { return encode_all(ds.source, in.spaces, cfg.powers, threads); });
  const NameEmbeddingMatrix nt = stage(
      "encode-names", [&] { return encode_all(ds.target, in.spaces, cfg.powers, threads); });
  const StructuralEmbeddingMatrix structure = obtain_structure(cfg, ds, threads);
  const FusionInputs inputs{ns.rows, nt.rows, structure, ds.source.degrees(), ds.target.degrees()};
  const FusionTrainResult res = stage("train-fusion", [&] {
    return train_fusion(inputs, ds.train, make_fusion_config(cfg, threads));
  });
  fs::create_directories(cfg.out_dir);
  save_fusion_params(res.params, fs::path(cfg.out_dir) / "fusion.params");
  std::cout << "trained fusion parameters over " << ds.train.size() << " anchors";
  if (res.best_epoch >= 0)
    std::cout << " (best epoch " << res.best_epoch << ", validation Hits@1 "
              << res.val_hits1[static_cast<std::size_t>(res.best_epoch)] << ")";
  std::cout << "\n";
}

void cmd_align(const RunConfig& cfg) {
  const int threads = resolve_threads(cfg.threads);
  const ScoredState s = make_scored_state(cfg, threads);
  const Dataset& ds = s.in.dataset;
  const fs::path out(cfg.out_dir);
  fs::create_directories(out);

  const std::vector<int> pool =
      candidate_ids(ds.test, parse_pool(cfg.candidate_pool), ds.target.num_entities());
  std::ofstream pred(out / "predictions.tsv", std::ios::binary);
  if (!pred) throw DataError("cannot write " + (out / "predictions.tsv").string());
  pred << std::setprecision(9);
  for (const auto& [src, gold] : ds.test.pairs()) {
    int best = pool.front();
    double best_score = s.fwd(src, pool.front());
    for (const int t : pool) {
      const double sc = s.fwd(src, t);
      if (sc > best_score || (sc == best_score && t < best)) {
        best = t;
        best_score = sc;
      }
    }
    pred << ds.source.entities().label(src) << '\t' << ds.target.entities().label(best) << '\t'
         << best_score << '\n';
  }
  if (!pred.flush()) throw DataError("failed writing " + (out / "predictions.tsv").string());

  SelectionConfig sel;
  sel.strategy = parse_selection_strategy(cfg.selection);
  sel.theta = cfg.theta;
  sel.tau = cfg.tau;
  const auto picked = select_pairs(s.fwd, s.bwd, AnchorSet(ds.train), sel);
  std::ofstream conf(out / "confident.tsv", std::ios::binary);
  if (!conf) throw DataError("cannot write " + (out / "confident.tsv").string());
  for (const auto& [src, tgt] : picked)
    conf << ds.source.entities().label(src) << '\t' << ds.target.entities().label(tgt) << '\n';
  if (!conf.flush()) throw DataError("failed writing " + (out / "confident.tsv").string());

  export_scores_csv(s.fwd, ds.source.entities().labels(), ds.target.entities().labels(),
                    out / "scores.csv", 10);
  std::cout << "aligned: " << ds.test.size() << " predictions, " << picked.size()
            << " confident pairs (" << selection_strategy_name(sel.strategy) << ")\n";
}

void cmd_evaluate(const RunConfig& cfg) {
  const int threads = resolve_threads(cfg.threads);
  const ScoredState s = make_scored_state(cfg, threads);
  const Dataset& ds = s.in.dataset;
  EvaluationConfig ecfg;
  ecfg.pool = parse_pool(cfg.candidate_pool);
  const EvaluationReport report = stage("evaluate", [&] {
    return evaluate_alignment(s.fwd, s.name_sim, ds.test, ds.source.degrees(), s.names_source,
                              s.names_target, ecfg);
  });
  const fs::path out(cfg.out_dir);
  fs::create_directories(out);
  write_text(out / "report.json", report_to_json(report));
  write_text(out / "report.txt", report_to_table(report));
  std::cout << report_to_table(report);
}

void cmd_run(const RunConfig& cfg) {
  const PipelineResult r = run_pipeline(cfg);
  write_run_artifacts(r, cfg);
  std::cout << std::fixed << std::setprecision(2);
  for (const RoundReport& rd : r.state.rounds)
    std::cout << "round " << rd.round << ": anchors " << rd.anchors_total << " (+"
              << rd.anchors_added << "), Hits@1 " << rd.evaluation.hits1 << "\n";
  std::cout.unsetf(std::ios::fixed);
  std::cout << r.report_table;
}

}  // namespace kgalign
