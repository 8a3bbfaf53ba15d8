#pragma once

#include "kgalign/common.hpp"
#include "kgalign/evaluation.hpp"
#include "kgalign/fusion.hpp"
#include "kgalign/kg.hpp"
#include "kgalign/structure.hpp"

#include <string>
#include <utility>
#include <vector>

namespace kgalign {

/// Seeds plus accumulated confident pairs; grows monotonically and stays
/// injective in both directions.
class AnchorSet {
 public:
  AnchorSet() = default;
  explicit AnchorSet(const SeedAlignment& seeds);

  const std::vector<std::pair<int, int>>& pairs() const { return pairs_; }
  std::size_t size() const { return pairs_.size(); }
  bool has_source(int source) const { return by_source_.count(source) > 0; }
  bool has_target(int target) const { return by_target_.count(target) > 0; }
  /// -1 when unmapped.
  int target_of(int source) const;
  int source_of(int target) const;
  /// Throws UsageError if either endpoint is already anchored.
  void add(int source, int target);

  SeedAlignment as_alignment() const { return SeedAlignment(pairs_); }

 private:
  std::vector<std::pair<int, int>> pairs_;
  std::unordered_map<int, int> by_source_;
  std::unordered_map<int, int> by_target_;
};

enum class SelectionStrategy { Confident, Threshold, GreedyMatch };

SelectionStrategy parse_selection_strategy(const std::string& name);
const char* selection_strategy_name(SelectionStrategy s);

struct SelectionConfig {
  SelectionStrategy strategy = SelectionStrategy::Confident;
  double theta = 0.05;  // margin for Confident
  double tau = 0.0;     // score floor for Threshold / GreedyMatch
};

/// Bidirectional mutual-argmax with margin theta on both sides, restricted to
/// entities outside `excluded`. The margin compares the best against the
/// runner-up; a side with fewer than two free candidates gets margin +inf
/// (but theta = +inf always selects nothing). sim_fwd is n1 x n2, sim_bwd is
/// n2 x n1. Output is injective both ways by construction.
std::vector<std::pair<int, int>> select_confident_pairs(const Matrix& sim_fwd, const Matrix& sim_bwd,
                                                        const AnchorSet& excluded, double theta);

/// Greedy in ascending source order: each free source takes its most similar
/// still-unused free target, kept when the score reaches tau.
std::vector<std::pair<int, int>> select_threshold_pairs(const Matrix& sim_fwd, const AnchorSet& excluded,
                                                        double tau);

/// All free pairs scoring >= tau, sorted by descending score (ties: source
/// then target ascending), accepted greedily under the 1-to-1 constraint.
std::vector<std::pair<int, int>> select_greedy_matching(const Matrix& sim_fwd, const AnchorSet& excluded,
                                                        double tau);

std::vector<std::pair<int, int>> select_pairs(const Matrix& sim_fwd, const Matrix& sim_bwd,
                                              const AnchorSet& excluded, const SelectionConfig& config);

/// A triple translated into the other graph's entity id space. The relation
/// stays a label because foreign relations may be new to the destination
/// vocabulary: labels gain an "xkg:" prefix when crossing, and a prefixed
/// label crossing back is unwrapped, so a round trip reproduces the original
/// triple instead of growing the namespace.
struct LabeledTriple {
  int head = 0;
  std::string relation;
  int tail = 0;
};

inline constexpr const char* kForeignRelationPrefix = "xkg:";

std::string foreign_relation_label(const std::string& label);

struct TransplantResult {
  std::vector<LabeledTriple> to_source;
  std::vector<LabeledTriple> to_target;
};

/// Translates every triple whose head and tail are both anchored into the
/// counterpart graph, skipping triples already present there.
TransplantResult transplant_triples(const KnowledgeGraph& source, const KnowledgeGraph& target,
                                    const AnchorSet& anchors);

/// Interns the labels and unions the triples into the graph.
KnowledgeGraph augment_with_labeled(const KnowledgeGraph& kg, const std::vector<LabeledTriple>& triples);

struct LabeledHistogram {
  std::vector<std::string> labels;
  std::vector<long> counts;  // parallel to labels
  long zero_degree = 0;
};

LabeledHistogram labeled_degree_distribution(const KnowledgeGraph& kg, const DegreeBuckets& buckets);

struct RoundReport {
  int round = 0;
  long anchors_total = 0;
  long anchors_added = 0;
  /// Fraction of this round's added pairs that match gold; -1 before any
  /// selection happened (round 0) or when nothing was added.
  double selection_precision = -1.0;
  long transplanted_to_source = 0;
  long transplanted_to_target = 0;
  LabeledHistogram degrees_source;  // of the graphs this round trained on
  LabeledHistogram degrees_target;
  EvaluationReport evaluation;
  std::vector<std::pair<std::string, double>> stage_seconds;
};

struct IterationConfig {
  int rounds = 3;  // completion rounds after the initial alignment
  StructTrainConfig structure;
  FusionTrainConfig fusion;
  SelectionConfig selection;
  EvaluationConfig evaluation;
  std::uint64_t seed = 0;
  int threads = 1;
};

struct AlignmentState {
  AnchorSet anchors;
  KnowledgeGraph source;  // final augmented graphs
  KnowledgeGraph target;
  StructuralEmbeddingMatrix structure;
  FusionParams fusion;
  Matrix fwd;  // final fused scores, n1 x n2
  Matrix bwd;  // n2 x n1
  std::vector<RoundReport> rounds;
};

/// Full pipeline: round 0 trains and scores on the input graphs; each later
/// round selects confident pairs from the previous scores, extends the
/// anchors, transplants triples, and retrains from scratch on the augmented
/// graphs. Evaluation buckets always use the initial degrees.
AlignmentState run_iterative_alignment(const Dataset& dataset, const NameEmbeddingMatrix& names_source,
                                       const NameEmbeddingMatrix& names_target,
                                       const IterationConfig& config);

/// Deterministic per-round JSON (no wall-clock values).
std::string rounds_to_json(const std::vector<RoundReport>& rounds);
/// Wall-clock per stage per round, kept out of the deterministic report.
std::string timings_to_json(const std::vector<RoundReport>& rounds);

}  // namespace kgalign
