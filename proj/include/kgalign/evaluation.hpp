#pragma once

#include "kgalign/common.hpp"
#include "kgalign/kg.hpp"
#include "kgalign/name_encoder.hpp"

#include <string>
#include <vector>

namespace kgalign {

/// Ranking candidate pool: the gold targets of the test partition (standard
/// protocol) or every target entity (stress mode).
enum class CandidatePool { TestTargets, AllTargets };

/// Rank of each test pair's gold target within the pool, under the shared tie
/// rule (higher score first, then lower target id). 1 is best.
std::vector<int> compute_rankings(const Matrix& scores, const SeedAlignment& test, CandidatePool pool);

/// 100 * |{rank <= k}| / |ranks|.
double hits_at_k(const std::vector<int>& ranks, int k);

/// Mean of 1/rank.
double mean_reciprocal_rank(const std::vector<int>& ranks);

struct DegreeBucketRow {
  std::string label;
  long total = 0;
  long correct = 0;   // rank 1
  double accuracy = 0.0;  // percentage; 0 for empty buckets
};

/// Hits@1 stratified by the test sources' *initial* degrees. A leading "0" row
/// appears only when degree-0 test sources exist, so the weighted bucket
/// accuracies always recompose the overall Hits@1 exactly.
std::vector<DegreeBucketRow> per_degree_breakdown(const std::vector<int>& ranks,
                                                  const std::vector<int>& test_source_degrees,
                                                  const DegreeBuckets& buckets);

struct ErrorCategories {
  long all_oov = 0;                  // source or gold name empty in every space
  long partial_oov = 0;              // some tokens unknown
  long name_correct_fused_wrong = 0; // name channel alone would have ranked gold first
  long other = 0;
};

struct EvaluationConfig {
  DegreeBuckets buckets = DegreeBuckets::standard();
  CandidatePool pool = CandidatePool::TestTargets;
  int secondary_k = 10;
};

struct EvaluationReport {
  long test_size = 0;
  double hits1 = 0.0;
  double hits_secondary = 0.0;
  int secondary_k = 10;
  double mrr = 0.0;
  std::vector<DegreeBucketRow> per_degree;
  ErrorCategories errors;
};

/// Full report over the fused forward scores. name_sim is the name-channel
/// cosine matrix (same shape) used for the error taxonomy;
/// initial_source_degrees is indexed by source entity id and must reflect the
/// graphs *before* any completion round.
EvaluationReport evaluate_alignment(const Matrix& fused_fwd, const Matrix& name_sim,
                                    const SeedAlignment& test,
                                    const std::vector<int>& initial_source_degrees,
                                    const NameEmbeddingMatrix& names_source,
                                    const NameEmbeddingMatrix& names_target,
                                    const EvaluationConfig& config);

/// Deterministic pretty-printed JSON (ordered keys, no timestamps).
std::string report_to_json(const EvaluationReport& report);

/// Aligned-column text table: overall metrics plus the per-degree rows.
std::string report_to_table(const EvaluationReport& report);

}  // namespace kgalign
