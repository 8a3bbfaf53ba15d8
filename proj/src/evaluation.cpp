#include "kgalign/evaluation.hpp"

#include "kgalign/similarity.hpp"

#include <json.hpp>

#include <algorithm>
#include <iomanip>
#include <sstream>

namespace kgalign {

static std::vector<Index> candidate_pool(const Matrix& scores, const SeedAlignment& test,
                                         CandidatePool pool) {
  std::vector<Index> ids;
  if (pool == CandidatePool::AllTargets) {
    ids.resize(static_cast<std::size_t>(scores.cols()));
    for (Index j = 0; j < scores.cols(); ++j) ids[static_cast<std::size_t>(j)] = j;
    return ids;
  }
  ids.reserve(test.size());
  for (const auto& [s, t] : test.pairs()) ids.push_back(t);
  std::sort(ids.begin(), ids.end());
  return ids;
}

std::vector<int> compute_rankings(const Matrix& scores, const SeedAlignment& test, CandidatePool pool) {
  if (test.empty()) throw UsageError("compute_rankings: empty test set");
  const std::vector<Index> pool_ids = candidate_pool(scores, test, pool);
  std::vector<int> ranks;
  ranks.reserve(test.size());
  for (const auto& [s, t] : test.pairs()) {
    if (s < 0 || s >= scores.rows() || t < 0 || t >= scores.cols())
      throw UsageError("compute_rankings: test pair out of score-matrix range");
    const RowVector row = scores.row(s);
    ranks.push_back(rank_of(row, pool_ids, t));
  }
  return ranks;
}

double hits_at_k(const std::vector<int>& ranks, int k) {
  if (ranks.empty()) throw UsageError("hits_at_k: no rankings");
  if (k < 1) throw UsageError("hits_at_k: k must be positive");
  long hits = 0;
  for (int r : ranks) {
    if (r < 1) throw UsageError("hits_at_k: invalid rank " + std::to_string(r));
    if (r <= k) ++hits;
  }
  return 100.0 * static_cast<double>(hits) / static_cast<double>(ranks.size());
}

double mean_reciprocal_rank(const std::vector<int>& ranks) {
  if (ranks.empty()) throw UsageError("mean_reciprocal_rank: no rankings");
  double sum = 0.0;
  for (int r : ranks) {
    if (r < 1) throw UsageError("mean_reciprocal_rank: invalid rank " + std::to_string(r));
    sum += 1.0 / static_cast<double>(r);
  }
  return sum / static_cast<double>(ranks.size());
}

std::vector<DegreeBucketRow> per_degree_breakdown(const std::vector<int>& ranks,
                                                  const std::vector<int>& test_source_degrees,
                                                  const DegreeBuckets& buckets) {
  if (ranks.size() != test_source_degrees.size())
    throw UsageError("per_degree_breakdown: ranks and degrees disagree in length");
  buckets.validate();
  DegreeBucketRow zero_row;
  zero_row.label = "0";
  std::vector<DegreeBucketRow> rows(buckets.ranges.size());
  for (std::size_t b = 0; b < rows.size(); ++b) rows[b].label = buckets.label(static_cast<int>(b));

  for (std::size_t i = 0; i < ranks.size(); ++i) {
    const int b = buckets.bucket_of(test_source_degrees[i]);
    DegreeBucketRow& row = b < 0 ? zero_row : rows[static_cast<std::size_t>(b)];
    ++row.total;
    if (ranks[i] == 1) ++row.correct;
  }
  if (zero_row.total > 0) rows.insert(rows.begin(), zero_row);
  for (auto& row : rows)
    row.accuracy = row.total == 0 ? 0.0 : 100.0 * static_cast<double>(row.correct) / static_cast<double>(row.total);
  return rows;
}

EvaluationReport evaluate_alignment(const Matrix& fused_fwd, const Matrix& name_sim,
                                    const SeedAlignment& test,
                                    const std::vector<int>& initial_source_degrees,
                                    const NameEmbeddingMatrix& names_source,
                                    const NameEmbeddingMatrix& names_target,
                                    const EvaluationConfig& config) {
  if (fused_fwd.rows() != name_sim.rows() || fused_fwd.cols() != name_sim.cols())
    throw UsageError("evaluate_alignment: fused and name matrices disagree in shape");

  EvaluationReport report;
  report.test_size = static_cast<long>(test.size());
  report.secondary_k = config.secondary_k;

  const std::vector<int> ranks = compute_rankings(fused_fwd, test, config.pool);
  report.hits1 = hits_at_k(ranks, 1);
  report.hits_secondary = hits_at_k(ranks, config.secondary_k);
  report.mrr = mean_reciprocal_rank(ranks);

  std::vector<int> degrees;
  degrees.reserve(test.size());
  for (const auto& [s, t] : test.pairs())
    degrees.push_back(initial_source_degrees.at(static_cast<std::size_t>(s)));
  report.per_degree = per_degree_breakdown(ranks, degrees, config.buckets);

  const std::vector<Index> pool_ids = candidate_pool(fused_fwd, test, config.pool);
  for (std::size_t i = 0; i < test.size(); ++i) {
    if (ranks[i] == 1) continue;
    const auto [s, t] = test.pairs()[i];
    const auto su = static_cast<std::size_t>(s);
    const auto tu = static_cast<std::size_t>(t);
    if (names_source.all_oov.at(su) || names_target.all_oov.at(tu)) {
      ++report.errors.all_oov;
    } else if (names_source.oov_counts.at(su) > 0 || names_target.oov_counts.at(tu) > 0) {
      ++report.errors.partial_oov;
    } else {
      const RowVector row = name_sim.row(s);
      if (rank_of(row, pool_ids, t) == 1) {
        ++report.errors.name_correct_fused_wrong;
      } else {
        ++report.errors.other;
      }
    }
  }
  return report;
}

std::string report_to_json(const EvaluationReport& report) {
  nlohmann::ordered_json j;
  j["test_size"] = report.test_size;
  j["hits@1"] = report.hits1;
  j["hits@" + std::to_string(report.secondary_k)] = report.hits_secondary;
  j["mrr"] = report.mrr;
  nlohmann::ordered_json buckets = nlohmann::ordered_json::array();
  for (const auto& row : report.per_degree) {
    nlohmann::ordered_json b;
    b["degree"] = row.label;
    b["total"] = row.total;
    b["correct"] = row.correct;
    b["hits@1"] = row.accuracy;
    buckets.push_back(b);
  }
  j["per_degree"] = buckets;
  j["errors"] = {{"all_oov", report.errors.all_oov},
                 {"partial_oov", report.errors.partial_oov},
                 {"name_correct_fused_wrong", report.errors.name_correct_fused_wrong},
                 {"other", report.errors.other}};
  return j.dump(2) + "\n";
}

std::string report_to_table(const EvaluationReport& report) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(2);
  out << "test size : " << report.test_size << "\n";
  out << "Hits@1    : " << report.hits1 << "\n";
  out << "Hits@" << report.secondary_k << "   : " << report.hits_secondary << "\n";
  out << "MRR       : " << std::setprecision(4) << report.mrr << "\n\n";
  out << std::setprecision(2);
  out << std::left << std::setw(8) << "degree" << std::right << std::setw(8) << "total" << std::setw(9)
      << "correct" << std::setw(9) << "Hits@1" << "\n";
  for (const auto& row : report.per_degree)
    out << std::left << std::setw(8) << row.label << std::right << std::setw(8) << row.total << std::setw(9)
        << row.correct << std::setw(9) << row.accuracy << "\n";
  out << "\nerrors: all-OOV " << report.errors.all_oov << ", partial-OOV " << report.errors.partial_oov
      << ", name-correct-fused-wrong " << report.errors.name_correct_fused_wrong << ", other "
      << report.errors.other << "\n";
  return out.str();
}

}  // namespace kgalign
