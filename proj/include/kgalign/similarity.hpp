#pragma once

#include "kgalign/common.hpp"

#include <filesystem>
#include <vector>

namespace kgalign {

/// cos(x, y) with the convention that a zero vector is similar to nothing:
/// if either norm is 0 the result is 0.
template <typename DerivedA, typename DerivedB>
double cosine(const Eigen::MatrixBase<DerivedA>& x, const Eigen::MatrixBase<DerivedB>& y) {
  if (x.size() != y.size()) throw UsageError("cosine: dimension mismatch");
  const double nx = x.norm();
  const double ny = y.norm();
  if (nx == 0.0 || ny == 0.0) return 0.0;
  const double c = x.dot(y) / (nx * ny);
  return std::min(1.0, std::max(-1.0, c));
}

/// Dense n1 x n2 cosine matrix between row sets. Zero rows give zero rows.
Matrix pairwise_cosine(const Matrix& a, const Matrix& b, int threads = 1);

struct ScoredCandidate {
  Index id;
  double score;
};

/// Top-k column indices of one score row, ties broken by ascending id.
/// Scale-invariant in the scores (only the order matters).
std::vector<ScoredCandidate> top_k(const RowVector& scores, int k);

/// 1 + number of candidates ranked strictly ahead of `target`: higher score
/// wins, equal scores are ordered by ascending id (same rule as top_k).
/// `candidates` indexes columns of `scores`.
int rank_of(const RowVector& scores, const std::vector<Index>& candidates, Index target);

/// Scores written as "source,target,score" CSV rows, header included.
void export_scores_csv(const Matrix& scores, const std::vector<std::string>& source_labels,
                       const std::vector<std::string>& target_labels, const std::filesystem::path& path,
                       int per_row);

}  // namespace kgalign
