#include "kgalign/similarity.hpp"

#include "kgalign/parallel.hpp"

#include <algorithm>
#include <fstream>

namespace kgalign {

Matrix pairwise_cosine(const Matrix& a, const Matrix& b, int threads) {
  if (a.cols() != b.cols()) throw UsageError("pairwise_cosine: dimension mismatch");
  Vector na = a.rowwise().norm();
  Vector nb = b.rowwise().norm();
  Matrix an = a;
  Matrix bn = b;
  for (Index i = 0; i < an.rows(); ++i)
    if (na[i] > 0.0) an.row(i) /= na[i];
  for (Index j = 0; j < bn.rows(); ++j)
    if (nb[j] > 0.0) bn.row(j) /= nb[j];

  Matrix out(an.rows(), bn.rows());
  parallel_for(0, an.rows(), threads, [&](Index lo, Index hi) {
    out.middleRows(lo, hi - lo).noalias() = an.middleRows(lo, hi - lo) * bn.transpose();
  });
  // GEMM round-off can push |cos| a hair over 1.
  out = out.cwiseMin(1.0).cwiseMax(-1.0);
  return out;
}

std::vector<ScoredCandidate> top_k(const RowVector& scores, int k) {
  const Index n = scores.size();
  std::vector<Index> ids(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) ids[static_cast<std::size_t>(i)] = i;
  const auto better = [&scores](Index x, Index y) {
    if (scores[x] != scores[y]) return scores[x] > scores[y];
    return x < y;
  };
  const std::size_t keep = std::min<std::size_t>(static_cast<std::size_t>(std::max(k, 0)), ids.size());
  std::partial_sort(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(keep), ids.end(), better);
  std::vector<ScoredCandidate> out;
  out.reserve(keep);
  for (std::size_t i = 0; i < keep; ++i) out.push_back({ids[i], scores[ids[i]]});
  return out;
}

int rank_of(const RowVector& scores, const std::vector<Index>& candidates, Index target) {
  const double s = scores[target];
  int ahead = 0;
  bool seen = false;
  for (Index c : candidates) {
    if (c == target) {
      seen = true;
      continue;
    }
    if (scores[c] > s || (scores[c] == s && c < target)) ++ahead;
  }
  if (!seen) throw UsageError("rank_of: target not among candidates");
  return 1 + ahead;
}

void export_scores_csv(const Matrix& scores, const std::vector<std::string>& source_labels,
                       const std::vector<std::string>& target_labels, const std::filesystem::path& path,
                       int per_row) {
  if (static_cast<Index>(source_labels.size()) != scores.rows() ||
      static_cast<Index>(target_labels.size()) != scores.cols())
    throw UsageError("export_scores_csv: label count mismatch");
  std::ofstream out(path);
  if (!out) throw DataError("cannot write scores: " + path.string());
  out << "source,target,score\n";
  out.precision(9);
  for (Index i = 0; i < scores.rows(); ++i) {
    for (const auto& [j, score] : top_k(scores.row(i), per_row))
      out << source_labels[static_cast<std::size_t>(i)] << "," << target_labels[static_cast<std::size_t>(j)]
          << "," << score << "\n";
  }
  if (!out) throw DataError("failed writing scores: " + path.string());
}

}  // namespace kgalign
