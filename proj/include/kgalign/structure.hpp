#pragma once

#include "kgalign/common.hpp"
#include "kgalign/kg.hpp"

#include <cstdint>
#include <filesystem>
#include <vector>

namespace kgalign {

/// Structural embeddings for both graphs in one table: rows [0, n1) are source
/// entities in id order, rows [n1, n1+n2) are target entities. Entries are
/// always finite.
class StructuralEmbeddingMatrix {
 public:
  StructuralEmbeddingMatrix() = default;
  StructuralEmbeddingMatrix(Matrix values, Index num_source);

  Index row_of(Side side, int id) const {
    return side == Side::Source ? static_cast<Index>(id) : num_source_ + static_cast<Index>(id);
  }
  Matrix::ConstRowXpr of(Side side, int id) const { return values_.row(row_of(side, id)); }

  const Matrix& values() const { return values_; }
  Index dimension() const { return values_.cols(); }
  Index num_source() const { return num_source_; }
  Index num_target() const { return values_.rows() - num_source_; }

 private:
  Matrix values_;
  Index num_source_ = 0;
};

/// Binary matrix next to a "<path>.ids" sidecar (row-index<TAB>side<TAB>URI)
/// so externally computed embeddings can be wired in with arbitrary row order.
void save_structural_embeddings(const StructuralEmbeddingMatrix& emb, const Dataset& dataset,
                                const std::filesystem::path& path);

/// Validates counts against the dataset (errors state expected vs found) and
/// permutes rows into the canonical source-block-then-target-block order.
StructuralEmbeddingMatrix load_structural_embeddings(const std::filesystem::path& path,
                                                     const Dataset& dataset);

struct StructTrainConfig {
  Index d_s = 300;
  int epochs = 50;
  double lr = 0.05;
  double margin = 1.0;
  std::uint64_t seed = 0;
  /// Racy lock-free parallel updates; faster, NOT deterministic. Off by
  /// default so identical seeds give identical embeddings.
  bool hogwild = false;
  int threads = 1;
};

/// Uniform in [-6/sqrt(d_s), 6/sqrt(d_s)], then each row scaled to unit norm,
/// so the post-training normalization invariant already holds at epoch 0.
Matrix init_struct_embeddings(Index rows, Index d_s, std::uint64_t seed);

struct StructTrainResult {
  StructuralEmbeddingMatrix embeddings;
  std::vector<double> epoch_loss;  // summed hinge loss per epoch
};

/// Translational baseline over the union corpus: entities of both graphs live
/// in one id space where each anchored pair shares a single row, relations are
/// kept side-local. Margin hinge on squared-L2 distance with uniform
/// head-or-tail corruption; entity rows re-normalized after every epoch.
StructTrainResult train_baseline_structural(const Dataset& dataset, const SeedAlignment& anchors,
                                            const StructTrainConfig& config);

}  // namespace kgalign
