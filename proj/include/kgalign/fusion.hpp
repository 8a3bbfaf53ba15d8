#pragma once

#include "kgalign/common.hpp"
#include "kgalign/kg.hpp"
#include "kgalign/structure.hpp"

#include <cstdint>
#include <filesystem>
#include <utility>
#include <vector>

namespace kgalign {

/// Degrees enter the network as one-hot vectors projected by M; degrees above
/// d_max share the overflow column.
struct DegreeEncoding {
  int d_max = 50;
  Matrix M;  // d_g x (d_max + 1)

  Index d_g() const { return M.rows(); }
  int column_of(int degree) const { return std::min(degree, d_max); }
};

/// Column min(degree, d_max) of M — equals M * one-hot(degree).
Vector degree_vector(int degree, const DegreeEncoding& enc);

struct FusionParams {
  DegreeEncoding degree_encoding;
  Vector w;  // 3 * d_m, blocks [a; b; c]
  double gamma = 0.8;
  Index d_m = 0;

  auto a() const { return w.segment(0, d_m); }
  auto b() const { return w.segment(d_m, d_m); }
  auto c() const { return w.segment(2 * d_m, d_m); }
};

FusionParams make_fusion_params(Index d_n, Index d_s, Index d_g, int d_max, double gamma,
                                std::uint64_t seed);

/// 32-bit float format: u64 d_g, u64 d_max, u64 d_m, f32 gamma, then M
/// row-major, then w.
void save_fusion_params(const FusionParams& params, const std::filesystem::path& path);
FusionParams load_fusion_params(const std::filesystem::path& path);

/// Rows [name; structure; degree], each zero-padded on the right to d_m.
using FeatureMatrix = Eigen::Matrix<double, 3, Eigen::Dynamic>;
inline constexpr int kNameRow = 0;
inline constexpr int kStructRow = 1;
inline constexpr int kDegreeRow = 2;

template <typename D1, typename D2, typename D3>
FeatureMatrix make_feature_matrix(const Eigen::MatrixBase<D1>& name, const Eigen::MatrixBase<D2>& structure,
                                  const Eigen::MatrixBase<D3>& degree, Index d_m) {
  if (name.size() > d_m || structure.size() > d_m || degree.size() > d_m)
    throw UsageError("feature row longer than d_m");
  FeatureMatrix F = FeatureMatrix::Zero(3, d_m);
  for (Index k = 0; k < name.size(); ++k) F(kNameRow, k) = name(k);
  for (Index k = 0; k < structure.size(); ++k) F(kStructRow, k) = structure(k);
  for (Index k = 0; k < degree.size(); ++k) F(kDegreeRow, k) = degree(k);
  return F;
}

/// S(i,j) = w . (F1 row i (+) F2 row j (+) F1 row i * F2 row j), i.e.
/// a.F1_i + b.F2_j + c.(F1_i o F2_j).
Eigen::Matrix3d coattention_matrix(const FeatureMatrix& F1, const FeatureMatrix& F2,
                                   const FusionParams& params);

struct AttentionVectors {
  Eigen::Vector3d att1;  // row-average of the column-softmaxed S
  Eigen::Vector3d att2;  // column-average of the row-softmaxed S
};

AttentionVectors attention_vectors(const Eigen::Matrix3d& S);

/// Sim(e1,e2) = sim_s * att1[struct] + sim_t * att1[name]; the degree entry
/// weighs in through the softmax only. Asymmetric: the reverse direction is
/// obtained by swapping F1 and F2.
double fused_similarity(const FeatureMatrix& F1, const FeatureMatrix& F2, const FusionParams& params,
                        double sim_s, double sim_t);

/// One training pair with its frozen channel similarities (cosine is
/// symmetric, so one value serves both directions).
struct FusionPairInstance {
  Vector name1, struct1;
  int degree1 = 0;
  Vector name2, struct2;
  int degree2 = 0;
  double sim_s = 0.0;
  double sim_t = 0.0;
};

/// Sum over pairs of [gamma - Sim(e1,e2)]+ + [gamma - Sim(e2,e1)]+.
double fusion_loss(const std::vector<FusionPairInstance>& batch, const FusionParams& params);

struct FusionGradients {
  Matrix dM;
  Vector dw;
};

/// Analytic gradients of fusion_loss w.r.t. M and w; subgradient at the hinge
/// kink is 0. Returns the loss.
double fusion_loss_and_gradients(const std::vector<FusionPairInstance>& batch, const FusionParams& params,
                                 FusionGradients& grads);

/// Borrowed views of everything the co-attention needs per side. Degree
/// vectors are the *current* graph degrees, so iterative rounds refresh them.
struct FusionInputs {
  const Matrix& names_source;
  const Matrix& names_target;
  const StructuralEmbeddingMatrix& structure;
  const std::vector<int>& degrees_source;
  const std::vector<int>& degrees_target;
};

FusionPairInstance make_instance(const FusionInputs& in, int source_id, int target_id);

struct PairAttention {
  Eigen::Matrix3d S;
  AttentionVectors attention;
};

PairAttention attention_for_pair(const FusionInputs& in, const FusionParams& params, int source_id,
                                 int target_id);

struct FusionTrainConfig {
  double lr = 0.1;
  int batch = 32;
  int max_epochs = 200;
  int patience = 5;        // early-stopping window on validation Hits@1
  double val_fraction = 0.10;
  double gamma = 0.8;
  Index d_g = 300;
  int d_max = 50;
  std::uint64_t seed = 0;
  int threads = 1;
};

struct FusionTrainResult {
  FusionParams params;
  std::vector<double> epoch_loss;  // mean per-pair training loss
  std::vector<double> val_hits1;
  int best_epoch = -1;             // 0-based; -1 when no validation ran
};

/// SGD on M and w with per-batch mean updates; channel similarities cached up
/// front (embeddings are frozen here). Early stopping holds out a 10% slice of
/// the seeds and tracks Hits@1 against the held-out targets, restoring the
/// best parameters.
FusionTrainResult train_fusion(const FusionInputs& in, const SeedAlignment& seeds,
                               const FusionTrainConfig& config);

/// Dense fused similarities, both directions in one pass: forward n1 x n2 with
/// Sim(e1,e2), backward n2 x n1 with Sim(e2,e1). sim_s / sim_t are the
/// precomputed channel cosine matrices (n1 x n2).
std::pair<Matrix, Matrix> fused_score_matrices(const FusionInputs& in, const FusionParams& params,
                                               const Matrix& sim_s, const Matrix& sim_t, int threads = 1);

/// Forward fused scores for an id subset (rows: sources, cols: targets);
/// channel cosines computed on the fly. Small-pool path used for validation.
Matrix fused_scores_subset(const FusionInputs& in, const FusionParams& params,
                           const std::vector<int>& source_ids, const std::vector<int>& target_ids);

}  // namespace kgalign
