#include "kgalign/fusion.hpp"

#include "kgalign/matrix_io.hpp"
#include "kgalign/parallel.hpp"
#include "kgalign/similarity.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

namespace kgalign {

Vector degree_vector(int degree, const DegreeEncoding& enc) {
  if (degree < 0) throw UsageError("degree_vector: negative degree");
  return enc.M.col(enc.column_of(degree));
}

FusionParams make_fusion_params(Index d_n, Index d_s, Index d_g, int d_max, double gamma,
                                std::uint64_t seed) {
  if (d_n < 1 || d_s < 1 || d_g < 1) throw UsageError("feature dimensions must be positive");
  if (d_max < 0) throw UsageError("d_max must be non-negative");
  FusionParams p;
  p.gamma = gamma;
  p.d_m = std::max({d_n, d_s, d_g});
  p.degree_encoding.d_max = d_max;

  const auto glorot = [](Matrix& m, std::mt19937_64& rng) {
    const double lim = std::sqrt(6.0 / static_cast<double>(m.rows() + m.cols()));
    std::uniform_real_distribution<double> dist(-lim, lim);
    for (Index r = 0; r < m.rows(); ++r)
      for (Index c = 0; c < m.cols(); ++c) m(r, c) = dist(rng);
  };
  std::mt19937_64 rng_m(derive_seed(seed, "fusion-M"));
  p.degree_encoding.M.resize(d_g, d_max + 1);
  glorot(p.degree_encoding.M, rng_m);

  std::mt19937_64 rng_w(derive_seed(seed, "fusion-w"));
  Matrix w(3 * p.d_m, 1);
  glorot(w, rng_w);
  p.w = w.col(0);
  return p;
}

void save_fusion_params(const FusionParams& params, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write fusion params: " + path.string());
  io::put_u64_le(out, static_cast<std::uint64_t>(params.degree_encoding.d_g()));
  io::put_u64_le(out, static_cast<std::uint64_t>(params.degree_encoding.d_max));
  io::put_u64_le(out, static_cast<std::uint64_t>(params.d_m));
  io::put_f32_le(out, static_cast<float>(params.gamma));
  io::put_matrix_f32(out, params.degree_encoding.M);
  for (Index k = 0; k < params.w.size(); ++k) io::put_f32_le(out, static_cast<float>(params.w[k]));
  if (!out) throw DataError("short write to fusion params: " + path.string());
}

FusionParams load_fusion_params(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open fusion params: " + path.string());
  FusionParams p;
  const auto d_g = static_cast<Index>(io::get_u64_le(in));
  const auto d_max = static_cast<Index>(io::get_u64_le(in));
  p.d_m = static_cast<Index>(io::get_u64_le(in));
  p.gamma = io::get_f32_le(in);
  if (!in) throw DataError("fusion params truncated in header: " + path.string());
  if (d_g < 1 || d_max < 0 || p.d_m < d_g)
    throw DataError("fusion params header inconsistent: " + path.string());
  p.degree_encoding.d_max = static_cast<int>(d_max);
  p.degree_encoding.M.resize(d_g, d_max + 1);
  io::get_matrix_f32(in, p.degree_encoding.M);
  Matrix w(3 * p.d_m, 1);
  for (Index k = 0; k < w.rows(); ++k) w(k, 0) = io::get_f32_le(in);
  if (!in) throw DataError("fusion params truncated in weights: " + path.string());
  p.w = w.col(0);
  if (!p.degree_encoding.M.allFinite() || !p.w.allFinite())
    throw DataError("fusion params contain NaN/Inf: " + path.string());
  return p;
}

Eigen::Matrix3d coattention_matrix(const FeatureMatrix& F1, const FeatureMatrix& F2,
                                   const FusionParams& params) {
  if (F1.cols() != params.d_m || F2.cols() != params.d_m)
    throw UsageError("coattention_matrix: feature width does not match d_m");
  if (params.w.size() != 3 * params.d_m) throw UsageError("coattention_matrix: bad w length");
  const auto a = params.a();
  const auto b = params.b();
  const auto c = params.c();
  Eigen::Matrix3d S;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      S(i, j) = F1.row(i).dot(a) + F2.row(j).dot(b) + F1.row(i).cwiseProduct(F2.row(j)).dot(c.transpose());
  return S;
}

static Eigen::Matrix3d column_softmax(const Eigen::Matrix3d& S) {
  Eigen::Matrix3d P;
  for (int j = 0; j < 3; ++j) {
    const double m = S.col(j).maxCoeff();
    const Eigen::Vector3d e = (S.col(j).array() - m).exp();
    P.col(j) = e / e.sum();
  }
  return P;
}

AttentionVectors attention_vectors(const Eigen::Matrix3d& S) {
  if (!S.allFinite()) throw NumericError("attention_vectors: non-finite co-attention matrix");
  AttentionVectors att;
  att.att1 = column_softmax(S).rowwise().mean();
  att.att2 = column_softmax(S.transpose()).rowwise().mean();
  return att;
}

double fused_similarity(const FeatureMatrix& F1, const FeatureMatrix& F2, const FusionParams& params,
                        double sim_s, double sim_t) {
  const Eigen::Vector3d att1 = column_softmax(coattention_matrix(F1, F2, params)).rowwise().mean();
  return sim_s * att1[kStructRow] + sim_t * att1[kNameRow];
}

namespace {

struct PairFeatures {
  FeatureMatrix F1, F2;
  int col1 = 0, col2 = 0;  // M columns feeding the degree rows
};

PairFeatures build_features(const FusionPairInstance& inst, const FusionParams& p) {
  PairFeatures f;
  f.col1 = p.degree_encoding.column_of(inst.degree1);
  f.col2 = p.degree_encoding.column_of(inst.degree2);
  f.F1 = make_feature_matrix(inst.name1, inst.struct1, degree_vector(inst.degree1, p.degree_encoding), p.d_m);
  f.F2 = make_feature_matrix(inst.name2, inst.struct2, degree_vector(inst.degree2, p.degree_encoding), p.d_m);
  return f;
}

/// One hinge direction. Accumulates into grads when non-null and the hinge is
/// active; subgradient at the exact kink is 0.
double direction_term(const FeatureMatrix& Fa, const FeatureMatrix& Fb, int col_a, int col_b,
                      double sim_s, double sim_t, const FusionParams& p, FusionGradients* grads) {
  const Eigen::Matrix3d S = coattention_matrix(Fa, Fb, p);
  const Eigen::Matrix3d P = column_softmax(S);
  const Eigen::Vector3d att1 = P.rowwise().mean();
  const double sim = sim_s * att1[kStructRow] + sim_t * att1[kNameRow];
  const double arg = p.gamma - sim;
  if (arg <= 0.0) return 0.0;
  if (!grads) return arg;

  Eigen::Vector3d datt1 = Eigen::Vector3d::Zero();
  datt1[kNameRow] = -sim_t;
  datt1[kStructRow] = -sim_s;
  const Eigen::Vector3d dP_col = datt1 / 3.0;  // same for every column
  Eigen::Matrix3d dS;
  for (int j = 0; j < 3; ++j) {
    const double q = dP_col.dot(P.col(j));
    dS.col(j) = P.col(j).cwiseProduct(dP_col - Eigen::Vector3d::Constant(q));
  }

  const Index d_m = p.d_m;
  const auto a = p.a();
  const auto b = p.b();
  const auto c = p.c();
  auto da = grads->dw.segment(0, d_m);
  auto db = grads->dw.segment(d_m, d_m);
  auto dc = grads->dw.segment(2 * d_m, d_m);
  RowVector dFa_deg = RowVector::Zero(d_m);
  RowVector dFb_deg = RowVector::Zero(d_m);
  for (int r = 0; r < 3; ++r) {
    for (int s = 0; s < 3; ++s) {
      const double g = dS(r, s);
      da += g * Fa.row(r).transpose();
      db += g * Fb.row(s).transpose();
      dc += g * Fa.row(r).cwiseProduct(Fb.row(s)).transpose();
      if (r == kDegreeRow) dFa_deg += g * (a.transpose() + c.transpose().cwiseProduct(Fb.row(s)));
      if (s == kDegreeRow) dFb_deg += g * (b.transpose() + c.transpose().cwiseProduct(Fa.row(r)));
    }
  }
  const Index d_g = p.degree_encoding.d_g();
  grads->dM.col(col_a) += dFa_deg.head(d_g).transpose();
  grads->dM.col(col_b) += dFb_deg.head(d_g).transpose();
  return arg;
}

double pair_term(const FusionPairInstance& inst, const FusionParams& p, FusionGradients* grads) {
  const PairFeatures f = build_features(inst, p);
  return direction_term(f.F1, f.F2, f.col1, f.col2, inst.sim_s, inst.sim_t, p, grads) +
         direction_term(f.F2, f.F1, f.col2, f.col1, inst.sim_s, inst.sim_t, p, grads);
}

}  // namespace

double fusion_loss(const std::vector<FusionPairInstance>& batch, const FusionParams& params) {
  if (batch.empty()) throw UsageError("fusion_loss: empty batch");
  double total = 0.0;
  for (const auto& inst : batch) total += pair_term(inst, params, nullptr);
  return total;
}

double fusion_loss_and_gradients(const std::vector<FusionPairInstance>& batch, const FusionParams& params,
                                 FusionGradients& grads) {
  if (batch.empty()) throw UsageError("fusion_loss_and_gradients: empty batch");
  grads.dM = Matrix::Zero(params.degree_encoding.M.rows(), params.degree_encoding.M.cols());
  grads.dw = Vector::Zero(params.w.size());
  double total = 0.0;
  for (const auto& inst : batch) total += pair_term(inst, params, &grads);
  return total;
}

FusionPairInstance make_instance(const FusionInputs& in, int source_id, int target_id) {
  FusionPairInstance inst;
  inst.name1 = in.names_source.row(source_id).transpose();
  inst.struct1 = in.structure.of(Side::Source, source_id).transpose();
  inst.degree1 = in.degrees_source.at(static_cast<std::size_t>(source_id));
  inst.name2 = in.names_target.row(target_id).transpose();
  inst.struct2 = in.structure.of(Side::Target, target_id).transpose();
  inst.degree2 = in.degrees_target.at(static_cast<std::size_t>(target_id));
  inst.sim_s = cosine(inst.struct1, inst.struct2);
  inst.sim_t = cosine(inst.name1, inst.name2);
  return inst;
}

PairAttention attention_for_pair(const FusionInputs& in, const FusionParams& params, int source_id,
                                 int target_id) {
  const FusionPairInstance inst = make_instance(in, source_id, target_id);
  const PairFeatures f = build_features(inst, params);
  PairAttention out;
  out.S = coattention_matrix(f.F1, f.F2, params);
  out.attention = attention_vectors(out.S);
  return out;
}

Matrix fused_scores_subset(const FusionInputs& in, const FusionParams& params,
                           const std::vector<int>& source_ids, const std::vector<int>& target_ids) {
  std::vector<FusionPairInstance> targets;
  targets.reserve(target_ids.size());
  std::vector<FeatureMatrix> F2;
  F2.reserve(target_ids.size());
  for (int t : target_ids) {
    FusionPairInstance inst;
    inst.name2 = in.names_target.row(t).transpose();
    inst.struct2 = in.structure.of(Side::Target, t).transpose();
    inst.degree2 = in.degrees_target.at(static_cast<std::size_t>(t));
    F2.push_back(make_feature_matrix(inst.name2, inst.struct2,
                                     degree_vector(inst.degree2, params.degree_encoding), params.d_m));
    targets.push_back(std::move(inst));
  }
  Matrix out(static_cast<Index>(source_ids.size()), static_cast<Index>(target_ids.size()));
  for (std::size_t i = 0; i < source_ids.size(); ++i) {
    const int s = source_ids[i];
    const Vector name1 = in.names_source.row(s).transpose();
    const Vector struct1 = in.structure.of(Side::Source, s).transpose();
    const int degree1 = in.degrees_source.at(static_cast<std::size_t>(s));
    const FeatureMatrix F1 =
        make_feature_matrix(name1, struct1, degree_vector(degree1, params.degree_encoding), params.d_m);
    for (std::size_t j = 0; j < target_ids.size(); ++j) {
      const double sim_s = cosine(struct1, targets[j].struct2);
      const double sim_t = cosine(name1, targets[j].name2);
      out(static_cast<Index>(i), static_cast<Index>(j)) = fused_similarity(F1, F2[j], params, sim_s, sim_t);
    }
  }
  return out;
}

FusionTrainResult train_fusion(const FusionInputs& in, const SeedAlignment& seeds,
                               const FusionTrainConfig& config) {
  if (seeds.empty()) throw UsageError("train_fusion: empty training set");
  if (in.names_source.cols() != in.names_target.cols())
    throw UsageError("train_fusion: name dimensions differ between sides");
  if (config.batch < 1) throw UsageError("train_fusion: batch must be positive");

  FusionParams params = make_fusion_params(in.names_source.cols(), in.structure.dimension(), config.d_g,
                                           config.d_max, config.gamma, derive_seed(config.seed, "fusion-init"));

  std::vector<FusionPairInstance> instances;
  instances.reserve(seeds.size());
  for (const auto& [s, t] : seeds.pairs()) instances.push_back(make_instance(in, s, t));

  // Held-out slice for early stopping.
  std::vector<std::size_t> order(instances.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 split_rng(derive_seed(config.seed, "fusion-split"));
  std::shuffle(order.begin(), order.end(), split_rng);
  std::size_t val_n = static_cast<std::size_t>(std::llround(config.val_fraction * static_cast<double>(order.size())));
  if (val_n >= order.size()) val_n = order.size() - 1;
  std::vector<std::size_t> val_idx(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(val_n));
  std::vector<std::size_t> train_idx(order.begin() + static_cast<std::ptrdiff_t>(val_n), order.end());

  std::vector<int> val_src, val_tgt;
  for (std::size_t k : val_idx) {
    val_src.push_back(seeds.pairs()[k].first);
    val_tgt.push_back(seeds.pairs()[k].second);
  }

  const auto validation_hits1 = [&](const FusionParams& p) -> double {
    const Matrix scores = fused_scores_subset(in, p, val_src, val_tgt);
    long hits = 0;
    for (Index i = 0; i < scores.rows(); ++i) {
      const double gold = scores(i, i);
      bool top = true;
      for (Index j = 0; j < scores.cols(); ++j) {
        if (j == i) continue;
        if (scores(i, j) > gold || (scores(i, j) == gold && val_tgt[static_cast<std::size_t>(j)] <
                                                                 val_tgt[static_cast<std::size_t>(i)])) {
          top = false;
          break;
        }
      }
      if (top) ++hits;
    }
    return 100.0 * static_cast<double>(hits) / static_cast<double>(scores.rows());
  };

  FusionTrainResult res;
  FusionParams best = params;
  double best_hits = -1.0;
  int stall = 0;
  FusionGradients grads;

  for (int epoch = 0; epoch < config.max_epochs; ++epoch) {
    std::mt19937_64 order_rng(derive_seed(config.seed, "fusion-order", static_cast<std::uint64_t>(epoch)));
    std::shuffle(train_idx.begin(), train_idx.end(), order_rng);

    double total = 0.0;
    for (std::size_t start = 0; start < train_idx.size(); start += static_cast<std::size_t>(config.batch)) {
      const std::size_t stop = std::min(train_idx.size(), start + static_cast<std::size_t>(config.batch));
      grads.dM = Matrix::Zero(params.degree_encoding.M.rows(), params.degree_encoding.M.cols());
      grads.dw = Vector::Zero(params.w.size());
      double batch_loss = 0.0;
      for (std::size_t k = start; k < stop; ++k)
        batch_loss += pair_term(instances[train_idx[k]], params, &grads);
      total += batch_loss;
      const double scale = config.lr / static_cast<double>(stop - start);
      params.degree_encoding.M -= scale * grads.dM;
      params.w -= scale * grads.dw;
    }
    res.epoch_loss.push_back(train_idx.empty() ? 0.0 : total / static_cast<double>(train_idx.size()));

    if (!val_idx.empty()) {
      const double hits = validation_hits1(params);
      res.val_hits1.push_back(hits);
      if (hits > best_hits) {
        best_hits = hits;
        best = params;
        res.best_epoch = epoch;
        stall = 0;
      } else if (++stall >= config.patience) {
        break;
      }
    }
  }
  res.params = val_idx.empty() ? params : best;
  return res;
}

std::pair<Matrix, Matrix> fused_score_matrices(const FusionInputs& in, const FusionParams& params,
                                               const Matrix& sim_s, const Matrix& sim_t, int threads) {
  const Index n1 = in.names_source.rows();
  const Index n2 = in.names_target.rows();
  if (in.structure.num_source() != n1 || in.structure.num_target() != n2)
    throw UsageError("fused_score_matrices: structural embedding shape mismatch");
  if (static_cast<Index>(in.degrees_source.size()) != n1 ||
      static_cast<Index>(in.degrees_target.size()) != n2)
    throw UsageError("fused_score_matrices: degree vector length mismatch");
  if (sim_s.rows() != n1 || sim_s.cols() != n2 || sim_t.rows() != n1 || sim_t.cols() != n2)
    throw UsageError("fused_score_matrices: similarity matrix shape mismatch");
  if (in.names_source.cols() != in.names_target.cols())
    throw UsageError("fused_score_matrices: name dimensions differ between sides");

  const DegreeEncoding& enc = params.degree_encoding;
  const Index d_n = in.names_source.cols();
  const Index d_s = in.structure.dimension();
  const Index d_g = enc.d_g();
  if (std::max({d_n, d_s, d_g}) > params.d_m) throw UsageError("fused_score_matrices: d_m too small");

  // Native (unpadded) feature blocks per side; padding columns are zero, so
  // all dot products run on dimension prefixes instead.
  const Matrix Z1 = in.structure.values().topRows(n1);
  const Matrix Z2 = in.structure.values().bottomRows(n2);
  Matrix G1(n1, d_g), G2(n2, d_g);
  for (Index i = 0; i < n1; ++i)
    G1.row(i) = enc.M.col(enc.column_of(in.degrees_source[static_cast<std::size_t>(i)])).transpose();
  for (Index j = 0; j < n2; ++j)
    G2.row(j) = enc.M.col(enc.column_of(in.degrees_target[static_cast<std::size_t>(j)])).transpose();

  const std::array<const Matrix*, 3> B1 = {&in.names_source, &Z1, &G1};
  const std::array<const Matrix*, 3> B2 = {&in.names_target, &Z2, &G2};
  const std::array<Index, 3> dim = {d_n, d_s, d_g};

  const Vector a = params.a();
  const Vector b = params.b();
  const Vector c = params.c();

  std::array<Vector, 3> pa1, pb1, pa2, pb2;
  std::array<Matrix, 3> B2c;  // target blocks with columns pre-scaled by c
  for (int r = 0; r < 3; ++r) {
    pa1[r] = (*B1[r]) * a.head(dim[r]);
    pb1[r] = (*B1[r]) * b.head(dim[r]);
    pa2[r] = (*B2[r]) * a.head(dim[r]);
    pb2[r] = (*B2[r]) * b.head(dim[r]);
    B2c[r] = (*B2[r]) * c.head(dim[r]).asDiagonal();
  }

  Matrix fwd(n1, n2), bwd(n2, n1);
  parallel_for(0, n1, threads, [&](Index lo, Index hi) {
    const Index cnt = hi - lo;
    Matrix cross[3][3];
    for (int r = 0; r < 3; ++r) {
      for (int s = 0; s < 3; ++s) {
        const Index m = std::min(dim[r], dim[s]);
        cross[r][s].noalias() =
            (*B1[r]).middleRows(lo, cnt).leftCols(m) * B2c[s].leftCols(m).transpose();
      }
    }
    Eigen::Matrix3d Sf, Sb;
    for (Index i = lo; i < hi; ++i) {
      const Index ci = i - lo;
      for (Index j = 0; j < n2; ++j) {
        for (int r = 0; r < 3; ++r) {
          for (int s = 0; s < 3; ++s) {
            Sf(r, s) = pa1[r][i] + pb2[s][j] + cross[r][s](ci, j);
            Sb(r, s) = pa2[r][j] + pb1[s][i] + cross[s][r](ci, j);
          }
        }
        const Eigen::Vector3d att_f = column_softmax(Sf).rowwise().mean();
        const Eigen::Vector3d att_b = column_softmax(Sb).rowwise().mean();
        fwd(i, j) = sim_s(i, j) * att_f[kStructRow] + sim_t(i, j) * att_f[kNameRow];
        bwd(j, i) = sim_s(i, j) * att_b[kStructRow] + sim_t(i, j) * att_b[kNameRow];
      }
    }
  });
  return {std::move(fwd), std::move(bwd)};
}

}  // namespace kgalign
