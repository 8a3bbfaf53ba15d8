#include "kgalign/structure.hpp"

#include "kgalign/matrix_io.hpp"
#include "kgalign/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

namespace kgalign {

StructuralEmbeddingMatrix::StructuralEmbeddingMatrix(Matrix values, Index num_source)
    : values_(std::move(values)), num_source_(num_source) {
  if (num_source_ < 0 || num_source_ > values_.rows())
    throw UsageError("structural embeddings: source block exceeds row count");
  if (!values_.allFinite()) throw DataError("structural embeddings contain NaN/Inf");
}

static std::filesystem::path sidecar_path(const std::filesystem::path& path) {
  return std::filesystem::path(path.string() + ".ids");
}

void save_structural_embeddings(const StructuralEmbeddingMatrix& emb, const Dataset& dataset,
                                const std::filesystem::path& path) {
  const Index n1 = dataset.source.num_entities();
  const Index n2 = dataset.target.num_entities();
  if (emb.values().rows() != n1 + n2 || emb.num_source() != n1)
    throw UsageError("structural embeddings do not match dataset shape");
  save_matrix_f32(emb.values(), path);
  std::ofstream ids(sidecar_path(path));
  if (!ids) throw DataError("cannot write id sidecar: " + sidecar_path(path).string());
  for (int e = 0; e < n1; ++e)
    ids << emb.row_of(Side::Source, e) << "\t" << side_name(Side::Source) << "\t"
        << dataset.source.entities().label(e) << "\n";
  for (int e = 0; e < n2; ++e)
    ids << emb.row_of(Side::Target, e) << "\t" << side_name(Side::Target) << "\t"
        << dataset.target.entities().label(e) << "\n";
  if (!ids) throw DataError("failed writing id sidecar: " + sidecar_path(path).string());
}

StructuralEmbeddingMatrix load_structural_embeddings(const std::filesystem::path& path,
                                                     const Dataset& dataset) {
  const Matrix raw = load_matrix_f32(path);
  const Index n1 = dataset.source.num_entities();
  const Index n2 = dataset.target.num_entities();
  if (raw.rows() != n1 + n2)
    throw DataError("structural embeddings: expected " + std::to_string(n1 + n2) + " rows, found " +
                    std::to_string(raw.rows()));

  const auto ids_file = sidecar_path(path);
  std::ifstream ids(ids_file);
  if (!ids) throw DataError("cannot open id sidecar: " + ids_file.string());

  Matrix canonical(raw.rows(), raw.cols());
  std::vector<char> filled(static_cast<std::size_t>(raw.rows()), 0);
  std::string line;
  long line_no = 0;
  long seen = 0;
  auto fail = [&](const std::string& what) {
    throw DataError(ids_file.string() + ":" + std::to_string(line_no) + ": " + what);
  };
  while (std::getline(ids, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string row_text, side_text, uri;
    if (!std::getline(ss, row_text, '\t') || !std::getline(ss, side_text, '\t') ||
        !std::getline(ss, uri, '\t'))
      fail("expected row<TAB>side<TAB>URI");
    long row = -1;
    try {
      row = std::stol(row_text);
    } catch (const std::exception&) {
      fail("bad row index '" + row_text + "'");
    }
    if (row < 0 || row >= raw.rows()) fail("row index " + row_text + " out of range");
    Side side;
    if (side_text == side_name(Side::Source)) {
      side = Side::Source;
    } else if (side_text == side_name(Side::Target)) {
      side = Side::Target;
    } else {
      fail("unknown side '" + side_text + "'");
      side = Side::Source;  // unreachable
    }
    const KnowledgeGraph& kg = side == Side::Source ? dataset.source : dataset.target;
    const int id = kg.entities().find(uri);
    if (id < 0) fail("unknown " + side_text + " entity '" + uri + "'");
    const Index dst = side == Side::Source ? static_cast<Index>(id) : n1 + static_cast<Index>(id);
    if (filled[static_cast<std::size_t>(dst)]) fail("entity '" + uri + "' mapped twice");
    filled[static_cast<std::size_t>(dst)] = 1;
    canonical.row(dst) = raw.row(row);
    ++seen;
  }
  if (seen != raw.rows())
    throw DataError("id sidecar " + ids_file.string() + ": expected " + std::to_string(raw.rows()) +
                    " mappings, found " + std::to_string(seen));
  return StructuralEmbeddingMatrix(std::move(canonical), n1);
}

static void normalize_rows(Matrix& m, Index begin, Index end) {
  for (Index r = begin; r < end; ++r) {
    const double norm = m.row(r).norm();
    if (norm > 0.0) m.row(r) /= norm;
  }
}

Matrix init_struct_embeddings(Index rows, Index d_s, std::uint64_t seed) {
  if (d_s < 1) throw UsageError("d_s must be positive");
  const double bound = 6.0 / std::sqrt(static_cast<double>(d_s));
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-bound, bound);
  Matrix m(rows, d_s);
  for (Index r = 0; r < rows; ++r)
    for (Index c = 0; c < d_s; ++c) m(r, c) = dist(rng);
  normalize_rows(m, 0, rows);
  return m;
}

namespace {

struct JointSpace {
  std::vector<Index> target_row;  // target id -> joint row
  std::vector<Index> live;        // distinct joint rows, for negative sampling
  Index rows = 0;
};

JointSpace build_joint_space(const Dataset& dataset, const SeedAlignment& anchors) {
  const Index n1 = dataset.source.num_entities();
  const Index n2 = dataset.target.num_entities();
  JointSpace js;
  js.rows = n1 + n2;
  js.target_row.resize(static_cast<std::size_t>(n2));
  for (int j = 0; j < n2; ++j) js.target_row[static_cast<std::size_t>(j)] = n1 + j;
  for (const auto& [src, tgt] : anchors.pairs()) {
    if (src < 0 || src >= n1 || tgt < 0 || tgt >= n2)
      throw UsageError("anchor pair (" + std::to_string(src) + "," + std::to_string(tgt) +
                       ") out of range");
    js.target_row[static_cast<std::size_t>(tgt)] = src;  // share the source row
  }
  js.live.reserve(static_cast<std::size_t>(js.rows));
  for (Index i = 0; i < n1; ++i) js.live.push_back(i);
  for (int j = 0; j < n2; ++j)
    if (js.target_row[static_cast<std::size_t>(j)] >= n1) js.live.push_back(n1 + j);
  return js;
}

struct JointTriple {
  Index head, relation, tail;
};

}  // namespace

StructTrainResult train_baseline_structural(const Dataset& dataset, const SeedAlignment& anchors,
                                            const StructTrainConfig& config) {
  if (config.epochs < 0) throw UsageError("epochs must be non-negative");
  if (config.lr < 0.0) throw UsageError("learning rate must be non-negative");
  const Index n1 = dataset.source.num_entities();
  const Index m1 = dataset.source.num_relations();
  const Index m2 = dataset.target.num_relations();

  const JointSpace js = build_joint_space(dataset, anchors);

  std::vector<JointTriple> corpus;
  corpus.reserve(dataset.source.triples().size() + dataset.target.triples().size());
  for (const Triple& t : dataset.source.triples())
    corpus.push_back({static_cast<Index>(t.head), static_cast<Index>(t.relation), static_cast<Index>(t.tail)});
  for (const Triple& t : dataset.target.triples())
    corpus.push_back({js.target_row[static_cast<std::size_t>(t.head)], m1 + static_cast<Index>(t.relation),
                      js.target_row[static_cast<std::size_t>(t.tail)]});
  if (corpus.empty()) throw DataError("train_baseline_structural: empty triple set");

  Matrix E = init_struct_embeddings(js.rows, config.d_s, derive_seed(config.seed, "struct-entities"));
  Matrix R = init_struct_embeddings(std::max<Index>(m1 + m2, 1), config.d_s,
                                    derive_seed(config.seed, "struct-relations"));

  const auto step = [&](const JointTriple& t, std::mt19937_64& rng) -> double {
    std::uniform_int_distribution<std::size_t> pick(0, js.live.size() - 1);
    const bool corrupt_head = (rng() & 1u) != 0;
    Index neg = js.live[pick(rng)];
    const Index orig = corrupt_head ? t.head : t.tail;
    while (neg == orig && js.live.size() > 1) neg = js.live[pick(rng)];
    const Index nh = corrupt_head ? neg : t.head;
    const Index nt = corrupt_head ? t.tail : neg;

    const RowVector gp = E.row(t.head) + R.row(t.relation) - E.row(t.tail);
    const RowVector gn = E.row(nh) + R.row(t.relation) - E.row(nt);
    const double loss = config.margin + gp.squaredNorm() - gn.squaredNorm();
    if (loss <= 0.0) return 0.0;

    const RowVector dp = 2.0 * config.lr * gp;
    const RowVector dn = 2.0 * config.lr * gn;
    E.row(t.head) -= dp;
    E.row(t.tail) += dp;
    E.row(nh) += dn;
    E.row(nt) -= dn;
    R.row(t.relation) -= dp - dn;
    return loss;
  };

  StructTrainResult result;
  std::vector<std::size_t> order(corpus.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::mt19937_64 shuffle_rng(derive_seed(config.seed, "struct-order", static_cast<std::uint64_t>(epoch)));
    std::shuffle(order.begin(), order.end(), shuffle_rng);

    double epoch_loss = 0.0;
    if (config.hogwild && config.threads > 1) {
      std::atomic<double> total{0.0};
      parallel_for(Index{0}, static_cast<Index>(order.size()), config.threads, [&](Index lo, Index hi) {
        std::mt19937_64 rng(derive_seed(config.seed, "struct-neg",
                                        (static_cast<std::uint64_t>(epoch) << 32) ^ static_cast<std::uint64_t>(lo)));
        double local = 0.0;
        for (Index i = lo; i < hi; ++i) local += step(corpus[order[static_cast<std::size_t>(i)]], rng);
        total.fetch_add(local, std::memory_order_relaxed);
      });
      epoch_loss = total.load();
    } else {
      std::mt19937_64 rng(derive_seed(config.seed, "struct-neg", static_cast<std::uint64_t>(epoch)));
      for (std::size_t i : order) epoch_loss += step(corpus[i], rng);
    }
    normalize_rows(E, 0, js.rows);
    result.epoch_loss.push_back(epoch_loss);
  }

  const Index n2 = dataset.target.num_entities();
  Matrix out(n1 + n2, config.d_s);
  out.topRows(n1) = E.topRows(n1);
  for (int j = 0; j < n2; ++j) out.row(n1 + j) = E.row(js.target_row[static_cast<std::size_t>(j)]);
  result.embeddings = StructuralEmbeddingMatrix(std::move(out), n1);
  return result;
}

}  // namespace kgalign
