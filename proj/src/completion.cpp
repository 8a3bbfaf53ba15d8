#include "kgalign/completion.hpp"

#include "kgalign/similarity.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <set>
#include <tuple>

namespace kgalign {

AnchorSet::AnchorSet(const SeedAlignment& seeds) {
  for (const auto& [s, t] : seeds.pairs()) add(s, t);
}

int AnchorSet::target_of(int source) const {
  const auto it = by_source_.find(source);
  return it == by_source_.end() ? -1 : it->second;
}

int AnchorSet::source_of(int target) const {
  const auto it = by_target_.find(target);
  return it == by_target_.end() ? -1 : it->second;
}

void AnchorSet::add(int source, int target) {
  if (has_source(source) || has_target(target))
    throw UsageError("anchor (" + std::to_string(source) + "," + std::to_string(target) +
                     ") collides with an existing anchor");
  pairs_.emplace_back(source, target);
  by_source_.emplace(source, target);
  by_target_.emplace(target, source);
}

SelectionStrategy parse_selection_strategy(const std::string& name) {
  if (name == "confident") return SelectionStrategy::Confident;
  if (name == "threshold") return SelectionStrategy::Threshold;
  if (name == "greedy") return SelectionStrategy::GreedyMatch;
  throw UsageError("unknown selection strategy '" + name + "' (confident|threshold|greedy)");
}

const char* selection_strategy_name(SelectionStrategy s) {
  switch (s) {
    case SelectionStrategy::Confident: return "confident";
    case SelectionStrategy::Threshold: return "threshold";
    case SelectionStrategy::GreedyMatch: return "greedy";
  }
  return "?";
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

/// Best and runner-up over the free candidates of one score row; ties go to
/// the lower id. margin is +inf with fewer than two candidates.
struct BestTwo {
  Index best = -1;
  double margin = kInf;
};

template <typename RowLike>
BestTwo best_two(const RowLike& scores, const std::vector<Index>& candidates) {
  BestTwo out;
  if (candidates.empty()) return out;
  double best = -kInf, second = -kInf;
  for (Index c : candidates) {
    const double v = scores(c);
    if (v > best || (v == best && (out.best < 0 || c < out.best))) {
      second = best;
      best = v;
      out.best = c;
    } else if (v > second) {
      second = v;
    }
  }
  if (candidates.size() >= 2) out.margin = best - second;
  return out;
}

std::vector<Index> free_ids(Index n, const AnchorSet& excluded, bool source_side) {
  std::vector<Index> ids;
  ids.reserve(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    const int id = static_cast<int>(i);
    if (source_side ? !excluded.has_source(id) : !excluded.has_target(id)) ids.push_back(i);
  }
  return ids;
}

}  // namespace

std::vector<std::pair<int, int>> select_confident_pairs(const Matrix& sim_fwd, const Matrix& sim_bwd,
                                                        const AnchorSet& excluded, double theta) {
  if (theta < 0.0) throw UsageError("theta must be non-negative");
  if (sim_fwd.rows() != sim_bwd.cols() || sim_fwd.cols() != sim_bwd.rows())
    throw UsageError("select_confident_pairs: matrices are not mutual transposed shapes");
  std::vector<std::pair<int, int>> out;
  if (theta == kInf) return out;  // no margin ever suffices

  const std::vector<Index> sources = free_ids(sim_fwd.rows(), excluded, true);
  const std::vector<Index> targets = free_ids(sim_fwd.cols(), excluded, false);
  if (sources.empty() || targets.empty()) return out;

  std::vector<BestTwo> fwd_best(static_cast<std::size_t>(sim_fwd.rows()));
  for (Index i : sources) fwd_best[static_cast<std::size_t>(i)] = best_two(sim_fwd.row(i), targets);
  std::vector<BestTwo> bwd_best(static_cast<std::size_t>(sim_fwd.cols()));
  for (Index j : targets) bwd_best[static_cast<std::size_t>(j)] = best_two(sim_bwd.row(j), sources);

  for (Index i : sources) {
    const BestTwo& f = fwd_best[static_cast<std::size_t>(i)];
    if (f.best < 0 || f.margin < theta) continue;
    const BestTwo& b = bwd_best[static_cast<std::size_t>(f.best)];
    if (b.best != i || b.margin < theta) continue;
    out.emplace_back(static_cast<int>(i), static_cast<int>(f.best));
  }
  return out;
}

std::vector<std::pair<int, int>> select_threshold_pairs(const Matrix& sim_fwd, const AnchorSet& excluded,
                                                        double tau) {
  const std::vector<Index> targets = free_ids(sim_fwd.cols(), excluded, false);
  std::vector<char> used(static_cast<std::size_t>(sim_fwd.cols()), 0);
  std::vector<std::pair<int, int>> out;
  for (Index i = 0; i < sim_fwd.rows(); ++i) {
    if (excluded.has_source(static_cast<int>(i))) continue;
    Index best = -1;
    double best_score = -kInf;
    for (Index j : targets) {
      if (used[static_cast<std::size_t>(j)]) continue;
      const double v = sim_fwd(i, j);
      if (v > best_score || (v == best_score && (best < 0 || j < best))) {
        best_score = v;
        best = j;
      }
    }
    if (best >= 0 && best_score >= tau) {
      used[static_cast<std::size_t>(best)] = 1;
      out.emplace_back(static_cast<int>(i), static_cast<int>(best));
    }
  }
  return out;
}

std::vector<std::pair<int, int>> select_greedy_matching(const Matrix& sim_fwd, const AnchorSet& excluded,
                                                        double tau) {
  struct Cand {
    double score;
    Index i, j;
  };
  std::vector<Cand> cands;
  for (Index i = 0; i < sim_fwd.rows(); ++i) {
    if (excluded.has_source(static_cast<int>(i))) continue;
    for (Index j = 0; j < sim_fwd.cols(); ++j) {
      if (excluded.has_target(static_cast<int>(j))) continue;
      if (sim_fwd(i, j) >= tau) cands.push_back({sim_fwd(i, j), i, j});
    }
  }
  std::sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.i != b.i) return a.i < b.i;
    return a.j < b.j;
  });
  std::vector<char> used_src(static_cast<std::size_t>(sim_fwd.rows()), 0);
  std::vector<char> used_tgt(static_cast<std::size_t>(sim_fwd.cols()), 0);
  std::vector<std::pair<int, int>> out;
  for (const Cand& c : cands) {
    if (used_src[static_cast<std::size_t>(c.i)] || used_tgt[static_cast<std::size_t>(c.j)]) continue;
    used_src[static_cast<std::size_t>(c.i)] = 1;
    used_tgt[static_cast<std::size_t>(c.j)] = 1;
    out.emplace_back(static_cast<int>(c.i), static_cast<int>(c.j));
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<std::pair<int, int>> select_pairs(const Matrix& sim_fwd, const Matrix& sim_bwd,
                                              const AnchorSet& excluded, const SelectionConfig& config) {
  switch (config.strategy) {
    case SelectionStrategy::Confident:
      return select_confident_pairs(sim_fwd, sim_bwd, excluded, config.theta);
    case SelectionStrategy::Threshold:
      return select_threshold_pairs(sim_fwd, excluded, config.tau);
    case SelectionStrategy::GreedyMatch:
      return select_greedy_matching(sim_fwd, excluded, config.tau);
  }
  throw UsageError("select_pairs: bad strategy");
}

std::string foreign_relation_label(const std::string& label) {
  if (label.starts_with(kForeignRelationPrefix)) return label.substr(std::string(kForeignRelationPrefix).size());
  return kForeignRelationPrefix + label;
}

TransplantResult transplant_triples(const KnowledgeGraph& source, const KnowledgeGraph& target,
                                    const AnchorSet& anchors) {
  TransplantResult res;
  std::set<std::tuple<int, std::string, int>> seen_tgt, seen_src;

  for (const Triple& t : source.triples()) {
    const int h2 = anchors.target_of(t.head);
    if (h2 < 0) continue;
    const int t2 = anchors.target_of(t.tail);
    if (t2 < 0) continue;
    const std::string label = foreign_relation_label(source.relations().label(t.relation));
    const int rel = target.relations().find(label);
    if (rel >= 0 && target.has_triple({h2, rel, t2})) continue;
    if (!seen_tgt.emplace(h2, label, t2).second) continue;
    res.to_target.push_back({h2, label, t2});
  }
  for (const Triple& t : target.triples()) {
    const int h1 = anchors.source_of(t.head);
    if (h1 < 0) continue;
    const int t1 = anchors.source_of(t.tail);
    if (t1 < 0) continue;
    const std::string label = foreign_relation_label(target.relations().label(t.relation));
    const int rel = source.relations().find(label);
    if (rel >= 0 && source.has_triple({h1, rel, t1})) continue;
    if (!seen_src.emplace(h1, label, t1).second) continue;
    res.to_source.push_back({h1, label, t1});
  }
  return res;
}

KnowledgeGraph augment_with_labeled(const KnowledgeGraph& kg, const std::vector<LabeledTriple>& triples) {
  if (triples.empty()) return kg;
  Vocabulary entities = kg.entities();
  Vocabulary relations = kg.relations();
  std::vector<Triple> all = kg.triples();
  all.reserve(all.size() + triples.size());
  for (const LabeledTriple& lt : triples) {
    if (lt.head < 0 || lt.head >= entities.size() || lt.tail < 0 || lt.tail >= entities.size())
      throw UsageError("augment_with_labeled: entity id out of range");
    all.push_back({lt.head, relations.intern(lt.relation), lt.tail});
  }
  return KnowledgeGraph(std::move(entities), std::move(relations), std::move(all));
}

LabeledHistogram labeled_degree_distribution(const KnowledgeGraph& kg, const DegreeBuckets& buckets) {
  const DegreeHistogram h = compute_degree_distribution(kg, buckets);
  LabeledHistogram out;
  out.counts = h.counts;
  out.zero_degree = h.zero_degree;
  for (std::size_t b = 0; b < h.counts.size(); ++b) out.labels.push_back(buckets.label(static_cast<int>(b)));
  return out;
}

AlignmentState run_iterative_alignment(const Dataset& dataset, const NameEmbeddingMatrix& names_source,
                                       const NameEmbeddingMatrix& names_target,
                                       const IterationConfig& config) {
  if (config.rounds < 0) throw UsageError("rounds must be non-negative");
  dataset.validate();
  const Index n1 = dataset.source.num_entities();
  const Index n2 = dataset.target.num_entities();
  if (names_source.rows.rows() != n1 || names_target.rows.rows() != n2)
    throw UsageError("run_iterative_alignment: name embedding row count mismatch");

  const std::vector<int> initial_degrees = dataset.source.degrees();

  std::unordered_map<int, int> gold;
  for (const auto& [s, t] : dataset.train.pairs()) gold.emplace(s, t);
  for (const auto& [s, t] : dataset.test.pairs()) gold.emplace(s, t);

  AlignmentState st;
  st.anchors = AnchorSet(dataset.train);
  KnowledgeGraph cur_src = dataset.source;
  KnowledgeGraph cur_tgt = dataset.target;

  const Matrix name_sim = pairwise_cosine(names_source.rows, names_target.rows, config.threads);

  for (int round = 0; round <= config.rounds; ++round) {
    RoundReport rep;
    rep.round = round;

    auto t0 = std::chrono::steady_clock::now();
    const auto take_stage = [&](const char* name) {
      const auto t1 = std::chrono::steady_clock::now();
      rep.stage_seconds.emplace_back(name, std::chrono::duration<double>(t1 - t0).count());
      t0 = t1;
    };

    if (round > 0) {
      const auto added = select_pairs(st.fwd, st.bwd, st.anchors, config.selection);
      rep.anchors_added = static_cast<long>(added.size());
      if (!added.empty()) {
        long correct = 0;
        for (const auto& [s, t] : added) {
          const auto it = gold.find(s);
          if (it != gold.end() && it->second == t) ++correct;
        }
        rep.selection_precision = static_cast<double>(correct) / static_cast<double>(added.size());
      }
      for (const auto& [s, t] : added) st.anchors.add(s, t);
      take_stage("select");

      const TransplantResult tr = transplant_triples(cur_src, cur_tgt, st.anchors);
      rep.transplanted_to_source = static_cast<long>(tr.to_source.size());
      rep.transplanted_to_target = static_cast<long>(tr.to_target.size());
      cur_src = augment_with_labeled(cur_src, tr.to_source);
      cur_tgt = augment_with_labeled(cur_tgt, tr.to_target);
      take_stage("transplant");
    }
    rep.anchors_total = static_cast<long>(st.anchors.size());
    rep.degrees_source = labeled_degree_distribution(cur_src, config.evaluation.buckets);
    rep.degrees_target = labeled_degree_distribution(cur_tgt, config.evaluation.buckets);

    StructTrainConfig scfg = config.structure;
    scfg.seed = derive_seed(config.seed, "round-struct", static_cast<std::uint64_t>(round));
    scfg.threads = config.threads;
    const Dataset current{cur_src, cur_tgt, dataset.train, dataset.test};
    StructTrainResult sres = train_baseline_structural(current, st.anchors.as_alignment(), scfg);
    st.structure = std::move(sres.embeddings);
    take_stage("structure");

    FusionTrainConfig fcfg = config.fusion;
    fcfg.seed = derive_seed(config.seed, "round-fusion", static_cast<std::uint64_t>(round));
    fcfg.threads = config.threads;
    const FusionInputs inputs{names_source.rows, names_target.rows, st.structure, cur_src.degrees(),
                              cur_tgt.degrees()};
    FusionTrainResult fres = train_fusion(inputs, st.anchors.as_alignment(), fcfg);
    st.fusion = std::move(fres.params);
    take_stage("fusion");

    const Matrix sim_s =
        pairwise_cosine(st.structure.values().topRows(n1), st.structure.values().bottomRows(n2), config.threads);
    auto [fwd, bwd] = fused_score_matrices(inputs, st.fusion, sim_s, name_sim, config.threads);
    st.fwd = std::move(fwd);
    st.bwd = std::move(bwd);
    take_stage("score");

    rep.evaluation = evaluate_alignment(st.fwd, name_sim, dataset.test, initial_degrees, names_source,
                                        names_target, config.evaluation);
    take_stage("evaluate");

    st.rounds.push_back(std::move(rep));
  }
  st.source = std::move(cur_src);
  st.target = std::move(cur_tgt);
  return st;
}

static nlohmann::ordered_json histogram_json(const LabeledHistogram& h) {
  nlohmann::ordered_json j;
  j["zero_degree"] = h.zero_degree;
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (std::size_t b = 0; b < h.counts.size(); ++b)
    rows.push_back({{"degree", h.labels[b]}, {"count", h.counts[b]}});
  j["buckets"] = rows;
  return j;
}

std::string rounds_to_json(const std::vector<RoundReport>& rounds) {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const RoundReport& r : rounds) {
    nlohmann::ordered_json j;
    j["round"] = r.round;
    j["anchors_total"] = r.anchors_total;
    j["anchors_added"] = r.anchors_added;
    if (r.selection_precision >= 0.0)
      j["selection_precision"] = r.selection_precision;
    else
      j["selection_precision"] = nullptr;
    j["transplanted_to_source"] = r.transplanted_to_source;
    j["transplanted_to_target"] = r.transplanted_to_target;
    j["degrees_source"] = histogram_json(r.degrees_source);
    j["degrees_target"] = histogram_json(r.degrees_target);
    j["evaluation"] = nlohmann::ordered_json::parse(report_to_json(r.evaluation));
    arr.push_back(j);
  }
  nlohmann::ordered_json top;
  top["rounds"] = arr;
  return top.dump(2) + "\n";
}

std::string timings_to_json(const std::vector<RoundReport>& rounds) {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const RoundReport& r : rounds) {
    nlohmann::ordered_json j;
    j["round"] = r.round;
    nlohmann::ordered_json stages;
    for (const auto& [name, seconds] : r.stage_seconds) stages[name] = seconds;
    j["seconds"] = stages;
    arr.push_back(j);
  }
  nlohmann::ordered_json top;
  top["rounds"] = arr;
  return top.dump(2) + "\n";
}

}  // namespace kgalign
