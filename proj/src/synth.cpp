#include "kgalign/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>
#include <unordered_map>
#include <unordered_set>

namespace kgalign {

namespace {

std::string random_word(std::mt19937_64& rng, std::unordered_set<std::string>& taken) {
  std::uniform_int_distribution<int> len(4, 8);
  std::uniform_int_distribution<int> letter(0, 25);
  for (;;) {
    std::string w;
    const int l = len(rng);
    for (int k = 0; k < l; ++k) w.push_back(static_cast<char>('a' + letter(rng)));
    if (taken.insert(w).second) return w;
  }
}

/// Inverse-CDF Zipf sampler; self-contained so draws are identical on every
/// platform.
class ZipfSampler {
 public:
  ZipfSampler(int n, double skew) : cum_(static_cast<std::size_t>(n)) {
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
      total += 1.0 / std::pow(static_cast<double>(i + 1), skew);
      cum_[static_cast<std::size_t>(i)] = total;
    }
  }
  int operator()(std::mt19937_64& rng) const {
    std::uniform_real_distribution<double> u(0.0, cum_.back());
    const auto it = std::upper_bound(cum_.begin(), cum_.end(), u(rng));
    return static_cast<int>(std::min(cum_.size() - 1, static_cast<std::size_t>(it - cum_.begin())));
  }

 private:
  std::vector<double> cum_;
};

std::string make_uri(const std::string& base, const std::vector<std::string>& tokens, int suffix) {
  std::string uri = base;
  for (std::size_t k = 0; k < tokens.size(); ++k) {
    if (k > 0) uri += "_";
    uri += tokens[k];
  }
  uri.append(static_cast<std::size_t>(suffix), '_');
  return uri;
}

}  // namespace

SyntheticData generate_synthetic(const SynthSpec& spec) {
  if (spec.entities < 2) throw UsageError("synth: need at least 2 entities");
  if (spec.relations < 1) throw UsageError("synth: need at least 1 relation");
  if (spec.word_dim < 1) throw UsageError("synth: word_dim must be positive");
  if (spec.triples_per_entity < 1.0) throw UsageError("synth: triples_per_entity must be >= 1");
  if (spec.dup_name_fraction < 0.0 || spec.dup_name_fraction > 1.0 || spec.name_noise < 0.0 ||
      spec.name_noise > 1.0 || spec.edge_dropout < 0.0 || spec.edge_dropout >= 1.0)
    throw UsageError("synth: fractions out of range");

  const int n = spec.entities;

  // Vocabulary: one identifying word per entity plus a shared pool.
  std::mt19937_64 word_rng(derive_seed(spec.seed, "synth-words"));
  std::unordered_set<std::string> taken;
  std::vector<std::string> id_words(static_cast<std::size_t>(n));
  for (auto& w : id_words) w = random_word(word_rng, taken);
  const int n_common = std::max(8, n / 10);
  std::vector<std::string> common_words(static_cast<std::size_t>(n_common));
  for (auto& w : common_words) w = random_word(word_rng, taken);

  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<std::pair<std::string, Vector>> entries;
  const auto fresh_vector = [&](std::mt19937_64& rng) {
    Vector v(spec.word_dim);
    for (Index k = 0; k < spec.word_dim; ++k) v[k] = gauss(rng);
    v /= v.norm();
    return v;
  };
  std::unordered_map<std::string, Vector> vec_of;
  for (const auto& w : id_words) vec_of.emplace(w, fresh_vector(word_rng));
  for (const auto& w : common_words) vec_of.emplace(w, fresh_vector(word_rng));

  // Triples: one guaranteed edge per entity, extras by Zipf popularity.
  std::mt19937_64 graph_rng(derive_seed(spec.seed, "synth-graph"));
  const ZipfSampler zipf(n, spec.skew);
  std::uniform_int_distribution<int> rel_pick(0, spec.relations - 1);

  struct Edge {
    int head, rel, tail;
    bool guaranteed;
  };
  std::vector<Edge> edges;
  std::set<std::tuple<int, int, int>> edge_set;
  for (int i = 0; i < n; ++i) {
    int partner = zipf(graph_rng);
    while (partner == i) partner = zipf(graph_rng);
    const int rel = rel_pick(graph_rng);
    if (edge_set.emplace(i, rel, partner).second) edges.push_back({i, rel, partner, true});
  }
  const long target_total = std::llround(spec.triples_per_entity * static_cast<double>(n));
  long attempts = 0;
  while (static_cast<long>(edges.size()) < target_total && attempts < target_total * 50) {
    ++attempts;
    const int h = zipf(graph_rng);
    int t = zipf(graph_rng);
    if (t == h) continue;
    const int rel = rel_pick(graph_rng);
    if (edge_set.emplace(h, rel, t).second) edges.push_back({h, rel, t, false});
  }

  // Independent per-side dropout of the non-guaranteed edges.
  std::mt19937_64 drop_rng(derive_seed(spec.seed, "synth-dropout"));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<char> keep_src(edges.size(), 1), keep_tgt(edges.size(), 1);
  for (std::size_t e = 0; e < edges.size(); ++e) {
    if (edges[e].guaranteed) continue;
    keep_src[e] = unit(drop_rng) >= spec.edge_dropout ? 1 : 0;
    keep_tgt[e] = unit(drop_rng) >= spec.edge_dropout ? 1 : 0;
  }

  std::vector<int> deg_src(static_cast<std::size_t>(n), 0);
  for (std::size_t e = 0; e < edges.size(); ++e) {
    if (!keep_src[e]) continue;
    ++deg_src[static_cast<std::size_t>(edges[e].head)];
    ++deg_src[static_cast<std::size_t>(edges[e].tail)];
  }

  // Names: [id-word] or [id-word, common-word]; duplicate names go to the
  // highest-degree entities, pairwise.
  std::mt19937_64 name_rng(derive_seed(spec.seed, "synth-names"));
  std::vector<std::vector<std::string>> tokens_src(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    auto& toks = tokens_src[static_cast<std::size_t>(i)];
    toks.push_back(id_words[static_cast<std::size_t>(i)]);
    if (unit(name_rng) < 0.5)
      toks.push_back(common_words[static_cast<std::size_t>(
          std::uniform_int_distribution<int>(0, n_common - 1)(name_rng))]);
  }
  const int dup_pairs = static_cast<int>(std::floor(spec.dup_name_fraction * n / 2.0));
  if (dup_pairs > 0) {
    std::vector<int> by_degree(static_cast<std::size_t>(n));
    std::iota(by_degree.begin(), by_degree.end(), 0);
    std::stable_sort(by_degree.begin(), by_degree.end(), [&](int x, int y) {
      return deg_src[static_cast<std::size_t>(x)] > deg_src[static_cast<std::size_t>(y)];
    });
    for (int p = 0; p < dup_pairs; ++p) {
      const int a = by_degree[static_cast<std::size_t>(2 * p)];
      const int b = by_degree[static_cast<std::size_t>(2 * p + 1)];
      tokens_src[static_cast<std::size_t>(b)] = tokens_src[static_cast<std::size_t>(a)];
    }
  }

  // Target copies of the names; token noise probability scales with degree,
  // and the variant word's vector is a jittered copy of the original's.
  std::mt19937_64 noise_rng(derive_seed(spec.seed, "synth-noise"));
  std::vector<std::vector<std::string>> tokens_tgt = tokens_src;
  constexpr int kNoiseDegreeCap = 8;
  constexpr double kNoiseJitter = 0.35;
  long variant = 0;
  for (int i = 0; i < n; ++i) {
    const int d = std::min(deg_src[static_cast<std::size_t>(i)], kNoiseDegreeCap);
    const double p = spec.name_noise * static_cast<double>(d) / static_cast<double>(kNoiseDegreeCap);
    if (unit(noise_rng) >= p) continue;
    auto& toks = tokens_tgt[static_cast<std::size_t>(i)];
    const auto slot = static_cast<std::size_t>(
        std::uniform_int_distribution<int>(0, static_cast<int>(toks.size()) - 1)(noise_rng));
    const std::string original = toks[slot];
    std::string word;
    do {
      word = original + "v" + std::to_string(variant++);
    } while (!taken.insert(word).second);
    Vector v = vec_of.at(original);
    for (Index k = 0; k < spec.word_dim; ++k) v[k] += kNoiseJitter * gauss(noise_rng);
    v /= v.norm();
    vec_of.emplace(word, v);
    toks[slot] = word;
  }

  // Permutation hides the id correspondence; gold alignment records it.
  std::mt19937_64 perm_rng(derive_seed(spec.seed, "synth-perm"));
  std::vector<int> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), perm_rng);
  std::vector<int> inv(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) inv[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])] = i;

  // Assemble vocabularies and graphs. Entities sharing a name string get
  // trailing underscores to keep URIs unique; the tokenizer drops them.
  const auto build_vocab = [](const std::string& base, const std::vector<std::vector<std::string>>& toks,
                              const std::vector<int>& order) {
    Vocabulary v;
    std::unordered_map<std::string, int> seen;
    for (int id : order) {
      const std::string flat = make_uri(base, toks[static_cast<std::size_t>(id)], 0);
      const int suffix = seen[flat]++;
      v.intern(make_uri(base, toks[static_cast<std::size_t>(id)], suffix));
    }
    return v;
  };
  std::vector<int> src_order(static_cast<std::size_t>(n));
  std::iota(src_order.begin(), src_order.end(), 0);
  const Vocabulary src_entities = build_vocab("http://a.example/resource/", tokens_src, src_order);
  const Vocabulary tgt_entities = build_vocab("http://b.example/resource/", tokens_tgt, inv);

  Vocabulary src_relations, tgt_relations;
  for (int r = 0; r < spec.relations; ++r) {
    src_relations.intern("http://a.example/property/r" + std::to_string(r));
    tgt_relations.intern("http://b.example/property/r" + std::to_string(r));
  }

  std::vector<Triple> src_triples, tgt_triples;
  for (std::size_t e = 0; e < edges.size(); ++e) {
    const Edge& ed = edges[e];
    if (keep_src[e]) src_triples.push_back({ed.head, ed.rel, ed.tail});
    if (keep_tgt[e])
      tgt_triples.push_back({perm[static_cast<std::size_t>(ed.head)], ed.rel,
                             perm[static_cast<std::size_t>(ed.tail)]});
  }

  SyntheticData data;
  data.source = KnowledgeGraph(src_entities, src_relations, std::move(src_triples));
  data.target = KnowledgeGraph(tgt_entities, tgt_relations, std::move(tgt_triples));

  std::vector<std::pair<int, int>> gold_pairs;
  gold_pairs.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) gold_pairs.emplace_back(i, perm[static_cast<std::size_t>(i)]);
  data.gold = SeedAlignment(std::move(gold_pairs));

  entries.reserve(vec_of.size());
  std::vector<std::string> sorted_words;
  for (const auto& [w, v] : vec_of) sorted_words.push_back(w);
  std::sort(sorted_words.begin(), sorted_words.end());
  for (const auto& w : sorted_words) entries.emplace_back(w, vec_of.at(w));
  data.words = WordEmbeddingSpace(spec.word_dim, std::move(entries));
  return data;
}

RunConfig write_synthetic(const SyntheticData& data, const SynthSpec& spec,
                          const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  save_knowledge_graph(data.source, out_dir / "source.tsv");
  save_knowledge_graph(data.target, out_dir / "target.tsv");
  save_alignment(data.gold, data.source, data.target, out_dir / "alignment.tsv");
  data.words.save(out_dir / "words.vec");

  RunConfig cfg;
  cfg.source_triples = (out_dir / "source.tsv").string();
  cfg.target_triples = (out_dir / "target.tsv").string();
  cfg.alignment = (out_dir / "alignment.tsv").string();
  cfg.word_vectors = {(out_dir / "words.vec").string()};
  cfg.out_dir = (out_dir / "run").string();
  // Desk-scale dimensions; the library defaults suit full-size corpora.
  cfg.d_s = 64;
  cfg.d_g = 32;
  cfg.d_max = 20;
  cfg.struct_epochs = 30;
  cfg.fusion_max_epochs = 60;
  cfg.seed = spec.seed;
  save_run_config(cfg, out_dir / "config.cfg");
  return cfg;
}

}  // namespace kgalign
