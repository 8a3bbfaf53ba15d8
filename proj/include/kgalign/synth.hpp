#pragma once

#include "kgalign/config.hpp"
#include "kgalign/kg.hpp"
#include "kgalign/name_encoder.hpp"

#include <cstdint>
#include <filesystem>

namespace kgalign {

/// Knobs for the synthetic bilingual-KG generator. The two graphs are
/// isomorphic up to per-side edge dropout; entity names are shared strings
/// with controllable ambiguity. Name corruption is biased toward high-degree
/// entities (duplicate names land on the highest-degree pairs, token noise
/// probability grows with degree), while low-degree entities keep clean names
/// but sparse structure — the trade-off the fusion network is supposed to
/// learn.
struct SynthSpec {
  int entities = 1000;             // per side
  double triples_per_entity = 2.5; // total triples ~ entities * this
  double skew = 1.0;               // Zipf exponent for partner popularity
  int relations = 8;
  Index word_dim = 24;
  double dup_name_fraction = 0.0;  // fraction of entities sharing a duplicated name
  double name_noise = 0.0;         // max per-entity probability of a corrupted token (at high degree)
  double edge_dropout = 0.15;      // independent per side; never drops an entity's last triple
  std::uint64_t seed = 0;
};

struct SyntheticData {
  KnowledgeGraph source;
  KnowledgeGraph target;
  SeedAlignment gold;  // covers every entity
  WordEmbeddingSpace words;
};

SyntheticData generate_synthetic(const SynthSpec& spec);

/// Writes source.tsv, target.tsv, alignment.tsv, words.vec and a config.cfg
/// wired to them with desk-scale hyperparameters, into out_dir.
RunConfig write_synthetic(const SyntheticData& data, const SynthSpec& spec,
                          const std::filesystem::path& out_dir);

}  // namespace kgalign
