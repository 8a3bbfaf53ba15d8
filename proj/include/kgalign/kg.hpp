#pragma once

#include "kgalign/common.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace kgalign {

/// One relational fact. All ids resolve in the owning graph's vocabularies;
/// head == tail is legal.
struct Triple {
  int head = 0;
  int relation = 0;
  int tail = 0;
  friend bool operator==(const Triple&, const Triple&) = default;
  friend auto operator<=>(const Triple&, const Triple&) = default;
};

struct TripleHash {
  std::size_t operator()(const Triple& t) const {
    std::uint64_t h = static_cast<std::uint32_t>(t.head);
    h = h * 0x9e3779b97f4a7c15ull + static_cast<std::uint32_t>(t.relation);
    h = h * 0x9e3779b97f4a7c15ull + static_cast<std::uint32_t>(t.tail);
    return static_cast<std::size_t>(h ^ (h >> 32));
  }
};

/// Dense label -> id table preserving first-appearance order.
class Vocabulary {
 public:
  int intern(const std::string& label);
  /// -1 when absent.
  int find(const std::string& label) const;
  const std::string& label(int id) const { return labels_.at(static_cast<std::size_t>(id)); }
  int size() const { return static_cast<int>(labels_.size()); }
  bool contains(const std::string& label) const { return find(label) >= 0; }
  const std::vector<std::string>& labels() const { return labels_; }

 private:
  std::vector<std::string> labels_;
  std::unordered_map<std::string, int> index_;
};

/// Immutable after construction; augmentation returns a new value.
class KnowledgeGraph {
 public:
  KnowledgeGraph() = default;
  /// Deduplicates triples (keeping first occurrence order), validates that all
  /// ids resolve, and computes degrees. An entity in no triple has degree 0.
  KnowledgeGraph(Vocabulary entities, Vocabulary relations, std::vector<Triple> triples);

  const Vocabulary& entities() const { return entities_; }
  const Vocabulary& relations() const { return relations_; }
  const std::vector<Triple>& triples() const { return triples_; }
  int num_entities() const { return entities_.size(); }
  int num_relations() const { return relations_.size(); }

  /// Count of triple slots the entity fills; a head == tail triple counts 2.
  int degree(int entity) const { return degrees_.at(static_cast<std::size_t>(entity)); }
  const std::vector<int>& degrees() const { return degrees_; }
  double mean_degree() const;

  bool has_triple(const Triple& t) const { return triple_set_.count(t) > 0; }

 private:
  Vocabulary entities_;
  Vocabulary relations_;
  std::vector<Triple> triples_;
  std::unordered_map<Triple, char, TripleHash> triple_set_;
  std::vector<int> degrees_;
};

/// Parses a UTF-8 triple file: head<TAB>relation<TAB>tail per non-empty line.
/// Wrong field count raises DataError naming the line; an empty file is an error.
KnowledgeGraph load_knowledge_graph(const std::filesystem::path& path);

/// Writes triples one per line in stored order. Reloading reproduces the
/// graph up to id renumbering (ids follow file appearance order, so the round
/// trip is exact for graphs that came from a triple file); entities in no
/// triple have no representation in the format and are dropped.
void save_knowledge_graph(const KnowledgeGraph& kg, const std::filesystem::path& path);

/// Returns a new graph whose triple set is the deduplicated union. All ids in
/// new_triples must resolve in kg.
KnowledgeGraph augment_triples(const KnowledgeGraph& kg, const std::vector<Triple>& new_triples);

/// Contiguous degree ranges [lo, hi] that must partition [1, inf); degree-0
/// entities are counted separately.
struct DegreeBuckets {
  struct Range {
    int lo = 1;
    int hi = 1;  // inclusive; INT_MAX-terminated last range
  };
  std::vector<Range> ranges;

  /// {1}, {2}, {3}, {>=4} — the breakdown used throughout reporting.
  static DegreeBuckets standard();
  /// Builds from lower edges, e.g. {1,2,3,4} -> {1},{2},{3},{>=4}.
  static DegreeBuckets from_lower_edges(const std::vector<int>& edges);
  /// Raises UsageError unless ranges are sorted, non-overlapping and cover [1, inf).
  void validate() const;
  int bucket_of(int degree) const;  // -1 for degree 0
  std::string label(int bucket) const;
};

struct DegreeHistogram {
  std::vector<long> counts;  // one per bucket
  long zero_degree = 0;
};

DegreeHistogram compute_degree_distribution(const KnowledgeGraph& kg, const DegreeBuckets& buckets);

/// Ordered (source-id, target-id) pairs, injective in both directions.
class SeedAlignment {
 public:
  SeedAlignment() = default;
  explicit SeedAlignment(std::vector<std::pair<int, int>> pairs);

  const std::vector<std::pair<int, int>>& pairs() const { return pairs_; }
  std::size_t size() const { return pairs_.size(); }
  bool empty() const { return pairs_.empty(); }

 private:
  std::vector<std::pair<int, int>> pairs_;
};

/// Parses source-URI<TAB>target-URI lines and resolves them against the two
/// vocabularies. Unresolved URIs and repeated entities raise DataError.
SeedAlignment load_alignment(const std::filesystem::path& path, const KnowledgeGraph& source,
                             const KnowledgeGraph& target);

void save_alignment(const SeedAlignment& alignment, const KnowledgeGraph& source,
                    const KnowledgeGraph& target, const std::filesystem::path& path);

struct Dataset {
  KnowledgeGraph source;
  KnowledgeGraph target;
  SeedAlignment train;
  SeedAlignment test;

  /// train and test must not share any entity pair.
  void validate() const;
};

/// Seeded shuffle split of a gold alignment; fraction of pairs goes to train.
std::pair<SeedAlignment, SeedAlignment> split_alignment(const SeedAlignment& gold, double train_fraction,
                                                        std::uint64_t seed);

}  // namespace kgalign
