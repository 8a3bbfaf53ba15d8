#include "kgalign/kg.hpp"

#include <algorithm>
#include <climits>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <unordered_set>

namespace kgalign {

int Vocabulary::intern(const std::string& label) {
  auto it = index_.find(label);
  if (it != index_.end()) return it->second;
  const int id = static_cast<int>(labels_.size());
  labels_.push_back(label);
  index_.emplace(label, id);
  return id;
}

int Vocabulary::find(const std::string& label) const {
  auto it = index_.find(label);
  return it == index_.end() ? -1 : it->second;
}

KnowledgeGraph::KnowledgeGraph(Vocabulary entities, Vocabulary relations, std::vector<Triple> triples)
    : entities_(std::move(entities)), relations_(std::move(relations)) {
  triples_.reserve(triples.size());
  for (const Triple& t : triples) {
    if (t.head < 0 || t.head >= entities_.size() || t.tail < 0 || t.tail >= entities_.size() ||
        t.relation < 0 || t.relation >= relations_.size()) {
      std::ostringstream os;
      os << "triple (" << t.head << ", " << t.relation << ", " << t.tail
         << ") does not resolve in vocabularies of size " << entities_.size() << "/" << relations_.size();
      throw DataError(os.str());
    }
    if (triple_set_.emplace(t, 1).second) triples_.push_back(t);
  }
  degrees_.assign(static_cast<std::size_t>(entities_.size()), 0);
  for (const Triple& t : triples_) {
    ++degrees_[static_cast<std::size_t>(t.head)];
    ++degrees_[static_cast<std::size_t>(t.tail)];
  }
}

double KnowledgeGraph::mean_degree() const {
  if (degrees_.empty()) return 0.0;
  const long long total = std::accumulate(degrees_.begin(), degrees_.end(), 0ll);
  return static_cast<double>(total) / static_cast<double>(degrees_.size());
}

namespace {

// Strips a trailing '\r' so CRLF files parse like LF files.
void chomp(std::string& line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
}

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find('\t', start);
    if (pos == std::string::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return fields;
}

}  // namespace

KnowledgeGraph load_knowledge_graph(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open triple file: " + path.string());

  Vocabulary entities;
  Vocabulary relations;
  std::vector<Triple> triples;
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    chomp(line);
    if (line.empty()) continue;
    const auto fields = split_tabs(line);
    if (fields.size() != 3 || fields[0].empty() || fields[1].empty() || fields[2].empty()) {
      std::ostringstream os;
      os << path.string() << ":" << line_no << ": expected head<TAB>relation<TAB>tail, got " << fields.size()
         << " field(s)";
      throw DataError(os.str());
    }
    Triple t;
    t.head = entities.intern(fields[0]);
    t.relation = relations.intern(fields[1]);
    t.tail = entities.intern(fields[2]);
    triples.push_back(t);
  }
  if (triples.empty()) throw DataError("triple file is empty: " + path.string());
  return KnowledgeGraph(std::move(entities), std::move(relations), std::move(triples));
}

void save_knowledge_graph(const KnowledgeGraph& kg, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write triple file: " + path.string());
  for (const Triple& t : kg.triples()) {
    out << kg.entities().label(t.head) << '\t' << kg.relations().label(t.relation) << '\t'
        << kg.entities().label(t.tail) << '\n';
  }
}

KnowledgeGraph augment_triples(const KnowledgeGraph& kg, const std::vector<Triple>& new_triples) {
  for (const Triple& t : new_triples) {
    if (t.head < 0 || t.head >= kg.num_entities() || t.tail < 0 || t.tail >= kg.num_entities() ||
        t.relation < 0 || t.relation >= kg.num_relations()) {
      std::ostringstream os;
      os << "augment: triple (" << t.head << ", " << t.relation << ", " << t.tail << ") does not resolve";
      throw DataError(os.str());
    }
  }
  std::vector<Triple> merged = kg.triples();
  merged.insert(merged.end(), new_triples.begin(), new_triples.end());
  return KnowledgeGraph(kg.entities(), kg.relations(), std::move(merged));
}

DegreeBuckets DegreeBuckets::standard() { return from_lower_edges({1, 2, 3, 4}); }

DegreeBuckets DegreeBuckets::from_lower_edges(const std::vector<int>& edges) {
  DegreeBuckets b;
  for (std::size_t i = 0; i < edges.size(); ++i) {
    Range r;
    r.lo = edges[i];
    r.hi = i + 1 < edges.size() ? edges[i + 1] - 1 : INT_MAX;
    b.ranges.push_back(r);
  }
  b.validate();
  return b;
}

void DegreeBuckets::validate() const {
  if (ranges.empty()) throw UsageError("degree buckets: empty bucket list");
  if (ranges.front().lo != 1) throw UsageError("degree buckets must start at degree 1");
  for (std::size_t i = 0; i < ranges.size(); ++i) {
    if (ranges[i].hi < ranges[i].lo) throw UsageError("degree buckets: inverted range");
    if (i + 1 < ranges.size()) {
      if (ranges[i + 1].lo <= ranges[i].hi) throw UsageError("degree buckets overlap");
      if (ranges[i + 1].lo != ranges[i].hi + 1) throw UsageError("degree buckets leave a gap");
    }
  }
  if (ranges.back().hi != INT_MAX) throw UsageError("degree buckets must cover [1, inf)");
}

int DegreeBuckets::bucket_of(int degree) const {
  if (degree <= 0) return -1;
  for (std::size_t i = 0; i < ranges.size(); ++i) {
    if (degree >= ranges[i].lo && degree <= ranges[i].hi) return static_cast<int>(i);
  }
  return -1;
}

std::string DegreeBuckets::label(int bucket) const {
  const Range& r = ranges.at(static_cast<std::size_t>(bucket));
  if (r.hi == INT_MAX) return ">=" + std::to_string(r.lo);
  if (r.lo == r.hi) return std::to_string(r.lo);
  return std::to_string(r.lo) + "-" + std::to_string(r.hi);
}

DegreeHistogram compute_degree_distribution(const KnowledgeGraph& kg, const DegreeBuckets& buckets) {
  buckets.validate();
  DegreeHistogram hist;
  hist.counts.assign(buckets.ranges.size(), 0);
  for (int e = 0; e < kg.num_entities(); ++e) {
    const int d = kg.degree(e);
    const int b = buckets.bucket_of(d);
    if (b < 0)
      ++hist.zero_degree;
    else
      ++hist.counts[static_cast<std::size_t>(b)];
  }
  return hist;
}

SeedAlignment::SeedAlignment(std::vector<std::pair<int, int>> pairs) : pairs_(std::move(pairs)) {
  std::unordered_set<int> sources, targets;
  for (const auto& [s, t] : pairs_) {
    if (!sources.insert(s).second)
      throw DataError("alignment is not injective: source id " + std::to_string(s) + " repeats");
    if (!targets.insert(t).second)
      throw DataError("alignment is not injective: target id " + std::to_string(t) + " repeats");
  }
}

SeedAlignment load_alignment(const std::filesystem::path& path, const KnowledgeGraph& source,
                             const KnowledgeGraph& target) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open alignment file: " + path.string());
  std::vector<std::pair<int, int>> pairs;
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    chomp(line);
    if (line.empty()) continue;
    const auto fields = split_tabs(line);
    if (fields.size() != 2 || fields[0].empty() || fields[1].empty()) {
      std::ostringstream os;
      os << path.string() << ":" << line_no << ": expected source-URI<TAB>target-URI";
      throw DataError(os.str());
    }
    const int s = source.entities().find(fields[0]);
    if (s < 0) throw DataError(path.string() + ":" + std::to_string(line_no) + ": unknown source entity " + fields[0]);
    const int t = target.entities().find(fields[1]);
    if (t < 0) throw DataError(path.string() + ":" + std::to_string(line_no) + ": unknown target entity " + fields[1]);
    pairs.emplace_back(s, t);
  }
  return SeedAlignment(std::move(pairs));
}

void save_alignment(const SeedAlignment& alignment, const KnowledgeGraph& source, const KnowledgeGraph& target,
                    const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write alignment file: " + path.string());
  for (const auto& [s, t] : alignment.pairs()) {
    out << source.entities().label(s) << '\t' << target.entities().label(t) << '\n';
  }
}

void Dataset::validate() const {
  std::unordered_set<int> train_sources, train_targets;
  for (const auto& [s, t] : train.pairs()) {
    train_sources.insert(s);
    train_targets.insert(t);
  }
  for (const auto& [s, t] : test.pairs()) {
    if (train_sources.count(s) || train_targets.count(t))
      throw DataError("train and test alignments overlap on entity pair (" + std::to_string(s) + ", " +
                      std::to_string(t) + ")");
  }
}

std::pair<SeedAlignment, SeedAlignment> split_alignment(const SeedAlignment& gold, double train_fraction,
                                                        std::uint64_t seed) {
  if (train_fraction < 0.0 || train_fraction > 1.0) throw UsageError("train fraction must be in [0, 1]");
  std::vector<std::pair<int, int>> shuffled = gold.pairs();
  std::mt19937_64 rng(seed);
  std::shuffle(shuffled.begin(), shuffled.end(), rng);
  const std::size_t n_train =
      static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(shuffled.size())));
  std::vector<std::pair<int, int>> train(shuffled.begin(), shuffled.begin() + static_cast<long>(n_train));
  std::vector<std::pair<int, int>> test(shuffled.begin() + static_cast<long>(n_train), shuffled.end());
  return {SeedAlignment(std::move(train)), SeedAlignment(std::move(test))};
}

}  // namespace kgalign
