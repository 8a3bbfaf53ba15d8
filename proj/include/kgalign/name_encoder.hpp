#pragma once

#include "kgalign/common.hpp"
#include "kgalign/kg.hpp"
#include "kgalign/power_mean.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace kgalign {

/// Deterministic label tokenization: keep the fragment after the last '/' or
/// '#', percent-decode, map '_' to space, ASCII-lowercase, split on whitespace
/// and ASCII punctuation, drop empty tokens. Bytes >= 0x80 pass through, so
/// UTF-8 words survive intact.
std::vector<std::string> tokenize(const std::string& label);

std::string percent_decode(const std::string& s);

/// One pretrained word-vector table. Keys are lowercased on load to match the
/// tokenizer; on duplicate keys the first line wins.
class WordEmbeddingSpace {
 public:
  WordEmbeddingSpace() = default;
  WordEmbeddingSpace(Index dimension, std::vector<std::pair<std::string, Vector>> entries);

  /// Text format: optional first line "count dim", then word followed by dim
  /// whitespace-separated decimals per line.
  static WordEmbeddingSpace load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  Index dimension() const { return vectors_.cols(); }
  Index size() const { return vectors_.rows(); }
  /// Row view for a token already normalized by tokenize(); nullopt when OOV.
  std::optional<Index> find(const std::string& token) const;
  Matrix::ConstRowXpr vector(Index row) const { return vectors_.row(row); }

 private:
  Matrix vectors_;
  std::unordered_map<std::string, Index> index_;
};

struct NameEncoding {
  Vector values;       // length d_n
  bool all_oov = false;
  int tokens = 0;
  int oov_tokens = 0;  // tokens missing from every space
};

/// Concatenated power means: for each space, K power means of the in-vocabulary
/// token vectors are concatenated (powers inner), then spaces are concatenated
/// (spaces outer). Labels whose tokens are all OOV in every space produce a
/// zero vector with the all_oov flag set.
NameEncoding encode_name(const std::string& label, const std::vector<WordEmbeddingSpace>& spaces,
                         const PowerSpec& spec);

struct NameEmbeddingMatrix {
  Matrix rows;                    // n x d_n, entity-id order
  std::vector<char> all_oov;      // per entity
  std::vector<int> token_counts;
  std::vector<int> oov_counts;
  long oov_entities = 0;

  Index dimension() const { return rows.cols(); }
};

NameEmbeddingMatrix encode_all(const KnowledgeGraph& kg, const std::vector<WordEmbeddingSpace>& spaces,
                               const PowerSpec& spec, int threads = 1);

}  // namespace kgalign
