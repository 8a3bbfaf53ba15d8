#include "kgalign/name_encoder.hpp"

#include "kgalign/parallel.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace kgalign {

static int hex_value(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

std::string percent_decode(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '%' && i + 2 < s.size()) {
      const int hi = hex_value(s[i + 1]);
      const int lo = hex_value(s[i + 2]);
      if (hi >= 0 && lo >= 0) {
        out.push_back(static_cast<char>(hi * 16 + lo));
        i += 2;
        continue;
      }
    }
    out.push_back(s[i]);
  }
  return out;
}

std::vector<std::string> tokenize(const std::string& label) {
  std::size_t start = 0;
  const std::size_t cut = label.find_last_of("/#");
  if (cut != std::string::npos) start = cut + 1;
  std::string text = percent_decode(label.substr(start));

  std::vector<std::string> tokens;
  std::string cur;
  for (char ch : text) {
    const auto byte = static_cast<unsigned char>(ch);
    if (byte >= 0x80) {
      cur.push_back(ch);
      continue;
    }
    if (std::isalnum(byte)) {
      cur.push_back(static_cast<char>(std::tolower(byte)));
      continue;
    }
    if (!cur.empty()) {
      tokens.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) tokens.push_back(std::move(cur));
  return tokens;
}

PowerSpec PowerSpec::parse(const std::string& text) {
  PowerSpec spec;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::string t;
    for (char c : item)
      if (!std::isspace(static_cast<unsigned char>(c))) t.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    if (t.empty()) continue;
    if (t == "min" || t == "-inf") {
      spec.powers.push_back(kMin);
    } else if (t == "max" || t == "inf" || t == "+inf") {
      spec.powers.push_back(kMax);
    } else {
      try {
        std::size_t used = 0;
        const double v = std::stod(t, &used);
        if (used != t.size()) throw std::invalid_argument(t);
        spec.powers.push_back(v);
      } catch (const std::exception&) {
        throw UsageError("powers: cannot parse '" + item + "'");
      }
    }
  }
  if (spec.powers.empty()) throw UsageError("powers: empty list");
  return spec;
}

std::string PowerSpec::to_string() const {
  std::string out;
  for (double p : powers) {
    if (!out.empty()) out += ",";
    if (p == kMin) {
      out += "min";
    } else if (p == kMax) {
      out += "max";
    } else if (p == std::round(p)) {
      out += std::to_string(static_cast<long long>(p));
    } else {
      char buf[64];
      const auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), p);
      (void)ec;
      out.append(buf, end);
    }
  }
  return out;
}

WordEmbeddingSpace::WordEmbeddingSpace(Index dimension, std::vector<std::pair<std::string, Vector>> entries) {
  vectors_.resize(static_cast<Index>(entries.size()), dimension);
  Index row = 0;
  for (auto& [word, vec] : entries) {
    if (vec.size() != dimension)
      throw DataError("word vector '" + word + "' has dimension " + std::to_string(vec.size()) +
                      ", expected " + std::to_string(dimension));
    std::string key;
    for (char c : word) key.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    if (index_.emplace(std::move(key), row).second) {
      vectors_.row(row) = vec.transpose();
      ++row;
    }
  }
  vectors_.conservativeResize(row, dimension);
}

WordEmbeddingSpace WordEmbeddingSpace::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open word vectors: " + path.string());

  WordEmbeddingSpace space;
  std::string line;
  long line_no = 0;
  Index dim = -1;
  std::vector<double> buffer;
  std::vector<std::pair<std::string, std::vector<double>>> rows;

  auto fail = [&](const std::string& what) {
    throw DataError(path.string() + ":" + std::to_string(line_no) + ": " + what);
  };

  bool first = true;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string word;
    ss >> word;
    buffer.clear();
    double v;
    while (ss >> v) buffer.push_back(v);
    if (first) {
      first = false;
      // "count dim" header: the word parses as an integer and exactly one
      // numeric field follows.
      char* end = nullptr;
      const long count = std::strtol(word.c_str(), &end, 10);
      if (end && *end == '\0' && buffer.size() == 1 && count >= 0 &&
          buffer[0] == std::round(buffer[0]) && buffer[0] > 0) {
        dim = static_cast<Index>(buffer[0]);
        continue;
      }
    }
    if (buffer.empty()) fail("no vector components after word '" + word + "'");
    if (dim < 0) dim = static_cast<Index>(buffer.size());
    if (static_cast<Index>(buffer.size()) != dim)
      fail("expected " + std::to_string(dim) + " components, got " + std::to_string(buffer.size()));
    rows.emplace_back(word, buffer);
  }
  if (rows.empty()) throw DataError("word vector file is empty: " + path.string());

  std::vector<std::pair<std::string, Vector>> entries;
  entries.reserve(rows.size());
  for (auto& [word, vals] : rows)
    entries.emplace_back(word, Eigen::Map<const Vector>(vals.data(), static_cast<Index>(vals.size())));
  return WordEmbeddingSpace(dim, std::move(entries));
}

void WordEmbeddingSpace::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write word vectors: " + path.string());
  out << size() << " " << dimension() << "\n";
  std::vector<std::string> words(static_cast<std::size_t>(size()));
  for (const auto& [word, row] : index_) words[static_cast<std::size_t>(row)] = word;
  out.precision(9);
  for (Index r = 0; r < size(); ++r) {
    out << words[static_cast<std::size_t>(r)];
    for (Index j = 0; j < dimension(); ++j) out << " " << vectors_(r, j);
    out << "\n";
  }
  if (!out) throw DataError("failed writing word vectors: " + path.string());
}

std::optional<Index> WordEmbeddingSpace::find(const std::string& token) const {
  const auto it = index_.find(token);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

NameEncoding encode_name(const std::string& label, const std::vector<WordEmbeddingSpace>& spaces,
                         const PowerSpec& spec) {
  if (spaces.empty()) throw UsageError("encode_name: no word embedding spaces");
  const std::vector<std::string> tokens = tokenize(label);

  Index d_n = 0;
  for (const auto& s : spaces) d_n += s.dimension() * spec.count();

  NameEncoding enc;
  enc.values = Vector::Zero(d_n);
  enc.tokens = static_cast<int>(tokens.size());

  std::vector<char> known(tokens.size(), 0);
  Index offset = 0;
  bool any_space_hit = false;
  for (const auto& space : spaces) {
    const Index block = space.dimension() * spec.count();
    std::vector<Index> rows;
    for (std::size_t t = 0; t < tokens.size(); ++t) {
      if (auto r = space.find(tokens[t])) {
        rows.push_back(*r);
        known[t] = 1;
      }
    }
    if (!rows.empty()) {
      any_space_hit = true;
      Matrix hit(static_cast<Index>(rows.size()), space.dimension());
      for (std::size_t i = 0; i < rows.size(); ++i) hit.row(static_cast<Index>(i)) = space.vector(rows[i]);
      enc.values.segment(offset, block) = power_mean_concat(hit, spec);
    }
    offset += block;
  }
  enc.oov_tokens = static_cast<int>(std::count(known.begin(), known.end(), 0));
  enc.all_oov = !any_space_hit;
  return enc;
}

NameEmbeddingMatrix encode_all(const KnowledgeGraph& kg, const std::vector<WordEmbeddingSpace>& spaces,
                               const PowerSpec& spec, int threads) {
  if (spaces.empty()) throw UsageError("encode_all: no word embedding spaces");
  Index d_n = 0;
  for (const auto& s : spaces) d_n += s.dimension() * spec.count();

  const Index n = kg.num_entities();
  NameEmbeddingMatrix out;
  out.rows.resize(n, d_n);
  out.all_oov.assign(static_cast<std::size_t>(n), 0);
  out.token_counts.assign(static_cast<std::size_t>(n), 0);
  out.oov_counts.assign(static_cast<std::size_t>(n), 0);

  parallel_for(0, n, threads, [&](Index lo, Index hi) {
    for (Index e = lo; e < hi; ++e) {
      NameEncoding enc = encode_name(kg.entities().label(e), spaces, spec);
      out.rows.row(e) = enc.values.transpose();
      out.all_oov[static_cast<std::size_t>(e)] = enc.all_oov ? 1 : 0;
      out.token_counts[static_cast<std::size_t>(e)] = enc.tokens;
      out.oov_counts[static_cast<std::size_t>(e)] = enc.oov_tokens;
    }
  });
  for (char f : out.all_oov) out.oov_entities += f;
  return out;
}

}  // namespace kgalign
