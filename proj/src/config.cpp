#include "kgalign/config.hpp"

#include "kgalign/common.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

namespace kgalign {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw UsageError("config key '" + key + "': cannot parse number '" + v + "'");
  }
}

long long parse_ll(const std::string& key, const std::string& v) {
  long long out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || p != v.data() + v.size())
    throw UsageError("config key '" + key + "': cannot parse integer '" + v + "'");
  return out;
}

std::uint64_t parse_u64(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || p != v.data() + v.size())
    throw UsageError("config key '" + key + "': cannot parse integer '" + v + "'");
  return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true") return true;
  if (v == "false") return false;
  throw UsageError("config key '" + key + "': expected true or false, got '" + v + "'");
}

std::vector<std::string> parse_list(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::string format_double(double d) {
  char buf[64];
  const auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), d);
  (void)ec;
  return std::string(buf, p);
}

std::string join(const std::vector<std::string>& items) {
  std::string out;
  for (const auto& s : items) {
    if (!out.empty()) out += ",";
    out += s;
  }
  return out;
}

}  // namespace

RunConfig parse_run_config_text(const std::string& text) {
  RunConfig c;
  std::istringstream in(text);
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string stripped = trim(line);
    if (stripped.empty() || stripped[0] == '#') continue;
    const std::size_t eq = stripped.find('=');
    if (eq == std::string::npos)
      throw UsageError("config line " + std::to_string(line_no) + ": expected key = value");
    const std::string key = trim(stripped.substr(0, eq));
    const std::string value = trim(stripped.substr(eq + 1));

    if (key == "source_triples") c.source_triples = value;
    else if (key == "target_triples") c.target_triples = value;
    else if (key == "alignment") c.alignment = value;
    else if (key == "word_vectors") c.word_vectors = parse_list(value);
    else if (key == "structural_embeddings") c.structural_embeddings = value;
    else if (key == "out_dir") c.out_dir = value;
    else if (key == "d_s") c.d_s = static_cast<Index>(parse_ll(key, value));
    else if (key == "d_g") c.d_g = static_cast<Index>(parse_ll(key, value));
    else if (key == "d_max") c.d_max = static_cast<int>(parse_ll(key, value));
    else if (key == "gamma") c.gamma = parse_double(key, value);
    else if (key == "powers") c.powers = PowerSpec::parse(value);
    else if (key == "lr") c.lr = parse_double(key, value);
    else if (key == "batch") c.batch = static_cast<int>(parse_ll(key, value));
    else if (key == "fusion_max_epochs") c.fusion_max_epochs = static_cast<int>(parse_ll(key, value));
    else if (key == "fusion_patience") c.fusion_patience = static_cast<int>(parse_ll(key, value));
    else if (key == "fusion_val_fraction") c.fusion_val_fraction = parse_double(key, value);
    else if (key == "struct_epochs") c.struct_epochs = static_cast<int>(parse_ll(key, value));
    else if (key == "struct_lr") c.struct_lr = parse_double(key, value);
    else if (key == "struct_margin") c.struct_margin = parse_double(key, value);
    else if (key == "struct_hogwild") c.struct_hogwild = parse_bool(key, value);
    else if (key == "theta") c.theta = parse_double(key, value);
    else if (key == "zeta") c.zeta = static_cast<int>(parse_ll(key, value));
    else if (key == "selection") c.selection = value;
    else if (key == "tau") c.tau = parse_double(key, value);
    else if (key == "train_fraction") c.train_fraction = parse_double(key, value);
    else if (key == "candidate_pool") c.candidate_pool = value;
    else if (key == "seed") c.seed = parse_u64(key, value);
    else if (key == "threads") c.threads = static_cast<int>(parse_ll(key, value));
    else throw UsageError("config line " + std::to_string(line_no) + ": unknown key '" + key + "'");
  }
  return c;
}

RunConfig parse_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open config: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_run_config_text(buf.str());
}

std::string serialize_run_config(const RunConfig& c) {
  std::ostringstream out;
  out << "source_triples = " << c.source_triples << "\n";
  out << "target_triples = " << c.target_triples << "\n";
  out << "alignment = " << c.alignment << "\n";
  out << "word_vectors = " << join(c.word_vectors) << "\n";
  out << "structural_embeddings = " << c.structural_embeddings << "\n";
  out << "out_dir = " << c.out_dir << "\n";
  out << "d_s = " << c.d_s << "\n";
  out << "d_g = " << c.d_g << "\n";
  out << "d_max = " << c.d_max << "\n";
  out << "gamma = " << format_double(c.gamma) << "\n";
  out << "powers = " << c.powers.to_string() << "\n";
  out << "lr = " << format_double(c.lr) << "\n";
  out << "batch = " << c.batch << "\n";
  out << "fusion_max_epochs = " << c.fusion_max_epochs << "\n";
  out << "fusion_patience = " << c.fusion_patience << "\n";
  out << "fusion_val_fraction = " << format_double(c.fusion_val_fraction) << "\n";
  out << "struct_epochs = " << c.struct_epochs << "\n";
  out << "struct_lr = " << format_double(c.struct_lr) << "\n";
  out << "struct_margin = " << format_double(c.struct_margin) << "\n";
  out << "struct_hogwild = " << (c.struct_hogwild ? "true" : "false") << "\n";
  out << "theta = " << format_double(c.theta) << "\n";
  out << "zeta = " << c.zeta << "\n";
  out << "selection = " << c.selection << "\n";
  out << "tau = " << format_double(c.tau) << "\n";
  out << "train_fraction = " << format_double(c.train_fraction) << "\n";
  out << "candidate_pool = " << c.candidate_pool << "\n";
  out << "seed = " << c.seed << "\n";
  out << "threads = " << c.threads << "\n";
  return out.str();
}

void save_run_config(const RunConfig& config, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write config: " + path.string());
  out << serialize_run_config(config);
  if (!out) throw DataError("failed writing config: " + path.string());
}

}  // namespace kgalign
