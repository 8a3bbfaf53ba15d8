#include <doctest.h>

#include "kgalign/config.hpp"
#include "kgalign/evaluation.hpp"
#include "kgalign/pipeline.hpp"
#include "kgalign/similarity.hpp"
#include "kgalign/synth.hpp"

#include "test_util.hpp"

#include <algorithm>
#include <filesystem>
#include <set>
#include <tuple>

using namespace kgalign;
namespace fs = std::filesystem;

TEST_CASE("config text parses every key kind and round-trips exactly") {
  const std::string text =
      "# a comment\n"
      "\n"
      "source_triples = /data/s.tsv\n"
      "word_vectors = a.vec, b.vec\n"
      "d_s = 128\n"
      "gamma = 0.75\n"
      "powers = 1,2,min\n"
      "struct_hogwild = true\n"
      "zeta = 5\n"
      "seed = 42\n"
      "  threads=3  \n";
  const RunConfig c = parse_run_config_text(text);
  CHECK(c.source_triples == "/data/s.tsv");
  CHECK(c.word_vectors == std::vector<std::string>{"a.vec", "b.vec"});
  CHECK(c.d_s == 128);
  CHECK(c.gamma == doctest::Approx(0.75));
  CHECK(c.powers.to_string() == "1,2,min");
  CHECK(c.struct_hogwild);
  CHECK(c.zeta == 5);
  CHECK(c.seed == 42);
  CHECK(c.threads == 3);
  // Untouched keys keep their defaults.
  CHECK(c.d_g == 300);
  CHECK(c.selection == "confident");

  const RunConfig back = parse_run_config_text(serialize_run_config(c));
  CHECK(back == c);
  // And the default config round-trips too.
  CHECK(parse_run_config_text(serialize_run_config(RunConfig{})) == RunConfig{});
}

TEST_CASE("config parse errors carry line numbers and key names") {
  CHECK_THROWS_WITH_AS(parse_run_config_text("seed = 1\nnot a pair\n"),
                       doctest::Contains("line 2"), UsageError);
  CHECK_THROWS_WITH_AS(parse_run_config_text("# ok\n\nbogus_key = 3\n"),
                       doctest::Contains("bogus_key"), UsageError);
  CHECK_THROWS_WITH_AS(parse_run_config_text("gamma = warm\n"),
                       doctest::Contains("gamma"), UsageError);
  CHECK_THROWS_WITH_AS(parse_run_config_text("zeta = 2.5\n"),
                       doctest::Contains("integer"), UsageError);
  CHECK_THROWS_WITH_AS(parse_run_config_text("struct_hogwild = maybe\n"),
                       doctest::Contains("true or false"), UsageError);
  CHECK_THROWS_AS(parse_run_config(fs::path("/nonexistent/config.cfg")), DataError);
}

TEST_CASE("config file save and load round-trips") {
  const fs::path dir = test_util::temp_dir("config_rt");
  RunConfig c;
  c.source_triples = "src.tsv";
  c.word_vectors = {"w1.vec"};
  c.theta = 0.125;
  c.powers = PowerSpec::parse("0.5,1,max");
  save_run_config(c, dir / "c.cfg");
  CHECK(parse_run_config(dir / "c.cfg") == c);
}

TEST_CASE("synthetic generation is deterministic and structurally sound") {
  SynthSpec spec;
  spec.entities = 90;
  spec.triples_per_entity = 2.3;
  spec.skew = 1.1;
  spec.dup_name_fraction = 0.1;
  spec.name_noise = 0.2;
  spec.seed = 77;

  const SyntheticData a = generate_synthetic(spec);
  const SyntheticData b = generate_synthetic(spec);
  CHECK(a.source.triples() == b.source.triples());
  CHECK(a.target.triples() == b.target.triples());
  CHECK(a.source.entities().labels() == b.source.entities().labels());
  CHECK(a.target.entities().labels() == b.target.entities().labels());
  CHECK(a.gold.pairs() == b.gold.pairs());
  const fs::path dir = test_util::temp_dir("synth_det");
  a.words.save(dir / "a.vec");
  b.words.save(dir / "b.vec");
  CHECK(test_util::read_file(dir / "a.vec") == test_util::read_file(dir / "b.vec"));

  CHECK(a.source.num_entities() == 90);
  CHECK(a.target.num_entities() == 90);
  // Gold covers every entity on both sides, injectively.
  CHECK(a.gold.size() == 90);
  std::set<int> sources, targets;
  for (const auto& [s, t] : a.gold.pairs()) {
    CHECK(s >= 0);
    CHECK(s < 90);
    CHECK(t >= 0);
    CHECK(t < 90);
    sources.insert(s);
    targets.insert(t);
  }
  CHECK(sources.size() == 90);
  CHECK(targets.size() == 90);
  // Dropout never orphans an entity.
  for (int e = 0; e < 90; ++e) {
    CHECK(a.source.degree(e) >= 1);
    CHECK(a.target.degree(e) >= 1);
  }
}

TEST_CASE("synthetic spec validation") {
  SynthSpec spec;
  spec.entities = 1;
  CHECK_THROWS_AS(generate_synthetic(spec), UsageError);
  spec = SynthSpec{};
  spec.relations = 0;
  CHECK_THROWS_AS(generate_synthetic(spec), UsageError);
  spec = SynthSpec{};
  spec.word_dim = 0;
  CHECK_THROWS_AS(generate_synthetic(spec), UsageError);
  spec = SynthSpec{};
  spec.triples_per_entity = 0.5;
  CHECK_THROWS_AS(generate_synthetic(spec), UsageError);
  spec = SynthSpec{};
  spec.dup_name_fraction = 1.5;
  CHECK_THROWS_AS(generate_synthetic(spec), UsageError);
  spec = SynthSpec{};
  spec.edge_dropout = 1.0;
  CHECK_THROWS_AS(generate_synthetic(spec), UsageError);
  spec = SynthSpec{};
  spec.name_noise = -0.1;
  CHECK_THROWS_AS(generate_synthetic(spec), UsageError);
}

TEST_CASE("a high skew concentrates mass on low degrees") {
  SynthSpec spec;
  spec.entities = 200;
  spec.triples_per_entity = 2.5;
  spec.skew = 2.0;
  spec.seed = 5;
  const SyntheticData data = generate_synthetic(spec);
  long low = 0;
  for (int e = 0; e < spec.entities; ++e)
    if (data.source.degree(e) <= 2) ++low;
  // Zipf partner choice leaves most entities with just their own edge or two.
  CHECK(low >= spec.entities / 2);
  // While someone absorbs the long tail.
  const int max_deg = *std::max_element(data.source.degrees().begin(), data.source.degrees().end());
  CHECK(max_deg >= 10);
}

TEST_CASE("clean names alone align the graphs perfectly") {
  SynthSpec spec;
  spec.entities = 60;
  spec.dup_name_fraction = 0.0;
  spec.name_noise = 0.0;
  spec.seed = 13;
  const SyntheticData data = generate_synthetic(spec);

  const std::vector<WordEmbeddingSpace> spaces{data.words};
  const NameEmbeddingMatrix src = encode_all(data.source, spaces, PowerSpec::standard());
  const NameEmbeddingMatrix tgt = encode_all(data.target, spaces, PowerSpec::standard());
  CHECK(src.oov_entities == 0);
  CHECK(tgt.oov_entities == 0);

  const Matrix sim = pairwise_cosine(src.rows, tgt.rows, 1);
  const auto ranks = compute_rankings(sim, data.gold, CandidatePool::AllTargets);
  CHECK(hits_at_k(ranks, 1) == doctest::Approx(100.0));
}

TEST_CASE("duplicated names break the pure name channel") {
  SynthSpec spec;
  spec.entities = 100;
  spec.dup_name_fraction = 0.3;
  spec.name_noise = 0.0;
  spec.seed = 14;
  const SyntheticData data = generate_synthetic(spec);

  const std::vector<WordEmbeddingSpace> spaces{data.words};
  const NameEmbeddingMatrix src = encode_all(data.source, spaces, PowerSpec::standard());
  const NameEmbeddingMatrix tgt = encode_all(data.target, spaces, PowerSpec::standard());
  const Matrix sim = pairwise_cosine(src.rows, tgt.rows, 1);
  const auto ranks = compute_rankings(sim, data.gold, CandidatePool::AllTargets);
  const double hits = hits_at_k(ranks, 1);
  // ~15 duplicate pairs of entities share a name; ties are unresolvable by
  // names, so a meaningful share of the gold pairs must drop below rank 1.
  CHECK(hits < 95.0);
  CHECK(hits > 50.0);
}

TEST_CASE("written artifacts load back into a runnable configuration") {
  const fs::path dir = test_util::temp_dir("synth_write");
  SynthSpec spec;
  spec.entities = 50;
  spec.seed = 99;
  const SyntheticData data = generate_synthetic(spec);
  const RunConfig cfg = write_synthetic(data, spec, dir);

  for (const char* name : {"source.tsv", "target.tsv", "alignment.tsv", "words.vec", "config.cfg"})
    CHECK(fs::exists(dir / name));
  CHECK(parse_run_config(dir / "config.cfg") == cfg);
  CHECK(cfg.seed == 99);

  const LoadedInputs in = load_inputs(cfg);
  CHECK(in.dataset.source.num_entities() == 50);
  CHECK(in.dataset.target.num_entities() == 50);
  CHECK(in.dataset.train.size() + in.dataset.test.size() == 50);
  CHECK(in.dataset.train.size() == 15);  // default train_fraction 0.30
  REQUIRE(in.spaces.size() == 1);
  CHECK(in.spaces[0].dimension() == spec.word_dim);

  // The graph on disk reloads to the in-memory graph up to id renumbering.
  const KnowledgeGraph reloaded = load_knowledge_graph(dir / "source.tsv");
  const auto label_triples = [](const KnowledgeGraph& g) {
    std::multiset<std::tuple<std::string, std::string, std::string>> out;
    for (const Triple& t : g.triples())
      out.emplace(g.entities().label(t.head), g.relations().label(t.relation),
                  g.entities().label(t.tail));
    return out;
  };
  CHECK(reloaded.num_entities() == data.source.num_entities());
  CHECK(label_triples(reloaded) == label_triples(data.source));

  // Missing inputs surface as DataError naming the path.
  RunConfig broken = cfg;
  broken.source_triples = (dir / "gone.tsv").string();
  CHECK_THROWS_WITH_AS(load_inputs(broken), doctest::Contains("gone.tsv"), DataError);
}

TEST_CASE("the full pipeline is deterministic for a fixed seed") {
  const fs::path dir = test_util::temp_dir("pipe_det");
  SynthSpec spec;
  spec.entities = 60;
  spec.dup_name_fraction = 0.15;
  spec.name_noise = 0.3;
  spec.skew = 1.2;
  spec.seed = 4242;
  const SyntheticData data = generate_synthetic(spec);
  RunConfig cfg = write_synthetic(data, spec, dir);
  cfg.zeta = 1;
  cfg.threads = 1;
  cfg.struct_epochs = 10;
  cfg.fusion_max_epochs = 15;

  const PipelineResult a = run_pipeline(cfg);
  const PipelineResult b = run_pipeline(cfg);
  CHECK(a.report_json == b.report_json);
  CHECK(a.rounds_json == b.rounds_json);
  CHECK(a.report_table == b.report_table);
  REQUIRE(a.state.rounds.size() == 2);
  CHECK(a.state.rounds[0].anchors_total == static_cast<long>(a.dataset.train.size()));

  // Artifacts land where asked and reflect the final state.
  write_run_artifacts(a, cfg);
  const fs::path out = cfg.out_dir;
  for (const char* name : {"rounds.json", "report.json", "report.txt", "timings.json",
                           "config.used.cfg", "anchors.tsv", "names_source.f32", "names_target.f32",
                           "struct.f32", "struct.f32.ids", "fusion.params"})
    CHECK(fs::exists(out / name));
  CHECK(test_util::read_file(out / "rounds.json") == a.rounds_json);
  CHECK(test_util::read_file(out / "report.json") == a.report_json);
}

TEST_CASE("thread resolution never returns zero") {
  CHECK(resolve_threads(4) == 4);
  CHECK(resolve_threads(1) == 1);
  CHECK(resolve_threads(0) >= 1);
  CHECK(resolve_threads(-3) >= 1);
}
