#include "kgalign/pipeline.hpp"
#include "kgalign/synth.hpp"

#include <CLI11.hpp>

#include <cstdint>
#include <exception>
#include <iostream>
#include <string>

namespace {

struct CommonFlags {
  std::string config_path;
  std::uint64_t seed = 0;
  int threads = 0;
  std::string out;
  CLI::Option* seed_opt = nullptr;
  CLI::Option* threads_opt = nullptr;
  CLI::Option* out_opt = nullptr;
};

void add_common(CLI::App* sub, CommonFlags& f) {
  sub->add_option("--config", f.config_path, "run configuration file")
      ->required()
      ->check(CLI::ExistingFile);
  f.seed_opt = sub->add_option("--seed", f.seed, "override the config RNG seed");
  f.threads_opt =
      sub->add_option("--threads", f.threads, "override worker threads (0 = all cores)");
  f.out_opt = sub->add_option("--out", f.out, "override the output directory");
}

kgalign::RunConfig load_config(const CommonFlags& f) {
  kgalign::RunConfig cfg = kgalign::parse_run_config(f.config_path);
  if (f.seed_opt->count() > 0) cfg.seed = f.seed;
  if (f.threads_opt->count() > 0) cfg.threads = f.threads;
  if (f.out_opt->count() > 0) cfg.out_dir = f.out;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"entity alignment across knowledge graphs: power-mean name embeddings and "
               "structural embeddings fused by degree-aware co-attention, with iterative "
               "graph completion"};
  app.require_subcommand(1);

  kgalign::SynthSpec spec;
  std::string synth_out = "synth";
  CLI::App* synth = app.add_subcommand("synth", "generate a synthetic aligned dataset");
  synth->add_option("--entities", spec.entities, "entities per side")->capture_default_str();
  synth->add_option("--triples-per-entity", spec.triples_per_entity, "mean triples per entity")
      ->capture_default_str();
  synth->add_option("--skew", spec.skew, "Zipf exponent of the degree distribution")
      ->capture_default_str();
  synth->add_option("--relations", spec.relations, "relation count per side")
      ->capture_default_str();
  synth->add_option("--word-dim", spec.word_dim, "word-vector dimension")->capture_default_str();
  synth->add_option("--dup-names", spec.dup_name_fraction,
                    "fraction of entities given duplicated names")
      ->capture_default_str();
  synth->add_option("--name-noise", spec.name_noise,
                    "degree-scaled token corruption rate on the target side")
      ->capture_default_str();
  synth->add_option("--edge-dropout", spec.edge_dropout,
                    "per-side dropout of non-spanning triples")
      ->capture_default_str();
  synth->add_option("--seed", spec.seed, "RNG seed")->capture_default_str();
  synth->add_option("--out", synth_out, "output directory")->capture_default_str();
  synth->callback([&] {
    const kgalign::SyntheticData data = kgalign::generate_synthetic(spec);
    kgalign::write_synthetic(data, spec, synth_out);
    std::cout << "wrote " << data.source.triples().size() << " source / "
              << data.target.triples().size() << " target triples, " << data.gold.size()
              << " gold pairs, " << data.words.size() << " word vectors under " << synth_out
              << " (config.cfg included)\n";
  });

  CommonFlags encode_f, struct_f, fusion_f, align_f, eval_f, run_f;
  CLI::App* encode = app.add_subcommand("encode-names", "encode entity names as matrices");
  add_common(encode, encode_f);
  encode->callback([&] { kgalign::cmd_encode_names(load_config(encode_f)); });

  CLI::App* tstruct = app.add_subcommand("train-struct", "train baseline structural embeddings");
  add_common(tstruct, struct_f);
  tstruct->callback([&] { kgalign::cmd_train_struct(load_config(struct_f)); });

  CLI::App* tfusion = app.add_subcommand("train-fusion", "train the co-attention fusion weights");
  add_common(tfusion, fusion_f);
  tfusion->callback([&] { kgalign::cmd_train_fusion(load_config(fusion_f)); });

  CLI::App* align = app.add_subcommand("align", "score and emit predictions + confident pairs");
  add_common(align, align_f);
  align->callback([&] { kgalign::cmd_align(load_config(align_f)); });

  CLI::App* evaluate = app.add_subcommand("evaluate", "rank test pairs and report metrics");
  add_common(evaluate, eval_f);
  evaluate->callback([&] { kgalign::cmd_evaluate(load_config(eval_f)); });

  CLI::App* run = app.add_subcommand("run", "full iterative alignment pipeline");
  add_common(run, run_f);
  run->callback([&] { kgalign::cmd_run(load_config(run_f)); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);  // prints help or the parse error
    return code == 0 ? 0 : 1;
  } catch (const kgalign::UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const kgalign::DataError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const kgalign::NumericError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
