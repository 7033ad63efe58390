// dqrec command line: stage-by-stage or end-to-end runs of the two-stage
// quantized-pattern recommender pipeline.

#include "dqrec/config.hpp"
#include "dqrec/pipeline.hpp"
#include "dqrec/synthetic.hpp"
#include "dqrec/text.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>

namespace {

struct GlobalArgs {
  std::string config_path;
  std::string artifacts;
  std::vector<std::string> overrides;  // key=value
  long long seed = -1;
};

dqrec::RunConfig resolve_config(const GlobalArgs& args) {
  dqrec::RunConfig config;
  if (const char* env = std::getenv("DQREC_ARTIFACTS")) config.artifacts = env;
  if (!args.config_path.empty()) config.apply_file(args.config_path);
  for (const auto& kv : args.overrides) {
    const auto pos = kv.find('=');
    if (pos == std::string::npos) {
      throw std::runtime_error("--set expects key=value, got '" + kv + "'");
    }
    config.apply_kv(dqrec::text::strip(kv.substr(0, pos)), dqrec::text::strip(kv.substr(pos + 1)));
  }
  if (!args.artifacts.empty()) config.artifacts = args.artifacts;
  if (args.seed >= 0) config.seed = static_cast<std::uint64_t>(args.seed);
  return config;
}

void add_global_options(CLI::App* cmd, GlobalArgs& args) {
  cmd->add_option("-c,--config", args.config_path, "key=value config file");
  cmd->add_option("-a,--artifacts", args.artifacts,
                  "artifact root (overrides $DQREC_ARTIFACTS)");
  cmd->add_option("-s,--set", args.overrides, "override any config key (key=value, repeatable)");
  cmd->add_option("--seed", args.seed, "master seed override");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"dqrec: two-stage quantized-pattern collaborative filtering toolkit"};
  app.require_subcommand(1);

  GlobalArgs args;
  bool force = false;
  std::string inspect_kind = "user";
  std::vector<std::string> inspect_ids;
  std::string sweep_axis;
  std::vector<double> sweep_values;
  std::string sweep_out = "sweep.csv";
  std::string synth_dir;

  auto* prepare = app.add_subcommand("prepare", "ingest, binarize, split, build sequences");
  auto* pretrain = app.add_subcommand("pretrain", "train the feature towers, export representations");
  auto* quantize = app.add_subcommand("quantize", "fit SVD bases and train codebooks");
  auto* index = app.add_subcommand("index", "build rep stores and neighbor caches");
  auto* train = app.add_subcommand("train", "train the augmented recommender");
  auto* eval = app.add_subcommand("eval", "evaluate on the test slice");
  auto* pipeline = app.add_subcommand("pipeline", "run every stage, resuming completed ones");
  auto* inspect = app.add_subcommand("inspect", "show semantic ids and pairwise pattern overlap");
  auto* sweep = app.add_subcommand("sweep", "re-run the pipeline across one hyperparameter axis");
  auto* synth = app.add_subcommand("synth", "write the bundled synthetic dataset and exit");
  auto* keys = app.add_subcommand("keys", "list all config keys");

  for (auto* cmd : {prepare, pretrain, quantize, index, train, eval, pipeline, inspect, sweep,
                    synth}) {
    add_global_options(cmd, args);
  }
  pipeline->add_flag("--force", force, "rerun every stage even if artifacts are fresh");
  inspect->add_option("--kind", inspect_kind, "user or item")->check(CLI::IsMember({"user", "item"}));
  inspect->add_option("ids", inspect_ids, "external entity ids")->required();
  sweep->add_option("--axis", sweep_axis, "K, J, or L")
      ->required()
      ->check(CLI::IsMember({"K", "J", "L"}));
  sweep->add_option("--values", sweep_values, "axis values")->required();
  sweep->add_option("--out", sweep_out, "output CSV path");
  synth->add_option("--dir", synth_dir, "output directory (default: artifact root)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (keys->parsed()) {
      for (const auto& [key, help] : dqrec::RunConfig::key_help()) {
        std::cout << key << "\t" << help << '\n';
      }
      return 0;
    }

    const auto config = resolve_config(args);

    if (prepare->parsed()) {
      dqrec::pipeline::run_prepare(config);
    } else if (pretrain->parsed()) {
      dqrec::pipeline::run_pretrain(config);
    } else if (quantize->parsed()) {
      dqrec::pipeline::run_quantize(config);
    } else if (index->parsed()) {
      dqrec::pipeline::run_index(config);
    } else if (train->parsed()) {
      dqrec::pipeline::run_train(config);
    } else if (eval->parsed()) {
      dqrec::pipeline::run_eval(config);
    } else if (pipeline->parsed()) {
      dqrec::pipeline::run_pipeline(config, force);
    } else if (inspect->parsed()) {
      std::cout << dqrec::pipeline::inspect_report(config, inspect_kind, inspect_ids);
    } else if (sweep->parsed()) {
      const auto rows = dqrec::pipeline::run_sweep(config, sweep_axis, sweep_values);
      dqrec::pipeline::write_sweep_csv(sweep_out, sweep_axis, rows, config.k_list);
      std::cout << "[sweep] wrote " << sweep_out << '\n';
    } else if (synth->parsed()) {
      dqrec::RunConfig synth_config = config;
      synth_config.synthetic = true;
      const std::filesystem::path dir = synth_dir.empty()
                                            ? std::filesystem::path(config.artifacts)
                                            : std::filesystem::path(synth_dir);
      dqrec::Rng rng = dqrec::Rng(synth_config.seed).fork(0x5150);
      const auto data = dqrec::synth::generate(synth_config, rng);
      dqrec::synth::write_files(data, dir / "synthetic_interactions.csv",
                                dir / "synthetic_item_attributes.csv",
                                dir / "synthetic_groups.csv");
      std::cout << "[synth] wrote " << data.rows.size() << " rows under " << dir.string() << '\n';
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
