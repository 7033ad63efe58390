#pragma once

#include "dqrec/config.hpp"
#include "dqrec/data.hpp"
#include "dqrec/metrics.hpp"
#include "dqrec/pretrain.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace dqrec::pipeline {

// Artifact layout under the config's artifact root.
struct Paths {
  explicit Paths(const RunConfig& config);

  std::filesystem::path root;
  std::filesystem::path synth_interactions, synth_item_attributes, synth_groups;
  std::filesystem::path user_ids, item_ids;
  std::filesystem::path split_train, split_valid, split_test;
  std::filesystem::path pretrain_model, z_user, z_item, rows_user, rows_item;
  std::filesystem::path quantizer_user, quantizer_item, vae_history_user, vae_history_item;
  std::filesystem::path repstore_user, repstore_item, neighbors_user, neighbors_item;
  std::filesystem::path rec_model, train_history;
  std::filesystem::path metrics_csv;

  std::filesystem::path marker(const std::string& stage) const;
};

// Binarized log and friends reconstructed from the prepare artifacts.
struct DataBundle {
  data::InteractionLog log;
  data::SplitDataset split;
  data::SequenceStore sequences;
  pretrain::FeatureSchema schema;
};

DataBundle load_data_bundle(const RunConfig& config);

// Stages. With skip_if_fresh, a stage whose fingerprint marker matches and
// whose outputs exist is skipped. A stage whose upstream artifacts are
// missing fails naming that stage.
void run_prepare(const RunConfig& config, bool skip_if_fresh = false);
void run_pretrain(const RunConfig& config, bool skip_if_fresh = false);
void run_quantize(const RunConfig& config, bool skip_if_fresh = false);
void run_index(const RunConfig& config, bool skip_if_fresh = false);
void run_train(const RunConfig& config, bool skip_if_fresh = false);
metrics::MetricsReport run_eval(const RunConfig& config, bool skip_if_fresh = false);

// prepare -> pretrain -> quantize -> index -> train -> eval, resumable from
// any completed stage; force reruns everything.
metrics::MetricsReport run_pipeline(const RunConfig& config, bool force = false);

// Per-entity semantic ids, sequence-category histograms, and pairwise
// codeword overlap / quantized distances.
std::string inspect_report(const RunConfig& config, const std::string& kind,
                           const std::vector<std::string>& external_ids);

struct SweepRow {
  double value = 0.0;
  bool failed = false;
  std::string error;
  metrics::MetricsReport report;
};

// axis is one of "K", "J", "L". Reuses unaffected upstream artifacts via the
// stage fingerprints; invalid values produce failed rows.
std::vector<SweepRow> run_sweep(const RunConfig& config, const std::string& axis,
                                const std::vector<double>& values);

void write_sweep_csv(const std::filesystem::path& path, const std::string& axis,
                     const std::vector<SweepRow>& rows, const std::vector<int>& k_list);

}  // namespace dqrec::pipeline
