#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace dqrec {

// Every knob of the toolkit, parsed from "key = value" text files and/or
// CLI overrides. Defaults follow the reference hyperparameters: embedding
// dimension 64, four codebook layers of 128 codewords, beta 0.25, K=30
// explicit and K'=2 latent neighbors, Adam at 1e-3 with batch 1024.
struct RunConfig {
  // data
  std::string interactions;
  std::string user_attributes;
  std::string item_attributes;
  std::string delimiter = ",";
  bool header = false;
  int rating_threshold = 3;
  std::array<int, 3> split_ratios{8, 1, 1};
  int max_seq_len = 50;

  // bundled synthetic planted-cluster dataset
  bool synthetic = false;
  int synth_groups = 4;
  int synth_users = 200;
  int synth_items = 100;
  double synth_p_intra = 0.30;
  double synth_q_inter = 0.02;
  double synth_low_rating_rate = 0.15;
  std::int64_t synth_horizon = 100000;

  // model
  int embed_dim = 64;
  int vq_layers = 4;       // L
  int codebook_size = 128; // J
  double beta = 0.25;
  int neighbors_k = 30;    // K
  int latent_k = 2;        // K'
  int feat_dim = 64;
  int hidden_dim = 128;

  // training
  int batch = 1024;
  double alpha = 1e-3;
  int pretrain_epochs = 10;
  int vae_epochs = 50;
  int rec_epochs = 30;
  int patience = 3;
  int eval_batch = 0;  // 0 -> batch
  std::vector<int> k_list{5, 10, 20};
  std::uint64_t seed = 42;

  // ablation switches
  bool aug_user_feature = true;
  bool aug_item_feature = true;
  bool aug_user_linkage = true;
  bool aug_item_linkage = true;
  bool aug_latent_linkage = true;

  // artifact root; CLI fills this from --artifacts or $DQREC_ARTIFACTS
  std::string artifacts = "artifacts";

  static RunConfig from_file(const std::filesystem::path& path);
  void apply_file(const std::filesystem::path& path);
  void apply_kv(const std::string& key, const std::string& value);

  // Sorted key=value dump; equal configs produce equal text.
  std::string canonical() const;
  std::string fingerprint() const;

  // Cumulative per-stage fingerprint: includes every key that the stage or
  // any upstream stage depends on, so changing an upstream knob invalidates
  // downstream artifacts too.
  std::string stage_fingerprint(const std::string& stage) const;

  int effective_eval_batch() const { return eval_batch > 0 ? eval_batch : batch; }

  void validate() const;

  // All recognized keys with one-line help, for the CLI.
  static const std::vector<std::pair<std::string, std::string>>& key_help();
};

}  // namespace dqrec
