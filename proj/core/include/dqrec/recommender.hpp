#pragma once

#include "dqrec/augmentation.hpp"
#include "dqrec/data.hpp"
#include "dqrec/metrics.hpp"
#include "dqrec/nn.hpp"
#include "dqrec/pretrain.hpp"
#include "dqrec/quantizer.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <span>
#include <unordered_map>
#include <vector>

namespace dqrec::rec {

// Table 3-style switches. Disabling a flag zeroes the corresponding block
// of the tower input; latent_linkage narrows neighbor sets to the explicit
// part.
struct AblationFlags {
  bool user_feature = true;
  bool item_feature = true;
  bool user_linkage = true;
  bool item_linkage = true;
  bool latent_linkage = true;
};

struct RecModel {
  nn::EmbeddingTable user_id;                   // U x d
  nn::EmbeddingTable item_id;                   // I x d
  std::vector<nn::EmbeddingTable> user_sem;     // L tables, J x (d/L)
  std::vector<nn::EmbeddingTable> item_sem;
  nn::Mlp user_tower;
  nn::Mlp item_tower;
  AblationFlags flags;
  int embed_dim = 64;

  // [e_id || e_sem || seq mean || neighbor mean]
  int input_dim() const { return 4 * embed_dim; }
  int layers() const { return static_cast<int>(user_sem.size()); }

  static RecModel init(std::int32_t user_count, std::int32_t item_count, int layers,
                       int codebook_size, int embed_dim, int hidden_dim, AblationFlags flags,
                       Rng& rng);

  void save(const std::filesystem::path& path) const;
  static RecModel load(const std::filesystem::path& path);
};

// Concatenation of the per-layer semantic table rows for a semantic id.
Eigen::VectorXd semantic_feature_embedding(const vq::SemanticId& sid,
                                           const std::vector<nn::EmbeddingTable>& tables);

// Tower input: [id embedding || semantic features || mean of sequence
// members' id embeddings || mean of neighbors' id embeddings]. A null
// semantic id, empty sequence, or empty neighbor list leaves that block
// zero, as does a disabled ablation flag.
Eigen::VectorXd build_input_embedding(const nn::EmbeddingTable& id_table,
                                      const std::vector<nn::EmbeddingTable>& sem_tables,
                                      std::int32_t entity, const vq::SemanticId* sid,
                                      std::span<const std::int32_t> sequence,
                                      const nn::EmbeddingTable& sequence_member_table,
                                      std::span<const std::int32_t> neighbors,
                                      const nn::EmbeddingTable& neighbor_member_table,
                                      bool use_feature, bool use_linkage);

double score(const Eigen::VectorXd& z_user, const Eigen::VectorXd& z_item);
double bpr_loss(double y_positive, double y_negative);

// Computes per-sample semantic ids from the frozen stage-1 artifacts, with
// sequences truncated strictly before the sample timestamp. Memoized per
// (entity, truncated-sequence length).
class SampleContext {
 public:
  SampleContext(const pretrain::PretrainModel& embedder, const pretrain::FeatureSchema& schema,
                const vq::QuantizerModel& user_quantizer, const vq::QuantizerModel& item_quantizer,
                const data::SequenceStore& sequences);

  const vq::SemanticId& user_sid_at(std::int32_t user, std::int64_t timestamp);
  const vq::SemanticId& item_sid_at(std::int32_t item, std::int64_t timestamp);

  const data::SequenceStore& sequences() const { return sequences_; }

 private:
  const pretrain::PretrainModel& embedder_;
  const pretrain::FeatureSchema& schema_;
  const vq::QuantizerModel& user_quantizer_;
  const vq::QuantizerModel& item_quantizer_;
  const data::SequenceStore& sequences_;
  std::unordered_map<std::uint64_t, vq::SemanticId> user_memo_;
  std::unordered_map<std::uint64_t, vq::SemanticId> item_memo_;
};

// Full tower pass for one entity at one timestamp.
struct EntityForward {
  Eigen::VectorXd input;
  nn::Mlp::Cache cache;
  Eigen::VectorXd top;
  const vq::SemanticId* sid = nullptr;
  std::vector<std::int32_t> sequence;
  std::span<const std::int32_t> neighbors;
};

EntityForward forward_user(const RecModel& model, SampleContext& context,
                           const aug::NeighborCache& neighbors, std::int32_t user,
                           std::int64_t timestamp);
EntityForward forward_item(const RecModel& model, SampleContext& context,
                           const aug::NeighborCache& neighbors, std::int32_t item,
                           std::int64_t timestamp);

// Scorer over evaluation batches: scores(a, b) = sigmoid(z_u[a] . z_i[b]).
metrics::BatchScorer make_scorer(const RecModel& model, SampleContext& context,
                                 const aug::NeighborCache& user_neighbors,
                                 const aug::NeighborCache& item_neighbors);

// Dense gradient accumulators for every trainable tensor of a RecModel.
struct RecGradients {
  Eigen::MatrixXd user_id, item_id;
  std::vector<Eigen::MatrixXd> user_sem, item_sem;
  std::vector<nn::DenseLayer::Grads> user_layers, item_layers;

  static RecGradients zeros(const RecModel& model);
};

// Accumulates scale * d(bpr_loss)/d(params) for one (user, positive,
// negative) triple at the given timestamp; returns the sample loss. This is
// the exact backward pass the trainer applies.
double accumulate_sample_gradients(const RecModel& model, SampleContext& context,
                                   const aug::NeighborCache& user_neighbors,
                                   const aug::NeighborCache& item_neighbors, std::int32_t user,
                                   std::int32_t positive, std::int32_t negative,
                                   std::int64_t timestamp, double scale, RecGradients& grads);

struct TrainOptions {
  int epochs = 30;
  int batch = 1024;
  double alpha = 1e-3;
  int patience = 3;
  int valid_k = 10;
  int eval_batch = 1024;
};

struct TrainHistory {
  std::vector<double> train_loss;
  std::vector<double> valid_recall;
  std::vector<double> valid_ndcg;
  int best_epoch = -1;
  bool diverged = false;
};

// Minibatch Adam over BPR triples; early-stops on validation Recall@k with
// the given patience and restores the best snapshot. A non-finite loss
// aborts training and keeps the last good parameters.
TrainHistory train(RecModel& model, const data::SplitDataset& split, SampleContext& context,
                   const aug::NeighborCache& user_neighbors, const aug::NeighborCache& item_neighbors,
                   const data::InteractionSets& train_sets, const data::InteractionSets& log_sets,
                   Rng& rng, const TrainOptions& options);

}  // namespace dqrec::rec
