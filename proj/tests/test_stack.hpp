#pragma once

// In-memory end-to-end fixture used by the recommender tests and the
// acceptance suite: synthetic planted clusters -> binarize/split/sequences
// -> feature towers -> quantizers -> rep stores -> neighbor caches.

#include "dqrec/augmentation.hpp"
#include "dqrec/config.hpp"
#include "dqrec/data.hpp"
#include "dqrec/pipeline.hpp"
#include "dqrec/pretrain.hpp"
#include "dqrec/quantizer.hpp"
#include "dqrec/recommender.hpp"
#include "dqrec/synthetic.hpp"

#include <algorithm>
#include <filesystem>
#include <memory>

namespace dqrec::testing {

struct Stack {
  RunConfig config;
  data::InteractionLog log;
  data::SplitDataset split;
  std::unique_ptr<data::SequenceStore> sequences;
  pretrain::FeatureSchema schema;
  pretrain::PretrainModel embedder;
  vq::QuantizerModel user_quantizer, item_quantizer;
  aug::RepStore user_store, item_store;
  aug::NeighborCache user_neighbors, item_neighbors;
  std::vector<int> user_group, item_group;  // dense id -> planted group

  data::InteractionSets train_sets() const {
    return data::InteractionSets(split.train, log.user_count(), log.item_count());
  }
  data::InteractionSets log_sets() const {
    return data::InteractionSets(log.records, log.user_count(), log.item_count());
  }
};

inline RunConfig small_synth_config(std::uint64_t seed) {
  RunConfig config;
  config.synthetic = true;
  config.seed = seed;
  config.synth_users = 200;
  config.synth_items = 100;
  config.synth_groups = 4;
  config.synth_p_intra = 0.30;
  config.synth_q_inter = 0.02;
  config.embed_dim = 32;
  config.feat_dim = 16;
  config.hidden_dim = 32;
  config.vq_layers = 4;
  config.codebook_size = 16;
  config.neighbors_k = 10;
  config.latent_k = 2;
  config.batch = 256;
  config.pretrain_epochs = 6;
  config.vae_epochs = 30;
  config.rec_epochs = 12;
  config.max_seq_len = 50;
  return config;
}

inline Stack build_stack(const RunConfig& config) {
  Stack stack;
  stack.config = config;

  Rng rng(config.seed);
  Rng synth_rng = rng.fork(0x5150);
  const auto synth_data = synth::generate(config, synth_rng);

  data::InteractionLog raw;
  for (const auto& row : synth_data.rows) {
    data::InteractionRecord rec;
    rec.user = raw.users.intern(row.user);
    rec.item = raw.items.intern(row.item);
    rec.rating = row.rating;
    rec.timestamp = row.timestamp;
    raw.records.push_back(rec);
  }
  std::stable_sort(raw.records.begin(), raw.records.end(),
                   [](const auto& a, const auto& b) { return a.timestamp < b.timestamp; });
  stack.log = data::binarize(raw, config.rating_threshold);
  stack.split = data::split_chronological(stack.log, config.split_ratios);
  stack.sequences = std::make_unique<data::SequenceStore>(
      stack.split.train, stack.log.user_count(), stack.log.item_count(), config.max_seq_len);

  // group labels for entities that survived binarize
  stack.user_group.assign(static_cast<std::size_t>(stack.log.user_count()), -1);
  stack.item_group.assign(static_cast<std::size_t>(stack.log.item_count()), -1);
  for (std::size_t u = 0; u < synth_data.user_group.size(); ++u) {
    if (const auto id = stack.log.users.find("u" + std::to_string(u))) {
      stack.user_group[static_cast<std::size_t>(*id)] = synth_data.user_group[u];
    }
  }
  for (std::size_t i = 0; i < synth_data.item_group.size(); ++i) {
    if (const auto id = stack.log.items.find("i" + std::to_string(i))) {
      stack.item_group[static_cast<std::size_t>(*id)] = synth_data.item_group[i];
    }
  }

  pretrain::AttributeTable item_attrs;
  item_attrs.columns = {"category"};
  for (const auto& [item, category] : synth_data.item_attributes) {
    item_attrs.rows[item] = {category};
  }
  stack.schema =
      pretrain::build_feature_schema(stack.log, stack.split.train, std::nullopt, item_attrs);

  const auto train_sets = stack.train_sets();
  pretrain::PretrainOptions pre_options;
  pre_options.epochs = config.pretrain_epochs;
  pre_options.batch = config.batch;
  pre_options.alpha = config.alpha;
  pre_options.patience = config.patience;
  pre_options.hidden_dim = config.hidden_dim;
  pre_options.out_dim = config.embed_dim;
  pre_options.feat_dim = config.feat_dim;
  Rng pre_rng = rng.fork(0xEB);
  stack.embedder = pretrain::pretrain(stack.schema, stack.split.train, stack.split.valid,
                                      *stack.sequences, train_sets, pre_rng, pre_options);

  const auto z_user =
      pretrain::export_representations(stack.embedder, stack.schema, *stack.sequences, "user");
  const auto z_item =
      pretrain::export_representations(stack.embedder, stack.schema, *stack.sequences, "item");

  vq::CodebookTrainOptions vq_options;
  vq_options.epochs = config.vae_epochs;
  vq_options.batch = config.batch;
  vq_options.alpha = config.alpha;
  auto user_basis = vq::fit_basis(z_user.Z, config.vq_layers);
  user_basis.kind = "user";
  auto item_basis = vq::fit_basis(z_item.Z, config.vq_layers);
  item_basis.kind = "item";
  Rng uq_rng = rng.fork(0xDA1);
  Rng iq_rng = rng.fork(0xDA2);
  stack.user_quantizer = vq::train_codebooks(z_user.Z, user_basis, config.codebook_size,
                                             config.beta, uq_rng, vq_options);
  stack.item_quantizer = vq::train_codebooks(z_item.Z, item_basis, config.codebook_size,
                                             config.beta, iq_rng, vq_options);

  stack.user_store = aug::RepStore::build(z_user, stack.user_quantizer);
  stack.item_store = aug::RepStore::build(z_item, stack.item_quantizer);
  stack.user_neighbors = aug::NeighborCache::build(stack.user_store, stack.user_quantizer,
                                                   config.neighbors_k, config.latent_k);
  stack.item_neighbors = aug::NeighborCache::build(stack.item_store, stack.item_quantizer,
                                                   config.neighbors_k, config.latent_k);
  return stack;
}

inline rec::RecModel train_model(Stack& stack, rec::AblationFlags flags,
                                 rec::TrainHistory* history = nullptr) {
  const auto& config = stack.config;
  Rng rng = Rng(config.seed).fork(0x7EC);
  auto model = rec::RecModel::init(stack.log.user_count(), stack.log.item_count(),
                                   config.vq_layers, config.codebook_size, config.embed_dim,
                                   config.hidden_dim, flags, rng);
  rec::SampleContext context(stack.embedder, stack.schema, stack.user_quantizer,
                             stack.item_quantizer, *stack.sequences);
  rec::TrainOptions options;
  options.epochs = config.rec_epochs;
  options.batch = config.batch;
  options.alpha = config.alpha;
  options.patience = config.patience;
  options.eval_batch = config.effective_eval_batch();
  const auto train_sets = stack.train_sets();
  const auto log_sets = stack.log_sets();
  const auto h = rec::train(model, stack.split, context, stack.user_neighbors,
                            stack.item_neighbors, train_sets, log_sets, rng, options);
  if (history) *history = h;
  return model;
}

inline metrics::MetricsReport evaluate_model(Stack& stack, const rec::RecModel& model,
                                             const std::vector<int>& k_list) {
  rec::SampleContext context(stack.embedder, stack.schema, stack.user_quantizer,
                             stack.item_quantizer, *stack.sequences);
  auto scorer = rec::make_scorer(model, context, stack.user_neighbors, stack.item_neighbors);
  const auto log_sets = stack.log_sets();
  return metrics::evaluate(metrics::to_eval_samples(stack.split.test),
                           stack.config.effective_eval_batch(), k_list, log_sets, scorer);
}

}  // namespace dqrec::testing
