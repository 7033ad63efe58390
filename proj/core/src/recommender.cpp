#include "dqrec/recommender.hpp"

#include "dqrec/tensor_file.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace dqrec::rec {

RecModel RecModel::init(std::int32_t user_count, std::int32_t item_count, int layers,
                        int codebook_size, int embed_dim, int hidden_dim, AblationFlags flags,
                        Rng& rng) {
  if (embed_dim % layers != 0) {
    throw std::invalid_argument("RecModel: embed_dim must be divisible by layer count");
  }
  const int sem_dim = embed_dim / layers;
  RecModel model;
  model.flags = flags;
  model.embed_dim = embed_dim;
  Rng init_rng = rng.fork(0x33);
  model.user_id = nn::EmbeddingTable::init(user_count, embed_dim, init_rng);
  model.item_id = nn::EmbeddingTable::init(item_count, embed_dim, init_rng);
  for (int l = 0; l < layers; ++l) {
    model.user_sem.push_back(nn::EmbeddingTable::init(codebook_size, sem_dim, init_rng));
  }
  for (int l = 0; l < layers; ++l) {
    model.item_sem.push_back(nn::EmbeddingTable::init(codebook_size, sem_dim, init_rng));
  }
  model.user_tower = nn::Mlp::init({model.input_dim(), hidden_dim, embed_dim}, init_rng);
  model.item_tower = nn::Mlp::init({model.input_dim(), hidden_dim, embed_dim}, init_rng);
  return model;
}

Eigen::VectorXd semantic_feature_embedding(const vq::SemanticId& sid,
                                           const std::vector<nn::EmbeddingTable>& tables) {
  if (sid.size() != tables.size()) {
    throw std::invalid_argument("semantic_feature_embedding: layer count mismatch");
  }
  const int sem_dim = tables.empty() ? 0 : tables.front().dim();
  Eigen::VectorXd out(static_cast<Eigen::Index>(tables.size()) * sem_dim);
  for (std::size_t l = 0; l < tables.size(); ++l) {
    out.segment(static_cast<Eigen::Index>(l) * sem_dim, sem_dim) = tables[l].lookup(sid[l]);
  }
  return out;
}

namespace {

Eigen::VectorXd mean_rows(const nn::EmbeddingTable& table, std::span<const std::int32_t> members) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(table.dim());
  if (members.empty()) return out;
  for (const auto m : members) out += table.lookup(m);
  return out / static_cast<double>(members.size());
}

}  // namespace

Eigen::VectorXd build_input_embedding(const nn::EmbeddingTable& id_table,
                                      const std::vector<nn::EmbeddingTable>& sem_tables,
                                      std::int32_t entity, const vq::SemanticId* sid,
                                      std::span<const std::int32_t> sequence,
                                      const nn::EmbeddingTable& sequence_member_table,
                                      std::span<const std::int32_t> neighbors,
                                      const nn::EmbeddingTable& neighbor_member_table,
                                      bool use_feature, bool use_linkage) {
  const int d = id_table.dim();
  Eigen::VectorXd input = Eigen::VectorXd::Zero(4 * d);
  input.segment(0, d) = id_table.lookup(entity);
  if (use_feature && sid != nullptr) {
    input.segment(d, d) = semantic_feature_embedding(*sid, sem_tables);
  }
  input.segment(2 * d, d) = mean_rows(sequence_member_table, sequence);
  if (use_linkage) {
    input.segment(3 * d, d) = mean_rows(neighbor_member_table, neighbors);
  }
  return input;
}

double score(const Eigen::VectorXd& z_user, const Eigen::VectorXd& z_item) {
  if (z_user.size() != z_item.size()) throw std::invalid_argument("score: dim mismatch");
  return nn::sigmoid(z_user.dot(z_item));
}

double bpr_loss(double y_positive, double y_negative) {
  return -std::log(nn::sigmoid(y_positive - y_negative));
}

SampleContext::SampleContext(const pretrain::PretrainModel& embedder,
                             const pretrain::FeatureSchema& schema,
                             const vq::QuantizerModel& user_quantizer,
                             const vq::QuantizerModel& item_quantizer,
                             const data::SequenceStore& sequences)
    : embedder_(embedder),
      schema_(schema),
      user_quantizer_(user_quantizer),
      item_quantizer_(item_quantizer),
      sequences_(sequences) {}

namespace {
std::uint64_t memo_key(std::int32_t entity, std::size_t prefix) {
  return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(entity)) << 32) |
         static_cast<std::uint64_t>(prefix & 0xffffffffULL);
}
}  // namespace

const vq::SemanticId& SampleContext::user_sid_at(std::int32_t user, std::int64_t timestamp) {
  const auto key = memo_key(user, sequences_.user_events_before(user, timestamp));
  auto it = user_memo_.find(key);
  if (it != user_memo_.end()) return it->second;
  const auto seq = sequences_.user_sequence_before(user, timestamp);
  const auto z = embedder_.user_embed(schema_, user, seq);
  auto sid = vq::assign_codewords(vq::encode(z, user_quantizer_.basis), user_quantizer_.codebooks);
  return user_memo_.emplace(key, std::move(sid)).first->second;
}

const vq::SemanticId& SampleContext::item_sid_at(std::int32_t item, std::int64_t timestamp) {
  const auto key = memo_key(item, sequences_.item_events_before(item, timestamp));
  auto it = item_memo_.find(key);
  if (it != item_memo_.end()) return it->second;
  const auto seq = sequences_.item_sequence_before(item, timestamp);
  const auto z = embedder_.item_embed(schema_, item, seq);
  auto sid = vq::assign_codewords(vq::encode(z, item_quantizer_.basis), item_quantizer_.codebooks);
  return item_memo_.emplace(key, std::move(sid)).first->second;
}

namespace {

std::span<const std::int32_t> neighbor_span(const aug::NeighborCache& cache, std::int32_t entity,
                                            bool latent_linkage) {
  const auto* set = cache.find(entity);
  if (!set) return {};
  return latent_linkage ? std::span<const std::int32_t>(set->all)
                        : std::span<const std::int32_t>(set->explicit_ids);
}

}  // namespace

EntityForward forward_user(const RecModel& model, SampleContext& context,
                           const aug::NeighborCache& neighbors, std::int32_t user,
                           std::int64_t timestamp) {
  EntityForward fwd;
  fwd.sequence = context.sequences().user_sequence_before(user, timestamp);
  fwd.neighbors = model.flags.user_linkage
                      ? neighbor_span(neighbors, user, model.flags.latent_linkage)
                      : std::span<const std::int32_t>{};
  fwd.sid = model.flags.user_feature ? &context.user_sid_at(user, timestamp) : nullptr;
  fwd.input = build_input_embedding(model.user_id, model.user_sem, user, fwd.sid, fwd.sequence,
                                    model.item_id, fwd.neighbors, model.user_id,
                                    model.flags.user_feature, model.flags.user_linkage);
  fwd.top = model.user_tower.forward(fwd.input, fwd.cache);
  return fwd;
}

EntityForward forward_item(const RecModel& model, SampleContext& context,
                           const aug::NeighborCache& neighbors, std::int32_t item,
                           std::int64_t timestamp) {
  EntityForward fwd;
  fwd.sequence = context.sequences().item_sequence_before(item, timestamp);
  fwd.neighbors = model.flags.item_linkage
                      ? neighbor_span(neighbors, item, model.flags.latent_linkage)
                      : std::span<const std::int32_t>{};
  fwd.sid = model.flags.item_feature ? &context.item_sid_at(item, timestamp) : nullptr;
  fwd.input = build_input_embedding(model.item_id, model.item_sem, item, fwd.sid, fwd.sequence,
                                    model.user_id, fwd.neighbors, model.item_id,
                                    model.flags.item_feature, model.flags.item_linkage);
  fwd.top = model.item_tower.forward(fwd.input, fwd.cache);
  return fwd;
}

metrics::BatchScorer make_scorer(const RecModel& model, SampleContext& context,
                                 const aug::NeighborCache& user_neighbors,
                                 const aug::NeighborCache& item_neighbors) {
  return [&model, &context, &user_neighbors, &item_neighbors](
             const std::vector<metrics::EvalSample>& batch, Eigen::MatrixXd& scores) {
    const auto n = static_cast<Eigen::Index>(batch.size());
    Eigen::MatrixXd user_tops(n, model.embed_dim);
    Eigen::MatrixXd item_tops(n, model.embed_dim);
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto& sample = batch[static_cast<std::size_t>(i)];
      user_tops.row(i) =
          forward_user(model, context, user_neighbors, sample.user, sample.timestamp)
              .top.transpose();
      item_tops.row(i) =
          forward_item(model, context, item_neighbors, sample.item, sample.timestamp)
              .top.transpose();
    }
    scores = user_tops * item_tops.transpose();
    scores = scores.unaryExpr([](double t) { return nn::sigmoid(t); });
  };
}

RecGradients RecGradients::zeros(const RecModel& model) {
  RecGradients g;
  g.user_id = Eigen::MatrixXd::Zero(model.user_id.rows.rows(), model.user_id.rows.cols());
  g.item_id = Eigen::MatrixXd::Zero(model.item_id.rows.rows(), model.item_id.rows.cols());
  for (const auto& t : model.user_sem)
    g.user_sem.push_back(Eigen::MatrixXd::Zero(t.rows.rows(), t.rows.cols()));
  for (const auto& t : model.item_sem)
    g.item_sem.push_back(Eigen::MatrixXd::Zero(t.rows.rows(), t.rows.cols()));
  g.user_layers.resize(model.user_tower.layers.size());
  g.item_layers.resize(model.item_tower.layers.size());
  for (std::size_t l = 0; l < g.user_layers.size(); ++l) {
    g.user_layers[l].weight = Eigen::MatrixXd::Zero(model.user_tower.layers[l].weight.rows(),
                                                    model.user_tower.layers[l].weight.cols());
    g.user_layers[l].bias = Eigen::VectorXd::Zero(model.user_tower.layers[l].bias.size());
  }
  for (std::size_t l = 0; l < g.item_layers.size(); ++l) {
    g.item_layers[l].weight = Eigen::MatrixXd::Zero(model.item_tower.layers[l].weight.rows(),
                                                    model.item_tower.layers[l].weight.cols());
    g.item_layers[l].bias = Eigen::VectorXd::Zero(model.item_tower.layers[l].bias.size());
  }
  return g;
}

namespace {

// Distributes one entity's input gradient onto the id table, semantic
// tables, and the mean-pooled members.
void scatter_input_grad(const RecModel& model, bool is_user, const EntityForward& fwd,
                        std::int32_t entity, const Eigen::VectorXd& input_grad, double scale,
                        RecGradients& grads) {
  const int d = model.embed_dim;
  auto& own_id = is_user ? grads.user_id : grads.item_id;
  auto& seq_table = is_user ? grads.item_id : grads.user_id;
  auto& sem = is_user ? grads.user_sem : grads.item_sem;
  const bool use_feature = is_user ? model.flags.user_feature : model.flags.item_feature;
  const bool use_linkage = is_user ? model.flags.user_linkage : model.flags.item_linkage;

  own_id.row(entity) += scale * input_grad.segment(0, d).transpose();
  if (use_feature && fwd.sid != nullptr) {
    const int sem_dim = d / model.layers();
    for (int l = 0; l < model.layers(); ++l) {
      sem[static_cast<std::size_t>(l)].row((*fwd.sid)[static_cast<std::size_t>(l)]) +=
          scale * input_grad.segment(d + l * sem_dim, sem_dim).transpose();
    }
  }
  if (!fwd.sequence.empty()) {
    const double inv = scale / static_cast<double>(fwd.sequence.size());
    for (const auto member : fwd.sequence) {
      seq_table.row(member) += inv * input_grad.segment(2 * d, d).transpose();
    }
  }
  if (use_linkage && !fwd.neighbors.empty()) {
    const double inv = scale / static_cast<double>(fwd.neighbors.size());
    for (const auto member : fwd.neighbors) {
      own_id.row(member) += inv * input_grad.segment(3 * d, d).transpose();
    }
  }
}

void accumulate_tower(const nn::Mlp& tower, const nn::Mlp::Cache& cache,
                      const Eigen::VectorXd& upstream, double scale,
                      std::vector<nn::DenseLayer::Grads>& layer_grads,
                      Eigen::VectorXd& input_grad) {
  const auto g = tower.backward(cache, upstream);
  for (std::size_t l = 0; l < layer_grads.size(); ++l) {
    layer_grads[l].weight += scale * g.layer[l].weight;
    layer_grads[l].bias += scale * g.layer[l].bias;
  }
  input_grad = g.input;
}

struct AdamStates {
  nn::AdamState user_id, item_id;
  std::vector<nn::AdamState> user_sem, item_sem;
  std::vector<nn::AdamState> user_w, user_b, item_w, item_b;

  explicit AdamStates(const RecModel& model)
      : user_sem(model.user_sem.size()),
        item_sem(model.item_sem.size()),
        user_w(model.user_tower.layers.size()),
        user_b(model.user_tower.layers.size()),
        item_w(model.item_tower.layers.size()),
        item_b(model.item_tower.layers.size()) {}
};

void apply_adam(RecModel& model, const RecGradients& grads, AdamStates& states,
                const nn::AdamConfig& config) {
  adam_step(model.user_id.rows, grads.user_id, states.user_id, config);
  adam_step(model.item_id.rows, grads.item_id, states.item_id, config);
  for (std::size_t l = 0; l < model.user_sem.size(); ++l) {
    adam_step(model.user_sem[l].rows, grads.user_sem[l], states.user_sem[l], config);
  }
  for (std::size_t l = 0; l < model.item_sem.size(); ++l) {
    adam_step(model.item_sem[l].rows, grads.item_sem[l], states.item_sem[l], config);
  }
  for (std::size_t l = 0; l < model.user_tower.layers.size(); ++l) {
    adam_step(model.user_tower.layers[l].weight, grads.user_layers[l].weight, states.user_w[l],
              config);
    adam_step(model.user_tower.layers[l].bias, grads.user_layers[l].bias, states.user_b[l], config);
  }
  for (std::size_t l = 0; l < model.item_tower.layers.size(); ++l) {
    adam_step(model.item_tower.layers[l].weight, grads.item_layers[l].weight, states.item_w[l],
              config);
    adam_step(model.item_tower.layers[l].bias, grads.item_layers[l].bias, states.item_b[l], config);
  }
}

}  // namespace

double accumulate_sample_gradients(const RecModel& model, SampleContext& context,
                                   const aug::NeighborCache& user_neighbors,
                                   const aug::NeighborCache& item_neighbors, std::int32_t user,
                                   std::int32_t positive, std::int32_t negative,
                                   std::int64_t timestamp, double scale, RecGradients& grads) {
  auto user_fwd = forward_user(model, context, user_neighbors, user, timestamp);
  auto pos_fwd = forward_item(model, context, item_neighbors, positive, timestamp);
  auto neg_fwd = forward_item(model, context, item_neighbors, negative, timestamp);

  const double tp = user_fwd.top.dot(pos_fwd.top);
  const double tn = user_fwd.top.dot(neg_fwd.top);
  const double yp = nn::sigmoid(tp);
  const double yn = nn::sigmoid(tn);
  const double loss = bpr_loss(yp, yn);

  const double ddiff = nn::sigmoid(yp - yn) - 1.0;
  const double dtp = ddiff * yp * (1.0 - yp);
  const double dtn = -ddiff * yn * (1.0 - yn);

  const Eigen::VectorXd dzu = dtp * pos_fwd.top + dtn * neg_fwd.top;
  const Eigen::VectorXd dzp = dtp * user_fwd.top;
  const Eigen::VectorXd dzn = dtn * user_fwd.top;

  Eigen::VectorXd input_grad;
  accumulate_tower(model.user_tower, user_fwd.cache, dzu, scale, grads.user_layers, input_grad);
  scatter_input_grad(model, true, user_fwd, user, input_grad, scale, grads);
  accumulate_tower(model.item_tower, pos_fwd.cache, dzp, scale, grads.item_layers, input_grad);
  scatter_input_grad(model, false, pos_fwd, positive, input_grad, scale, grads);
  accumulate_tower(model.item_tower, neg_fwd.cache, dzn, scale, grads.item_layers, input_grad);
  scatter_input_grad(model, false, neg_fwd, negative, input_grad, scale, grads);
  return loss;
}

TrainHistory train(RecModel& model, const data::SplitDataset& split, SampleContext& context,
                   const aug::NeighborCache& user_neighbors, const aug::NeighborCache& item_neighbors,
                   const data::InteractionSets& train_sets, const data::InteractionSets& log_sets,
                   Rng& rng, const TrainOptions& options) {
  if (split.train.empty()) throw std::invalid_argument("train: empty train split");
  TrainHistory history;

  const data::NegativeSampler sampler(train_sets, model.item_id.vocab());
  AdamStates states(model);
  const nn::AdamConfig adam_config{options.alpha, 0.9, 0.999, 1e-8};

  const auto valid_samples = metrics::to_eval_samples(split.valid);
  const std::vector<int> valid_k{options.valid_k};

  std::vector<std::size_t> order(split.train.size());
  std::iota(order.begin(), order.end(), 0);

  RecModel best = model;
  double best_recall = -1.0;
  int since_best = 0;

  for (int epoch = 0; epoch < options.epochs; ++epoch) {
    Rng epoch_rng = rng.fork(0x400 + static_cast<std::uint64_t>(epoch));
    epoch_rng.shuffle(order);
    Rng neg_rng = rng.fork(0x500 + static_cast<std::uint64_t>(epoch));

    double epoch_loss = 0.0;
    std::size_t counted = 0;
    bool finite = true;

    for (std::size_t start = 0; start < order.size() && finite;
         start += static_cast<std::size_t>(options.batch)) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(options.batch));
      RecGradients grads = RecGradients::zeros(model);
      const double scale = 1.0 / static_cast<double>(end - start);
      double batch_loss = 0.0;

      for (std::size_t k = start; k < end; ++k) {
        const auto& rec = split.train[order[k]];
        if (!sampler.has_candidates(rec.user)) continue;
        const auto negative = sampler.sample(rec.user, neg_rng);
        batch_loss += accumulate_sample_gradients(model, context, user_neighbors, item_neighbors,
                                                  rec.user, rec.item, negative, rec.timestamp,
                                                  scale, grads);
        counted += 1;
      }

      if (!std::isfinite(batch_loss)) {
        finite = false;
        break;
      }
      epoch_loss += batch_loss;
      apply_adam(model, grads, states, adam_config);
    }

    if (!finite) {
      history.diverged = true;
      if (best_recall >= 0.0) model = best;
      break;
    }
    history.train_loss.push_back(counted > 0 ? epoch_loss / static_cast<double>(counted) : 0.0);

    if (!valid_samples.empty()) {
      auto scorer = make_scorer(model, context, user_neighbors, item_neighbors);
      const auto report =
          metrics::evaluate(valid_samples, options.eval_batch, valid_k, log_sets, scorer);
      const double recall = report.recall.front();
      history.valid_recall.push_back(recall);
      history.valid_ndcg.push_back(report.ndcg.front());
      if (recall > best_recall) {
        best_recall = recall;
        best = model;
        history.best_epoch = epoch;
        since_best = 0;
      } else {
        since_best += 1;
        if (since_best >= options.patience) break;
      }
    }
  }

  if (!valid_samples.empty() && best_recall >= 0.0 && !history.diverged) {
    model = best;
  }
  if (history.best_epoch < 0) {
    history.best_epoch = static_cast<int>(history.train_loss.size()) - 1;
  }
  return history;
}

void RecModel::save(const std::filesystem::path& path) const {
  io::TensorFile file;
  file.put_scalar("embed_dim", embed_dim);
  file.put_scalar("layers", layers());
  file.put_scalar("flag_user_feature", flags.user_feature ? 1.0 : 0.0);
  file.put_scalar("flag_item_feature", flags.item_feature ? 1.0 : 0.0);
  file.put_scalar("flag_user_linkage", flags.user_linkage ? 1.0 : 0.0);
  file.put_scalar("flag_item_linkage", flags.item_linkage ? 1.0 : 0.0);
  file.put_scalar("flag_latent_linkage", flags.latent_linkage ? 1.0 : 0.0);
  file.put("user_id", user_id.rows);
  file.put("item_id", item_id.rows);
  for (std::size_t l = 0; l < user_sem.size(); ++l) {
    file.put("user_sem_" + std::to_string(l), user_sem[l].rows);
    file.put("item_sem_" + std::to_string(l), item_sem[l].rows);
  }
  const auto put_tower = [&file](const std::string& prefix, const nn::Mlp& tower) {
    file.put_scalar(prefix + "_layers", static_cast<double>(tower.layers.size()));
    for (std::size_t l = 0; l < tower.layers.size(); ++l) {
      file.put(prefix + "_w" + std::to_string(l), tower.layers[l].weight);
      file.put(prefix + "_b" + std::to_string(l), tower.layers[l].bias);
    }
  };
  put_tower("user_tower", user_tower);
  put_tower("item_tower", item_tower);
  file.save(path);
}

RecModel RecModel::load(const std::filesystem::path& path) {
  const auto file = io::TensorFile::load(path);
  RecModel model;
  model.embed_dim = static_cast<int>(file.scalar_int("embed_dim"));
  const auto layers = file.scalar_int("layers");
  model.flags.user_feature = file.scalar("flag_user_feature") != 0.0;
  model.flags.item_feature = file.scalar("flag_item_feature") != 0.0;
  model.flags.user_linkage = file.scalar("flag_user_linkage") != 0.0;
  model.flags.item_linkage = file.scalar("flag_item_linkage") != 0.0;
  model.flags.latent_linkage = file.scalar("flag_latent_linkage") != 0.0;
  model.user_id = {file.matrix("user_id")};
  model.item_id = {file.matrix("item_id")};
  for (std::int64_t l = 0; l < layers; ++l) {
    model.user_sem.push_back({file.matrix("user_sem_" + std::to_string(l))});
    model.item_sem.push_back({file.matrix("item_sem_" + std::to_string(l))});
  }
  const auto get_tower = [&file](const std::string& prefix) {
    nn::Mlp tower;
    const auto n = file.scalar_int(prefix + "_layers");
    for (std::int64_t l = 0; l < n; ++l) {
      nn::DenseLayer layer;
      layer.weight = file.matrix(prefix + "_w" + std::to_string(l));
      layer.bias = file.vector(prefix + "_b" + std::to_string(l));
      tower.layers.push_back(std::move(layer));
    }
    return tower;
  };
  model.user_tower = get_tower("user_tower");
  model.item_tower = get_tower("item_tower");
  return model;
}

}  // namespace dqrec::rec
