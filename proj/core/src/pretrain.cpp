#include "dqrec/pretrain.hpp"

#include "dqrec/tensor_file.hpp"
#include "dqrec/text.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace dqrec::pretrain {

AttributeTable load_attributes(const std::filesystem::path& path, const data::CsvFormat& format) {
  const auto lines = text::read_lines(path);
  AttributeTable table;
  std::size_t first = 0;
  std::size_t n_cols = 0;
  if (format.has_header && !lines.empty()) {
    auto header = text::split(lines[0], format.delimiter);
    if (header.size() < 2) throw std::runtime_error(path.string() + ": header needs >= 2 columns");
    table.columns.assign(header.begin() + 1, header.end());
    n_cols = table.columns.size();
    first = 1;
  }
  for (std::size_t i = first; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    auto fields = text::split(lines[i], format.delimiter);
    if (fields.size() < 2) {
      throw std::runtime_error(path.string() + ":" + std::to_string(i + 1) +
                               ": expected id plus at least one attribute");
    }
    if (table.columns.empty()) {
      n_cols = fields.size() - 1;
      for (std::size_t c = 0; c < n_cols; ++c) table.columns.push_back("attr" + std::to_string(c + 1));
    }
    if (fields.size() - 1 != n_cols) {
      throw std::runtime_error(path.string() + ":" + std::to_string(i + 1) +
                               ": inconsistent column count");
    }
    std::vector<std::string> values(fields.begin() + 1, fields.end());
    table.rows[text::strip(fields[0])] = std::move(values);
  }
  return table;
}

namespace {

struct FamilyBuild {
  FeatureFamily family;
  std::vector<std::int32_t> values;
  std::vector<std::string> value_names;
};

// Interns one attribute column over entities in dense-id order.
FamilyBuild build_attr_family(const std::string& name, const AttributeTable& attrs,
                              std::size_t column, const data::IdMap& ids) {
  FamilyBuild out;
  out.family.name = name;
  out.value_names.push_back("");  // unknown slot
  std::unordered_map<std::string, std::int32_t> interned;
  out.values.resize(static_cast<std::size_t>(ids.size()), 0);
  for (std::int32_t e = 0; e < ids.size(); ++e) {
    auto it = attrs.rows.find(ids.external(e));
    if (it == attrs.rows.end()) continue;
    const std::string& value = it->second[column];
    if (value.empty()) continue;
    auto found = interned.find(value);
    std::int32_t idx;
    if (found == interned.end()) {
      idx = static_cast<std::int32_t>(out.value_names.size());
      interned.emplace(value, idx);
      out.value_names.push_back(value);
    } else {
      idx = found->second;
    }
    out.values[static_cast<std::size_t>(e)] = idx;
  }
  out.family.vocab = static_cast<std::int32_t>(out.value_names.size());
  return out;
}

// 10 equal-frequency buckets over train interaction counts, ties by id.
FamilyBuild build_activity_family(const std::string& name, const std::vector<std::int64_t>& counts) {
  FamilyBuild out;
  out.family.name = name;
  out.family.vocab = 11;
  out.value_names.push_back("");
  for (int b = 0; b < 10; ++b) out.value_names.push_back("decile" + std::to_string(b));
  const std::size_t n = counts.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (counts[a] != counts[b]) return counts[a] < counts[b];
    return a < b;
  });
  out.values.resize(n, 0);
  for (std::size_t rank = 0; rank < n; ++rank) {
    const auto decile = static_cast<std::int32_t>(rank * 10 / n);
    out.values[order[rank]] = 1 + decile;
  }
  return out;
}

// Buckets by floor(log2(1 + count)), clipped to 10 buckets.
FamilyBuild build_popularity_family(const std::string& name, const std::vector<std::int64_t>& counts) {
  FamilyBuild out;
  out.family.name = name;
  out.family.vocab = 11;
  out.value_names.push_back("");
  for (int b = 0; b < 10; ++b) out.value_names.push_back("pop" + std::to_string(b));
  out.values.resize(counts.size(), 0);
  for (std::size_t e = 0; e < counts.size(); ++e) {
    const double lg = std::log2(1.0 + static_cast<double>(counts[e]));
    const auto bucket = std::min<std::int32_t>(9, static_cast<std::int32_t>(lg));
    out.values[e] = 1 + bucket;
  }
  return out;
}

}  // namespace

FeatureSchema build_feature_schema(const data::InteractionLog& log,
                                   const std::vector<data::InteractionRecord>& train,
                                   const std::optional<AttributeTable>& user_attrs,
                                   const std::optional<AttributeTable>& item_attrs) {
  std::vector<std::int64_t> user_counts(static_cast<std::size_t>(log.user_count()), 0);
  std::vector<std::int64_t> item_counts(static_cast<std::size_t>(log.item_count()), 0);
  for (const auto& rec : train) {
    user_counts[static_cast<std::size_t>(rec.user)] += 1;
    item_counts[static_cast<std::size_t>(rec.item)] += 1;
  }

  FeatureSchema schema;
  const auto add_user = [&](FamilyBuild&& fb) {
    schema.user_families.push_back(fb.family);
    schema.user_values.push_back(std::move(fb.values));
    schema.user_value_names.push_back(std::move(fb.value_names));
  };
  const auto add_item = [&](FamilyBuild&& fb) {
    schema.item_families.push_back(fb.family);
    schema.item_values.push_back(std::move(fb.values));
    schema.item_value_names.push_back(std::move(fb.value_names));
  };

  if (user_attrs && !user_attrs->columns.empty()) {
    for (std::size_t c = 0; c < user_attrs->columns.size(); ++c) {
      add_user(build_attr_family(user_attrs->columns[c], *user_attrs, c, log.users));
    }
  } else {
    add_user(build_activity_family("activity", user_counts));
  }

  if (item_attrs && !item_attrs->columns.empty()) {
    for (std::size_t c = 0; c < item_attrs->columns.size(); ++c) {
      add_item(build_attr_family(item_attrs->columns[c], *item_attrs, c, log.items));
    }
  }
  add_item(build_popularity_family("popularity", item_counts));
  return schema;
}

int PretrainModel::user_input_dim() const {
  return feat_dim * static_cast<int>(user_tables.size() + item_tables.size());
}

int PretrainModel::item_input_dim() const {
  return feat_dim * static_cast<int>(item_tables.size() + user_tables.size());
}

namespace {

Eigen::VectorXd feature_vector(const std::vector<nn::EmbeddingTable>& tables,
                               const std::vector<std::vector<std::int32_t>>& values,
                               std::int32_t entity, int feat_dim) {
  Eigen::VectorXd out(feat_dim * static_cast<int>(tables.size()));
  for (std::size_t f = 0; f < tables.size(); ++f) {
    out.segment(static_cast<Eigen::Index>(f) * feat_dim, feat_dim) =
        tables[f].lookup(values[f][static_cast<std::size_t>(entity)]);
  }
  return out;
}

Eigen::VectorXd mean_feature_vector(const std::vector<nn::EmbeddingTable>& tables,
                                    const std::vector<std::vector<std::int32_t>>& values,
                                    std::span<const std::int32_t> sequence, int feat_dim) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(feat_dim * static_cast<Eigen::Index>(tables.size()));
  if (sequence.empty()) return out;
  for (const std::int32_t neighbor : sequence) {
    out += feature_vector(tables, values, neighbor, feat_dim);
  }
  return out / static_cast<double>(sequence.size());
}

}  // namespace

Eigen::VectorXd PretrainModel::user_feature_vector(const FeatureSchema& schema,
                                                   std::int32_t user) const {
  return feature_vector(user_tables, schema.user_values, user, feat_dim);
}

Eigen::VectorXd PretrainModel::item_feature_vector(const FeatureSchema& schema,
                                                   std::int32_t item) const {
  return feature_vector(item_tables, schema.item_values, item, feat_dim);
}

Eigen::VectorXd PretrainModel::user_input(const FeatureSchema& schema, std::int32_t user,
                                          std::span<const std::int32_t> sequence) const {
  Eigen::VectorXd input(user_input_dim());
  const auto own = user_feature_vector(schema, user);
  input.head(own.size()) = own;
  input.tail(input.size() - own.size()) =
      mean_feature_vector(item_tables, schema.item_values, sequence, feat_dim);
  return input;
}

Eigen::VectorXd PretrainModel::item_input(const FeatureSchema& schema, std::int32_t item,
                                          std::span<const std::int32_t> sequence) const {
  Eigen::VectorXd input(item_input_dim());
  const auto own = item_feature_vector(schema, item);
  input.head(own.size()) = own;
  input.tail(input.size() - own.size()) =
      mean_feature_vector(user_tables, schema.user_values, sequence, feat_dim);
  return input;
}

Eigen::VectorXd PretrainModel::user_embed(const FeatureSchema& schema, std::int32_t user,
                                          std::span<const std::int32_t> sequence) const {
  return user_tower.forward(user_input(schema, user, sequence));
}

Eigen::VectorXd PretrainModel::item_embed(const FeatureSchema& schema, std::int32_t item,
                                          std::span<const std::int32_t> sequence) const {
  return item_tower.forward(item_input(schema, item, sequence));
}

namespace {

struct TowerGrads {
  std::vector<Eigen::MatrixXd> table;   // per family
  std::vector<nn::DenseLayer::Grads> layer;
};

// Accumulates one sample's gradient through a tower and its feature inputs.
void backprop_tower(const nn::Mlp& tower, const nn::Mlp::Cache& cache,
                    const Eigen::VectorXd& upstream,
                    const std::vector<std::vector<std::int32_t>>& own_values,
                    const std::vector<std::vector<std::int32_t>>& neigh_values,
                    std::int32_t entity, std::span<const std::int32_t> sequence, int feat_dim,
                    std::size_t own_families, std::vector<Eigen::MatrixXd>& own_table_grads,
                    std::vector<Eigen::MatrixXd>& neigh_table_grads,
                    std::vector<nn::DenseLayer::Grads>& layer_grads, double scale) {
  const auto grads = tower.backward(cache, upstream);
  for (std::size_t l = 0; l < grads.layer.size(); ++l) {
    layer_grads[l].weight += scale * grads.layer[l].weight;
    layer_grads[l].bias += scale * grads.layer[l].bias;
  }
  // own feature blocks
  for (std::size_t f = 0; f < own_families; ++f) {
    const auto idx = own_values[f][static_cast<std::size_t>(entity)];
    own_table_grads[f].row(idx) +=
        scale * grads.input.segment(static_cast<Eigen::Index>(f) * feat_dim, feat_dim).transpose();
  }
  // neighbor mean blocks: each member gets 1/n of the block gradient
  if (!sequence.empty()) {
    const double inv = 1.0 / static_cast<double>(sequence.size());
    const Eigen::Index offset = static_cast<Eigen::Index>(own_families) * feat_dim;
    for (const std::int32_t neighbor : sequence) {
      for (std::size_t f = 0; f < neigh_table_grads.size(); ++f) {
        const auto idx = neigh_values[f][static_cast<std::size_t>(neighbor)];
        neigh_table_grads[f].row(idx) +=
            scale * inv *
            grads.input.segment(offset + static_cast<Eigen::Index>(f) * feat_dim, feat_dim)
                .transpose();
      }
    }
  }
}

}  // namespace

PretrainModel pretrain(const FeatureSchema& schema, const std::vector<data::InteractionRecord>& train,
                       const std::vector<data::InteractionRecord>& valid,
                       const data::SequenceStore& sequences, const data::InteractionSets& train_sets,
                       Rng& rng, const PretrainOptions& options, PretrainHistory* history) {
  if (train.empty()) throw std::invalid_argument("pretrain: empty train split");

  PretrainModel model;
  model.feat_dim = options.feat_dim;
  model.out_dim = options.out_dim;
  Rng init_rng = rng.fork(0x11);
  for (std::size_t f = 0; f < schema.user_families.size(); ++f) {
    model.user_tables.push_back(
        nn::EmbeddingTable::init(schema.user_families[f].vocab, options.feat_dim, init_rng));
  }
  for (std::size_t f = 0; f < schema.item_families.size(); ++f) {
    model.item_tables.push_back(
        nn::EmbeddingTable::init(schema.item_families[f].vocab, options.feat_dim, init_rng));
  }
  model.user_tower = nn::Mlp::init({model.user_input_dim(), options.hidden_dim, options.out_dim},
                                   init_rng);
  model.item_tower = nn::Mlp::init({model.item_input_dim(), options.hidden_dim, options.out_dim},
                                   init_rng);

  const data::NegativeSampler sampler(train_sets, schema.item_count());

  // Fixed validation triples so the early-stop signal is comparable across
  // epochs.
  std::vector<std::int32_t> valid_negatives;
  if (!valid.empty()) {
    Rng valid_rng = rng.fork(0x22);
    valid_negatives.reserve(valid.size());
    for (const auto& rec : valid) {
      valid_negatives.push_back(sampler.has_candidates(rec.user) ? sampler.sample(rec.user, valid_rng)
                                                                 : -1);
    }
  }

  const auto triple_loss = [&](const data::InteractionRecord& rec, std::int32_t negative) {
    const auto user_seq = sequences.user_sequence_before(rec.user, rec.timestamp);
    const auto pos_seq = sequences.item_sequence_before(rec.item, rec.timestamp);
    const auto neg_seq = sequences.item_sequence_before(negative, rec.timestamp);
    const auto zu = model.user_embed(schema, rec.user, user_seq);
    const auto zp = model.item_embed(schema, rec.item, pos_seq);
    const auto zn = model.item_embed(schema, negative, neg_seq);
    const double yp = nn::sigmoid(zu.dot(zp));
    const double yn = nn::sigmoid(zu.dot(zn));
    return -std::log(nn::sigmoid(yp - yn));
  };

  // Adam state per tensor.
  std::vector<nn::AdamState> user_table_state(model.user_tables.size());
  std::vector<nn::AdamState> item_table_state(model.item_tables.size());
  std::vector<nn::AdamState> user_w_state(model.user_tower.layers.size()),
      user_b_state(model.user_tower.layers.size()), item_w_state(model.item_tower.layers.size()),
      item_b_state(model.item_tower.layers.size());
  const nn::AdamConfig adam_config{options.alpha, 0.9, 0.999, 1e-8};

  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);

  PretrainModel best = model;
  double best_valid = std::numeric_limits<double>::infinity();
  int best_epoch = -1;
  int since_best = 0;

  for (int epoch = 0; epoch < options.epochs; ++epoch) {
    Rng epoch_rng = rng.fork(0x100 + static_cast<std::uint64_t>(epoch));
    epoch_rng.shuffle(order);
    Rng neg_rng = rng.fork(0x200 + static_cast<std::uint64_t>(epoch));

    double epoch_loss = 0.0;
    std::size_t counted = 0;

    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(options.batch)) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(options.batch));

      std::vector<Eigen::MatrixXd> user_table_grads, item_table_grads;
      for (const auto& t : model.user_tables)
        user_table_grads.push_back(Eigen::MatrixXd::Zero(t.rows.rows(), t.rows.cols()));
      for (const auto& t : model.item_tables)
        item_table_grads.push_back(Eigen::MatrixXd::Zero(t.rows.rows(), t.rows.cols()));
      std::vector<nn::DenseLayer::Grads> user_layer_grads(model.user_tower.layers.size());
      std::vector<nn::DenseLayer::Grads> item_layer_grads(model.item_tower.layers.size());
      for (std::size_t l = 0; l < model.user_tower.layers.size(); ++l) {
        user_layer_grads[l].weight = Eigen::MatrixXd::Zero(model.user_tower.layers[l].weight.rows(),
                                                           model.user_tower.layers[l].weight.cols());
        user_layer_grads[l].bias = Eigen::VectorXd::Zero(model.user_tower.layers[l].bias.size());
      }
      for (std::size_t l = 0; l < model.item_tower.layers.size(); ++l) {
        item_layer_grads[l].weight = Eigen::MatrixXd::Zero(model.item_tower.layers[l].weight.rows(),
                                                           model.item_tower.layers[l].weight.cols());
        item_layer_grads[l].bias = Eigen::VectorXd::Zero(model.item_tower.layers[l].bias.size());
      }

      const double scale = 1.0 / static_cast<double>(end - start);

      for (std::size_t k = start; k < end; ++k) {
        const auto& rec = train[order[k]];
        if (!sampler.has_candidates(rec.user)) continue;
        const std::int32_t negative = sampler.sample(rec.user, neg_rng);

        const auto user_seq = sequences.user_sequence_before(rec.user, rec.timestamp);
        const auto pos_seq = sequences.item_sequence_before(rec.item, rec.timestamp);
        const auto neg_seq = sequences.item_sequence_before(negative, rec.timestamp);

        nn::Mlp::Cache user_cache, pos_cache, neg_cache;
        const auto zu =
            model.user_tower.forward(model.user_input(schema, rec.user, user_seq), user_cache);
        const auto zp =
            model.item_tower.forward(model.item_input(schema, rec.item, pos_seq), pos_cache);
        const auto zn =
            model.item_tower.forward(model.item_input(schema, negative, neg_seq), neg_cache);

        const double tp = zu.dot(zp);
        const double tn = zu.dot(zn);
        const double yp = nn::sigmoid(tp);
        const double yn = nn::sigmoid(tn);
        const double diff = yp - yn;
        const double loss = -std::log(nn::sigmoid(diff));
        epoch_loss += loss;
        counted += 1;

        const double ddiff = nn::sigmoid(diff) - 1.0;  // d loss / d diff
        const double dyp = ddiff;
        const double dyn = -ddiff;
        const double dtp = dyp * yp * (1.0 - yp);
        const double dtn = dyn * yn * (1.0 - yn);

        const Eigen::VectorXd dzu = dtp * zp + dtn * zn;
        const Eigen::VectorXd dzp = dtp * zu;
        const Eigen::VectorXd dzn = dtn * zu;

        backprop_tower(model.user_tower, user_cache, dzu, schema.user_values, schema.item_values,
                       rec.user, user_seq, options.feat_dim, model.user_tables.size(),
                       user_table_grads, item_table_grads, user_layer_grads, scale);
        backprop_tower(model.item_tower, pos_cache, dzp, schema.item_values, schema.user_values,
                       rec.item, pos_seq, options.feat_dim, model.item_tables.size(),
                       item_table_grads, user_table_grads, item_layer_grads, scale);
        backprop_tower(model.item_tower, neg_cache, dzn, schema.item_values, schema.user_values,
                       negative, neg_seq, options.feat_dim, model.item_tables.size(),
                       item_table_grads, user_table_grads, item_layer_grads, scale);
      }

      for (std::size_t f = 0; f < model.user_tables.size(); ++f) {
        adam_step(model.user_tables[f].rows, user_table_grads[f], user_table_state[f], adam_config);
      }
      for (std::size_t f = 0; f < model.item_tables.size(); ++f) {
        adam_step(model.item_tables[f].rows, item_table_grads[f], item_table_state[f], adam_config);
      }
      for (std::size_t l = 0; l < model.user_tower.layers.size(); ++l) {
        adam_step(model.user_tower.layers[l].weight, user_layer_grads[l].weight, user_w_state[l],
                  adam_config);
        adam_step(model.user_tower.layers[l].bias, user_layer_grads[l].bias, user_b_state[l],
                  adam_config);
      }
      for (std::size_t l = 0; l < model.item_tower.layers.size(); ++l) {
        adam_step(model.item_tower.layers[l].weight, item_layer_grads[l].weight, item_w_state[l],
                  adam_config);
        adam_step(model.item_tower.layers[l].bias, item_layer_grads[l].bias, item_b_state[l],
                  adam_config);
      }
    }

    const double train_loss = counted > 0 ? epoch_loss / static_cast<double>(counted) : 0.0;
    if (!std::isfinite(train_loss)) {
      throw std::runtime_error("pretrain: diverged (non-finite loss at epoch " +
                               std::to_string(epoch) + ")");
    }
    if (history) history->train_loss.push_back(train_loss);

    if (!valid.empty()) {
      double vloss = 0.0;
      std::size_t vcount = 0;
      for (std::size_t i = 0; i < valid.size(); ++i) {
        if (valid_negatives[i] < 0) continue;
        vloss += triple_loss(valid[i], valid_negatives[i]);
        vcount += 1;
      }
      const double valid_loss = vcount > 0 ? vloss / static_cast<double>(vcount) : 0.0;
      if (history) history->valid_loss.push_back(valid_loss);
      if (valid_loss < best_valid) {
        best_valid = valid_loss;
        best = model;
        best_epoch = epoch;
        since_best = 0;
      } else {
        since_best += 1;
        if (since_best >= options.patience) break;
      }
    }
  }

  if (!valid.empty() && best_epoch >= 0) {
    if (history) history->best_epoch = best_epoch;
    return best;
  }
  if (history) history->best_epoch = options.epochs - 1;
  return model;
}

std::optional<Eigen::Index> RepresentationMatrix::row_of(std::int32_t entity) const {
  const auto it = std::lower_bound(entities.begin(), entities.end(), entity);
  if (it == entities.end() || *it != entity) return std::nullopt;
  return static_cast<Eigen::Index>(it - entities.begin());
}

void RepresentationMatrix::save(const std::filesystem::path& path,
                                const std::filesystem::path& row_map_path,
                                const data::IdMap& ids) const {
  io::TensorFile file;
  file.put_scalar("kind_id", kind == "item" ? 1.0 : 0.0);
  file.put("Z", Z);
  Eigen::VectorXd ent(static_cast<Eigen::Index>(entities.size()));
  Eigen::VectorXd ts(static_cast<Eigen::Index>(timestamps.size()));
  for (std::size_t i = 0; i < entities.size(); ++i) {
    ent(static_cast<Eigen::Index>(i)) = entities[i];
    ts(static_cast<Eigen::Index>(i)) = static_cast<double>(timestamps[i]);
  }
  file.put("entities", ent);
  file.put("timestamps", ts);
  file.save(path);

  auto out = text::open_out(row_map_path);
  for (std::size_t i = 0; i < entities.size(); ++i) {
    out << i << ',' << ids.external(entities[i]) << '\n';
  }
}

RepresentationMatrix RepresentationMatrix::load(const std::filesystem::path& path) {
  const auto file = io::TensorFile::load(path);
  RepresentationMatrix rep;
  rep.kind = file.scalar_int("kind_id") == 1 ? "item" : "user";
  rep.Z = file.matrix("Z");
  const auto ent = file.vector("entities");
  const auto ts = file.vector("timestamps");
  rep.entities.resize(static_cast<std::size_t>(ent.size()));
  rep.timestamps.resize(static_cast<std::size_t>(ts.size()));
  for (Eigen::Index i = 0; i < ent.size(); ++i) {
    rep.entities[static_cast<std::size_t>(i)] = static_cast<std::int32_t>(ent(i));
    rep.timestamps[static_cast<std::size_t>(i)] = static_cast<std::int64_t>(ts(i));
  }
  return rep;
}

RepresentationMatrix export_representations(const PretrainModel& model, const FeatureSchema& schema,
                                            const data::SequenceStore& sequences,
                                            const std::string& kind) {
  const bool is_user = kind == "user";
  if (!is_user && kind != "item") throw std::invalid_argument("export_representations: bad kind");
  const std::int32_t count = is_user ? schema.user_count() : schema.item_count();

  RepresentationMatrix rep;
  rep.kind = kind;
  std::vector<Eigen::VectorXd> rows;
  for (std::int32_t e = 0; e < count; ++e) {
    const std::int64_t last =
        is_user ? sequences.last_user_timestamp(e) : sequences.last_item_timestamp(e);
    if (last < 0) continue;  // not in train
    const auto seq = is_user ? sequences.user_sequence(e) : sequences.item_sequence(e);
    rows.push_back(is_user ? model.user_embed(schema, e, seq) : model.item_embed(schema, e, seq));
    rep.entities.push_back(e);
    rep.timestamps.push_back(last);
  }
  rep.Z.resize(static_cast<Eigen::Index>(rows.size()), model.out_dim);
  for (std::size_t i = 0; i < rows.size(); ++i) rep.Z.row(static_cast<Eigen::Index>(i)) = rows[i];
  return rep;
}

void PretrainModel::save(const std::filesystem::path& path) const {
  io::TensorFile file;
  file.put_scalar("feat_dim", feat_dim);
  file.put_scalar("out_dim", out_dim);
  file.put_scalar("user_families", static_cast<double>(user_tables.size()));
  file.put_scalar("item_families", static_cast<double>(item_tables.size()));
  for (std::size_t f = 0; f < user_tables.size(); ++f) {
    file.put("user_feat_" + std::to_string(f), user_tables[f].rows);
  }
  for (std::size_t f = 0; f < item_tables.size(); ++f) {
    file.put("item_feat_" + std::to_string(f), item_tables[f].rows);
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

PretrainModel PretrainModel::load(const std::filesystem::path& path, const FeatureSchema& schema) {
  const auto file = io::TensorFile::load(path);
  PretrainModel model;
  model.feat_dim = static_cast<int>(file.scalar_int("feat_dim"));
  model.out_dim = static_cast<int>(file.scalar_int("out_dim"));
  const auto user_families = file.scalar_int("user_families");
  const auto item_families = file.scalar_int("item_families");
  if (user_families != static_cast<std::int64_t>(schema.user_families.size()) ||
      item_families != static_cast<std::int64_t>(schema.item_families.size())) {
    throw std::runtime_error("PretrainModel::load: schema family count mismatch");
  }
  for (std::int64_t f = 0; f < user_families; ++f) {
    model.user_tables.push_back({file.matrix("user_feat_" + std::to_string(f))});
  }
  for (std::int64_t f = 0; f < item_families; ++f) {
    model.item_tables.push_back({file.matrix("item_feat_" + std::to_string(f))});
  }
  const auto get_tower = [&file](const std::string& prefix) {
    nn::Mlp tower;
    const auto layers = file.scalar_int(prefix + "_layers");
    for (std::int64_t l = 0; l < layers; ++l) {
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

}  // namespace dqrec::pretrain
