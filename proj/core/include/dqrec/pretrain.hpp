#pragma once

#include "dqrec/data.hpp"
#include "dqrec/nn.hpp"
#include "dqrec/rng.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace dqrec::pretrain {

// Entity id column followed by categorical attribute columns.
struct AttributeTable {
  std::vector<std::string> columns;  // attribute column names
  std::unordered_map<std::string, std::vector<std::string>> rows;
};

AttributeTable load_attributes(const std::filesystem::path& path, const data::CsvFormat& format);

struct FeatureFamily {
  std::string name;
  std::int32_t vocab = 1;  // slot 0 is the "unknown" value
};

// Categorical feature assignment for every user and item. Unknown or
// missing values map to slot 0. Items always carry a derived log-scaled
// popularity bucket; users fall back to an activity decile when no
// attribute file is given.
struct FeatureSchema {
  std::vector<FeatureFamily> user_families;
  std::vector<FeatureFamily> item_families;
  // values[family][entity] -> vocab index
  std::vector<std::vector<std::int32_t>> user_values;
  std::vector<std::vector<std::int32_t>> item_values;
  // index -> label, for reports ("" for unknown)
  std::vector<std::vector<std::string>> user_value_names;
  std::vector<std::vector<std::string>> item_value_names;

  std::int32_t user_count() const {
    return user_values.empty() ? 0 : static_cast<std::int32_t>(user_values.front().size());
  }
  std::int32_t item_count() const {
    return item_values.empty() ? 0 : static_cast<std::int32_t>(item_values.front().size());
  }
};

FeatureSchema build_feature_schema(const data::InteractionLog& log,
                                   const std::vector<data::InteractionRecord>& train,
                                   const std::optional<AttributeTable>& user_attrs,
                                   const std::optional<AttributeTable>& item_attrs);

// Feature-only dual tower. No entity ids enter anywhere; rows are a pure
// function of features and sequences.
struct PretrainModel {
  std::vector<nn::EmbeddingTable> user_tables;  // per user family
  std::vector<nn::EmbeddingTable> item_tables;  // per item family
  nn::Mlp user_tower;
  nn::Mlp item_tower;
  int feat_dim = 64;
  int out_dim = 64;

  int user_input_dim() const;
  int item_input_dim() const;

  // Concatenated own-family embeddings.
  Eigen::VectorXd user_feature_vector(const FeatureSchema& schema, std::int32_t user) const;
  Eigen::VectorXd item_feature_vector(const FeatureSchema& schema, std::int32_t item) const;

  // [own features || mean of sequence neighbors' features]; the neighbor
  // part is zero for an empty sequence.
  Eigen::VectorXd user_input(const FeatureSchema& schema, std::int32_t user,
                             std::span<const std::int32_t> sequence) const;
  Eigen::VectorXd item_input(const FeatureSchema& schema, std::int32_t item,
                             std::span<const std::int32_t> sequence) const;

  Eigen::VectorXd user_embed(const FeatureSchema& schema, std::int32_t user,
                             std::span<const std::int32_t> sequence) const;
  Eigen::VectorXd item_embed(const FeatureSchema& schema, std::int32_t item,
                             std::span<const std::int32_t> sequence) const;

  void save(const std::filesystem::path& path) const;
  static PretrainModel load(const std::filesystem::path& path, const FeatureSchema& schema);
};

struct PretrainOptions {
  int epochs = 10;
  int batch = 1024;
  double alpha = 1e-3;
  int patience = 3;
  int hidden_dim = 128;
  int out_dim = 64;
  int feat_dim = 64;
};

struct PretrainHistory {
  std::vector<double> train_loss;
  std::vector<double> valid_loss;
  int best_epoch = -1;
};

// BPR over (user, positive, sampled negative) triples with per-sample
// sequences truncated strictly before the sample timestamp. Early-stops on
// validation BPR loss when a validation slice is provided.
PretrainModel pretrain(const FeatureSchema& schema, const std::vector<data::InteractionRecord>& train,
                       const std::vector<data::InteractionRecord>& valid,
                       const data::SequenceStore& sequences, const data::InteractionSets& train_sets,
                       Rng& rng, const PretrainOptions& options = {},
                       PretrainHistory* history = nullptr);

struct RepresentationMatrix {
  std::string kind;                     // "user" or "item"
  Eigen::MatrixXd Z;                    // N x d, one row per train entity
  std::vector<std::int32_t> entities;   // row -> dense entity id
  std::vector<std::int64_t> timestamps; // row -> latest train interaction

  std::optional<Eigen::Index> row_of(std::int32_t entity) const;

  void save(const std::filesystem::path& path, const std::filesystem::path& row_map_path,
            const data::IdMap& ids) const;
  static RepresentationMatrix load(const std::filesystem::path& path);
};

// One row per entity appearing in train, from its features and capped train
// sequence; the row timestamp is the entity's most recent train interaction.
RepresentationMatrix export_representations(const PretrainModel& model, const FeatureSchema& schema,
                                            const data::SequenceStore& sequences,
                                            const std::string& kind);

}  // namespace dqrec::pretrain
