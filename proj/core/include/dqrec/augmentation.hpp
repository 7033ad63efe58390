#pragma once

#include "dqrec/pretrain.hpp"
#include "dqrec/quantizer.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace dqrec::aug {

struct RepEntry {
  std::int32_t entity = -1;
  std::int64_t timestamp = 0;
  Eigen::VectorXd zhat;                  // quantized representation
  std::vector<Eigen::VectorXd> latents;  // pre-quantization latents, kept for
                                         // second-nearest codeword queries
  vq::SemanticId sid;
};

// One entry per train entity, from its latest-interaction representation.
class RepStore {
 public:
  static RepStore build(const pretrain::RepresentationMatrix& reps, const vq::QuantizerModel& model);

  const RepEntry* find(std::int32_t entity) const;  // nullptr if absent
  const std::vector<RepEntry>& entries() const { return entries_; }  // ascending entity id
  std::size_t size() const { return entries_.size(); }
  int skipped() const { return skipped_; }
  const std::string& kind() const { return kind_; }

  void save(const std::filesystem::path& path) const;
  static RepStore load(const std::filesystem::path& path);

 private:
  std::vector<RepEntry> entries_;
  std::string kind_;
  int skipped_ = 0;
};

// Top-k entries by squared distance to the query vector; `exclude` drops
// that entity; distance ties break by ascending entity id. Fewer than k
// entries returns all of them.
std::vector<std::int32_t> explicit_neighbors(const RepStore& store, const Eigen::VectorXd& query,
                                             int k, std::int32_t exclude = -1);

// Second-nearest codeword: nearest excluding the chosen index, ties to the
// lowest index. Requires at least two codewords.
std::int32_t latent_codeword(const Eigen::VectorXd& latent, const vq::Codebook& codebook,
                             std::int32_t chosen);

// For each layer, swaps the chosen codeword for its second-nearest
// alternative, decodes, and returns the top-k nearest entities.
std::vector<std::vector<std::int32_t>> latent_neighbors(const RepStore& store,
                                                        const vq::QuantizerModel& model,
                                                        std::int32_t entity, int k);

struct NeighborSet {
  std::vector<std::int32_t> explicit_ids;
  std::vector<std::vector<std::int32_t>> latent_ids;  // per layer
  std::vector<std::int32_t> all;                      // sorted union
};

NeighborSet neighbor_union(std::vector<std::int32_t> explicit_ids,
                           std::vector<std::vector<std::int32_t>> latent_ids, std::int32_t self);

// Static per-entity neighbor sets, computed once against a frozen store.
class NeighborCache {
 public:
  static NeighborCache build(const RepStore& store, const vq::QuantizerModel& model, int k_explicit,
                             int k_latent);

  const NeighborSet* find(std::int32_t entity) const;

  // Delimited text: one "entity,neighbor,tag" triple per line, tag is
  // "explicit" or "latent:<layer>".
  void save(const std::filesystem::path& path, const data::IdMap& ids) const;
  static NeighborCache load(const std::filesystem::path& path, const data::IdMap& ids);

  std::size_t size() const { return entities_.size(); }
  const std::vector<std::int32_t>& entities() const { return entities_; }

 private:
  std::vector<std::int32_t> entities_;  // ascending
  std::vector<NeighborSet> sets_;
};

}  // namespace dqrec::aug
