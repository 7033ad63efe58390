#include "dqrec/augmentation.hpp"

#include "dqrec/tensor_file.hpp"
#include "dqrec/text.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace dqrec::aug {

RepStore RepStore::build(const pretrain::RepresentationMatrix& reps,
                         const vq::QuantizerModel& model) {
  RepStore store;
  store.kind_ = reps.kind;
  for (std::size_t row = 0; row < reps.entities.size(); ++row) {
    const Eigen::VectorXd z = reps.Z.row(static_cast<Eigen::Index>(row)).transpose();
    if (!z.allFinite()) {
      store.skipped_ += 1;
      continue;
    }
    RepEntry entry;
    entry.entity = reps.entities[row];
    entry.timestamp = reps.timestamps[row];
    entry.latents = vq::encode(z, model.basis);
    entry.sid = vq::assign_codewords(entry.latents, model.codebooks);
    entry.zhat = vq::decode(entry.sid, model);
    store.entries_.push_back(std::move(entry));
  }
  // Representation rows come in ascending entity order already; keep the
  // invariant explicit.
  std::sort(store.entries_.begin(), store.entries_.end(),
            [](const RepEntry& a, const RepEntry& b) { return a.entity < b.entity; });
  return store;
}

const RepEntry* RepStore::find(std::int32_t entity) const {
  const auto it = std::lower_bound(entries_.begin(), entries_.end(), entity,
                                   [](const RepEntry& e, std::int32_t v) { return e.entity < v; });
  if (it == entries_.end() || it->entity != entity) return nullptr;
  return &*it;
}

std::vector<std::int32_t> explicit_neighbors(const RepStore& store, const Eigen::VectorXd& query,
                                             int k, std::int32_t exclude) {
  if (store.size() == 0) throw std::runtime_error("explicit_neighbors: empty store");
  std::vector<std::pair<double, std::int32_t>> scored;
  scored.reserve(store.size());
  for (const auto& entry : store.entries()) {
    if (entry.entity == exclude) continue;
    scored.emplace_back((query - entry.zhat).squaredNorm(), entry.entity);
  }
  const std::size_t take = std::min<std::size_t>(static_cast<std::size_t>(std::max(k, 0)),
                                                 scored.size());
  std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(take),
                    scored.end());
  std::vector<std::int32_t> out;
  out.reserve(take);
  for (std::size_t i = 0; i < take; ++i) out.push_back(scored[i].second);
  return out;
}

std::int32_t latent_codeword(const Eigen::VectorXd& latent, const vq::Codebook& codebook,
                             std::int32_t chosen) {
  if (codebook.size() < 2) {
    throw std::runtime_error("latent_codeword: need at least two codewords");
  }
  std::int32_t best = -1;
  double best_dist = 0.0;
  for (std::int32_t j = 0; j < codebook.size(); ++j) {
    if (j == chosen) continue;
    const double dist = (latent - codebook.codewords.row(j).transpose()).squaredNorm();
    if (best < 0 || dist < best_dist) {
      best = j;
      best_dist = dist;
    }
  }
  return best;
}

std::vector<std::vector<std::int32_t>> latent_neighbors(const RepStore& store,
                                                        const vq::QuantizerModel& model,
                                                        std::int32_t entity, int k) {
  const RepEntry* entry = store.find(entity);
  if (!entry) throw std::runtime_error("latent_neighbors: entity not in store");
  std::vector<std::vector<std::int32_t>> out;
  out.reserve(static_cast<std::size_t>(model.layers()));
  for (int l = 0; l < model.layers(); ++l) {
    vq::SemanticId swapped = entry->sid;
    swapped[static_cast<std::size_t>(l)] =
        latent_codeword(entry->latents[static_cast<std::size_t>(l)],
                        model.codebooks[static_cast<std::size_t>(l)],
                        entry->sid[static_cast<std::size_t>(l)]);
    const Eigen::VectorXd latent_rep = vq::decode(swapped, model);
    out.push_back(explicit_neighbors(store, latent_rep, k, entity));
  }
  return out;
}

NeighborSet neighbor_union(std::vector<std::int32_t> explicit_ids,
                           std::vector<std::vector<std::int32_t>> latent_ids, std::int32_t self) {
  NeighborSet set;
  set.explicit_ids = std::move(explicit_ids);
  set.latent_ids = std::move(latent_ids);
  set.all = set.explicit_ids;
  for (const auto& layer : set.latent_ids) {
    set.all.insert(set.all.end(), layer.begin(), layer.end());
  }
  std::sort(set.all.begin(), set.all.end());
  set.all.erase(std::unique(set.all.begin(), set.all.end()), set.all.end());
  set.all.erase(std::remove(set.all.begin(), set.all.end(), self), set.all.end());
  return set;
}

NeighborCache NeighborCache::build(const RepStore& store, const vq::QuantizerModel& model,
                                   int k_explicit, int k_latent) {
  NeighborCache cache;
  for (const auto& entry : store.entries()) {
    auto explicit_ids = explicit_neighbors(store, entry.zhat, k_explicit, entry.entity);
    auto latent_ids = latent_neighbors(store, model, entry.entity, k_latent);
    cache.entities_.push_back(entry.entity);
    cache.sets_.push_back(neighbor_union(std::move(explicit_ids), std::move(latent_ids),
                                         entry.entity));
  }
  return cache;
}

const NeighborSet* NeighborCache::find(std::int32_t entity) const {
  const auto it = std::lower_bound(entities_.begin(), entities_.end(), entity);
  if (it == entities_.end() || *it != entity) return nullptr;
  return &sets_[static_cast<std::size_t>(it - entities_.begin())];
}

void NeighborCache::save(const std::filesystem::path& path, const data::IdMap& ids) const {
  auto out = text::open_out(path);
  for (std::size_t i = 0; i < entities_.size(); ++i) {
    const auto& ext = ids.external(entities_[i]);
    for (const auto n : sets_[i].explicit_ids) {
      out << ext << ',' << ids.external(n) << ",explicit\n";
    }
    for (std::size_t l = 0; l < sets_[i].latent_ids.size(); ++l) {
      for (const auto n : sets_[i].latent_ids[l]) {
        out << ext << ',' << ids.external(n) << ",latent:" << l << '\n';
      }
    }
  }
}

NeighborCache NeighborCache::load(const std::filesystem::path& path, const data::IdMap& ids) {
  NeighborCache cache;
  const auto lines = text::read_lines(path);
  std::int32_t current = -1;
  std::vector<std::int32_t> explicit_ids;
  std::vector<std::vector<std::int32_t>> latent_ids;

  const auto flush = [&]() {
    if (current < 0) return;
    cache.entities_.push_back(current);
    cache.sets_.push_back(neighbor_union(std::move(explicit_ids), std::move(latent_ids), current));
    explicit_ids.clear();
    latent_ids.clear();
  };

  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const auto fields = text::split(lines[i], ",");
    if (fields.size() != 3) {
      throw std::runtime_error(path.string() + ":" + std::to_string(i + 1) + ": expected 3 fields");
    }
    const auto entity = ids.find(fields[0]);
    const auto neighbor = ids.find(fields[1]);
    if (!entity || !neighbor) {
      throw std::runtime_error(path.string() + ":" + std::to_string(i + 1) + ": unknown id");
    }
    if (*entity != current) {
      flush();
      current = *entity;
    }
    if (fields[2] == "explicit") {
      explicit_ids.push_back(*neighbor);
    } else if (fields[2].rfind("latent:", 0) == 0) {
      const auto layer = static_cast<std::size_t>(text::parse_int(fields[2].substr(7)));
      if (latent_ids.size() <= layer) latent_ids.resize(layer + 1);
      latent_ids[layer].push_back(*neighbor);
    } else {
      throw std::runtime_error(path.string() + ":" + std::to_string(i + 1) + ": bad tag '" +
                               fields[2] + "'");
    }
  }
  flush();

  // Saved in ascending entity order, but re-sort defensively for lookups.
  std::vector<std::size_t> order(cache.entities_.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return cache.entities_[a] < cache.entities_[b];
  });
  NeighborCache sorted;
  for (const auto idx : order) {
    sorted.entities_.push_back(cache.entities_[idx]);
    sorted.sets_.push_back(std::move(cache.sets_[idx]));
  }
  return sorted;
}

void RepStore::save(const std::filesystem::path& path) const {
  io::TensorFile file;
  const auto n = static_cast<Eigen::Index>(entries_.size());
  if (n == 0) throw std::runtime_error("RepStore::save: empty store");
  const auto d = entries_.front().zhat.size();
  const auto layers = static_cast<Eigen::Index>(entries_.front().sid.size());
  const auto block = entries_.front().latents.front().size();

  file.put_scalar("kind_id", kind_ == "item" ? 1.0 : 0.0);
  file.put_scalar("skipped", skipped_);
  Eigen::MatrixXd zhat(n, d), sid(n, layers), latents(n, layers * block);
  Eigen::VectorXd entities(n), timestamps(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& e = entries_[static_cast<std::size_t>(i)];
    zhat.row(i) = e.zhat.transpose();
    entities(i) = e.entity;
    timestamps(i) = static_cast<double>(e.timestamp);
    for (Eigen::Index l = 0; l < layers; ++l) {
      sid(i, l) = e.sid[static_cast<std::size_t>(l)];
      latents.row(i).segment(l * block, block) =
          e.latents[static_cast<std::size_t>(l)].transpose();
    }
  }
  file.put("zhat", zhat);
  file.put("sid", sid);
  file.put("latents", latents);
  file.put("entities", entities);
  file.put("timestamps", timestamps);
  file.put_scalar("block_dim", static_cast<double>(block));
  file.save(path);
}

RepStore RepStore::load(const std::filesystem::path& path) {
  const auto file = io::TensorFile::load(path);
  RepStore store;
  store.kind_ = file.scalar_int("kind_id") == 1 ? "item" : "user";
  store.skipped_ = static_cast<int>(file.scalar_int("skipped"));
  const auto zhat = file.matrix("zhat");
  const auto sid = file.matrix("sid");
  const auto latents = file.matrix("latents");
  const auto entities = file.vector("entities");
  const auto timestamps = file.vector("timestamps");
  const auto block = file.scalar_int("block_dim");
  for (Eigen::Index i = 0; i < zhat.rows(); ++i) {
    RepEntry e;
    e.entity = static_cast<std::int32_t>(entities(i));
    e.timestamp = static_cast<std::int64_t>(timestamps(i));
    e.zhat = zhat.row(i).transpose();
    for (Eigen::Index l = 0; l < sid.cols(); ++l) {
      e.sid.push_back(static_cast<std::int32_t>(sid(i, l)));
      e.latents.push_back(latents.row(i).segment(l * block, block).transpose());
    }
    store.entries_.push_back(std::move(e));
  }
  return store;
}

}  // namespace dqrec::aug
