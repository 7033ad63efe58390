#pragma once

#include "dqrec/rng.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace dqrec::data {

struct InteractionRecord {
  std::int32_t user = -1;
  std::int32_t item = -1;
  std::int32_t rating = 0;     // 0..5
  std::int64_t timestamp = 0;  // seconds, >= 0
};

// Bijection between external string ids and dense indices [0, size).
// Indices are assigned by first appearance.
class IdMap {
 public:
  std::int32_t intern(const std::string& external_id);
  std::optional<std::int32_t> find(const std::string& external_id) const;
  const std::string& external(std::int32_t id) const;
  std::int32_t size() const { return static_cast<std::int32_t>(names_.size()); }

  void save(const std::filesystem::path& path) const;
  static IdMap load(const std::filesystem::path& path);

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, std::int32_t> index_;
};

struct InteractionLog {
  std::vector<InteractionRecord> records;  // sorted non-decreasing by timestamp
  IdMap users;
  IdMap items;

  std::int32_t user_count() const { return users.size(); }
  std::int32_t item_count() const { return items.size(); }
};

struct CsvFormat {
  std::string delimiter = ",";
  bool has_header = false;
};

// Loads (user, item, rating, timestamp) rows. Ids are interned in file
// order; records are then sorted by timestamp (stable).
InteractionLog load_interactions(const std::filesystem::path& path, const CsvFormat& format = {});

// Keeps records with rating > threshold, reinterning ids so that entities
// left without positives disappear from the maps. Idempotent.
InteractionLog binarize(const InteractionLog& log, int threshold = 3);

struct SplitDataset {
  std::vector<InteractionRecord> train;
  std::vector<InteractionRecord> valid;
  std::vector<InteractionRecord> test;
  std::int64_t train_end_timestamp = 0;  // max timestamp in train
  std::int64_t valid_end_timestamp = 0;  // max timestamp in valid
};

// Contiguous chronological slices. Validation and test sizes are
// floor(n * ratio / total); the remainder goes to train.
SplitDataset split_chronological(const InteractionLog& log, std::array<int, 3> ratios = {8, 1, 1});

// Per-entity recent-interaction sequences over the train slice.
// Exposed sequences are capped at max_seq_len, ordered most-recent-last.
class SequenceStore {
 public:
  SequenceStore(const std::vector<InteractionRecord>& train, std::int32_t user_count,
                std::int32_t item_count, int max_seq_len);

  std::vector<std::int32_t> user_sequence(std::int32_t user) const;
  std::vector<std::int32_t> item_sequence(std::int32_t item) const;

  // Capped sequence of events strictly before the given timestamp.
  std::vector<std::int32_t> user_sequence_before(std::int32_t user, std::int64_t ts) const;
  std::vector<std::int32_t> item_sequence_before(std::int32_t item, std::int64_t ts) const;

  // Number of train events for the entity strictly before ts; stable key for
  // memoizing anything derived from a truncated sequence.
  std::size_t user_events_before(std::int32_t user, std::int64_t ts) const;
  std::size_t item_events_before(std::int32_t item, std::int64_t ts) const;

  std::int64_t last_user_timestamp(std::int32_t user) const;  // -1 if absent from train
  std::int64_t last_item_timestamp(std::int32_t item) const;

  int max_seq_len() const { return max_seq_len_; }
  std::int32_t user_count() const { return static_cast<std::int32_t>(user_events_.size()); }
  std::int32_t item_count() const { return static_cast<std::int32_t>(item_events_.size()); }

 private:
  using Events = std::vector<std::pair<std::int64_t, std::int32_t>>;  // (ts, neighbor id)
  static std::vector<std::int32_t> tail(const Events& events, std::size_t end, int cap);

  std::vector<Events> user_events_;
  std::vector<Events> item_events_;
  int max_seq_len_;
};

// Membership structure over a record list, for negative sampling and
// evaluation-time candidate filtering.
class InteractionSets {
 public:
  InteractionSets(const std::vector<InteractionRecord>& records, std::int32_t user_count,
                  std::int32_t item_count);

  bool contains(std::int32_t user, std::int32_t item) const;
  const std::vector<std::int32_t>& items_of(std::int32_t user) const;
  const std::vector<std::int32_t>& users_of(std::int32_t item) const;
  std::int32_t user_count() const { return static_cast<std::int32_t>(user_items_.size()); }
  std::int32_t item_count() const { return static_cast<std::int32_t>(item_users_.size()); }

 private:
  std::vector<std::vector<std::int32_t>> user_items_;  // sorted
  std::vector<std::vector<std::int32_t>> item_users_;  // sorted
};

// Uniform draw over the items a user has not interacted with.
class NegativeSampler {
 public:
  NegativeSampler(const InteractionSets& sets, std::int32_t item_count);

  std::int32_t sample(std::int32_t user, Rng& rng) const;
  bool has_candidates(std::int32_t user) const;

 private:
  const InteractionSets& sets_;
  std::int32_t item_count_;
};

void save_records(const std::filesystem::path& path, const std::vector<InteractionRecord>& records,
                  const IdMap& users, const IdMap& items);
std::vector<InteractionRecord> load_records(const std::filesystem::path& path, const IdMap& users,
                                            const IdMap& items);

}  // namespace dqrec::data
