#include "dqrec/data.hpp"

#include "dqrec/text.hpp"

#include <algorithm>
#include <stdexcept>

namespace dqrec::data {

std::int32_t IdMap::intern(const std::string& external_id) {
  auto it = index_.find(external_id);
  if (it != index_.end()) return it->second;
  const auto id = static_cast<std::int32_t>(names_.size());
  names_.push_back(external_id);
  index_.emplace(external_id, id);
  return id;
}

std::optional<std::int32_t> IdMap::find(const std::string& external_id) const {
  auto it = index_.find(external_id);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

const std::string& IdMap::external(std::int32_t id) const {
  if (id < 0 || id >= size()) throw std::out_of_range("IdMap: id out of range");
  return names_[static_cast<std::size_t>(id)];
}

void IdMap::save(const std::filesystem::path& path) const {
  auto out = text::open_out(path);
  for (std::size_t i = 0; i < names_.size(); ++i) {
    out << names_[i] << ',' << i << '\n';
  }
}

IdMap IdMap::load(const std::filesystem::path& path) {
  IdMap map;
  const auto lines = text::read_lines(path);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const auto pos = lines[i].rfind(',');
    if (pos == std::string::npos) {
      throw std::runtime_error("id map " + path.string() + ": bad line " + std::to_string(i + 1));
    }
    const std::string name = lines[i].substr(0, pos);
    const auto id = text::parse_int(lines[i].substr(pos + 1));
    if (id != map.intern(name)) {
      throw std::runtime_error("id map " + path.string() + ": non-dense index at line " +
                               std::to_string(i + 1));
    }
  }
  return map;
}

InteractionLog load_interactions(const std::filesystem::path& path, const CsvFormat& format) {
  const auto lines = text::read_lines(path);
  InteractionLog log;
  std::size_t first = format.has_header ? 1 : 0;
  bool any = false;
  for (std::size_t i = first; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const auto fields = text::split(lines[i], format.delimiter);
    if (fields.size() < 4) {
      throw std::runtime_error(path.string() + ":" + std::to_string(i + 1) +
                               ": expected 4 fields (user,item,rating,timestamp), got " +
                               std::to_string(fields.size()));
    }
    InteractionRecord rec;
    try {
      rec.rating = static_cast<std::int32_t>(text::parse_int(fields[2]));
      rec.timestamp = text::parse_int(fields[3]);
    } catch (const std::exception& e) {
      throw std::runtime_error(path.string() + ":" + std::to_string(i + 1) + ": " + e.what());
    }
    if (rec.rating < 0 || rec.rating > 5) {
      throw std::runtime_error(path.string() + ":" + std::to_string(i + 1) +
                               ": rating out of [0,5]: " + fields[2]);
    }
    if (rec.timestamp < 0) {
      throw std::runtime_error(path.string() + ":" + std::to_string(i + 1) +
                               ": negative timestamp");
    }
    rec.user = log.users.intern(text::strip(fields[0]));
    rec.item = log.items.intern(text::strip(fields[1]));
    log.records.push_back(rec);
    any = true;
  }
  if (!any) throw std::runtime_error("no interaction records in " + path.string());
  std::stable_sort(log.records.begin(), log.records.end(),
                   [](const InteractionRecord& a, const InteractionRecord& b) {
                     return a.timestamp < b.timestamp;
                   });
  return log;
}

InteractionLog binarize(const InteractionLog& log, int threshold) {
  if (threshold < 0 || threshold > 5) {
    throw std::invalid_argument("binarize: threshold must be in [0,5]");
  }
  InteractionLog out;
  for (const auto& rec : log.records) {
    if (rec.rating <= threshold) continue;
    InteractionRecord kept = rec;
    kept.user = out.users.intern(log.users.external(rec.user));
    kept.item = out.items.intern(log.items.external(rec.item));
    out.records.push_back(kept);
  }
  if (out.records.empty()) {
    throw std::runtime_error("binarize: no records with rating > " + std::to_string(threshold));
  }
  return out;
}

SplitDataset split_chronological(const InteractionLog& log, std::array<int, 3> ratios) {
  const std::size_t n = log.records.size();
  const long total = static_cast<long>(ratios[0]) + ratios[1] + ratios[2];
  if (ratios[0] <= 0 || ratios[1] <= 0 || ratios[2] <= 0) {
    throw std::invalid_argument("split_chronological: ratios must be positive");
  }
  if (n < static_cast<std::size_t>(total)) {
    throw std::runtime_error("split_chronological: fewer records (" + std::to_string(n) +
                             ") than ratio slices (" + std::to_string(total) + ")");
  }
  const std::size_t n_valid = n * static_cast<std::size_t>(ratios[1]) / static_cast<std::size_t>(total);
  const std::size_t n_test = n * static_cast<std::size_t>(ratios[2]) / static_cast<std::size_t>(total);
  const std::size_t n_train = n - n_valid - n_test;

  SplitDataset split;
  split.train.assign(log.records.begin(), log.records.begin() + static_cast<std::ptrdiff_t>(n_train));
  split.valid.assign(log.records.begin() + static_cast<std::ptrdiff_t>(n_train),
                     log.records.begin() + static_cast<std::ptrdiff_t>(n_train + n_valid));
  split.test.assign(log.records.begin() + static_cast<std::ptrdiff_t>(n_train + n_valid),
                    log.records.end());
  split.train_end_timestamp = split.train.back().timestamp;
  split.valid_end_timestamp = split.valid.back().timestamp;
  return split;
}

SequenceStore::SequenceStore(const std::vector<InteractionRecord>& train, std::int32_t user_count,
                             std::int32_t item_count, int max_seq_len)
    : user_events_(static_cast<std::size_t>(user_count)),
      item_events_(static_cast<std::size_t>(item_count)),
      max_seq_len_(max_seq_len) {
  if (max_seq_len <= 0) throw std::invalid_argument("SequenceStore: max_seq_len must be positive");
  for (const auto& rec : train) {
    user_events_[static_cast<std::size_t>(rec.user)].emplace_back(rec.timestamp, rec.item);
    item_events_[static_cast<std::size_t>(rec.item)].emplace_back(rec.timestamp, rec.user);
  }
  // train is timestamp-sorted, so per-entity lists already are.
}

std::vector<std::int32_t> SequenceStore::tail(const Events& events, std::size_t end, int cap) {
  const std::size_t start = end > static_cast<std::size_t>(cap) ? end - static_cast<std::size_t>(cap) : 0;
  std::vector<std::int32_t> out;
  out.reserve(end - start);
  for (std::size_t i = start; i < end; ++i) out.push_back(events[i].second);
  return out;
}

std::vector<std::int32_t> SequenceStore::user_sequence(std::int32_t user) const {
  const auto& ev = user_events_.at(static_cast<std::size_t>(user));
  return tail(ev, ev.size(), max_seq_len_);
}

std::vector<std::int32_t> SequenceStore::item_sequence(std::int32_t item) const {
  const auto& ev = item_events_.at(static_cast<std::size_t>(item));
  return tail(ev, ev.size(), max_seq_len_);
}

namespace {
std::size_t events_before(const std::vector<std::pair<std::int64_t, std::int32_t>>& ev,
                          std::int64_t ts) {
  return static_cast<std::size_t>(
      std::lower_bound(ev.begin(), ev.end(), ts,
                       [](const auto& e, std::int64_t t) { return e.first < t; }) -
      ev.begin());
}
}  // namespace

std::vector<std::int32_t> SequenceStore::user_sequence_before(std::int32_t user,
                                                              std::int64_t ts) const {
  const auto& ev = user_events_.at(static_cast<std::size_t>(user));
  return tail(ev, events_before(ev, ts), max_seq_len_);
}

std::vector<std::int32_t> SequenceStore::item_sequence_before(std::int32_t item,
                                                              std::int64_t ts) const {
  const auto& ev = item_events_.at(static_cast<std::size_t>(item));
  return tail(ev, events_before(ev, ts), max_seq_len_);
}

std::size_t SequenceStore::user_events_before(std::int32_t user, std::int64_t ts) const {
  return events_before(user_events_.at(static_cast<std::size_t>(user)), ts);
}

std::size_t SequenceStore::item_events_before(std::int32_t item, std::int64_t ts) const {
  return events_before(item_events_.at(static_cast<std::size_t>(item)), ts);
}

std::int64_t SequenceStore::last_user_timestamp(std::int32_t user) const {
  const auto& ev = user_events_.at(static_cast<std::size_t>(user));
  return ev.empty() ? -1 : ev.back().first;
}

std::int64_t SequenceStore::last_item_timestamp(std::int32_t item) const {
  const auto& ev = item_events_.at(static_cast<std::size_t>(item));
  return ev.empty() ? -1 : ev.back().first;
}

InteractionSets::InteractionSets(const std::vector<InteractionRecord>& records,
                                 std::int32_t user_count, std::int32_t item_count)
    : user_items_(static_cast<std::size_t>(user_count)),
      item_users_(static_cast<std::size_t>(item_count)) {
  for (const auto& rec : records) {
    user_items_[static_cast<std::size_t>(rec.user)].push_back(rec.item);
    item_users_[static_cast<std::size_t>(rec.item)].push_back(rec.user);
  }
  for (auto& v : user_items_) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
  }
  for (auto& v : item_users_) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
  }
}

bool InteractionSets::contains(std::int32_t user, std::int32_t item) const {
  const auto& v = user_items_.at(static_cast<std::size_t>(user));
  return std::binary_search(v.begin(), v.end(), item);
}

const std::vector<std::int32_t>& InteractionSets::items_of(std::int32_t user) const {
  return user_items_.at(static_cast<std::size_t>(user));
}

const std::vector<std::int32_t>& InteractionSets::users_of(std::int32_t item) const {
  return item_users_.at(static_cast<std::size_t>(item));
}

NegativeSampler::NegativeSampler(const InteractionSets& sets, std::int32_t item_count)
    : sets_(sets), item_count_(item_count) {}

bool NegativeSampler::has_candidates(std::int32_t user) const {
  return static_cast<std::int32_t>(sets_.items_of(user).size()) < item_count_;
}

std::int32_t NegativeSampler::sample(std::int32_t user, Rng& rng) const {
  if (!has_candidates(user)) {
    throw std::runtime_error("sample_negative: user " + std::to_string(user) +
                             " interacted with every item");
  }
  while (true) {
    const auto item = static_cast<std::int32_t>(rng.uniform_int(item_count_));
    if (!sets_.contains(user, item)) return item;
  }
}

void save_records(const std::filesystem::path& path, const std::vector<InteractionRecord>& records,
                  const IdMap& users, const IdMap& items) {
  auto out = text::open_out(path);
  for (const auto& rec : records) {
    out << users.external(rec.user) << ',' << items.external(rec.item) << ',' << rec.rating << ','
        << rec.timestamp << '\n';
  }
}

std::vector<InteractionRecord> load_records(const std::filesystem::path& path, const IdMap& users,
                                            const IdMap& items) {
  std::vector<InteractionRecord> records;
  const auto lines = text::read_lines(path);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const auto fields = text::split(lines[i], ",");
    if (fields.size() != 4) {
      throw std::runtime_error(path.string() + ":" + std::to_string(i + 1) + ": expected 4 fields");
    }
    InteractionRecord rec;
    const auto u = users.find(fields[0]);
    const auto it = items.find(fields[1]);
    if (!u || !it) {
      throw std::runtime_error(path.string() + ":" + std::to_string(i + 1) + ": unknown id");
    }
    rec.user = *u;
    rec.item = *it;
    rec.rating = static_cast<std::int32_t>(text::parse_int(fields[2]));
    rec.timestamp = text::parse_int(fields[3]);
    records.push_back(rec);
  }
  return records;
}

}  // namespace dqrec::data
