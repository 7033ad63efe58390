#include "dqrec/data.hpp"

#include <doctest.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>

using namespace dqrec;
using data::InteractionRecord;

namespace {

std::filesystem::path write_temp(const std::string& name, const std::string& content) {
  const auto path = std::filesystem::temp_directory_path() / ("dqrec_data_" + name);
  std::ofstream out(path);
  out << content;
  return path;
}

data::InteractionLog make_log(const std::vector<std::tuple<std::string, std::string, int, long>>& rows) {
  data::InteractionLog log;
  for (const auto& [u, i, r, t] : rows) {
    InteractionRecord rec;
    rec.user = log.users.intern(u);
    rec.item = log.items.intern(i);
    rec.rating = r;
    rec.timestamp = t;
    log.records.push_back(rec);
  }
  std::stable_sort(log.records.begin(), log.records.end(),
                   [](const auto& a, const auto& b) { return a.timestamp < b.timestamp; });
  return log;
}

}  // namespace

TEST_CASE("load_interactions: well-formed file sorts by timestamp") {
  const auto path = write_temp("ok.csv", "u1,i1,5,300\nu2,i2,4,100\nu1,i3,2,200\n");
  const auto log = data::load_interactions(path);
  REQUIRE(log.records.size() == 3);
  CHECK(log.records[0].timestamp == 100);
  CHECK(log.records[1].timestamp == 200);
  CHECK(log.records[2].timestamp == 300);
  CHECK(log.user_count() == 2);
  CHECK(log.item_count() == 3);
  // ids assigned by first appearance in the file
  CHECK(log.users.find("u1") == 0);
  CHECK(log.users.find("u2") == 1);
  std::filesystem::remove(path);
}

TEST_CASE("load_interactions: malformed rating reports the line") {
  const auto path = write_temp("bad.csv", "u1,i1,5,300\nu1,i1,abc,100\n");
  try {
    data::load_interactions(path);
    FAIL("expected parse error");
  } catch (const std::exception& e) {
    const std::string msg = e.what();
    CHECK(msg.find(":2") != std::string::npos);  // offending line number
  }
  std::filesystem::remove(path);
}

TEST_CASE("load_interactions: empty file is an error") {
  const auto path = write_temp("empty.csv", "");
  CHECK_THROWS(data::load_interactions(path));
  std::filesystem::remove(path);
}

TEST_CASE("load_interactions: multi-character delimiter and header") {
  const auto path = write_temp("sep.csv", "user::item::rating::ts\nu1::i1::4::7\n");
  const auto log = data::load_interactions(path, {"::", true});
  REQUIRE(log.records.size() == 1);
  CHECK(log.records[0].rating == 4);
  std::filesystem::remove(path);
}

// Full-scale check; runs only when the MovieLens 1M ratings file is local.
TEST_CASE("load_interactions: ml-1m raw record count") {
  const char* path = std::getenv("MOVIELENS_1M_RATINGS");
  if (!path) return;
  const auto log = data::load_interactions(path, {"::", false});
  CHECK(log.records.size() == 1000209);
}

TEST_CASE("binarize keeps ratings above the threshold") {
  const auto log = make_log({{"u1", "a", 2, 1}, {"u1", "b", 3, 2}, {"u2", "c", 4, 3},
                             {"u2", "d", 5, 4}});
  const auto out = data::binarize(log, 3);
  REQUIRE(out.records.size() == 2);
  CHECK(out.records[0].rating == 4);
  CHECK(out.records[1].rating == 5);
  // u1 had no positives: dropped from the id maps
  CHECK(out.user_count() == 1);
  CHECK(out.item_count() == 2);
  CHECK_FALSE(out.users.find("u1").has_value());
}

TEST_CASE("binarize: all fives is an identity up to recount") {
  const auto log = make_log({{"u1", "a", 5, 1}, {"u2", "b", 5, 2}});
  const auto out = data::binarize(log, 3);
  CHECK(out.records.size() == 2);
  CHECK(out.user_count() == 2);
}

TEST_CASE("binarize: count matches a direct scan oracle on uniform ratings") {
  std::vector<std::tuple<std::string, std::string, int, long>> rows;
  long expected = 0;
  for (int k = 0; k < 1000; ++k) {
    const int rating = 1 + k % 5;  // uniform 1..5
    if (rating > 3) expected += 1;
    rows.emplace_back("u" + std::to_string(k % 37), "i" + std::to_string(k % 53), rating, k);
  }
  const auto out = data::binarize(make_log(rows), 3);
  CHECK(static_cast<long>(out.records.size()) == expected);  // 400 by the oracle
  CHECK(expected == 400);
}

TEST_CASE("binarize is idempotent") {
  std::vector<std::tuple<std::string, std::string, int, long>> rows;
  for (int k = 0; k < 200; ++k) {
    rows.emplace_back("u" + std::to_string(k % 11), "i" + std::to_string(k % 17), k % 6, k);
  }
  const auto once = data::binarize(make_log(rows), 3);
  const auto twice = data::binarize(once, 3);
  REQUIRE(once.records.size() == twice.records.size());
  for (std::size_t i = 0; i < once.records.size(); ++i) {
    CHECK(once.records[i].user == twice.records[i].user);
    CHECK(once.records[i].item == twice.records[i].item);
  }
  CHECK(once.user_count() == twice.user_count());
}

TEST_CASE("binarize: empty result is an error") {
  const auto log = make_log({{"u1", "a", 1, 1}, {"u2", "b", 2, 2}});
  CHECK_THROWS(data::binarize(log, 3));
}

TEST_CASE("id maps stay bijections onto [0, count)") {
  std::vector<std::tuple<std::string, std::string, int, long>> rows;
  for (int k = 0; k < 300; ++k) {
    rows.emplace_back("u" + std::to_string(k % 23), "i" + std::to_string((k * 7) % 31), k % 6, k);
  }
  const auto out = data::binarize(make_log(rows), 3);
  std::set<std::int32_t> users, items;
  for (const auto& rec : out.records) {
    users.insert(rec.user);
    items.insert(rec.item);
  }
  CHECK(static_cast<std::int32_t>(users.size()) == out.user_count());
  CHECK(static_cast<std::int32_t>(items.size()) == out.item_count());
  for (std::int32_t u = 0; u < out.user_count(); ++u) {
    CHECK(out.users.find(out.users.external(u)) == u);
  }
  for (std::int32_t i = 0; i < out.item_count(); ++i) {
    CHECK(out.items.find(out.items.external(i)) == i);
  }
}

namespace {
data::InteractionLog uniform_log(int n) {
  std::vector<std::tuple<std::string, std::string, int, long>> rows;
  for (int k = 0; k < n; ++k) {
    rows.emplace_back("u" + std::to_string(k % 5), "i" + std::to_string(k % 7), 5, k);
  }
  return make_log(rows);
}
}  // namespace

TEST_CASE("split_chronological: exact ratio at 10 records") {
  const auto split = data::split_chronological(uniform_log(10));
  CHECK(split.train.size() == 8);
  CHECK(split.valid.size() == 1);
  CHECK(split.test.size() == 1);
}

TEST_CASE("split_chronological: floor with remainder to train at 13 records") {
  const auto split = data::split_chronological(uniform_log(13));
  CHECK(split.train.size() == 11);
  CHECK(split.valid.size() == 1);
  CHECK(split.test.size() == 1);
}

TEST_CASE("split_chronological: slices are chronological even from shuffled input") {
  std::vector<std::tuple<std::string, std::string, int, long>> rows;
  for (int k = 0; k < 100; ++k) {
    rows.emplace_back("u" + std::to_string(k % 9), "i" + std::to_string(k % 13), 5,
                      (k * 7919) % 1000);
  }
  const auto split = data::split_chronological(make_log(rows));
  const auto max_ts = [](const std::vector<InteractionRecord>& v) {
    long m = -1;
    for (const auto& r : v) m = std::max(m, static_cast<long>(r.timestamp));
    return m;
  };
  const auto min_ts = [](const std::vector<InteractionRecord>& v) {
    long m = std::numeric_limits<long>::max();
    for (const auto& r : v) m = std::min(m, static_cast<long>(r.timestamp));
    return m;
  };
  CHECK(max_ts(split.train) <= min_ts(split.valid));
  CHECK(max_ts(split.valid) <= min_ts(split.test));
  // disjoint cover
  CHECK(split.train.size() + split.valid.size() + split.test.size() == 100);
}

TEST_CASE("split_chronological: fewer records than slices is an error") {
  CHECK_THROWS(data::split_chronological(uniform_log(9)));
}

TEST_CASE("sequences: recency rule and cap") {
  const auto log = make_log({{"u", "a", 5, 1}, {"u", "b", 5, 2}, {"u", "c", 5, 3}});
  const data::SequenceStore store(log.records, log.user_count(), log.item_count(), 2);
  const auto seq = store.user_sequence(0);
  REQUIRE(seq.size() == 2);
  CHECK(seq[0] == log.items.find("b"));
  CHECK(seq[1] == log.items.find("c"));
}

TEST_CASE("sequences: entity absent from train has an empty sequence") {
  const auto log = make_log({{"u", "a", 5, 1}});
  data::InteractionLog wider = log;
  wider.items.intern("never");
  const data::SequenceStore store(log.records, wider.user_count(), wider.item_count(), 10);
  CHECK(store.item_sequence(*wider.items.find("never")).empty());
  CHECK(store.last_item_timestamp(*wider.items.find("never")) == -1);
}

TEST_CASE("sequences match a per-entity sort-and-truncate oracle") {
  Rng rng(404);
  std::vector<std::tuple<std::string, std::string, int, long>> rows;
  for (int k = 0; k < 600; ++k) {
    rows.emplace_back("u" + std::to_string(rng.uniform_int(50)),
                      "i" + std::to_string(rng.uniform_int(40)), 5, rng.uniform_int(10000));
  }
  const auto log = make_log(rows);
  const int cap = 7;
  const data::SequenceStore store(log.records, log.user_count(), log.item_count(), cap);

  // oracle: gather, stable-sort by timestamp, truncate to the last cap
  std::map<std::int32_t, std::vector<std::pair<long, std::int32_t>>> per_user;
  for (const auto& rec : log.records) {
    per_user[rec.user].emplace_back(rec.timestamp, rec.item);
  }
  for (auto& [user, events] : per_user) {
    std::stable_sort(events.begin(), events.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    std::vector<std::int32_t> expect;
    const std::size_t start = events.size() > static_cast<std::size_t>(cap)
                                  ? events.size() - static_cast<std::size_t>(cap)
                                  : 0;
    for (std::size_t i = start; i < events.size(); ++i) expect.push_back(events[i].second);
    CHECK(store.user_sequence(user) == expect);
  }
}

TEST_CASE("sequence_before truncates strictly before the timestamp") {
  const auto log = make_log({{"u", "a", 5, 10}, {"u", "b", 5, 20}, {"u", "c", 5, 30}});
  const data::SequenceStore store(log.records, 1, 3, 10);
  CHECK(store.user_sequence_before(0, 10).empty());
  CHECK(store.user_sequence_before(0, 21).size() == 2);
  CHECK(store.user_sequence_before(0, 20).size() == 1);
  CHECK(store.user_events_before(0, 31) == 3);
}

TEST_CASE("sample_negative: forced single candidate") {
  const auto log = make_log({{"u", "a", 5, 1}, {"u", "b", 5, 2}, {"x", "c", 5, 3}});
  const data::InteractionSets sets(log.records, log.user_count(), log.item_count());
  const data::NegativeSampler sampler(sets, log.item_count());
  Rng rng(1);
  for (int k = 0; k < 20; ++k) {
    CHECK(sampler.sample(*log.users.find("u"), rng) == log.items.find("c"));
  }
}

TEST_CASE("sample_negative: deterministic under a fixed seed") {
  const auto log = uniform_log(50);
  const data::InteractionSets sets(log.records, log.user_count(), log.item_count());
  const data::NegativeSampler sampler(sets, log.item_count());
  Rng r1(9), r2(9);
  for (int k = 0; k < 100; ++k) {
    CHECK(sampler.sample(0, r1) == sampler.sample(0, r2));
  }
}

TEST_CASE("sample_negative: user with every item interacted is an error") {
  const auto log = make_log({{"u", "a", 5, 1}, {"u", "b", 5, 2}});
  const data::InteractionSets sets(log.records, log.user_count(), log.item_count());
  const data::NegativeSampler sampler(sets, log.item_count());
  Rng rng(1);
  CHECK_FALSE(sampler.has_candidates(0));
  CHECK_THROWS(sampler.sample(0, rng));
}

TEST_CASE("sample_negative: empirically uniform over eligible items") {
  // 10 items, user interacted with 3 -> 7 eligible; chi-squared against
  // uniform with df=6 at the 1% level (16.81). Deterministic seed.
  std::vector<std::tuple<std::string, std::string, int, long>> rows = {
      {"u", "i0", 5, 1}, {"u", "i1", 5, 2}, {"u", "i2", 5, 3}};
  for (int k = 3; k < 10; ++k) rows.emplace_back("other", "i" + std::to_string(k), 5, k);
  const auto log = make_log(rows);
  const data::InteractionSets sets(log.records, log.user_count(), log.item_count());
  const data::NegativeSampler sampler(sets, log.item_count());
  Rng rng(2024);
  std::map<std::int32_t, int> counts;
  const int draws = 10000;
  for (int k = 0; k < draws; ++k) counts[sampler.sample(0, rng)] += 1;
  REQUIRE(counts.size() == 7);
  const double expected = draws / 7.0;
  double chi2 = 0.0;
  for (const auto& [item, count] : counts) {
    const double diff = count - expected;
    chi2 += diff * diff / expected;
  }
  CHECK(chi2 < 16.81);
}

TEST_CASE("record save/load round-trip") {
  const auto log = uniform_log(25);
  const auto path = std::filesystem::temp_directory_path() / "dqrec_records.csv";
  data::save_records(path, log.records, log.users, log.items);
  const auto loaded = data::load_records(path, log.users, log.items);
  REQUIRE(loaded.size() == log.records.size());
  for (std::size_t i = 0; i < loaded.size(); ++i) {
    CHECK(loaded[i].user == log.records[i].user);
    CHECK(loaded[i].item == log.records[i].item);
    CHECK(loaded[i].rating == log.records[i].rating);
    CHECK(loaded[i].timestamp == log.records[i].timestamp);
  }
  std::filesystem::remove(path);
}

TEST_CASE("id map save/load round-trip") {
  data::IdMap map;
  map.intern("alpha");
  map.intern("beta,with,commas");  // rfind-based parsing keeps the name intact
  const auto path = std::filesystem::temp_directory_path() / "dqrec_ids.csv";
  map.save(path);
  const auto loaded = data::IdMap::load(path);
  CHECK(loaded.size() == 2);
  CHECK(loaded.find("beta,with,commas") == 1);
  std::filesystem::remove(path);
}
