#include "dqrec/metrics.hpp"

#include <doctest.h>

#include <algorithm>
#include <filesystem>

using namespace dqrec;

TEST_CASE("recall_at_k unit values") {
  CHECK(metrics::recall_at_k(1, 5) == 1);
  CHECK(metrics::recall_at_k(5, 5) == 1);
  CHECK(metrics::recall_at_k(6, 5) == 0);
  CHECK_THROWS(metrics::recall_at_k(0, 5));
}

TEST_CASE("ndcg_at_k unit values") {
  CHECK(metrics::ndcg_at_k(1, 5) == 1.0);
  CHECK(metrics::ndcg_at_k(3, 5) == 0.5);  // 1/log2(4)
  CHECK(metrics::ndcg_at_k(7, 5) == 0.0);
}

TEST_CASE("rank_of_positive: pessimistic ties and the sort oracle") {
  // ties rank the positive below every equal-scored candidate
  CHECK(metrics::rank_of_positive(0.5, {0.5, 0.5, 0.1}) == 3);
  CHECK(metrics::rank_of_positive(0.9, {0.5, 0.5, 0.1}) == 1);

  Rng rng(1);
  for (int trial = 0; trial < 200; ++trial) {
    const double pos = rng.uniform();
    std::vector<double> candidates(20);
    for (auto& c : candidates) c = rng.uniform();
    const int rank = metrics::rank_of_positive(pos, candidates);
    // oracle: full sort of all scores, positive placed after equal scores
    std::vector<double> all = candidates;
    all.push_back(pos);
    std::sort(all.begin(), all.end(), std::greater<>());
    const auto at = std::upper_bound(all.begin(), all.end(), pos, std::greater<>()) - all.begin();
    CHECK(rank == static_cast<int>(at) + 1 - 1);  // positive sits after all >= scores
    // recall@k from the rank matches counting in the sorted list
    for (const int k : {1, 5, 10}) {
      int top_greater_equal = 0;
      for (const double c : candidates) {
        if (c >= pos) ++top_greater_equal;
      }
      CHECK(metrics::recall_at_k(rank, k) == (top_greater_equal + 1 <= k ? 1 : 0));
    }
  }
}

TEST_CASE("recall and ndcg are non-decreasing in K for a fixed rank") {
  for (int rank = 1; rank <= 12; ++rank) {
    for (int k = 1; k < 12; ++k) {
      CHECK(metrics::recall_at_k(rank, k) <= metrics::recall_at_k(rank, k + 1));
      CHECK(metrics::ndcg_at_k(rank, k) <= metrics::ndcg_at_k(rank, k + 1));
    }
  }
}

namespace {

// Universe where user u interacted only with item u (the diagonal); every
// other pair is a valid negative.
struct EvalFixture {
  std::vector<data::InteractionRecord> records;
  std::vector<metrics::EvalSample> samples;
  int n;

  explicit EvalFixture(int n_) : n(n_) {
    for (int k = 0; k < n; ++k) {
      data::InteractionRecord rec;
      rec.user = k;
      rec.item = k;
      rec.rating = 5;
      rec.timestamp = k;
      records.push_back(rec);
      samples.push_back({k, k, k});
    }
  }
  data::InteractionSets sets() const { return data::InteractionSets(records, n, n); }
};

}  // namespace

TEST_CASE("evaluate: a perfect model scores 1 everywhere") {
  EvalFixture fx(20);
  const auto scorer = [](const std::vector<metrics::EvalSample>& batch, Eigen::MatrixXd& scores) {
    const auto n = static_cast<Eigen::Index>(batch.size());
    scores.setZero(n, n);
    for (Eigen::Index a = 0; a < n; ++a) {
      for (Eigen::Index b = 0; b < n; ++b) {
        scores(a, b) = batch[static_cast<std::size_t>(a)].user ==
                               batch[static_cast<std::size_t>(b)].item
                           ? 1.0
                           : 0.0;
      }
    }
  };
  const auto report = metrics::evaluate(fx.samples, 10, {1, 5}, fx.sets(), scorer);
  CHECK(report.samples == 20);
  CHECK(report.recall[0] == 1.0);
  CHECK(report.ndcg[0] == 1.0);
  CHECK(report.recall[1] == 1.0);
}

TEST_CASE("evaluate: constant scores rank the positive pessimistically last") {
  EvalFixture fx(10);
  const auto scorer = [](const std::vector<metrics::EvalSample>& batch, Eigen::MatrixXd& scores) {
    scores.setConstant(static_cast<Eigen::Index>(batch.size()),
                       static_cast<Eigen::Index>(batch.size()), 0.5);
  };
  const auto report = metrics::evaluate(fx.samples, 10, {9, 10}, fx.sets(), scorer);
  // rank is always 10 (1 positive after 9 negatives)
  CHECK(report.recall[0] == 0.0);
  CHECK(report.recall[1] == 1.0);
}

TEST_CASE("evaluate: samples with no valid negatives are skipped and counted") {
  // user 0 interacted with every item in the batch
  std::vector<data::InteractionRecord> records;
  for (int i = 0; i < 5; ++i) {
    data::InteractionRecord rec;
    rec.user = 0;
    rec.item = i;
    rec.rating = 5;
    rec.timestamp = i;
    records.push_back(rec);
  }
  const data::InteractionSets sets(records, 1, 5);
  std::vector<metrics::EvalSample> samples;
  for (int i = 0; i < 5; ++i) samples.push_back({0, i, i});
  const auto scorer = [](const std::vector<metrics::EvalSample>& batch, Eigen::MatrixXd& scores) {
    scores.setConstant(static_cast<Eigen::Index>(batch.size()),
                       static_cast<Eigen::Index>(batch.size()), 0.5);
  };
  const auto report = metrics::evaluate(samples, 5, {1}, sets, scorer);
  CHECK(report.samples == 0);
  CHECK(report.skipped == 5);
}

TEST_CASE("evaluate: duplicate items in a batch count once as candidates") {
  // two samples share item 7; a third user's candidate set must contain it once
  std::vector<data::InteractionRecord> records;
  const auto add = [&records](int u, int i) {
    data::InteractionRecord rec;
    rec.user = u;
    rec.item = i;
    rec.rating = 5;
    rec.timestamp = 0;
    records.push_back(rec);
  };
  add(0, 7);
  add(1, 7);
  add(2, 3);
  const data::InteractionSets sets(records, 3, 8);
  std::vector<metrics::EvalSample> samples = {{0, 7, 0}, {1, 7, 0}, {2, 3, 0}};
  const auto scorer = [](const std::vector<metrics::EvalSample>& batch, Eigen::MatrixXd& scores) {
    scores.setConstant(static_cast<Eigen::Index>(batch.size()),
                       static_cast<Eigen::Index>(batch.size()), 0.25);
  };
  const auto report = metrics::evaluate(samples, 3, {1, 2}, sets, scorer);
  // user 2 ranks item 3 against the single distinct candidate 7 -> rank 2
  // users 0 and 1 rank item 7 against candidate 3 -> rank 2 each
  CHECK(report.samples == 3);
  CHECK(report.recall[0] == 0.0);
  CHECK(report.recall[1] == 1.0);
}

TEST_CASE("evaluate: invariant to sample order within a batch") {
  EvalFixture fx(12);
  const auto scorer = [](const std::vector<metrics::EvalSample>& batch, Eigen::MatrixXd& scores) {
    const auto n = static_cast<Eigen::Index>(batch.size());
    scores.resize(n, n);
    for (Eigen::Index a = 0; a < n; ++a) {
      for (Eigen::Index b = 0; b < n; ++b) {
        // deterministic function of the (user, item) pair
        const double u = batch[static_cast<std::size_t>(a)].user;
        const double i = batch[static_cast<std::size_t>(b)].item;
        scores(a, b) = std::sin(u * 3.7 + i * 1.3);
      }
    }
  };
  const auto r1 = metrics::evaluate(fx.samples, 12, {3, 5}, fx.sets(), scorer);
  auto permuted = fx.samples;
  std::reverse(permuted.begin(), permuted.end());
  const auto r2 = metrics::evaluate(permuted, 12, {3, 5}, fx.sets(), scorer);
  CHECK(r1.recall == r2.recall);
  CHECK(r1.ndcg == r2.ndcg);
}

TEST_CASE("evaluate: random scores on batch 101 land near 5/101 recall") {
  // Light Monte-Carlo sanity check; the acceptance suite runs the full one.
  EvalFixture fx(101);
  Rng rng(2024);
  double sum = 0.0;
  const int reps = 200;
  for (int rep = 0; rep < reps; ++rep) {
    const auto scorer = [&rng](const std::vector<metrics::EvalSample>& batch,
                               Eigen::MatrixXd& scores) {
      const auto n = static_cast<Eigen::Index>(batch.size());
      scores.resize(n, n);
      for (Eigen::Index a = 0; a < n; ++a)
        for (Eigen::Index b = 0; b < n; ++b) scores(a, b) = rng.uniform();
    };
    const auto report = metrics::evaluate(fx.samples, 101, {5}, fx.sets(), scorer);
    sum += report.recall[0];
  }
  const double mean = sum / reps;
  CHECK(mean > 0.02);
  CHECK(mean < 0.08);
}

TEST_CASE("metrics report CSV round-trip") {
  metrics::MetricsReport report;
  report.k_list = {5, 10};
  report.recall = {0.25, 0.5};
  report.ndcg = {0.125, 0.2};
  report.samples = 42;
  report.skipped = 3;
  report.config_fingerprint = "deadbeefdeadbeef";
  const auto path = std::filesystem::temp_directory_path() / "dqrec_metrics.csv";
  report.save_csv(path);
  const auto loaded = metrics::MetricsReport::load_csv(path);
  CHECK(loaded.k_list == report.k_list);
  CHECK(loaded.recall == report.recall);
  CHECK(loaded.ndcg == report.ndcg);
  CHECK(loaded.samples == 42);
  CHECK(loaded.skipped == 3);
  CHECK(loaded.config_fingerprint == "deadbeefdeadbeef");
  CHECK(loaded.recall_at(10) == 0.5);
  CHECK_THROWS(loaded.recall_at(20));
  std::filesystem::remove(path);
}
