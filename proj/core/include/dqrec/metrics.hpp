#pragma once

#include "dqrec/data.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

namespace dqrec::metrics {

// Single relevant item per sample: hit if it ranks within the cutoff.
int recall_at_k(int rank, int k);

// 1/log2(rank+1) within the cutoff, else 0; IDCG is 1 for one relevant item.
double ndcg_at_k(int rank, int k);

// Pessimistic rank: ties push the positive below every equal-scored
// candidate.
int rank_of_positive(double positive_score, const std::vector<double>& candidate_scores);

struct MetricsReport {
  std::vector<int> k_list;
  std::vector<double> recall;  // per k
  std::vector<double> ndcg;    // per k
  std::int64_t samples = 0;
  std::int64_t skipped = 0;
  std::string config_fingerprint;
  double wall_seconds = 0.0;  // reported to the log, never written to the CSV

  // CSV: header "metric,k,value" plus samples/skipped/fingerprint rows.
  void save_csv(const std::filesystem::path& path) const;
  static MetricsReport load_csv(const std::filesystem::path& path);

  double recall_at(int k) const;
  double ndcg_at(int k) const;
};

struct EvalSample {
  std::int32_t user = -1;
  std::int32_t item = -1;
  std::int64_t timestamp = 0;
};

// Fills scores(a, b) = score(user of sample a, item of sample b) for one
// batch.
using BatchScorer =
    std::function<void(const std::vector<EvalSample>& batch, Eigen::MatrixXd& scores)>;

// In-batch ranking: each sample's positive is ranked against the other
// distinct batch items the user never interacted with (per `interacted`,
// built over the full log). Samples with no valid negatives are skipped and
// counted.
MetricsReport evaluate(const std::vector<EvalSample>& samples, int batch_size,
                       const std::vector<int>& k_list, const data::InteractionSets& interacted,
                       const BatchScorer& scorer);

std::vector<EvalSample> to_eval_samples(const std::vector<data::InteractionRecord>& records);

}  // namespace dqrec::metrics
