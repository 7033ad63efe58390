#include "dqrec/metrics.hpp"

#include "dqrec/text.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace dqrec::metrics {

int recall_at_k(int rank, int k) {
  if (rank < 1) throw std::invalid_argument("recall_at_k: rank must be >= 1");
  return rank <= k ? 1 : 0;
}

double ndcg_at_k(int rank, int k) {
  if (rank < 1) throw std::invalid_argument("ndcg_at_k: rank must be >= 1");
  if (rank > k) return 0.0;
  return 1.0 / std::log2(static_cast<double>(rank) + 1.0);
}

int rank_of_positive(double positive_score, const std::vector<double>& candidate_scores) {
  int rank = 1;
  for (const double s : candidate_scores) {
    if (s >= positive_score) rank += 1;
  }
  return rank;
}

double MetricsReport::recall_at(int k) const {
  for (std::size_t i = 0; i < k_list.size(); ++i) {
    if (k_list[i] == k) return recall[i];
  }
  throw std::out_of_range("recall_at: k not evaluated");
}

double MetricsReport::ndcg_at(int k) const {
  for (std::size_t i = 0; i < k_list.size(); ++i) {
    if (k_list[i] == k) return ndcg[i];
  }
  throw std::out_of_range("ndcg_at: k not evaluated");
}

void MetricsReport::save_csv(const std::filesystem::path& path) const {
  auto out = text::open_out(path);
  out << "metric,k,value\n";
  for (std::size_t i = 0; i < k_list.size(); ++i) {
    out << "recall," << k_list[i] << ',' << text::format_double(recall[i]) << '\n';
  }
  for (std::size_t i = 0; i < k_list.size(); ++i) {
    out << "ndcg," << k_list[i] << ',' << text::format_double(ndcg[i]) << '\n';
  }
  out << "samples,," << samples << '\n';
  out << "skipped,," << skipped << '\n';
  out << "fingerprint,," << config_fingerprint << '\n';
}

MetricsReport MetricsReport::load_csv(const std::filesystem::path& path) {
  MetricsReport report;
  const auto lines = text::read_lines(path);
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const auto fields = text::split(lines[i], ",");
    if (fields.size() != 3) throw std::runtime_error(path.string() + ": bad metrics row");
    if (fields[0] == "recall") {
      report.k_list.push_back(static_cast<int>(text::parse_int(fields[1])));
      report.recall.push_back(text::parse_double(fields[2]));
    } else if (fields[0] == "ndcg") {
      report.ndcg.push_back(text::parse_double(fields[2]));
    } else if (fields[0] == "samples") {
      report.samples = text::parse_int(fields[2]);
    } else if (fields[0] == "skipped") {
      report.skipped = text::parse_int(fields[2]);
    } else if (fields[0] == "fingerprint") {
      report.config_fingerprint = fields[2];
    }
  }
  return report;
}

std::vector<EvalSample> to_eval_samples(const std::vector<data::InteractionRecord>& records) {
  std::vector<EvalSample> samples;
  samples.reserve(records.size());
  for (const auto& rec : records) {
    samples.push_back({rec.user, rec.item, rec.timestamp});
  }
  return samples;
}

MetricsReport evaluate(const std::vector<EvalSample>& samples, int batch_size,
                       const std::vector<int>& k_list, const data::InteractionSets& interacted,
                       const BatchScorer& scorer) {
  if (batch_size <= 1) throw std::invalid_argument("evaluate: batch size must exceed 1");
  MetricsReport report;
  report.k_list = k_list;
  report.recall.assign(k_list.size(), 0.0);
  report.ndcg.assign(k_list.size(), 0.0);

  for (std::size_t start = 0; start < samples.size();
       start += static_cast<std::size_t>(batch_size)) {
    const std::size_t end =
        std::min(samples.size(), start + static_cast<std::size_t>(batch_size));
    const std::vector<EvalSample> batch(samples.begin() + static_cast<std::ptrdiff_t>(start),
                                        samples.begin() + static_cast<std::ptrdiff_t>(end));
    Eigen::MatrixXd scores(batch.size(), batch.size());
    scorer(batch, scores);

    // First batch position of each distinct item.
    std::vector<std::size_t> item_slots;
    std::vector<char> seen_before(batch.size(), 0);
    for (std::size_t b = 0; b < batch.size(); ++b) {
      bool duplicate = false;
      for (const std::size_t other : item_slots) {
        if (batch[other].item == batch[b].item) {
          duplicate = true;
          break;
        }
      }
      if (!duplicate) item_slots.push_back(b);
      seen_before[b] = duplicate ? 1 : 0;
    }

    for (std::size_t a = 0; a < batch.size(); ++a) {
      const auto user = batch[a].user;
      const auto positive = batch[a].item;
      std::vector<double> negatives;
      negatives.reserve(item_slots.size());
      for (const std::size_t b : item_slots) {
        const auto candidate = batch[b].item;
        if (candidate == positive) continue;
        if (interacted.contains(user, candidate)) continue;
        negatives.push_back(scores(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)));
      }
      if (negatives.empty()) {
        report.skipped += 1;
        continue;
      }
      // Positive score from the sample's own slot (first occurrence of the
      // item for duplicated items).
      std::size_t pos_slot = a;
      if (seen_before[a]) {
        for (const std::size_t b : item_slots) {
          if (batch[b].item == positive) {
            pos_slot = b;
            break;
          }
        }
      }
      const double pos_score =
          scores(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(pos_slot));
      const int rank = rank_of_positive(pos_score, negatives);
      for (std::size_t ki = 0; ki < k_list.size(); ++ki) {
        report.recall[ki] += recall_at_k(rank, k_list[ki]);
        report.ndcg[ki] += ndcg_at_k(rank, k_list[ki]);
      }
      report.samples += 1;
    }
  }

  if (report.samples > 0) {
    for (std::size_t ki = 0; ki < k_list.size(); ++ki) {
      report.recall[ki] /= static_cast<double>(report.samples);
      report.ndcg[ki] /= static_cast<double>(report.samples);
    }
  }
  return report;
}

}  // namespace dqrec::metrics
