#pragma once

#include "dqrec/config.hpp"
#include "dqrec/rng.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace dqrec::synth {

// Planted-cluster ground truth: users and items get contiguous group
// assignments; same-group pairs interact with probability p_intra, others
// with q_inter. Positive rows rate 4-5; a configurable fraction of extra
// low-rated rows exercises the binarize rule. Items carry their group as a
// category attribute.
struct SyntheticData {
  struct Row {
    std::string user;
    std::string item;
    int rating;
    std::int64_t timestamp;
  };
  std::vector<Row> rows;
  std::vector<std::pair<std::string, std::string>> item_attributes;  // (item, category)
  std::vector<int> user_group;  // by generated index
  std::vector<int> item_group;
};

SyntheticData generate(const RunConfig& config, Rng& rng);

// interactions CSV, item attribute CSV, and a group ground-truth file with
// lines "kind,external_id,group".
void write_files(const SyntheticData& data, const std::filesystem::path& interactions_path,
                 const std::filesystem::path& item_attributes_path,
                 const std::filesystem::path& groups_path);

// Reads the ground-truth file back: returns (kind, external id) -> group.
std::vector<std::pair<std::string, int>> load_groups(const std::filesystem::path& groups_path,
                                                     const std::string& kind);

}  // namespace dqrec::synth
