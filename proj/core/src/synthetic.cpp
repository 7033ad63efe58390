#include "dqrec/synthetic.hpp"

#include "dqrec/text.hpp"

#include <stdexcept>

namespace dqrec::synth {

SyntheticData generate(const RunConfig& config, Rng& rng) {
  const int groups = config.synth_groups;
  const int users = config.synth_users;
  const int items = config.synth_items;
  if (groups <= 0 || users < groups || items < groups) {
    throw std::invalid_argument("synthetic: need at least one user and item per group");
  }

  SyntheticData data;
  data.user_group.resize(static_cast<std::size_t>(users));
  data.item_group.resize(static_cast<std::size_t>(items));
  for (int u = 0; u < users; ++u) {
    data.user_group[static_cast<std::size_t>(u)] =
        static_cast<int>(static_cast<std::int64_t>(u) * groups / users);
  }
  for (int i = 0; i < items; ++i) {
    data.item_group[static_cast<std::size_t>(i)] =
        static_cast<int>(static_cast<std::int64_t>(i) * groups / items);
    data.item_attributes.emplace_back(
        "i" + std::to_string(i), "cat" + std::to_string(data.item_group[static_cast<std::size_t>(i)]));
  }

  Rng pos_rng = rng.fork(0x51);
  for (int u = 0; u < users; ++u) {
    for (int i = 0; i < items; ++i) {
      const bool same =
          data.user_group[static_cast<std::size_t>(u)] == data.item_group[static_cast<std::size_t>(i)];
      const double p = same ? config.synth_p_intra : config.synth_q_inter;
      if (pos_rng.uniform() >= p) continue;
      SyntheticData::Row row;
      row.user = "u" + std::to_string(u);
      row.item = "i" + std::to_string(i);
      row.rating = 4 + static_cast<int>(pos_rng.uniform_int(2));
      row.timestamp = pos_rng.uniform_int(config.synth_horizon);
      data.rows.push_back(std::move(row));
    }
  }
  if (data.rows.empty()) throw std::runtime_error("synthetic: no interactions generated");

  // Low-rated noise rows, dropped by binarize.
  Rng noise_rng = rng.fork(0x52);
  const auto extra =
      static_cast<std::size_t>(static_cast<double>(data.rows.size()) * config.synth_low_rating_rate);
  for (std::size_t k = 0; k < extra; ++k) {
    SyntheticData::Row row;
    row.user = "u" + std::to_string(noise_rng.uniform_int(users));
    row.item = "i" + std::to_string(noise_rng.uniform_int(items));
    row.rating = 1 + static_cast<int>(noise_rng.uniform_int(3));
    row.timestamp = noise_rng.uniform_int(config.synth_horizon);
    data.rows.push_back(std::move(row));
  }
  return data;
}

void write_files(const SyntheticData& data, const std::filesystem::path& interactions_path,
                 const std::filesystem::path& item_attributes_path,
                 const std::filesystem::path& groups_path) {
  {
    auto out = text::open_out(interactions_path);
    for (const auto& row : data.rows) {
      out << row.user << ',' << row.item << ',' << row.rating << ',' << row.timestamp << '\n';
    }
  }
  {
    auto out = text::open_out(item_attributes_path);
    for (const auto& [item, category] : data.item_attributes) {
      out << item << ',' << category << '\n';
    }
  }
  {
    auto out = text::open_out(groups_path);
    for (std::size_t u = 0; u < data.user_group.size(); ++u) {
      out << "user,u" << u << ',' << data.user_group[u] << '\n';
    }
    for (std::size_t i = 0; i < data.item_group.size(); ++i) {
      out << "item,i" << i << ',' << data.item_group[i] << '\n';
    }
  }
}

std::vector<std::pair<std::string, int>> load_groups(const std::filesystem::path& groups_path,
                                                     const std::string& kind) {
  std::vector<std::pair<std::string, int>> out;
  for (const auto& line : text::read_lines(groups_path)) {
    if (line.empty()) continue;
    const auto fields = text::split(line, ",");
    if (fields.size() != 3) throw std::runtime_error("bad groups file line: " + line);
    if (fields[0] != kind) continue;
    out.emplace_back(fields[1], static_cast<int>(text::parse_int(fields[2])));
  }
  return out;
}

}  // namespace dqrec::synth
