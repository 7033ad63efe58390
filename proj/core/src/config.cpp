#include "dqrec/config.hpp"

#include "dqrec/text.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

namespace dqrec {

namespace {

bool parse_bool(const std::string& value) {
  if (value == "true" || value == "1" || value == "yes" || value == "on") return true;
  if (value == "false" || value == "0" || value == "no" || value == "off") return false;
  throw std::runtime_error("not a boolean: '" + value + "'");
}

std::string bool_str(bool b) { return b ? "true" : "false"; }

std::vector<int> parse_int_list(const std::string& value, char sep) {
  std::vector<int> out;
  std::stringstream ss(value);
  std::string part;
  while (std::getline(ss, part, sep)) {
    part = text::strip(part);
    if (part.empty()) continue;
    out.push_back(static_cast<int>(text::parse_int(part)));
  }
  if (out.empty()) throw std::runtime_error("empty list: '" + value + "'");
  return out;
}

}  // namespace

RunConfig RunConfig::from_file(const std::filesystem::path& path) {
  RunConfig config;
  config.apply_file(path);
  return config;
}

void RunConfig::apply_file(const std::filesystem::path& path) {
  const auto lines = text::read_lines(path);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::string line = text::strip(lines[i]);
    if (line.empty() || line[0] == '#') continue;
    const auto pos = line.find('=');
    if (pos == std::string::npos) {
      throw std::runtime_error(path.string() + ":" + std::to_string(i + 1) +
                               ": expected key = value");
    }
    try {
      apply_kv(text::strip(line.substr(0, pos)), text::strip(line.substr(pos + 1)));
    } catch (const std::exception& e) {
      throw std::runtime_error(path.string() + ":" + std::to_string(i + 1) + ": " + e.what());
    }
  }
}

void RunConfig::apply_kv(const std::string& key, const std::string& value) {
  if (key == "interactions") interactions = value;
  else if (key == "user_attributes") user_attributes = value;
  else if (key == "item_attributes") item_attributes = value;
  else if (key == "delimiter") delimiter = value;
  else if (key == "header") header = parse_bool(value);
  else if (key == "rating_threshold") rating_threshold = static_cast<int>(text::parse_int(value));
  else if (key == "split_ratios") {
    const auto parts = parse_int_list(value, ':');
    if (parts.size() != 3) throw std::runtime_error("split_ratios needs three parts a:b:c");
    split_ratios = {parts[0], parts[1], parts[2]};
  }
  else if (key == "max_seq_len") max_seq_len = static_cast<int>(text::parse_int(value));
  else if (key == "synthetic") synthetic = parse_bool(value);
  else if (key == "synth_groups") synth_groups = static_cast<int>(text::parse_int(value));
  else if (key == "synth_users") synth_users = static_cast<int>(text::parse_int(value));
  else if (key == "synth_items") synth_items = static_cast<int>(text::parse_int(value));
  else if (key == "synth_p_intra") synth_p_intra = text::parse_double(value);
  else if (key == "synth_q_inter") synth_q_inter = text::parse_double(value);
  else if (key == "synth_low_rating_rate") synth_low_rating_rate = text::parse_double(value);
  else if (key == "synth_horizon") synth_horizon = text::parse_int(value);
  else if (key == "embed_dim") embed_dim = static_cast<int>(text::parse_int(value));
  else if (key == "vq_layers") vq_layers = static_cast<int>(text::parse_int(value));
  else if (key == "codebook_size") codebook_size = static_cast<int>(text::parse_int(value));
  else if (key == "beta") beta = text::parse_double(value);
  else if (key == "neighbors_k") neighbors_k = static_cast<int>(text::parse_int(value));
  else if (key == "latent_k") latent_k = static_cast<int>(text::parse_int(value));
  else if (key == "feat_dim") feat_dim = static_cast<int>(text::parse_int(value));
  else if (key == "hidden_dim") hidden_dim = static_cast<int>(text::parse_int(value));
  else if (key == "batch") batch = static_cast<int>(text::parse_int(value));
  else if (key == "alpha") alpha = text::parse_double(value);
  else if (key == "pretrain_epochs") pretrain_epochs = static_cast<int>(text::parse_int(value));
  else if (key == "vae_epochs") vae_epochs = static_cast<int>(text::parse_int(value));
  else if (key == "rec_epochs") rec_epochs = static_cast<int>(text::parse_int(value));
  else if (key == "patience") patience = static_cast<int>(text::parse_int(value));
  else if (key == "eval_batch") eval_batch = static_cast<int>(text::parse_int(value));
  else if (key == "k_list") {
    k_list = parse_int_list(value, ',');
    std::sort(k_list.begin(), k_list.end());
  }
  else if (key == "seed") seed = static_cast<std::uint64_t>(text::parse_int(value));
  else if (key == "aug_user_feature") aug_user_feature = parse_bool(value);
  else if (key == "aug_item_feature") aug_item_feature = parse_bool(value);
  else if (key == "aug_user_linkage") aug_user_linkage = parse_bool(value);
  else if (key == "aug_item_linkage") aug_item_linkage = parse_bool(value);
  else if (key == "aug_latent_linkage") aug_latent_linkage = parse_bool(value);
  else if (key == "artifacts") artifacts = value;
  else throw std::runtime_error("unknown config key: '" + key + "'");
}

namespace {

struct KeyDump {
  std::string key;
  std::string value;
};

std::string join_ints(const std::vector<int>& v, char sep) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += sep;
    out += std::to_string(v[i]);
  }
  return out;
}

}  // namespace

std::string RunConfig::canonical() const {
  std::vector<KeyDump> dump = {
      {"alpha", text::format_double(alpha)},
      {"aug_item_feature", bool_str(aug_item_feature)},
      {"aug_item_linkage", bool_str(aug_item_linkage)},
      {"aug_latent_linkage", bool_str(aug_latent_linkage)},
      {"aug_user_feature", bool_str(aug_user_feature)},
      {"aug_user_linkage", bool_str(aug_user_linkage)},
      {"batch", std::to_string(batch)},
      {"beta", text::format_double(beta)},
      {"codebook_size", std::to_string(codebook_size)},
      {"delimiter", delimiter},
      {"embed_dim", std::to_string(embed_dim)},
      {"eval_batch", std::to_string(eval_batch)},
      {"feat_dim", std::to_string(feat_dim)},
      {"header", bool_str(header)},
      {"hidden_dim", std::to_string(hidden_dim)},
      {"interactions", interactions},
      {"item_attributes", item_attributes},
      {"k_list", join_ints(k_list, ',')},
      {"latent_k", std::to_string(latent_k)},
      {"max_seq_len", std::to_string(max_seq_len)},
      {"neighbors_k", std::to_string(neighbors_k)},
      {"patience", std::to_string(patience)},
      {"pretrain_epochs", std::to_string(pretrain_epochs)},
      {"rating_threshold", std::to_string(rating_threshold)},
      {"rec_epochs", std::to_string(rec_epochs)},
      {"seed", std::to_string(seed)},
      {"split_ratios", std::to_string(split_ratios[0]) + ":" + std::to_string(split_ratios[1]) +
                           ":" + std::to_string(split_ratios[2])},
      {"synth_groups", std::to_string(synth_groups)},
      {"synth_horizon", std::to_string(synth_horizon)},
      {"synth_items", std::to_string(synth_items)},
      {"synth_low_rating_rate", text::format_double(synth_low_rating_rate)},
      {"synth_p_intra", text::format_double(synth_p_intra)},
      {"synth_q_inter", text::format_double(synth_q_inter)},
      {"synth_users", std::to_string(synth_users)},
      {"synthetic", bool_str(synthetic)},
      {"user_attributes", user_attributes},
      {"vae_epochs", std::to_string(vae_epochs)},
      {"vq_layers", std::to_string(vq_layers)},
  };
  std::string out;
  for (const auto& kv : dump) {
    out += kv.key;
    out += '=';
    out += kv.value;
    out += '\n';
  }
  return out;
}

std::string RunConfig::fingerprint() const { return text::fnv1a_hex(canonical()); }

std::string RunConfig::stage_fingerprint(const std::string& stage) const {
  // Cumulative key sets per stage.
  std::string payload = "stage:" + stage + "\n";
  const auto add = [&payload](const std::string& key, const std::string& value) {
    payload += key + "=" + value + "\n";
  };

  // prepare
  add("interactions", interactions);
  add("user_attributes", user_attributes);
  add("item_attributes", item_attributes);
  add("delimiter", delimiter);
  add("header", bool_str(header));
  add("rating_threshold", std::to_string(rating_threshold));
  add("split_ratios", std::to_string(split_ratios[0]) + ":" + std::to_string(split_ratios[1]) +
                          ":" + std::to_string(split_ratios[2]));
  add("max_seq_len", std::to_string(max_seq_len));
  add("synthetic", bool_str(synthetic));
  if (synthetic) {
    add("synth_groups", std::to_string(synth_groups));
    add("synth_users", std::to_string(synth_users));
    add("synth_items", std::to_string(synth_items));
    add("synth_p_intra", text::format_double(synth_p_intra));
    add("synth_q_inter", text::format_double(synth_q_inter));
    add("synth_low_rating_rate", text::format_double(synth_low_rating_rate));
    add("synth_horizon", std::to_string(synth_horizon));
  }
  add("seed", std::to_string(seed));
  if (stage == "prepare") return text::fnv1a_hex(payload);

  add("embed_dim", std::to_string(embed_dim));
  add("feat_dim", std::to_string(feat_dim));
  add("hidden_dim", std::to_string(hidden_dim));
  add("pretrain_epochs", std::to_string(pretrain_epochs));
  add("batch", std::to_string(batch));
  add("alpha", text::format_double(alpha));
  add("patience", std::to_string(patience));
  if (stage == "pretrain") return text::fnv1a_hex(payload);

  add("vq_layers", std::to_string(vq_layers));
  add("codebook_size", std::to_string(codebook_size));
  add("beta", text::format_double(beta));
  add("vae_epochs", std::to_string(vae_epochs));
  if (stage == "quantize") return text::fnv1a_hex(payload);

  add("neighbors_k", std::to_string(neighbors_k));
  add("latent_k", std::to_string(latent_k));
  if (stage == "index") return text::fnv1a_hex(payload);

  add("rec_epochs", std::to_string(rec_epochs));
  add("eval_batch", std::to_string(eval_batch));
  add("aug_user_feature", bool_str(aug_user_feature));
  add("aug_item_feature", bool_str(aug_item_feature));
  add("aug_user_linkage", bool_str(aug_user_linkage));
  add("aug_item_linkage", bool_str(aug_item_linkage));
  add("aug_latent_linkage", bool_str(aug_latent_linkage));
  if (stage == "train") return text::fnv1a_hex(payload);

  add("k_list", join_ints(k_list, ','));
  if (stage == "eval") return text::fnv1a_hex(payload);

  throw std::invalid_argument("unknown stage: '" + stage + "'");
}

void RunConfig::validate() const {
  if (embed_dim <= 0) throw std::runtime_error("config: embed_dim must be positive");
  if (vq_layers <= 0) throw std::runtime_error("config: vq_layers must be positive");
  if (embed_dim % vq_layers != 0) {
    throw std::runtime_error("config: embed_dim=" + std::to_string(embed_dim) +
                             " not divisible by vq_layers=" + std::to_string(vq_layers));
  }
  if (codebook_size < 2) throw std::runtime_error("config: codebook_size must be >= 2");
  if (beta < 0.0) throw std::runtime_error("config: beta must be non-negative");
  if (neighbors_k <= 0 || latent_k <= 0) {
    throw std::runtime_error("config: neighbor counts must be positive");
  }
  if (batch <= 1) throw std::runtime_error("config: batch must exceed 1");
  if (alpha <= 0.0) throw std::runtime_error("config: alpha must be positive");
  if (max_seq_len <= 0) throw std::runtime_error("config: max_seq_len must be positive");
  if (rating_threshold < 0 || rating_threshold > 5) {
    throw std::runtime_error("config: rating_threshold must be in [0,5]");
  }
  if (k_list.empty()) throw std::runtime_error("config: k_list must not be empty");
  for (const int k : k_list) {
    if (k <= 0) throw std::runtime_error("config: k_list entries must be positive");
  }
  if (!synthetic && interactions.empty()) {
    throw std::runtime_error("config: interactions path required unless synthetic=true");
  }
  if (synthetic && (synth_groups <= 0 || synth_users < synth_groups || synth_items < synth_groups)) {
    throw std::runtime_error("config: bad synthetic sizes");
  }
}

const std::vector<std::pair<std::string, std::string>>& RunConfig::key_help() {
  static const std::vector<std::pair<std::string, std::string>> help = {
      {"interactions", "path to the delimited interaction log"},
      {"user_attributes", "optional path to user attribute file"},
      {"item_attributes", "optional path to item attribute file"},
      {"delimiter", "field delimiter, may be multi-character (default ,)"},
      {"header", "true if input files carry a header row"},
      {"rating_threshold", "keep ratings strictly above this (default 3)"},
      {"split_ratios", "train:valid:test ratio (default 8:1:1)"},
      {"max_seq_len", "recent-sequence cap (default 50)"},
      {"synthetic", "generate the bundled planted-cluster dataset"},
      {"synth_groups", "synthetic group count"},
      {"synth_users", "synthetic user count"},
      {"synth_items", "synthetic item count"},
      {"synth_p_intra", "intra-group interaction probability"},
      {"synth_q_inter", "inter-group interaction probability"},
      {"synth_low_rating_rate", "extra low-rated rows as a fraction of positives"},
      {"synth_horizon", "timestamp range for synthetic rows"},
      {"embed_dim", "embedding dimension d (default 64)"},
      {"vq_layers", "codebook layers L (default 4)"},
      {"codebook_size", "codewords per layer J (default 128)"},
      {"beta", "commitment weight (default 0.25)"},
      {"neighbors_k", "explicit neighbors K (default 30)"},
      {"latent_k", "latent neighbors per layer K' (default 2)"},
      {"feat_dim", "feature embedding dimension (default 64)"},
      {"hidden_dim", "tower hidden width (default 128)"},
      {"batch", "minibatch size (default 1024)"},
      {"alpha", "Adam learning rate (default 1e-3)"},
      {"pretrain_epochs", "stage-0 epochs (default 10)"},
      {"vae_epochs", "codebook training epochs (default 50)"},
      {"rec_epochs", "recommender epochs (default 30)"},
      {"patience", "early-stop patience (default 3)"},
      {"eval_batch", "evaluation batch, 0 = batch"},
      {"k_list", "metric cutoffs (default 5,10,20)"},
      {"seed", "master seed"},
      {"aug_user_feature", "toggle user semantic features"},
      {"aug_item_feature", "toggle item semantic features"},
      {"aug_user_linkage", "toggle user neighbor block"},
      {"aug_item_linkage", "toggle item neighbor block"},
      {"aug_latent_linkage", "toggle latent neighbors in the union"},
      {"artifacts", "artifact root directory"},
  };
  return help;
}

}  // namespace dqrec
