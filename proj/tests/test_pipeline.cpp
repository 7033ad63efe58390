#include "dqrec/pipeline.hpp"

#include "dqrec/quantizer.hpp"
#include "dqrec/synthetic.hpp"
#include "dqrec/text.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>

using namespace dqrec;

namespace {

RunConfig tiny_config(const std::filesystem::path& dir, std::uint64_t seed = 3) {
  RunConfig config;
  config.synthetic = true;
  config.seed = seed;
  config.synth_users = 80;
  config.synth_items = 50;
  config.synth_groups = 4;
  config.embed_dim = 16;
  config.feat_dim = 8;
  config.hidden_dim = 16;
  config.vq_layers = 4;
  config.codebook_size = 8;
  config.neighbors_k = 5;
  config.latent_k = 1;
  config.batch = 128;
  config.pretrain_epochs = 2;
  config.vae_epochs = 5;
  config.rec_epochs = 2;
  config.k_list = {5, 10};
  config.artifacts = dir.string();
  return config;
}

std::filesystem::path temp_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("dqrec_pipe_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

}  // namespace

TEST_CASE("config: rejects an embedding dim not divisible by the layer count") {
  auto config = tiny_config(temp_dir("validate"));
  config.embed_dim = 64;
  config.vq_layers = 5;
  CHECK_THROWS(config.validate());
  CHECK_THROWS(pipeline::run_pipeline(config));
}

TEST_CASE("config: file parsing, overrides, and fingerprints") {
  const auto dir = temp_dir("cfg");
  const auto path = dir / "run.cfg";
  {
    std::ofstream out(path);
    out << "# comment line\n";
    out << "embed_dim = 32\n";
    out << "k_list = 10,5\n";
    out << "delimiter = ::\n";
    out << "synthetic = true\n";
  }
  const auto config = RunConfig::from_file(path);
  CHECK(config.embed_dim == 32);
  CHECK(config.k_list == std::vector<int>{5, 10});  // sorted
  CHECK(config.delimiter == "::");

  RunConfig other = config;
  CHECK(other.fingerprint() == config.fingerprint());
  other.beta = 0.5;
  CHECK(other.fingerprint() != config.fingerprint());

  // stage fingerprints: beta affects quantize but not prepare/pretrain
  CHECK(other.stage_fingerprint("prepare") == config.stage_fingerprint("prepare"));
  CHECK(other.stage_fingerprint("pretrain") == config.stage_fingerprint("pretrain"));
  CHECK(other.stage_fingerprint("quantize") != config.stage_fingerprint("quantize"));
  CHECK(other.stage_fingerprint("eval") != config.stage_fingerprint("eval"));

  CHECK_THROWS(config.apply_kv("no_such_key", "1"));
}

TEST_CASE("pipeline: runs, reruns bitwise-identically, and resumes") {
  const auto dir1 = temp_dir("run1");
  const auto dir2 = temp_dir("run2");
  auto c1 = tiny_config(dir1);
  auto c2 = tiny_config(dir2);

  const auto r1 = pipeline::run_pipeline(c1);
  const auto r2 = pipeline::run_pipeline(c2);
  CHECK(r1.recall == r2.recall);
  CHECK(r1.ndcg == r2.ndcg);

  for (const auto* name : {"metrics.csv", "rec_model.dqv", "quantizer_user.dqv",
                           "pretrain_model.dqv", "neighbors_user.csv", "train_history.csv"}) {
    CHECK(read_file(dir1 / name) == read_file(dir2 / name));
  }

  // resume: artifacts untouched when everything is fresh
  const auto before = std::filesystem::last_write_time(dir1 / "rec_model.dqv");
  pipeline::run_pipeline(c1);
  CHECK(std::filesystem::last_write_time(dir1 / "rec_model.dqv") == before);

  // stage invalidation: a train-stage knob reruns train+eval but not prepare
  const auto z_before = std::filesystem::last_write_time(dir1 / "z_user.dqv");
  c1.aug_latent_linkage = false;
  pipeline::run_pipeline(c1);
  CHECK(std::filesystem::last_write_time(dir1 / "z_user.dqv") == z_before);
  CHECK(std::filesystem::last_write_time(dir1 / "rec_model.dqv") != before);

  std::filesystem::remove_all(dir1);
  std::filesystem::remove_all(dir2);
}

TEST_CASE("pipeline: missing upstream artifacts name the stage") {
  const auto dir = temp_dir("missing");
  auto config = tiny_config(dir);
  try {
    pipeline::run_train(config);
    FAIL("expected an error");
  } catch (const std::exception& e) {
    const std::string msg = e.what();
    CHECK(msg.find("train") != std::string::npos);
  }
  std::filesystem::remove_all(dir);
}

TEST_CASE("pipeline: evaluation reports lie in [0,1]") {
  const auto dir = temp_dir("range");
  const auto report = pipeline::run_pipeline(tiny_config(dir));
  REQUIRE(report.k_list.size() == 2);
  for (std::size_t i = 0; i < report.k_list.size(); ++i) {
    CHECK(report.recall[i] >= 0.0);
    CHECK(report.recall[i] <= 1.0);
    CHECK(report.ndcg[i] >= 0.0);
    CHECK(report.ndcg[i] <= 1.0);
  }
  CHECK(report.samples > 0);
  // metrics CSV carries no timing, so bytes are reproducible
  const auto csv = read_file(dir / "metrics.csv");
  CHECK(csv.find("fingerprint") != std::string::npos);
  std::filesystem::remove_all(dir);
}

TEST_CASE("sweep: valid and invalid axis values") {
  const auto dir = temp_dir("sweep");
  auto config = tiny_config(dir);
  // L sweep over {2, 5}: 16 % 5 != 0, so the second row fails
  const auto rows = pipeline::run_sweep(config, "L", {2.0, 5.0});
  REQUIRE(rows.size() == 2);
  CHECK_FALSE(rows[0].failed);
  CHECK(rows[1].failed);

  const auto csv_path = dir / "sweep.csv";
  pipeline::write_sweep_csv(csv_path, "L", rows, config.k_list);
  const auto csv = read_file(csv_path);
  CHECK(csv.find("L,2,ok") != std::string::npos);
  CHECK(csv.find("L,5,failed") != std::string::npos);

  CHECK_THROWS(pipeline::run_sweep(config, "Q", {1.0}));
  std::filesystem::remove_all(dir);
}

TEST_CASE("sweep: K axis reuses the quantize stage") {
  const auto dir = temp_dir("sweepk");
  auto config = tiny_config(dir);
  pipeline::run_pipeline(config);
  const auto q_before = std::filesystem::last_write_time(dir / "quantizer_user.dqv");
  const auto rows = pipeline::run_sweep(config, "K", {1.0, 5.0});
  REQUIRE(rows.size() == 2);
  CHECK_FALSE(rows[0].failed);
  CHECK_FALSE(rows[1].failed);
  CHECK(std::filesystem::last_write_time(dir / "quantizer_user.dqv") == q_before);
  std::filesystem::remove_all(dir);
}

TEST_CASE("quantization error is non-increasing in the codebook size") {
  // direct measurement on a shared representation matrix
  Rng rng(5);
  Eigen::MatrixXd z(300, 8);
  for (int i = 0; i < 300; ++i)
    for (int j = 0; j < 8; ++j) z(i, j) = rng.normal();
  const auto basis = vq::fit_basis(z, 4);
  const auto mean_error = [&](int codebook_size) {
    Rng train_rng(99);
    const auto model =
        vq::train_codebooks(z, basis, codebook_size, 0.25, train_rng, {20, 64, 1e-2});
    double total = 0.0;
    for (int i = 0; i < 300; ++i) {
      total += vq::quantization_losses(z.row(i).transpose(), model).reconstruction;
    }
    return total / 300.0;
  };
  CHECK(mean_error(128) <= mean_error(8));
}

TEST_CASE("inspect: semantic ids, histograms, and the degenerate single-entity case") {
  const auto dir = temp_dir("inspect");
  auto config = tiny_config(dir);
  pipeline::run_pipeline(config);

  const auto single = pipeline::inspect_report(config, "user", {"u1"});
  CHECK(single.find("semantic id") != std::string::npos);
  CHECK(single.find("histogram") != std::string::npos);
  CHECK(single.find("pairwise") == std::string::npos);

  const auto pair = pipeline::inspect_report(config, "user", {"u1", "u2"});
  CHECK(pair.find("pairwise") != std::string::npos);
  CHECK(pair.find("codeword overlap") != std::string::npos);

  // an entity sharing its own semantic id overlaps L/L with itself
  const auto self_pair = pipeline::inspect_report(config, "user", {"u1", "u1"});
  CHECK(self_pair.find("overlap 4/4") != std::string::npos);

  CHECK_THROWS(pipeline::inspect_report(config, "user", {"no_such_user"}));
  CHECK_THROWS(pipeline::inspect_report(config, "widget", {"u1"}));
  std::filesystem::remove_all(dir);
}

TEST_CASE("synthetic generator: group structure and noise rows") {
  auto config = tiny_config(temp_dir("synthgen"));
  config.synth_low_rating_rate = 0.2;
  Rng rng(1);
  const auto data = synth::generate(config, rng);
  CHECK(data.user_group.size() == 80);
  CHECK(data.item_group.size() == 50);
  int low = 0;
  for (const auto& row : data.rows) {
    if (row.rating <= 3) ++low;
  }
  CHECK(low > 0);
  // contiguous group assignment covers all groups
  CHECK(data.user_group.front() == 0);
  CHECK(data.user_group.back() == 3);

  // intra-group rows dominate
  long intra = 0, inter = 0;
  for (const auto& row : data.rows) {
    if (row.rating <= 3) continue;
    const auto u = std::stol(row.user.substr(1));
    const auto i = std::stol(row.item.substr(1));
    if (data.user_group[static_cast<std::size_t>(u)] ==
        data.item_group[static_cast<std::size_t>(i)]) {
      ++intra;
    } else {
      ++inter;
    }
  }
  CHECK(intra > inter);
}
