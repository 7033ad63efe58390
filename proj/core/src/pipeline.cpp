#include "dqrec/pipeline.hpp"

#include "dqrec/augmentation.hpp"
#include "dqrec/quantizer.hpp"
#include "dqrec/recommender.hpp"
#include "dqrec/synthetic.hpp"
#include "dqrec/text.hpp"

#include <algorithm>
#include <chrono>
#include <iostream>
#include <map>
#include <sstream>

namespace dqrec::pipeline {

namespace {

void log_line(const std::string& stage, const std::string& message) {
  std::cout << '[' << stage << "] " << message << '\n' << std::flush;
}

class StageTimer {
 public:
  explicit StageTimer(std::string stage) : stage_(std::move(stage)), start_(clock::now()) {}
  ~StageTimer() {
    const auto secs = std::chrono::duration<double>(clock::now() - start_).count();
    std::ostringstream os;
    os.precision(2);
    os << std::fixed << "done in " << secs << " s";
    log_line(stage_, os.str());
  }

 private:
  using clock = std::chrono::steady_clock;
  std::string stage_;
  clock::time_point start_;
};

bool all_exist(const std::vector<std::filesystem::path>& paths) {
  for (const auto& p : paths) {
    if (!std::filesystem::exists(p)) return false;
  }
  return true;
}

void write_marker(const std::filesystem::path& path, const std::string& fingerprint) {
  auto out = text::open_out(path);
  out << fingerprint << '\n';
}

bool marker_matches(const std::filesystem::path& path, const std::string& fingerprint) {
  if (!std::filesystem::exists(path)) return false;
  const auto lines = text::read_lines(path);
  return !lines.empty() && lines[0] == fingerprint;
}

data::CsvFormat csv_format(const RunConfig& config) {
  return {config.delimiter, config.header};
}

void require(bool ok, const std::string& stage, const std::string& what) {
  if (!ok) {
    throw std::runtime_error("stage '" + stage + "' requires artifact from upstream: " + what +
                             " (run that stage first)");
  }
}

}  // namespace

Paths::Paths(const RunConfig& config) : root(config.artifacts) {
  synth_interactions = root / "synthetic_interactions.csv";
  synth_item_attributes = root / "synthetic_item_attributes.csv";
  synth_groups = root / "synthetic_groups.csv";
  user_ids = root / "user_ids.csv";
  item_ids = root / "item_ids.csv";
  split_train = root / "split_train.csv";
  split_valid = root / "split_valid.csv";
  split_test = root / "split_test.csv";
  pretrain_model = root / "pretrain_model.dqv";
  z_user = root / "z_user.dqv";
  z_item = root / "z_item.dqv";
  rows_user = root / "z_user_rows.csv";
  rows_item = root / "z_item_rows.csv";
  quantizer_user = root / "quantizer_user.dqv";
  quantizer_item = root / "quantizer_item.dqv";
  vae_history_user = root / "vae_history_user.csv";
  vae_history_item = root / "vae_history_item.csv";
  repstore_user = root / "repstore_user.dqv";
  repstore_item = root / "repstore_item.dqv";
  neighbors_user = root / "neighbors_user.csv";
  neighbors_item = root / "neighbors_item.csv";
  rec_model = root / "rec_model.dqv";
  train_history = root / "train_history.csv";
  metrics_csv = root / "metrics.csv";
}

std::filesystem::path Paths::marker(const std::string& stage) const {
  return root / (stage + ".fp");
}

namespace {

// Resolved input paths: the synthetic generator redirects the interaction
// and item-attribute inputs into the artifact directory.
struct Inputs {
  std::filesystem::path interactions;
  std::filesystem::path user_attributes;  // empty if none
  std::filesystem::path item_attributes;  // empty if none
};

Inputs resolve_inputs(const RunConfig& config, const Paths& paths) {
  Inputs in;
  if (config.synthetic) {
    in.interactions = paths.synth_interactions;
    in.item_attributes = paths.synth_item_attributes;
  } else {
    in.interactions = config.interactions;
    if (!config.user_attributes.empty()) in.user_attributes = config.user_attributes;
    if (!config.item_attributes.empty()) in.item_attributes = config.item_attributes;
  }
  return in;
}

}  // namespace

DataBundle load_data_bundle(const RunConfig& config) {
  const Paths paths(config);
  require(all_exist({paths.user_ids, paths.item_ids, paths.split_train, paths.split_valid,
                     paths.split_test}),
          "pretrain", "prepare outputs");
  data::InteractionLog log;
  log.users = data::IdMap::load(paths.user_ids);
  log.items = data::IdMap::load(paths.item_ids);

  data::SplitDataset split;
  split.train = data::load_records(paths.split_train, log.users, log.items);
  split.valid = data::load_records(paths.split_valid, log.users, log.items);
  split.test = data::load_records(paths.split_test, log.users, log.items);
  split.train_end_timestamp = split.train.empty() ? 0 : split.train.back().timestamp;
  split.valid_end_timestamp = split.valid.empty() ? 0 : split.valid.back().timestamp;

  log.records = split.train;
  log.records.insert(log.records.end(), split.valid.begin(), split.valid.end());
  log.records.insert(log.records.end(), split.test.begin(), split.test.end());

  DataBundle bundle{std::move(log), std::move(split),
                    data::SequenceStore({}, 0, 0, config.max_seq_len), {}};
  bundle.sequences = data::SequenceStore(bundle.split.train, bundle.log.user_count(),
                                         bundle.log.item_count(), config.max_seq_len);

  const Inputs in = resolve_inputs(config, paths);
  std::optional<pretrain::AttributeTable> user_attrs, item_attrs;
  const data::CsvFormat attr_format =
      config.synthetic ? data::CsvFormat{",", false} : csv_format(config);
  if (!in.user_attributes.empty()) {
    user_attrs = pretrain::load_attributes(in.user_attributes, attr_format);
  }
  if (!in.item_attributes.empty()) {
    item_attrs = pretrain::load_attributes(in.item_attributes, attr_format);
  }
  bundle.schema = pretrain::build_feature_schema(bundle.log, bundle.split.train, user_attrs,
                                                 item_attrs);
  return bundle;
}

void run_prepare(const RunConfig& config, bool skip_if_fresh) {
  config.validate();
  const Paths paths(config);
  const auto fp = config.stage_fingerprint("prepare");
  if (skip_if_fresh && marker_matches(paths.marker("prepare"), fp) &&
      all_exist({paths.user_ids, paths.item_ids, paths.split_train, paths.split_valid,
                 paths.split_test})) {
    log_line("prepare", "up to date, skipping");
    return;
  }
  StageTimer timer("prepare");

  if (config.synthetic) {
    Rng rng = Rng(config.seed).fork(0x5150);
    const auto data = synth::generate(config, rng);
    synth::write_files(data, paths.synth_interactions, paths.synth_item_attributes,
                       paths.synth_groups);
    log_line("prepare", "generated synthetic dataset: " + std::to_string(data.rows.size()) +
                            " rows, " + std::to_string(config.synth_groups) + " groups");
  }

  const Inputs in = resolve_inputs(config, paths);
  const data::CsvFormat fmt = config.synthetic ? data::CsvFormat{",", false} : csv_format(config);
  const auto raw = data::load_interactions(in.interactions, fmt);
  log_line("prepare", "loaded " + std::to_string(raw.records.size()) + " records, " +
                          std::to_string(raw.user_count()) + " users, " +
                          std::to_string(raw.item_count()) + " items");
  const auto log = data::binarize(raw, config.rating_threshold);
  log_line("prepare", "binarized at rating > " + std::to_string(config.rating_threshold) + ": " +
                          std::to_string(log.records.size()) + " positives, " +
                          std::to_string(log.user_count()) + " users, " +
                          std::to_string(log.item_count()) + " items");
  const auto split = data::split_chronological(log, config.split_ratios);
  log_line("prepare", "split " + std::to_string(split.train.size()) + "/" +
                          std::to_string(split.valid.size()) + "/" +
                          std::to_string(split.test.size()));

  log.users.save(paths.user_ids);
  log.items.save(paths.item_ids);
  data::save_records(paths.split_train, split.train, log.users, log.items);
  data::save_records(paths.split_valid, split.valid, log.users, log.items);
  data::save_records(paths.split_test, split.test, log.users, log.items);
  write_marker(paths.marker("prepare"), fp);
}

void run_pretrain(const RunConfig& config, bool skip_if_fresh) {
  config.validate();
  const Paths paths(config);
  const auto fp = config.stage_fingerprint("pretrain");
  if (skip_if_fresh && marker_matches(paths.marker("pretrain"), fp) &&
      all_exist({paths.pretrain_model, paths.z_user, paths.z_item})) {
    log_line("pretrain", "up to date, skipping");
    return;
  }
  StageTimer timer("pretrain");

  const auto bundle = load_data_bundle(config);
  const data::InteractionSets train_sets(bundle.split.train, bundle.log.user_count(),
                                         bundle.log.item_count());
  Rng rng = Rng(config.seed).fork(0xEB);
  pretrain::PretrainOptions options;
  options.epochs = config.pretrain_epochs;
  options.batch = config.batch;
  options.alpha = config.alpha;
  options.patience = config.patience;
  options.hidden_dim = config.hidden_dim;
  options.out_dim = config.embed_dim;
  options.feat_dim = config.feat_dim;

  pretrain::PretrainHistory history;
  const auto model = pretrain::pretrain(bundle.schema, bundle.split.train, bundle.split.valid,
                                        bundle.sequences, train_sets, rng, options, &history);
  log_line("pretrain", "epochs run: " + std::to_string(history.train_loss.size()) +
                           ", best epoch: " + std::to_string(history.best_epoch));

  model.save(paths.pretrain_model);
  const auto z_user = pretrain::export_representations(model, bundle.schema, bundle.sequences,
                                                       "user");
  const auto z_item = pretrain::export_representations(model, bundle.schema, bundle.sequences,
                                                       "item");
  z_user.save(paths.z_user, paths.rows_user, bundle.log.users);
  z_item.save(paths.z_item, paths.rows_item, bundle.log.items);
  log_line("pretrain", "exported Z_user " + std::to_string(z_user.Z.rows()) + "x" +
                           std::to_string(z_user.Z.cols()) + ", Z_item " +
                           std::to_string(z_item.Z.rows()) + "x" + std::to_string(z_item.Z.cols()));
  write_marker(paths.marker("pretrain"), fp);
}

namespace {

void save_vae_history(const std::filesystem::path& path, const vq::CodebookTrainHistory& history) {
  auto out = text::open_out(path);
  out << "epoch,train_loss\n";
  for (std::size_t e = 0; e < history.train_loss.size(); ++e) {
    out << e << ',' << text::format_double(history.train_loss[e]) << '\n';
  }
}

}  // namespace

void run_quantize(const RunConfig& config, bool skip_if_fresh) {
  config.validate();
  const Paths paths(config);
  const auto fp = config.stage_fingerprint("quantize");
  if (skip_if_fresh && marker_matches(paths.marker("quantize"), fp) &&
      all_exist({paths.quantizer_user, paths.quantizer_item})) {
    log_line("quantize", "up to date, skipping");
    return;
  }
  StageTimer timer("quantize");
  require(all_exist({paths.z_user, paths.z_item}), "quantize", "representation matrices");

  vq::CodebookTrainOptions options;
  options.epochs = config.vae_epochs;
  options.batch = config.batch;
  options.alpha = config.alpha;

  for (const std::string kind : {"user", "item"}) {
    const bool is_user = kind == "user";
    const auto reps =
        pretrain::RepresentationMatrix::load(is_user ? paths.z_user : paths.z_item);
    auto basis = vq::fit_basis(reps.Z, config.vq_layers);
    basis.kind = kind;
    Rng rng = Rng(config.seed).fork(is_user ? 0xDA1 : 0xDA2);
    vq::CodebookTrainHistory history;
    const auto model = vq::train_codebooks(reps.Z, basis, config.codebook_size, config.beta, rng,
                                           options, &history);
    model.save(is_user ? paths.quantizer_user : paths.quantizer_item);
    save_vae_history(is_user ? paths.vae_history_user : paths.vae_history_item, history);
    log_line("quantize",
             kind + ": final loss " +
                 (history.train_loss.empty() ? std::string("n/a")
                                             : text::format_double(history.train_loss.back())) +
                 ", reseeded " + std::to_string(history.reseeded));
  }
  write_marker(paths.marker("quantize"), fp);
}

void run_index(const RunConfig& config, bool skip_if_fresh) {
  config.validate();
  const Paths paths(config);
  const auto fp = config.stage_fingerprint("index");
  if (skip_if_fresh && marker_matches(paths.marker("index"), fp) &&
      all_exist({paths.repstore_user, paths.repstore_item, paths.neighbors_user,
                 paths.neighbors_item})) {
    log_line("index", "up to date, skipping");
    return;
  }
  StageTimer timer("index");
  require(all_exist({paths.z_user, paths.z_item, paths.quantizer_user, paths.quantizer_item}),
          "index", "representations and quantizers");
  require(all_exist({paths.user_ids, paths.item_ids}), "index", "id maps");

  const auto user_ids = data::IdMap::load(paths.user_ids);
  const auto item_ids = data::IdMap::load(paths.item_ids);

  for (const std::string kind : {"user", "item"}) {
    const bool is_user = kind == "user";
    const auto reps =
        pretrain::RepresentationMatrix::load(is_user ? paths.z_user : paths.z_item);
    const auto model =
        vq::QuantizerModel::load(is_user ? paths.quantizer_user : paths.quantizer_item);
    const auto store = aug::RepStore::build(reps, model);
    if (store.skipped() > 0) {
      log_line("index", kind + ": skipped " + std::to_string(store.skipped()) +
                            " rows without finite representations");
    }
    const auto cache = aug::NeighborCache::build(store, model, config.neighbors_k,
                                                 config.latent_k);
    store.save(is_user ? paths.repstore_user : paths.repstore_item);
    cache.save(is_user ? paths.neighbors_user : paths.neighbors_item,
               is_user ? user_ids : item_ids);
    log_line("index", kind + ": " + std::to_string(store.size()) + " entries, K=" +
                          std::to_string(config.neighbors_k) + ", K'=" +
                          std::to_string(config.latent_k));
  }
  write_marker(paths.marker("index"), fp);
}

namespace {

struct TrainContext {
  DataBundle bundle;
  pretrain::PretrainModel embedder;
  vq::QuantizerModel user_quantizer;
  vq::QuantizerModel item_quantizer;
  aug::NeighborCache user_neighbors;
  aug::NeighborCache item_neighbors;
};

TrainContext load_train_context(const RunConfig& config, const Paths& paths,
                                const std::string& stage) {
  require(all_exist({paths.pretrain_model, paths.quantizer_user, paths.quantizer_item,
                     paths.neighbors_user, paths.neighbors_item}),
          stage, "pretrain model, quantizers, and neighbor caches");
  TrainContext ctx{load_data_bundle(config), {}, {}, {}, {}, {}};
  ctx.embedder = pretrain::PretrainModel::load(paths.pretrain_model, ctx.bundle.schema);
  ctx.user_quantizer = vq::QuantizerModel::load(paths.quantizer_user);
  ctx.item_quantizer = vq::QuantizerModel::load(paths.quantizer_item);
  ctx.user_neighbors = aug::NeighborCache::load(paths.neighbors_user, ctx.bundle.log.users);
  ctx.item_neighbors = aug::NeighborCache::load(paths.neighbors_item, ctx.bundle.log.items);
  return ctx;
}

rec::AblationFlags flags_from(const RunConfig& config) {
  rec::AblationFlags flags;
  flags.user_feature = config.aug_user_feature;
  flags.item_feature = config.aug_item_feature;
  flags.user_linkage = config.aug_user_linkage;
  flags.item_linkage = config.aug_item_linkage;
  flags.latent_linkage = config.aug_latent_linkage;
  return flags;
}

}  // namespace

void run_train(const RunConfig& config, bool skip_if_fresh) {
  config.validate();
  const Paths paths(config);
  const auto fp = config.stage_fingerprint("train");
  if (skip_if_fresh && marker_matches(paths.marker("train"), fp) &&
      all_exist({paths.rec_model, paths.train_history})) {
    log_line("train", "up to date, skipping");
    return;
  }
  StageTimer timer("train");

  auto ctx = load_train_context(config, paths, "train");
  const data::InteractionSets train_sets(ctx.bundle.split.train, ctx.bundle.log.user_count(),
                                         ctx.bundle.log.item_count());
  const data::InteractionSets log_sets(ctx.bundle.log.records, ctx.bundle.log.user_count(),
                                       ctx.bundle.log.item_count());

  Rng rng = Rng(config.seed).fork(0x7EC);
  auto model = rec::RecModel::init(ctx.bundle.log.user_count(), ctx.bundle.log.item_count(),
                                   config.vq_layers, config.codebook_size, config.embed_dim,
                                   config.hidden_dim, flags_from(config), rng);
  rec::SampleContext context(ctx.embedder, ctx.bundle.schema, ctx.user_quantizer,
                             ctx.item_quantizer, ctx.bundle.sequences);
  rec::TrainOptions options;
  options.epochs = config.rec_epochs;
  options.batch = config.batch;
  options.alpha = config.alpha;
  options.patience = config.patience;
  options.eval_batch = config.effective_eval_batch();

  const auto history = rec::train(model, ctx.bundle.split, context, ctx.user_neighbors,
                                  ctx.item_neighbors, train_sets, log_sets, rng, options);
  if (history.diverged) {
    log_line("train", "warning: loss diverged; kept last good checkpoint");
  }
  log_line("train", "epochs run: " + std::to_string(history.train_loss.size()) +
                        ", best epoch: " + std::to_string(history.best_epoch));

  model.save(paths.rec_model);
  auto out = text::open_out(paths.train_history);
  out << "epoch,train_loss,valid_recall10,valid_ndcg10\n";
  for (std::size_t e = 0; e < history.train_loss.size(); ++e) {
    out << e << ',' << text::format_double(history.train_loss[e]) << ',';
    out << (e < history.valid_recall.size() ? text::format_double(history.valid_recall[e]) : "");
    out << ',';
    out << (e < history.valid_ndcg.size() ? text::format_double(history.valid_ndcg[e]) : "");
    out << '\n';
  }
  write_marker(paths.marker("train"), fp);
}

metrics::MetricsReport run_eval(const RunConfig& config, bool skip_if_fresh) {
  config.validate();
  const Paths paths(config);
  const auto fp = config.stage_fingerprint("eval");
  if (skip_if_fresh && marker_matches(paths.marker("eval"), fp) &&
      all_exist({paths.metrics_csv})) {
    log_line("eval", "up to date, skipping");
    return metrics::MetricsReport::load_csv(paths.metrics_csv);
  }
  const auto started = std::chrono::steady_clock::now();
  StageTimer timer("eval");

  auto ctx = load_train_context(config, paths, "eval");
  require(all_exist({paths.rec_model}), "eval", "trained recommender checkpoint");
  const auto model = rec::RecModel::load(paths.rec_model);
  const data::InteractionSets log_sets(ctx.bundle.log.records, ctx.bundle.log.user_count(),
                                       ctx.bundle.log.item_count());
  rec::SampleContext context(ctx.embedder, ctx.bundle.schema, ctx.user_quantizer,
                             ctx.item_quantizer, ctx.bundle.sequences);
  auto scorer = rec::make_scorer(model, context, ctx.user_neighbors, ctx.item_neighbors);

  auto report = metrics::evaluate(metrics::to_eval_samples(ctx.bundle.split.test),
                                  config.effective_eval_batch(), config.k_list, log_sets, scorer);
  report.config_fingerprint = config.fingerprint();
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  report.save_csv(paths.metrics_csv);

  std::ostringstream os;
  os << "test metrics:";
  for (std::size_t i = 0; i < report.k_list.size(); ++i) {
    os << " R@" << report.k_list[i] << '=' << text::format_double(report.recall[i]);
    os << " N@" << report.k_list[i] << '=' << text::format_double(report.ndcg[i]);
  }
  os << " (" << report.samples << " samples, " << report.skipped << " skipped)";
  log_line("eval", os.str());
  write_marker(paths.marker("eval"), fp);
  return report;
}

metrics::MetricsReport run_pipeline(const RunConfig& config, bool force) {
  const bool skip = !force;
  run_prepare(config, skip);
  run_pretrain(config, skip);
  run_quantize(config, skip);
  run_index(config, skip);
  run_train(config, skip);
  return run_eval(config, skip);
}

std::string inspect_report(const RunConfig& config, const std::string& kind,
                           const std::vector<std::string>& external_ids) {
  if (kind != "user" && kind != "item") {
    throw std::invalid_argument("inspect: kind must be 'user' or 'item'");
  }
  const bool is_user = kind == "user";
  const Paths paths(config);
  require(all_exist({is_user ? paths.repstore_user : paths.repstore_item}), "inspect",
          "rep stores");
  const auto bundle = load_data_bundle(config);
  const auto store =
      aug::RepStore::load(is_user ? paths.repstore_user : paths.repstore_item);
  const auto& ids = is_user ? bundle.log.users : bundle.log.items;

  // Category labels of sequence members come from the first attribute family
  // of the opposite entity kind.
  const auto& member_values =
      is_user ? bundle.schema.item_values.front() : bundle.schema.user_values.front();
  const auto& member_value_names =
      is_user ? bundle.schema.item_value_names.front() : bundle.schema.user_value_names.front();
  const auto& member_family_name = is_user ? bundle.schema.item_families.front().name
                                           : bundle.schema.user_families.front().name;

  std::ostringstream os;
  std::vector<const aug::RepEntry*> entries;
  for (const auto& ext : external_ids) {
    const auto id = ids.find(ext);
    if (!id) throw std::runtime_error("inspect: unknown " + kind + " id '" + ext + "'");
    const auto* entry = store.find(*id);
    if (!entry) throw std::runtime_error("inspect: " + kind + " '" + ext + "' not in rep store");
    entries.push_back(entry);

    os << kind << ' ' << ext << "\n  semantic id: [";
    for (std::size_t l = 0; l < entry->sid.size(); ++l) {
      if (l) os << ' ';
      os << entry->sid[l];
    }
    os << "]\n";

    const auto seq = is_user ? bundle.sequences.user_sequence(*id)
                             : bundle.sequences.item_sequence(*id);
    std::map<std::string, int> histogram;
    for (const auto member : seq) {
      const auto v = member_values[static_cast<std::size_t>(member)];
      const auto& label = member_value_names[static_cast<std::size_t>(v)];
      histogram[label.empty() ? "(unknown)" : label] += 1;
    }
    os << "  sequence " << member_family_name << " histogram (" << seq.size() << " events):";
    if (histogram.empty()) os << " (empty)";
    for (const auto& [label, count] : histogram) os << ' ' << label << 'x' << count;
    os << '\n';
  }

  if (entries.size() > 1) {
    os << "pairwise:\n";
    for (std::size_t a = 0; a < entries.size(); ++a) {
      for (std::size_t b = a + 1; b < entries.size(); ++b) {
        int overlap = 0;
        for (std::size_t l = 0; l < entries[a]->sid.size(); ++l) {
          if (entries[a]->sid[l] == entries[b]->sid[l]) overlap += 1;
        }
        const double dist = (entries[a]->zhat - entries[b]->zhat).norm();
        os << "  " << external_ids[a] << " vs " << external_ids[b] << ": codeword overlap "
           << overlap << '/' << entries[a]->sid.size() << ", quantized distance "
           << text::format_double(dist) << '\n';
      }
    }
  }
  return os.str();
}

std::vector<SweepRow> run_sweep(const RunConfig& config, const std::string& axis,
                                const std::vector<double>& values) {
  if (axis != "K" && axis != "J" && axis != "L") {
    throw std::invalid_argument("sweep: axis must be K, J, or L");
  }
  std::vector<SweepRow> rows;
  for (const double value : values) {
    SweepRow row;
    row.value = value;
    RunConfig run = config;
    try {
      const int iv = static_cast<int>(value);
      if (static_cast<double>(iv) != value || iv <= 0) {
        throw std::runtime_error("axis value must be a positive integer");
      }
      if (axis == "K") run.neighbors_k = iv;
      else if (axis == "J") run.codebook_size = iv;
      else run.vq_layers = iv;
      run.validate();
      log_line("sweep", axis + "=" + std::to_string(iv));
      row.report = run_pipeline(run, false);
    } catch (const std::exception& e) {
      row.failed = true;
      row.error = e.what();
      log_line("sweep", axis + "=" + text::format_double(value) + " failed: " + row.error);
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_sweep_csv(const std::filesystem::path& path, const std::string& axis,
                     const std::vector<SweepRow>& rows, const std::vector<int>& k_list) {
  auto out = text::open_out(path);
  out << "axis,value,status";
  for (const int k : k_list) out << ",recall@" << k;
  for (const int k : k_list) out << ",ndcg@" << k;
  out << '\n';
  for (const auto& row : rows) {
    out << axis << ',' << text::format_double(row.value) << ','
        << (row.failed ? "failed" : "ok");
    if (row.failed) {
      for (std::size_t i = 0; i < 2 * k_list.size(); ++i) out << ',';
    } else {
      for (const double r : row.report.recall) out << ',' << text::format_double(r);
      for (const double n : row.report.ndcg) out << ',' << text::format_double(n);
    }
    out << '\n';
  }
}

}  // namespace dqrec::pipeline
