#include "dqrec/quantizer.hpp"

#include "dqrec/nn.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace dqrec::vq {

Eigen::MatrixXd QuantizerBasis::stacked() const {
  Eigen::MatrixXd w(dim(), dim());
  int col = 0;
  for (const auto& block : blocks) {
    w.middleCols(col, block.cols()) = block;
    col += static_cast<int>(block.cols());
  }
  return w;
}

std::vector<int> partition_columns(const std::vector<double>& sigma2, int layers) {
  const int d = static_cast<int>(sigma2.size());
  if (layers <= 0 || d % layers != 0) {
    throw std::invalid_argument("partition_columns: dimension not divisible by layer count");
  }
  const int capacity = d / layers;

  std::vector<int> order(sigma2.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (sigma2[static_cast<std::size_t>(a)] != sigma2[static_cast<std::size_t>(b)]) {
      return sigma2[static_cast<std::size_t>(a)] > sigma2[static_cast<std::size_t>(b)];
    }
    return a < b;
  });

  std::vector<double> load(static_cast<std::size_t>(layers), 0.0);
  std::vector<int> used(static_cast<std::size_t>(layers), 0);
  std::vector<int> assignment(sigma2.size(), -1);
  for (int col : order) {
    int best = -1;
    for (int l = 0; l < layers; ++l) {
      if (used[static_cast<std::size_t>(l)] >= capacity) continue;
      if (best < 0 || load[static_cast<std::size_t>(l)] < load[static_cast<std::size_t>(best)]) {
        best = l;
      }
    }
    assignment[static_cast<std::size_t>(col)] = best;
    load[static_cast<std::size_t>(best)] += sigma2[static_cast<std::size_t>(col)];
    used[static_cast<std::size_t>(best)] += 1;
  }
  return assignment;
}

QuantizerBasis fit_basis(const Eigen::MatrixXd& Z, int layers) {
  const auto n = Z.rows();
  const auto d = Z.cols();
  if (n <= d) {
    throw std::invalid_argument("fit_basis: need more rows than columns (N > d), got N=" +
                                std::to_string(n) + ", d=" + std::to_string(d));
  }
  if (layers <= 0 || d % layers != 0) {
    throw std::invalid_argument("fit_basis: d=" + std::to_string(d) +
                                " not divisible by L=" + std::to_string(layers));
  }
  if (!Z.allFinite()) throw std::invalid_argument("fit_basis: non-finite entries");

  QuantizerBasis basis;
  basis.mean = Z.colwise().mean();
  const Eigen::MatrixXd centered = Z.rowwise() - basis.mean.transpose();

  Eigen::BDCSVD<Eigen::MatrixXd> svd(centered, Eigen::ComputeThinV);
  if (svd.info() != Eigen::Success) {
    throw std::runtime_error("fit_basis: SVD did not converge");
  }
  const Eigen::MatrixXd w = svd.matrixV();       // d x d
  const Eigen::VectorXd sigma = svd.singularValues();

  std::vector<double> sigma2(static_cast<std::size_t>(d));
  for (Eigen::Index i = 0; i < d; ++i) sigma2[static_cast<std::size_t>(i)] = sigma(i) * sigma(i);
  const std::vector<int> assignment = partition_columns(sigma2, layers);

  const int block_dim = static_cast<int>(d) / layers;
  basis.blocks.assign(static_cast<std::size_t>(layers), Eigen::MatrixXd(d, block_dim));
  basis.block_sigma2.assign(static_cast<std::size_t>(layers), Eigen::VectorXd(block_dim));
  std::vector<int> filled(static_cast<std::size_t>(layers), 0);
  for (Eigen::Index col = 0; col < d; ++col) {
    const int l = assignment[static_cast<std::size_t>(col)];
    const int slot = filled[static_cast<std::size_t>(l)]++;
    basis.blocks[static_cast<std::size_t>(l)].col(slot) = w.col(col);
    basis.block_sigma2[static_cast<std::size_t>(l)](slot) = sigma2[static_cast<std::size_t>(col)];
  }
  return basis;
}

std::vector<Eigen::VectorXd> encode(const Eigen::VectorXd& z, const QuantizerBasis& basis) {
  if (z.size() != basis.dim()) {
    throw std::invalid_argument("encode: input dim " + std::to_string(z.size()) + " != " +
                                std::to_string(basis.dim()));
  }
  const Eigen::VectorXd centered = z - basis.mean;
  std::vector<Eigen::VectorXd> latents;
  latents.reserve(basis.blocks.size());
  for (const auto& block : basis.blocks) {
    latents.emplace_back(block.transpose() * centered);
  }
  return latents;
}

namespace {

std::int32_t nearest_codeword(const Eigen::VectorXd& latent, const Codebook& codebook,
                              std::int32_t skip = -1) {
  if (codebook.size() == 0) throw std::runtime_error("assign_codewords: empty codebook");
  std::int32_t best = -1;
  double best_dist = 0.0;
  for (std::int32_t j = 0; j < codebook.size(); ++j) {
    if (j == skip) continue;
    const double dist = (latent - codebook.codewords.row(j).transpose()).squaredNorm();
    if (best < 0 || dist < best_dist) {
      best = j;
      best_dist = dist;
    }
  }
  return best;
}

}  // namespace

SemanticId assign_codewords(const std::vector<Eigen::VectorXd>& latents,
                            const std::vector<Codebook>& codebooks) {
  if (latents.size() != codebooks.size()) {
    throw std::invalid_argument("assign_codewords: layer count mismatch");
  }
  SemanticId sid(latents.size());
  for (std::size_t l = 0; l < latents.size(); ++l) {
    if (latents[l].size() != codebooks[l].codewords.cols()) {
      throw std::invalid_argument("assign_codewords: latent dim mismatch at layer " +
                                  std::to_string(l));
    }
    sid[l] = nearest_codeword(latents[l], codebooks[l]);
  }
  return sid;
}

Eigen::VectorXd decode(const SemanticId& sid, const QuantizerModel& model) {
  if (static_cast<int>(sid.size()) != model.layers()) {
    throw std::invalid_argument("decode: semantic id length mismatch");
  }
  Eigen::VectorXd zhat = model.basis.mean;
  for (std::size_t l = 0; l < sid.size(); ++l) {
    const auto& codebook = model.codebooks[l];
    if (sid[l] < 0 || sid[l] >= codebook.size()) {
      throw std::out_of_range("decode: codeword index out of range at layer " + std::to_string(l));
    }
    zhat += model.basis.blocks[l] * codebook.codewords.row(sid[l]).transpose();
  }
  return zhat;
}

QuantizationLosses quantization_losses(const Eigen::VectorXd& z, const QuantizerModel& model) {
  const auto latents = encode(z, model.basis);
  const SemanticId sid = assign_codewords(latents, model.codebooks);
  const Eigen::VectorXd zhat = decode(sid, model);
  QuantizationLosses losses;
  losses.reconstruction = (zhat - z).squaredNorm();
  for (std::size_t l = 0; l < sid.size(); ++l) {
    losses.commitment +=
        (latents[l] - model.codebooks[l].codewords.row(sid[l]).transpose()).squaredNorm();
  }
  losses.total = losses.reconstruction + model.beta * losses.commitment;
  return losses;
}

QuantizerModel train_codebooks(const Eigen::MatrixXd& Z, const QuantizerBasis& basis,
                               int codebook_size, double beta, Rng& rng,
                               const CodebookTrainOptions& options, CodebookTrainHistory* history,
                               const Eigen::MatrixXd* heldout) {
  const auto n = Z.rows();
  if (codebook_size < 2) throw std::invalid_argument("train_codebooks: need J >= 2");
  if (codebook_size > n) {
    throw std::invalid_argument("train_codebooks: J=" + std::to_string(codebook_size) +
                                " exceeds N=" + std::to_string(n));
  }
  const int layers = basis.layers();
  const int block_dim = basis.block_dim();

  // Precompute latents per layer: rows of X_l are W_l^T (z_i - mean).
  std::vector<Eigen::MatrixXd> latents(static_cast<std::size_t>(layers));
  {
    const Eigen::MatrixXd centered = Z.rowwise() - basis.mean.transpose();
    for (int l = 0; l < layers; ++l) {
      latents[static_cast<std::size_t>(l)] = centered * basis.blocks[static_cast<std::size_t>(l)];
    }
  }

  QuantizerModel model;
  model.basis = basis;
  model.beta = beta;
  model.codebooks.resize(static_cast<std::size_t>(layers));

  // Init: J distinct latents per layer, sampled in shuffled row order.
  for (int l = 0; l < layers; ++l) {
    auto& codebook = model.codebooks[static_cast<std::size_t>(l)];
    codebook.layer = l;
    codebook.codewords.resize(codebook_size, block_dim);
    std::vector<std::int64_t> rows(static_cast<std::size_t>(n));
    std::iota(rows.begin(), rows.end(), 0);
    Rng layer_rng = rng.fork(0x1000 + static_cast<std::uint64_t>(l));
    layer_rng.shuffle(rows);
    int chosen = 0;
    for (std::int64_t row : rows) {
      const Eigen::RowVectorXd cand = latents[static_cast<std::size_t>(l)].row(row);
      bool duplicate = false;
      for (int j = 0; j < chosen; ++j) {
        if ((codebook.codewords.row(j) - cand).squaredNorm() == 0.0) {
          duplicate = true;
          break;
        }
      }
      if (duplicate) continue;
      codebook.codewords.row(chosen++) = cand;
      if (chosen == codebook_size) break;
    }
    if (chosen < codebook_size) {
      throw std::runtime_error("train_codebooks: layer " + std::to_string(l) + " has only " +
                               std::to_string(chosen) + " distinct latents, need " +
                               std::to_string(codebook_size));
    }
  }

  std::vector<nn::AdamState> adam(static_cast<std::size_t>(layers));
  const nn::AdamConfig adam_config{options.alpha, 0.9, 0.999, 1e-8};
  Rng shuffle_rng = rng.fork(0x2000);
  Rng reseed_rng = rng.fork(0x3000);

  const auto mean_total_loss = [&](const Eigen::MatrixXd& rows_matrix) {
    double sum = 0.0;
    for (Eigen::Index i = 0; i < rows_matrix.rows(); ++i) {
      sum += quantization_losses(rows_matrix.row(i).transpose(), model).total;
    }
    return rows_matrix.rows() > 0 ? sum / static_cast<double>(rows_matrix.rows()) : 0.0;
  };

  std::vector<std::int64_t> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 0; epoch < options.epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    std::vector<std::vector<std::int64_t>> usage(
        static_cast<std::size_t>(layers), std::vector<std::int64_t>(static_cast<std::size_t>(codebook_size), 0));
    double epoch_loss = 0.0;

    for (std::int64_t start = 0; start < n; start += options.batch) {
      const std::int64_t end = std::min<std::int64_t>(start + options.batch, n);
      const double batch_size = static_cast<double>(end - start);
      std::vector<Eigen::MatrixXd> grads(static_cast<std::size_t>(layers));
      for (int l = 0; l < layers; ++l) {
        grads[static_cast<std::size_t>(l)] = Eigen::MatrixXd::Zero(codebook_size, block_dim);
      }

      for (std::int64_t k = start; k < end; ++k) {
        const std::int64_t row = order[static_cast<std::size_t>(k)];
        double sample_loss = 0.0;
        for (int l = 0; l < layers; ++l) {
          const Eigen::VectorXd x = latents[static_cast<std::size_t>(l)].row(row).transpose();
          const std::int32_t c = nearest_codeword(x, model.codebooks[static_cast<std::size_t>(l)]);
          usage[static_cast<std::size_t>(l)][static_cast<std::size_t>(c)] += 1;
          const Eigen::VectorXd diff =
              model.codebooks[static_cast<std::size_t>(l)].codewords.row(c).transpose() - x;
          // Orthonormal blocks make the reconstruction term contribute the
          // same 2*(r - x) gradient as the commitment term.
          sample_loss += (1.0 + beta) * diff.squaredNorm();
          grads[static_cast<std::size_t>(l)].row(c) +=
              (2.0 * (1.0 + beta) / batch_size) * diff.transpose();
        }
        epoch_loss += sample_loss;
      }

      for (int l = 0; l < layers; ++l) {
        adam_step(model.codebooks[static_cast<std::size_t>(l)].codewords,
                  grads[static_cast<std::size_t>(l)], adam[static_cast<std::size_t>(l)],
                  adam_config);
      }
    }

    // Re-seed codewords that went a full epoch without an assignment.
    for (int l = 0; l < layers; ++l) {
      for (int j = 0; j < codebook_size; ++j) {
        if (usage[static_cast<std::size_t>(l)][static_cast<std::size_t>(j)] > 0) continue;
        const std::int64_t row = reseed_rng.uniform_int(n);
        model.codebooks[static_cast<std::size_t>(l)].codewords.row(j) =
            latents[static_cast<std::size_t>(l)].row(row);
        if (history) history->reseeded += 1;
      }
    }

    if (history) {
      history->train_loss.push_back(epoch_loss / static_cast<double>(n));
      if (heldout) history->heldout_loss.push_back(mean_total_loss(*heldout));
    }
  }

  return model;
}

void QuantizerModel::save(const std::filesystem::path& path) const {
  io::TensorFile file;
  file.put_scalar("dim", basis.dim());
  file.put_scalar("layers", layers());
  file.put_scalar("codebook_size", codebook_size());
  file.put_scalar("beta", beta);
  file.put_scalar("kind_id", basis.kind == "item" ? 1.0 : 0.0);
  file.put("mean", basis.mean);
  for (int l = 0; l < layers(); ++l) {
    const std::string suffix = std::to_string(l);
    file.put("block_" + suffix, basis.blocks[static_cast<std::size_t>(l)]);
    file.put("sigma2_" + suffix, basis.block_sigma2[static_cast<std::size_t>(l)]);
    file.put("codebook_" + suffix, codebooks[static_cast<std::size_t>(l)].codewords);
  }
  file.save(path);
}

QuantizerModel QuantizerModel::load(const std::filesystem::path& path) {
  const auto file = io::TensorFile::load(path);
  QuantizerModel model;
  const auto layers = static_cast<int>(file.scalar_int("layers"));
  model.beta = file.scalar("beta");
  model.basis.kind = file.scalar_int("kind_id") == 1 ? "item" : "user";
  model.basis.mean = file.vector("mean");
  model.basis.blocks.resize(static_cast<std::size_t>(layers));
  model.basis.block_sigma2.resize(static_cast<std::size_t>(layers));
  model.codebooks.resize(static_cast<std::size_t>(layers));
  for (int l = 0; l < layers; ++l) {
    const std::string suffix = std::to_string(l);
    model.basis.blocks[static_cast<std::size_t>(l)] = file.matrix("block_" + suffix);
    model.basis.block_sigma2[static_cast<std::size_t>(l)] = file.vector("sigma2_" + suffix);
    model.codebooks[static_cast<std::size_t>(l)].layer = l;
    model.codebooks[static_cast<std::size_t>(l)].codewords = file.matrix("codebook_" + suffix);
  }
  return model;
}

}  // namespace dqrec::vq
