#pragma once

#include "dqrec/rng.hpp"
#include "dqrec/tensor_file.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace dqrec::vq {

// Length-L sequence of codeword indices, one per layer.
using SemanticId = std::vector<std::int32_t>;

// Fixed orthonormal encoder/decoder fitted by SVD of the centered
// representation matrix. The d basis columns are split into L blocks of
// d/L columns with balanced squared-singular-value mass.
struct QuantizerBasis {
  Eigen::VectorXd mean;                       // d
  std::vector<Eigen::MatrixXd> blocks;        // L blocks, each d x (d/L)
  std::vector<Eigen::VectorXd> block_sigma2;  // per block, sigma^2 per column
  std::string kind;                           // "user" or "item"

  int dim() const { return static_cast<int>(mean.size()); }
  int layers() const { return static_cast<int>(blocks.size()); }
  int block_dim() const { return blocks.empty() ? 0 : static_cast<int>(blocks.front().cols()); }

  // Stacked d x d matrix [W_1 ... W_L].
  Eigen::MatrixXd stacked() const;
};

// Greedy balanced assignment of columns to layers: columns sorted by
// sigma^2 descending go to the block with the smallest current load that
// still has capacity d/L; ties pick the lower block index.
std::vector<int> partition_columns(const std::vector<double>& sigma2, int layers);

// Centers Z, takes its SVD, and partitions the right singular vectors.
// Requires N > d, d divisible by layers, finite input.
QuantizerBasis fit_basis(const Eigen::MatrixXd& Z, int layers);

struct Codebook {
  int layer = 0;
  Eigen::MatrixXd codewords;  // J x (d/L)

  int size() const { return static_cast<int>(codewords.rows()); }
};

struct QuantizerModel {
  QuantizerBasis basis;
  std::vector<Codebook> codebooks;
  double beta = 0.25;

  int layers() const { return basis.layers(); }
  int codebook_size() const { return codebooks.empty() ? 0 : codebooks.front().size(); }
  int dim() const { return basis.dim(); }

  void save(const std::filesystem::path& path) const;
  static QuantizerModel load(const std::filesystem::path& path);
};

// Per-layer latents x_l = W_l^T (z - mean).
std::vector<Eigen::VectorXd> encode(const Eigen::VectorXd& z, const QuantizerBasis& basis);

// Nearest codeword per layer, ties to the lowest index.
SemanticId assign_codewords(const std::vector<Eigen::VectorXd>& latents,
                            const std::vector<Codebook>& codebooks);

// zhat = sum_l W_l r_l^{c_l} + mean.
Eigen::VectorXd decode(const SemanticId& sid, const QuantizerModel& model);

struct QuantizationLosses {
  double reconstruction = 0.0;  // ||zhat - z||^2
  double commitment = 0.0;      // sum_l ||x_l - r_l^{c_l}||^2
  double total = 0.0;           // reconstruction + beta * commitment
};

QuantizationLosses quantization_losses(const Eigen::VectorXd& z, const QuantizerModel& model);

struct CodebookTrainOptions {
  int epochs = 50;
  int batch = 1024;
  double alpha = 1e-3;
};

struct CodebookTrainHistory {
  std::vector<double> train_loss;    // mean total loss per epoch
  std::vector<double> heldout_loss;  // mean total loss on heldout rows, if given
  int reseeded = 0;                  // dead codewords re-seeded
};

// Initializes each layer's codebook from J distinct training latents, then
// minimizes the total loss with minibatch Adam; the basis stays frozen.
// Codewords unused for a full epoch are re-seeded from random latents.
QuantizerModel train_codebooks(const Eigen::MatrixXd& Z, const QuantizerBasis& basis,
                               int codebook_size, double beta, Rng& rng,
                               const CodebookTrainOptions& options = {},
                               CodebookTrainHistory* history = nullptr,
                               const Eigen::MatrixXd* heldout = nullptr);

}  // namespace dqrec::vq
