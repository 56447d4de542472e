#pragma once

#include "aefenet/common.hpp"
#include "aefenet/serialize.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace aefenet::ae {

enum class Activation : std::uint8_t { linear = 0, relu = 1, sigmoid = 2 };
enum class Variant : std::uint8_t { plain = 0, sparse = 1, variational = 2 };

std::string to_string(Activation a);
std::string to_string(Variant v);
Variant variant_from_string(const std::string& name);

/// Fully connected layer y = act(x W + b); W is (in x out).
struct DenseLayer {
  Matrix weights;
  Vector bias;
  Activation activation = Activation::linear;

  Index in_dim() const { return weights.rows(); }
  Index out_dim() const { return weights.cols(); }
};

/// KL sparsity penalty: target mean activation rho, weight beta.
struct SparseParams {
  double target = 0.05;
  double weight = 0.1;
};

struct Autoencoder {
  std::vector<DenseLayer> encoder;
  std::vector<DenseLayer> decoder;
  Variant variant = Variant::plain;
  Index code_dim = 0;
  SparseParams sparse;

  Index input_dim() const { return encoder.front().in_dim(); }
  /// Number of parameter tensors (each layer contributes W and b).
  std::size_t layer_count() const { return encoder.size() + decoder.size(); }
  DenseLayer& layer(std::size_t i);
  const DenseLayer& layer(std::size_t i) const;
  void validate() const;
};

struct TrainConfig {
  Index epochs = 10000;
  double learning_rate = 1e-3;
  double l1_weight = 1.0;  // plain variant: weight of the code L1 term
  double kl_weight = 1.0;  // variational variant: weight of the prior KL term
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_epsilon = 1e-8;
  bool full_batch = true;
  std::uint64_t seed = 0;  // drives the reparameterization noise stream
};

/// Encoder [input -> hidden... -> code] and mirrored decoder. Hidden layers
/// use ReLU; the code layer is linear (sigmoid for the sparse variant, and
/// 2*code_dim wide for the variational variant's mean/log-variance head);
/// the output layer is linear. Glorot-uniform weights, zero biases.
Autoencoder init_autoencoder(Index input_dim, Index code_dim, Variant variant, std::uint64_t seed,
                             const std::vector<Index>& hidden = {128, 64},
                             const SparseParams& sparse = {});

struct ForwardResult {
  Matrix code;            // n x code_dim (posterior mean for the variational variant)
  Matrix reconstruction;  // n x input_dim
};

/// Inference pass; sampling-free for every variant.
ForwardResult forward(const Autoencoder& ae, const Matrix& batch);

struct SingleForward {
  Vector code;
  Vector reconstruction;
};
SingleForward forward(const Autoencoder& ae, const Vector& x);

struct LossParts {
  double total = 0.0;
  double mse = 0.0;
  double penalty = 0.0;  // L1, sparse KL, or prior KL depending on the variant
};

/// `noise` (n x code_dim) is the reparameterization draw for the variational
/// variant; an empty matrix means zero noise. Ignored for other variants.
LossParts loss(const Autoencoder& ae, const Matrix& batch, const TrainConfig& config,
               const Matrix& noise = {});

double sparse_kl(double target, double mean_activation);

/// Closed-form KL(N(mu, diag(exp(logvar))) || N(0, I)) for one sample.
double gaussian_kl(const Vector& mu, const Vector& logvar);

struct LayerGradient {
  Matrix weights;
  Vector bias;
};

struct Gradients {
  std::vector<LayerGradient> layers;  // encoder layers first, then decoder
  LossParts loss;
};

Gradients gradients(const Autoencoder& ae, const Matrix& batch, const TrainConfig& config,
                    const Matrix& noise = {});

struct AdamParams {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// One bias-corrected Adam update of a single tensor; `step` is 1-based.
void adam_update(Eigen::Ref<Matrix> param, const Matrix& grad, Matrix& first_moment,
                 Matrix& second_moment, long step, const AdamParams& p);

struct AdamState {
  std::vector<Matrix> first_moment;   // per tensor: W0, b0, W1, b1, ...
  std::vector<Matrix> second_moment;
  long step = 0;
};

AdamState init_adam(const Autoencoder& ae);
void adam_step(Autoencoder& ae, const Gradients& grads, AdamState& state, const AdamParams& p);

/// Raised when training produces a non-finite loss; carries the history so far.
class TrainingDiverged : public NumericalError {
 public:
  TrainingDiverged(const std::string& what, std::vector<double> history)
      : NumericalError(what), history_(std::move(history)) {}
  const std::vector<double>& history() const { return history_; }

 private:
  std::vector<double> history_;
};

struct TrainResult {
  Autoencoder model;
  std::vector<double> history;  // total loss before each update
};

/// Full-batch training with Adam.
TrainResult train(Autoencoder ae, const Matrix& data, const TrainConfig& config);

void write_autoencoder(io::ByteWriter& out, const Autoencoder& ae);
Autoencoder read_autoencoder(io::ByteReader& in);

}  // namespace aefenet::ae
