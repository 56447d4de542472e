#include "aefenet/autoencoder.hpp"

#include <cmath>
#include <random>

namespace aefenet::ae {

std::string to_string(Activation a) {
  switch (a) {
    case Activation::linear: return "linear";
    case Activation::relu: return "relu";
    case Activation::sigmoid: return "sigmoid";
  }
  return "linear";
}

std::string to_string(Variant v) {
  switch (v) {
    case Variant::plain: return "plain";
    case Variant::sparse: return "sparse";
    case Variant::variational: return "variational";
  }
  return "plain";
}

Variant variant_from_string(const std::string& name) {
  for (auto v : {Variant::plain, Variant::sparse, Variant::variational}) {
    if (to_string(v) == name) return v;
  }
  throw InvalidArgument("unknown autoencoder variant: " + name);
}

DenseLayer& Autoencoder::layer(std::size_t i) {
  return i < encoder.size() ? encoder[i] : decoder[i - encoder.size()];
}

const DenseLayer& Autoencoder::layer(std::size_t i) const {
  return i < encoder.size() ? encoder[i] : decoder[i - encoder.size()];
}

void Autoencoder::validate() const {
  if (encoder.empty() || decoder.empty()) throw InvalidArgument("autoencoder: empty layer stack");
  for (std::size_t i = 0; i < layer_count(); ++i) {
    const auto& l = layer(i);
    if (l.bias.size() != l.out_dim()) throw InvalidArgument("autoencoder: bias shape mismatch");
    if (!l.weights.allFinite() || !l.bias.allFinite()) {
      throw NumericalError("autoencoder: non-finite parameter in layer " + std::to_string(i));
    }
  }
  for (std::size_t i = 1; i < encoder.size(); ++i) {
    if (encoder[i].in_dim() != encoder[i - 1].out_dim()) {
      throw InvalidArgument("autoencoder: encoder dimensions do not chain");
    }
  }
  for (std::size_t i = 1; i < decoder.size(); ++i) {
    if (decoder[i].in_dim() != decoder[i - 1].out_dim()) {
      throw InvalidArgument("autoencoder: decoder dimensions do not chain");
    }
  }
  const Index head = variant == Variant::variational ? 2 * code_dim : code_dim;
  if (encoder.back().out_dim() != head || decoder.front().in_dim() != code_dim) {
    throw InvalidArgument("autoencoder: code dimension mismatch");
  }
  if (decoder.back().out_dim() != input_dim()) {
    throw InvalidArgument("autoencoder: decoder output does not match input dimension");
  }
}

// ---------------------------------------------------------------------------
// Construction

namespace {

DenseLayer glorot_layer(Index in, Index out, Activation act, std::mt19937_64& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
  std::uniform_real_distribution<double> dist(-limit, limit);
  DenseLayer layer;
  layer.weights.resize(in, out);
  for (Index j = 0; j < out; ++j) {
    for (Index i = 0; i < in; ++i) layer.weights(i, j) = dist(rng);
  }
  layer.bias = Vector::Zero(out);
  layer.activation = act;
  return layer;
}

}  // namespace

Autoencoder init_autoencoder(Index input_dim, Index code_dim, Variant variant, std::uint64_t seed,
                             const std::vector<Index>& hidden, const SparseParams& sparse) {
  if (input_dim <= 0 || code_dim <= 0) throw InvalidArgument("autoencoder: dims must be positive");
  for (auto h : hidden) {
    if (h <= 0) throw InvalidArgument("autoencoder: hidden widths must be positive");
  }
  std::mt19937_64 rng(seed);
  Autoencoder ae;
  ae.variant = variant;
  ae.code_dim = code_dim;
  ae.sparse = sparse;

  const Activation code_act = variant == Variant::sparse ? Activation::sigmoid : Activation::linear;
  const Index head = variant == Variant::variational ? 2 * code_dim : code_dim;

  std::vector<Index> enc_dims{input_dim};
  enc_dims.insert(enc_dims.end(), hidden.begin(), hidden.end());
  for (std::size_t i = 0; i + 1 < enc_dims.size(); ++i) {
    ae.encoder.push_back(glorot_layer(enc_dims[i], enc_dims[i + 1], Activation::relu, rng));
  }
  ae.encoder.push_back(glorot_layer(enc_dims.back(), head, code_act, rng));

  std::vector<Index> dec_dims{code_dim};
  dec_dims.insert(dec_dims.end(), hidden.rbegin(), hidden.rend());
  for (std::size_t i = 0; i + 1 < dec_dims.size(); ++i) {
    ae.decoder.push_back(glorot_layer(dec_dims[i], dec_dims[i + 1], Activation::relu, rng));
  }
  ae.decoder.push_back(glorot_layer(dec_dims.back(), input_dim, Activation::linear, rng));
  return ae;
}

// ---------------------------------------------------------------------------
// Forward

namespace {

void activate(Matrix& z, Activation act) {
  switch (act) {
    case Activation::linear: break;
    case Activation::relu: z = z.cwiseMax(0.0); break;
    case Activation::sigmoid: z = (1.0 + (-z.array()).exp()).inverse().matrix(); break;
  }
}

Matrix apply_layer(const DenseLayer& layer, const Matrix& input) {
  Matrix z = input * layer.weights;
  z.rowwise() += layer.bias.transpose();
  activate(z, layer.activation);
  return z;
}

// Activations cached for backprop. activations[0] is the layer input.
struct Trace {
  std::vector<Matrix> enc;  // enc[0] = batch, enc[i+1] = output of encoder layer i
  std::vector<Matrix> dec;  // dec[0] = decoder input, dec[i+1] = output of decoder layer i
  Matrix mu, logvar, code;
};

Trace run(const Autoencoder& ae, const Matrix& batch, const Matrix& noise) {
  if (batch.cols() != ae.input_dim()) {
    throw InvalidArgument("autoencoder: input has " + std::to_string(batch.cols()) +
                          " columns, model expects " + std::to_string(ae.input_dim()));
  }
  Trace tr;
  tr.enc.reserve(ae.encoder.size() + 1);
  tr.enc.push_back(batch);
  for (const auto& l : ae.encoder) tr.enc.push_back(apply_layer(l, tr.enc.back()));

  const Matrix& head = tr.enc.back();
  Matrix decoder_input;
  if (ae.variant == Variant::variational) {
    tr.mu = head.leftCols(ae.code_dim);
    tr.logvar = head.rightCols(ae.code_dim);
    tr.code = tr.mu;
    decoder_input = tr.mu;
    if (noise.size() != 0) {
      if (noise.rows() != batch.rows() || noise.cols() != ae.code_dim) {
        throw InvalidArgument("autoencoder: noise shape mismatch");
      }
      decoder_input += ((0.5 * tr.logvar.array()).exp() * noise.array()).matrix();
    }
  } else {
    tr.code = head;
    decoder_input = head;
  }
  tr.dec.reserve(ae.decoder.size() + 1);
  tr.dec.push_back(std::move(decoder_input));
  for (const auto& l : ae.decoder) tr.dec.push_back(apply_layer(l, tr.dec.back()));
  return tr;
}

}  // namespace

ForwardResult forward(const Autoencoder& ae, const Matrix& batch) {
  Trace tr = run(ae, batch, Matrix());
  ForwardResult out{std::move(tr.code), std::move(tr.dec.back())};
  if (!out.code.allFinite() || !out.reconstruction.allFinite()) {
    throw NumericalError("autoencoder: non-finite activation in forward pass");
  }
  return out;
}

SingleForward forward(const Autoencoder& ae, const Vector& x) {
  auto r = forward(ae, Matrix(x.transpose()));
  return {r.code.row(0).transpose(), r.reconstruction.row(0).transpose()};
}

// ---------------------------------------------------------------------------
// Loss

double sparse_kl(double target, double mean_activation) {
  if (!(mean_activation > 0.0 && mean_activation < 1.0)) {
    throw NumericalError("sparse penalty: mean activation " + std::to_string(mean_activation) +
                         " outside (0, 1)");
  }
  return target * std::log(target / mean_activation) +
         (1.0 - target) * std::log((1.0 - target) / (1.0 - mean_activation));
}

double gaussian_kl(const Vector& mu, const Vector& logvar) {
  return -0.5 * (1.0 + logvar.array() - mu.array().square() - logvar.array().exp()).sum();
}

namespace {

LossParts evaluate_loss(const Autoencoder& ae, const Trace& tr, const TrainConfig& config) {
  const Matrix& x = tr.enc.front();
  const Matrix& y = tr.dec.back();
  const double n = static_cast<double>(x.rows());
  LossParts parts;
  parts.mse = (y - x).squaredNorm() / (n * static_cast<double>(x.cols()));
  const double cells = n * static_cast<double>(ae.code_dim);
  switch (ae.variant) {
    case Variant::plain:
      parts.penalty = config.l1_weight * tr.code.cwiseAbs().sum() / cells;
      break;
    case Variant::sparse: {
      const Vector rho_hat = tr.code.colwise().mean().transpose();
      double kl = 0.0;
      for (Index j = 0; j < rho_hat.size(); ++j) kl += sparse_kl(ae.sparse.target, rho_hat(j));
      parts.penalty = ae.sparse.weight * kl;
      break;
    }
    case Variant::variational: {
      const double kl = -0.5 * (1.0 + tr.logvar.array() - tr.mu.array().square() -
                                tr.logvar.array().exp())
                                   .sum();
      parts.penalty = config.kl_weight * kl / cells;
      break;
    }
  }
  parts.total = parts.mse + parts.penalty;
  return parts;
}

}  // namespace

LossParts loss(const Autoencoder& ae, const Matrix& batch, const TrainConfig& config,
               const Matrix& noise) {
  if (batch.rows() == 0) throw InvalidArgument("loss: empty batch");
  return evaluate_loss(ae, run(ae, batch, noise), config);
}

// ---------------------------------------------------------------------------
// Backprop

namespace {

// Multiplies `grad` in place by the activation derivative, expressed through
// the layer output.
void activation_backward(Matrix& grad, const Matrix& output, Activation act) {
  switch (act) {
    case Activation::linear: break;
    case Activation::relu:
      grad = (output.array() > 0.0).select(grad, 0.0);
      break;
    case Activation::sigmoid:
      grad.array() *= output.array() * (1.0 - output.array());
      break;
  }
}

// Backpropagates `grad_out` (w.r.t. layer output) through one layer; fills
// the parameter gradient and returns the gradient w.r.t. the layer input.
Matrix layer_backward(const DenseLayer& layer, const Matrix& input, const Matrix& output,
                      Matrix grad_out, LayerGradient& g) {
  activation_backward(grad_out, output, layer.activation);
  g.weights = input.transpose() * grad_out;
  g.bias = grad_out.colwise().sum().transpose();
  return grad_out * layer.weights.transpose();
}

}  // namespace

Gradients gradients(const Autoencoder& ae, const Matrix& batch, const TrainConfig& config,
                    const Matrix& noise) {
  if (batch.rows() == 0) throw InvalidArgument("gradients: empty batch");
  const Trace tr = run(ae, batch, noise);
  Gradients out;
  out.loss = evaluate_loss(ae, tr, config);
  if (!std::isfinite(out.loss.total)) throw NumericalError("gradients: loss is not finite");
  out.layers.resize(ae.layer_count());

  const Matrix& x = tr.enc.front();
  const double n = static_cast<double>(x.rows());
  Matrix grad = (tr.dec.back() - x) * (2.0 / (n * static_cast<double>(x.cols())));

  for (std::size_t i = ae.decoder.size(); i-- > 0;) {
    grad = layer_backward(ae.decoder[i], tr.dec[i], tr.dec[i + 1], std::move(grad),
                          out.layers[ae.encoder.size() + i]);
  }
  // `grad` is now w.r.t. the decoder input.
  const double cells = n * static_cast<double>(ae.code_dim);
  Matrix head_grad;
  switch (ae.variant) {
    case Variant::plain:
      // Subgradient of |c| at 0 is taken as 0.
      head_grad = grad + (config.l1_weight / cells) * tr.code.cwiseSign();
      break;
    case Variant::sparse: {
      const Vector rho_hat = tr.code.colwise().mean().transpose();
      const double rho = ae.sparse.target;
      Vector d_rho(rho_hat.size());
      for (Index j = 0; j < rho_hat.size(); ++j) {
        if (!(rho_hat(j) > 0.0 && rho_hat(j) < 1.0)) {
          throw NumericalError("sparse penalty: mean activation outside (0, 1)");
        }
        d_rho(j) = ae.sparse.weight * (-rho / rho_hat(j) + (1.0 - rho) / (1.0 - rho_hat(j)));
      }
      head_grad = grad;
      head_grad.rowwise() += (d_rho / n).transpose();
      break;
    }
    case Variant::variational: {
      const double w = config.kl_weight / cells;
      const Matrix sigma = (0.5 * tr.logvar.array()).exp().matrix();
      Matrix d_mu = grad + w * tr.mu;
      Matrix d_logvar = (0.5 * w) * (tr.logvar.array().exp() - 1.0).matrix();
      if (noise.size() != 0) {
        d_logvar.array() += grad.array() * noise.array() * 0.5 * sigma.array();
      }
      head_grad.resize(grad.rows(), 2 * ae.code_dim);
      head_grad << d_mu, d_logvar;
      break;
    }
  }

  grad = std::move(head_grad);
  for (std::size_t i = ae.encoder.size(); i-- > 0;) {
    grad = layer_backward(ae.encoder[i], tr.enc[i], tr.enc[i + 1], std::move(grad),
                          out.layers[i]);
  }
  for (std::size_t i = 0; i < out.layers.size(); ++i) {
    if (!out.layers[i].weights.allFinite() || !out.layers[i].bias.allFinite()) {
      const bool enc = i < ae.encoder.size();
      throw NumericalError("gradients: non-finite gradient in " +
                           std::string(enc ? "encoder" : "decoder") + " layer " +
                           std::to_string(enc ? i : i - ae.encoder.size()));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Adam

void adam_update(Eigen::Ref<Matrix> param, const Matrix& grad, Matrix& first_moment,
                 Matrix& second_moment, long step, const AdamParams& p) {
  first_moment = p.beta1 * first_moment + (1.0 - p.beta1) * grad;
  second_moment = p.beta2 * second_moment + (1.0 - p.beta2) * grad.cwiseAbs2();
  const double c1 = 1.0 - std::pow(p.beta1, static_cast<double>(step));
  const double c2 = 1.0 - std::pow(p.beta2, static_cast<double>(step));
  param.array() -= p.learning_rate * (first_moment.array() / c1) /
                   ((second_moment.array() / c2).sqrt() + p.epsilon);
}

AdamState init_adam(const Autoencoder& ae) {
  AdamState s;
  for (std::size_t i = 0; i < ae.layer_count(); ++i) {
    const auto& l = ae.layer(i);
    s.first_moment.push_back(Matrix::Zero(l.weights.rows(), l.weights.cols()));
    s.second_moment.push_back(Matrix::Zero(l.weights.rows(), l.weights.cols()));
    s.first_moment.push_back(Matrix::Zero(l.bias.size(), 1));
    s.second_moment.push_back(Matrix::Zero(l.bias.size(), 1));
  }
  return s;
}

void adam_step(Autoencoder& ae, const Gradients& grads, AdamState& state, const AdamParams& p) {
  if (grads.layers.size() != ae.layer_count() ||
      state.first_moment.size() != 2 * ae.layer_count()) {
    throw InvalidArgument("adam_step: parameter/gradient shape mismatch");
  }
  ++state.step;
  for (std::size_t i = 0; i < ae.layer_count(); ++i) {
    auto& l = ae.layer(i);
    adam_update(l.weights, grads.layers[i].weights, state.first_moment[2 * i],
                state.second_moment[2 * i], state.step, p);
    Eigen::Map<Matrix> bias(l.bias.data(), l.bias.size(), 1);
    adam_update(bias, grads.layers[i].bias, state.first_moment[2 * i + 1],
                state.second_moment[2 * i + 1], state.step, p);
  }
}

// ---------------------------------------------------------------------------
// Training

TrainResult train(Autoencoder ae, const Matrix& data, const TrainConfig& config) {
  ae.validate();
  if (data.cols() != ae.input_dim()) {
    throw InvalidArgument("train: data has " + std::to_string(data.cols()) +
                          " columns, model expects " + std::to_string(ae.input_dim()));
  }
  if (config.epochs < 0) throw InvalidArgument("train: epochs must be non-negative");
  if (!config.full_batch) throw InvalidArgument("train: only full-batch training is supported");

  const AdamParams adam{config.learning_rate, config.beta1, config.beta2, config.adam_epsilon};
  AdamState state = init_adam(ae);
  std::mt19937_64 rng(config.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Matrix noise;

  TrainResult result;
  result.history.reserve(static_cast<std::size_t>(config.epochs));
  for (Index epoch = 0; epoch < config.epochs; ++epoch) {
    if (ae.variant == Variant::variational) {
      noise.resize(data.rows(), ae.code_dim);
      for (Index j = 0; j < noise.cols(); ++j) {
        for (Index i = 0; i < noise.rows(); ++i) noise(i, j) = gauss(rng);
      }
    }
    Gradients g;
    try {
      g = gradients(ae, data, config, noise);
    } catch (const NumericalError& e) {
      throw TrainingDiverged("training diverged at epoch " + std::to_string(epoch) + ": " +
                                 e.what(),
                             std::move(result.history));
    }
    result.history.push_back(g.loss.total);
    adam_step(ae, g, state, adam);
  }
  result.model = std::move(ae);
  return result;
}

// ---------------------------------------------------------------------------
// Serialization

void write_autoencoder(io::ByteWriter& out, const Autoencoder& ae) {
  out.u8(static_cast<std::uint8_t>(ae.variant));
  out.i64(ae.code_dim);
  out.f64(ae.sparse.target);
  out.f64(ae.sparse.weight);
  for (const auto* stack : {&ae.encoder, &ae.decoder}) {
    out.u64(stack->size());
    for (const auto& l : *stack) {
      out.u8(static_cast<std::uint8_t>(l.activation));
      out.mat(l.weights);
      out.vec(l.bias);
    }
  }
}

Autoencoder read_autoencoder(io::ByteReader& in) {
  Autoencoder ae;
  const auto variant = in.u8();
  if (variant > 2) throw FormatError("autoencoder: bad variant tag");
  ae.variant = static_cast<Variant>(variant);
  ae.code_dim = in.i64();
  ae.sparse.target = in.f64();
  ae.sparse.weight = in.f64();
  for (auto* stack : {&ae.encoder, &ae.decoder}) {
    const auto count = in.u64();
    if (count == 0 || count > 64) throw FormatError("autoencoder: implausible layer count");
    for (std::uint64_t i = 0; i < count; ++i) {
      DenseLayer l;
      const auto act = in.u8();
      if (act > 2) throw FormatError("autoencoder: bad activation tag");
      l.activation = static_cast<Activation>(act);
      l.weights = in.mat();
      l.bias = in.vec();
      stack->push_back(std::move(l));
    }
  }
  try {
    ae.validate();
  } catch (const Error& e) {
    throw FormatError(std::string("autoencoder: ") + e.what());
  }
  return ae;
}

}  // namespace aefenet::ae
