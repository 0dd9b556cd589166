// Copyright 2026 The trajal Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include "trajal/ae/recurrent.hpp"
#include "trajal/common/error.hpp"
#include "trajal/common/random.hpp"
#include "trajal/common/tensors.hpp"
#include "trajal/core/embedding.hpp"
#include "trajal/core/trajectory.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

/**
 * @file model.hpp
 *
 * Sequence autoencoder: a 2-layer recurrent encoder whose final top-layer hidden state feeds a
 * linear latent head, and a 2-layer recurrent decoder whose initial states are linear maps of
 * the latent vector (h through tanh). The decoder receives no step inputs and a linear readout
 * reconstructs every frame in forward time order. The variational variant replaces the head
 * with a mean and a clamped log-variance and samples by reparameterization.
 */

namespace trajal::ae
{

enum class AeKind { Rae, Vrae };

inline std::string_view to_string(AeKind k) noexcept
{
  return k == AeKind::Rae ? "rae" : "vrae";
}

inline AeKind parse_ae_kind(std::string_view s)
{
  if (s == "rae" || s == "RAE") {
    return AeKind::Rae;
  }
  if (s == "vrae" || s == "VRAE") {
    return AeKind::Vrae;
  }
  fail(ErrorKind::InvalidArgument, "unknown autoencoder kind: " + std::string(s));
}

inline EmbeddingTag embedding_tag(AeKind k) noexcept
{
  return k == AeKind::Rae ? EmbeddingTag::RAE : EmbeddingTag::VRAE;
}

inline constexpr double kLogVarBound = 10.0;

struct ModelConfig
{
  AeKind kind = AeKind::Rae;
  CellKind cell = CellKind::Lstm;
  bool use_velocity = true;
  int hidden = 16;
  int latent = 16;
  int layers = 2;

  Eigen::Index channels() const noexcept { return use_velocity ? 3 : 2; }

  void validate() const
  {
    require(hidden >= 1 && latent >= 1, "autoencoder: hidden and latent sizes must be >= 1");
    require(layers >= 1, "autoencoder: need at least one layer");
  }
};

inline void to_json(nlohmann::json & j, const ModelConfig & c)
{
  j = {{"kind", to_string(c.kind)}, {"cell", to_string(c.cell)}, {"use_velocity", c.use_velocity},
       {"hidden", c.hidden},        {"latent", c.latent},       {"layers", c.layers}};
}

inline void from_json(const nlohmann::json & j, ModelConfig & c)
{
  c.kind = parse_ae_kind(j.at("kind").get<std::string>());
  c.cell = parse_cell_kind(j.at("cell").get<std::string>());
  c.use_velocity = j.at("use_velocity").get<bool>();
  c.hidden = j.at("hidden").get<int>();
  c.latent = j.at("latent").get<int>();
  c.layers = j.at("layers").get<int>();
}

/// Per-channel affine normalization fitted on the training pool; part of the model.
struct ChannelNormalizer
{
  Eigen::VectorXd mean, scale;

  static ChannelNormalizer identity(Eigen::Index channels)
  {
    return {Eigen::VectorXd::Zero(channels), Eigen::VectorXd::Ones(channels)};
  }

  static ChannelNormalizer fit(const std::vector<Series> & pool)
  {
    require(!pool.empty(), "normalizer: empty pool");
    const auto c = pool.front().cols();
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(c), sq = Eigen::VectorXd::Zero(c);
    double count = 0.0;
    for (const auto & s : pool) {
      sum += s.colwise().sum().transpose();
      sq += s.array().square().colwise().sum().matrix().transpose();
      count += static_cast<double>(s.rows());
    }
    ChannelNormalizer n;
    n.mean = sum / count;
    n.scale = (sq / count - n.mean.cwiseAbs2()).cwiseMax(0.0).cwiseSqrt();
    for (Eigen::Index k = 0; k < c; ++k) {
      if (!(n.scale[k] > 1e-12)) {
        n.scale[k] = 1.0;
      }
    }
    return n;
  }
};

/// Encoder output. `log_var` is set for the variational model only.
struct LatentCode
{
  Eigen::VectorXd mean;
  std::optional<Eigen::VectorXd> log_var;
};

class Model
{
public:
  Model() = default;

  explicit Model(ModelConfig config) : config_(config)
  {
    config_.validate();
    const Eigen::Index C = config_.channels();
    const Eigen::Index H = config_.hidden;
    const Eigen::Index L = config_.latent;
    for (int l = 0; l < config_.layers; ++l) {
      encoder_.emplace_back("enc" + std::to_string(l), config_.cell, l == 0 ? C : H, H);
      decoder_.emplace_back("dec" + std::to_string(l), config_.cell, l == 0 ? 0 : H, H);
    }
    for (const auto & layer : encoder_) {
      layer.declare(params_);
    }
    for (const auto & layer : decoder_) {
      layer.declare(params_);
    }
    if (config_.kind == AeKind::Rae) {
      params_["head.W"] = Tensor::Zero(L, H);
      params_["head.b"] = Tensor::Zero(L, 1);
    } else {
      params_["mu.W"] = Tensor::Zero(L, H);
      params_["mu.b"] = Tensor::Zero(L, 1);
      params_["logvar.W"] = Tensor::Zero(L, H);
      params_["logvar.b"] = Tensor::Zero(L, 1);
    }
    for (int l = 0; l < config_.layers; ++l) {
      const auto p = "init" + std::to_string(l);
      params_[p + ".Wh"] = Tensor::Zero(H, L);
      params_[p + ".bh"] = Tensor::Zero(H, 1);
      if (config_.cell == CellKind::Lstm) {
        params_[p + ".Wc"] = Tensor::Zero(H, L);
        params_[p + ".bc"] = Tensor::Zero(H, 1);
      }
    }
    params_["out.W"] = Tensor::Zero(C, H);
    params_["out.b"] = Tensor::Zero(C, 1);
    normalizer_ = ChannelNormalizer::identity(C);
  }

  /// Uniform(-1/sqrt(H), 1/sqrt(H)) for every parameter, in name order.
  void initialize(std::uint64_t seed)
  {
    Rng rng(seed);
    const double bound = 1.0 / std::sqrt(static_cast<double>(config_.hidden));
    for (auto & [name, t] : params_) {
      for (Eigen::Index k = 0; k < t.size(); ++k) {
        t.data()[k] = uniform(rng, -bound, bound);
      }
    }
  }

  const ModelConfig & config() const noexcept { return config_; }
  TensorMap & parameters() noexcept { return params_; }
  const TensorMap & parameters() const noexcept { return params_; }
  const ChannelNormalizer & normalizer() const noexcept { return normalizer_; }
  void set_normalizer(ChannelNormalizer n)
  {
    require(n.mean.size() == config_.channels() && n.scale.size() == config_.channels(), "normalizer: arity mismatch");
    normalizer_ = std::move(n);
  }
  const std::vector<RecurrentLayer> & encoder() const noexcept { return encoder_; }
  const std::vector<RecurrentLayer> & decoder() const noexcept { return decoder_; }

  /// Series (T x C, raw units) -> normalized per-step column blocks for a batch of one.
  Sequence to_steps(const Series & s) const
  {
    check_arity(s);
    Sequence xs(static_cast<std::size_t>(s.rows()));
    for (Eigen::Index t = 0; t < s.rows(); ++t) {
      xs[t] = ((s.row(t).transpose() - normalizer_.mean).array() / normalizer_.scale.array()).matrix();
    }
    return xs;
  }

  void check_arity(const Series & s) const
  {
    if (s.cols() != config_.channels()) {
      fail(
        ErrorKind::InvalidArgument, "autoencoder: series has " + std::to_string(s.cols()) +
                                      " channels, model expects " + std::to_string(config_.channels()));
    }
  }

private:
  ModelConfig config_;
  std::vector<RecurrentLayer> encoder_, decoder_;
  TensorMap params_;
  ChannelNormalizer normalizer_;
};

/// Stacks same-length series into per-step (C x B) blocks in normalized units.
inline Sequence make_batch(const Model & model, const std::vector<const Series *> & members)
{
  require(!members.empty(), "autoencoder: empty batch");
  const auto T = members.front()->rows();
  const auto C = model.config().channels();
  Sequence xs(static_cast<std::size_t>(T), Mat(C, static_cast<Eigen::Index>(members.size())));
  const auto & norm = model.normalizer();
  for (std::size_t b = 0; b < members.size(); ++b) {
    const Series & s = *members[b];
    model.check_arity(s);
    if (s.rows() != T) {
      fail(ErrorKind::InvalidArgument, "autoencoder: batch members differ in length");
    }
    for (Eigen::Index t = 0; t < T; ++t) {
      xs[t].col(static_cast<Eigen::Index>(b)) =
        ((s.row(t).transpose() - norm.mean).array() / norm.scale.array()).matrix();
    }
  }
  return xs;
}

struct LossBreakdown
{
  double total = 0.0;
  double reconstruction = 0.0;
  double kl = 0.0;
};

namespace detail
{

struct Forward
{
  std::vector<std::vector<StepCache>> enc, dec;
  Mat h_top;              // H x B
  Mat mean, raw_log_var;  // L x B
  Mat log_var, eta, z;
  std::vector<Mat> init_h, init_c;  // per decoder layer
  Sequence dec_top, out;
};

inline Mat add_bias(Mat m, const Tensor & b)
{
  m.colwise() += b.col(0);
  return m;
}

inline Forward forward(const Model & model, const Sequence & xs, const Mat * eta)
{
  const auto & p = model.parameters();
  const auto & cfg = model.config();
  const Eigen::Index B = xs.front().cols();
  const Eigen::Index H = cfg.hidden;
  Forward f;
  f.enc.resize(model.encoder().size());
  f.dec.resize(model.decoder().size());

  Sequence seq = xs;
  for (std::size_t l = 0; l < model.encoder().size(); ++l) {
    seq = model.encoder()[l].forward(p, seq, {Mat::Zero(H, B), Mat::Zero(H, B)}, f.enc[l]);
  }
  f.h_top = seq.back();

  if (cfg.kind == AeKind::Rae) {
    f.mean = add_bias(p.at("head.W") * f.h_top, p.at("head.b"));
    f.z = f.mean;
  } else {
    f.mean = add_bias(p.at("mu.W") * f.h_top, p.at("mu.b"));
    f.raw_log_var = add_bias(p.at("logvar.W") * f.h_top, p.at("logvar.b"));
    f.log_var = f.raw_log_var.cwiseMax(-kLogVarBound).cwiseMin(kLogVarBound);
    if (eta != nullptr) {
      f.eta = *eta;
      f.z = f.mean + ((0.5 * f.log_var.array()).exp() * eta->array()).matrix();
    } else {
      f.z = f.mean;
    }
  }

  const auto T = xs.size();
  Sequence dec_in(T, Mat(0, B));
  for (std::size_t l = 0; l < model.decoder().size(); ++l) {
    const auto pre = "init" + std::to_string(l);
    f.init_h.push_back(detail::tanh(add_bias(p.at(pre + ".Wh") * f.z, p.at(pre + ".bh"))));
    LayerState s0{f.init_h.back(), Mat()};
    if (cfg.cell == CellKind::Lstm) {
      f.init_c.push_back(add_bias(p.at(pre + ".Wc") * f.z, p.at(pre + ".bc")));
      s0.c = f.init_c.back();
    }
    dec_in = model.decoder()[l].forward(p, dec_in, s0, f.dec[l]);
  }
  f.dec_top = std::move(dec_in);
  f.out.reserve(T);
  for (const auto & h : f.dec_top) {
    f.out.push_back(add_bias(p.at("out.W") * h, p.at("out.b")));
  }
  return f;
}

}  // namespace detail

/// Closed-form KL(N(mean, diag(exp(log_var))) || N(0, I)) summed over dimensions.
inline double gaussian_kl(const Eigen::Ref<const Eigen::VectorXd> & mean, const Eigen::Ref<const Eigen::VectorXd> & log_var)
{
  return -0.5 * (1.0 + log_var.array() - mean.array().square() - log_var.array().exp()).sum();
}

/**
 * @brief Loss on one same-length batch and, if `grads` is non-null, its full gradient.
 *
 * Reconstruction is the mean squared error over all frames, channels and members in normalized
 * units. The variational model adds `kl_weight` times the batch mean of the per-sample KL and
 * decodes the sample mean + exp(log_var / 2) * eta, with `eta` (L x B) supplied by the caller.
 */
inline LossBreakdown batch_loss(
  const Model & model, const Sequence & xs, double kl_weight, const Mat * eta, TensorMap * grads)
{
  require(!xs.empty() && xs.front().cols() > 0, "autoencoder: empty batch");
  const auto & cfg = model.config();
  const bool variational = cfg.kind == AeKind::Vrae;
  if (variational) {
    require(eta != nullptr, "autoencoder: variational loss needs a noise sample");
    require(
      eta->rows() == cfg.latent && eta->cols() == xs.front().cols(), "autoencoder: noise sample has wrong shape");
  }
  const auto f = detail::forward(model, xs, variational ? eta : nullptr);
  const auto T = xs.size();
  const Eigen::Index B = xs.front().cols();
  const double denom = static_cast<double>(T) * static_cast<double>(B) * static_cast<double>(cfg.channels());

  LossBreakdown loss;
  for (std::size_t t = 0; t < T; ++t) {
    loss.reconstruction += (f.out[t] - xs[t]).squaredNorm();
  }
  loss.reconstruction /= denom;
  if (variational) {
    for (Eigen::Index b = 0; b < B; ++b) {
      loss.kl += gaussian_kl(f.mean.col(b), f.log_var.col(b));
    }
    loss.kl /= static_cast<double>(B);
  }
  loss.total = loss.reconstruction + kl_weight * loss.kl;
  if (grads == nullptr) {
    return loss;
  }

  const auto & p = model.parameters();
  *grads = zeros_like(p);
  auto & g = *grads;

  Sequence d_top(T);
  for (std::size_t t = 0; t < T; ++t) {
    const Mat dy = (2.0 / denom) * (f.out[t] - xs[t]);
    g.at("out.W").noalias() += dy * f.dec_top[t].transpose();
    g.at("out.b").col(0) += dy.rowwise().sum();
    d_top[t] = p.at("out.W").transpose() * dy;
  }

  Mat dz = Mat::Zero(cfg.latent, B);
  Sequence d_seq = std::move(d_top), d_in;
  for (std::size_t l = model.decoder().size(); l-- > 0;) {
    const auto d0 = model.decoder()[l].backward(p, f.dec[l], d_seq, g, d_in);
    const auto pre = "init" + std::to_string(l);
    const Mat dh_pre = (d0.h.array() * (1.0 - f.init_h[l].array().square())).matrix();
    g.at(pre + ".Wh").noalias() += dh_pre * f.z.transpose();
    g.at(pre + ".bh").col(0) += dh_pre.rowwise().sum();
    dz.noalias() += p.at(pre + ".Wh").transpose() * dh_pre;
    if (cfg.cell == CellKind::Lstm) {
      g.at(pre + ".Wc").noalias() += d0.c * f.z.transpose();
      g.at(pre + ".bc").col(0) += d0.c.rowwise().sum();
      dz.noalias() += p.at(pre + ".Wc").transpose() * d0.c;
    }
    d_seq = std::move(d_in);
  }

  Mat dh_top;
  if (!variational) {
    g.at("head.W").noalias() += dz * f.h_top.transpose();
    g.at("head.b").col(0) += dz.rowwise().sum();
    dh_top = p.at("head.W").transpose() * dz;
  } else {
    const double kw = kl_weight / static_cast<double>(B);
    const Eigen::ArrayXXd sd = (0.5 * f.log_var.array()).exp();
    const Mat dmean = dz + kw * f.mean;
    Mat dlv = (dz.array() * f.eta.array() * 0.5 * sd + kw * 0.5 * (f.log_var.array().exp() - 1.0)).matrix();
    // Clamped entries carry no gradient to the raw head output.
    dlv = (f.raw_log_var.array().abs() <= kLogVarBound).select(dlv, 0.0);
    g.at("mu.W").noalias() += dmean * f.h_top.transpose();
    g.at("mu.b").col(0) += dmean.rowwise().sum();
    g.at("logvar.W").noalias() += dlv * f.h_top.transpose();
    g.at("logvar.b").col(0) += dlv.rowwise().sum();
    dh_top = p.at("mu.W").transpose() * dmean + p.at("logvar.W").transpose() * dlv;
  }

  Sequence d_enc(T);
  d_enc[T - 1] = std::move(dh_top);
  for (std::size_t l = model.encoder().size(); l-- > 0;) {
    model.encoder()[l].backward(p, f.enc[l], d_enc, g, d_in);
    d_enc = std::move(d_in);
  }
  return loss;
}

/// Deterministic encoding of one series (raw units).
inline LatentCode encode(const Model & model, const Series & s)
{
  const auto f = detail::forward(model, model.to_steps(s), nullptr);
  LatentCode code;
  code.mean = f.mean.col(0);
  if (model.config().kind == AeKind::Vrae) {
    code.log_var = f.log_var.col(0);
  }
  return code;
}

/// Unrolls the decoder for `length` steps from latent `z`; returns a series in raw units.
inline Series decode(const Model & model, const Eigen::VectorXd & z, Eigen::Index length)
{
  require(length >= 1, "decode: length must be >= 1");
  require(z.size() == model.config().latent, "decode: latent size mismatch");
  const auto & p = model.parameters();
  const auto & cfg = model.config();
  Sequence seq(static_cast<std::size_t>(length), Mat(0, 1));
  for (std::size_t l = 0; l < model.decoder().size(); ++l) {
    const auto pre = "init" + std::to_string(l);
    LayerState s0{detail::tanh(p.at(pre + ".Wh") * z + p.at(pre + ".bh")), Mat()};
    if (cfg.cell == CellKind::Lstm) {
      s0.c = p.at(pre + ".Wc") * z + p.at(pre + ".bc");
    }
    std::vector<StepCache> cache;
    seq = model.decoder()[l].forward(p, seq, s0, cache);
  }
  const auto & norm = model.normalizer();
  Series out(length, cfg.channels());
  for (Eigen::Index t = 0; t < length; ++t) {
    const Eigen::VectorXd y = p.at("out.W") * seq[t] + p.at("out.b");
    out.row(t) = (y.array() * norm.scale.array() + norm.mean.array()).matrix().transpose();
  }
  return out;
}

inline Series reconstruct(const Model & model, const Series & s)
{
  return decode(model, encode(model, s).mean, s.rows());
}

inline void save_checkpoint(const std::string & path, const Model & model)
{
  nlohmann::json header = {{"format", "trajal-autoencoder"}, {"version", 1}, {"config", model.config()}};
  TensorMap tensors = model.parameters();
  tensors["norm.mean"] = model.normalizer().mean;
  tensors["norm.scale"] = model.normalizer().scale;
  save_tensor_file(path, header, tensors);
}

inline Model load_checkpoint(const std::string & path)
{
  auto [header, tensors] = load_tensor_file(path);
  if (header.value("format", "") != "trajal-autoencoder") {
    fail(ErrorKind::Io, "not an autoencoder checkpoint: " + path);
  }
  Model model(header.at("config").get<ModelConfig>());
  for (auto & [name, t] : model.parameters()) {
    const auto it = tensors.find(name);
    if (it == tensors.end() || it->second.rows() != t.rows() || it->second.cols() != t.cols()) {
      fail(ErrorKind::Io, "checkpoint tensor missing or misshapen: " + name);
    }
    t = it->second;
  }
  ChannelNormalizer n;
  n.mean = tensors.at("norm.mean").col(0);
  n.scale = tensors.at("norm.scale").col(0);
  model.set_normalizer(std::move(n));
  return model;
}

}  // namespace trajal::ae
