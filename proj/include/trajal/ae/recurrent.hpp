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

#include "trajal/common/error.hpp"
#include "trajal/common/tensors.hpp"

#include <Eigen/Core>

#include <string>
#include <string_view>
#include <vector>

// Stacked recurrent layers over batched sequences, with backpropagation through time.
// Activations are (features x batch) column blocks; one matrix per time step.

namespace trajal::ae
{

using Mat = Eigen::MatrixXd;
using Sequence = std::vector<Mat>;

enum class CellKind { Lstm, Gru };

inline std::string_view to_string(CellKind k) noexcept
{
  return k == CellKind::Lstm ? "lstm" : "gru";
}

inline CellKind parse_cell_kind(std::string_view s)
{
  if (s == "lstm") {
    return CellKind::Lstm;
  }
  if (s == "gru") {
    return CellKind::Gru;
  }
  fail(ErrorKind::InvalidArgument, "unknown cell kind: " + std::string(s));
}

inline Eigen::Index gate_count(CellKind k) noexcept
{
  return k == CellKind::Lstm ? 4 : 3;
}

namespace detail
{

inline Mat sigmoid(const Mat & a)
{
  return (1.0 + (-a.array()).exp()).inverse().matrix();
}

inline Mat tanh(const Mat & a)
{
  return a.array().tanh().matrix();
}

}  // namespace detail

/// Initial and final recurrent state of one layer. `c` is unused (empty) for GRU.
struct LayerState
{
  Mat h, c;
};

/// Per-step activations kept for the backward pass.
struct StepCache
{
  Mat x, h_prev, c_prev;
  Mat gates;  // LSTM: i, f, g, o (activated). GRU: z, r, n (activated).
  Mat c, tanh_c;
  Mat hidden_n;  // GRU: U_n h_prev + bu_n
  Mat h;
};

/**
 * One recurrent layer. Parameters live in a shared TensorMap under `prefix`:
 * W (G*H x in), U (G*H x H), b (G*H x 1); GRU adds bu (3H x 1).
 * LSTM: [i f g o] = [sig sig tanh sig](W x + U h + b), c' = f c + i g, h' = o tanh(c').
 * GRU:  z = sig(.), r = sig(.), n = tanh(W_n x + b_n + r (U_n h + bu_n)), h' = (1 - z) n + z h.
 */
class RecurrentLayer
{
public:
  RecurrentLayer() = default;
  RecurrentLayer(std::string prefix, CellKind cell, Eigen::Index input, Eigen::Index hidden)
  : prefix_(std::move(prefix)), cell_(cell), input_(input), hidden_(hidden)
  {
  }

  void declare(TensorMap & params) const
  {
    const auto g = gate_count(cell_) * hidden_;
    params[name("W")] = Tensor::Zero(g, input_);
    params[name("U")] = Tensor::Zero(g, hidden_);
    params[name("b")] = Tensor::Zero(g, 1);
    if (cell_ == CellKind::Gru) {
      params[name("bu")] = Tensor::Zero(g, 1);
    }
  }

  std::string name(std::string_view part) const { return prefix_ + "." + std::string(part); }

  Eigen::Index hidden() const noexcept { return hidden_; }
  CellKind cell() const noexcept { return cell_; }

  /// Runs the layer over `xs`; fills `cache` (one entry per step) and returns the hidden sequence.
  Sequence forward(const TensorMap & p, const Sequence & xs, const LayerState & init, std::vector<StepCache> & cache) const
  {
    const Mat & W = p.at(name("W"));
    const Mat & U = p.at(name("U"));
    const Mat & b = p.at(name("b"));
    const auto H = hidden_;
    cache.assign(xs.size(), {});
    Sequence hs;
    hs.reserve(xs.size());
    Mat h = init.h;
    Mat c = init.c;
    for (std::size_t t = 0; t < xs.size(); ++t) {
      auto & s = cache[t];
      s.x = xs[t];
      s.h_prev = h;
      if (cell_ == CellKind::Lstm) {
        s.c_prev = c;
        Mat a = W * xs[t] + U * h;
        a.colwise() += b.col(0);
        s.gates.resize(4 * H, a.cols());
        s.gates.topRows(2 * H) = detail::sigmoid(a.topRows(2 * H));
        s.gates.middleRows(2 * H, H) = detail::tanh(a.middleRows(2 * H, H));
        s.gates.bottomRows(H) = detail::sigmoid(a.bottomRows(H));
        const auto i = s.gates.topRows(H).array();
        const auto f = s.gates.middleRows(H, H).array();
        const auto g = s.gates.middleRows(2 * H, H).array();
        const auto o = s.gates.bottomRows(H).array();
        s.c = (f * c.array() + i * g).matrix();
        s.tanh_c = detail::tanh(s.c);
        s.h = (o * s.tanh_c.array()).matrix();
        c = s.c;
      } else {
        const Mat & bu = p.at(name("bu"));
        Mat ax = W * xs[t];
        ax.colwise() += b.col(0);
        Mat ah = U * h;
        ah.colwise() += bu.col(0);
        s.gates.resize(3 * H, ax.cols());
        s.gates.topRows(2 * H) = detail::sigmoid(ax.topRows(2 * H) + ah.topRows(2 * H));
        s.hidden_n = ah.bottomRows(H);
        const auto r = s.gates.middleRows(H, H).array();
        s.gates.bottomRows(H) = detail::tanh((ax.bottomRows(H).array() + r * s.hidden_n.array()).matrix());
        const auto z = s.gates.topRows(H).array();
        const auto n = s.gates.bottomRows(H).array();
        s.h = ((1.0 - z) * n + z * h.array()).matrix();
      }
      h = s.h;
      hs.push_back(h);
    }
    return hs;
  }

  /**
   * Backpropagates through the whole sequence. `dhs[t]` is the loss gradient on the output at
   * step t (may be empty for zero). Accumulates parameter gradients into `grads`, writes
   * input gradients into `dxs`, and returns the gradient on the initial state.
   */
  LayerState backward(
    const TensorMap & p, const std::vector<StepCache> & cache, const Sequence & dhs, TensorMap & grads,
    Sequence & dxs) const
  {
    const Mat & W = p.at(name("W"));
    const Mat & U = p.at(name("U"));
    Mat & dW = grads.at(name("W"));
    Mat & dU = grads.at(name("U"));
    Mat & db = grads.at(name("b"));
    const auto H = hidden_;
    const auto T = cache.size();
    dxs.assign(T, Mat());
    if (T == 0) {
      return {};
    }
    const auto B = cache.front().h.cols();
    Mat dh = Mat::Zero(H, B);
    Mat dc = Mat::Zero(H, B);
    for (std::size_t t = T; t-- > 0;) {
      const auto & s = cache[t];
      if (t < dhs.size() && dhs[t].size() > 0) {
        dh += dhs[t];
      }
      if (cell_ == CellKind::Lstm) {
        const auto i = s.gates.topRows(H).array();
        const auto f = s.gates.middleRows(H, H).array();
        const auto g = s.gates.middleRows(2 * H, H).array();
        const auto o = s.gates.bottomRows(H).array();
        const auto tc = s.tanh_c.array();
        const Eigen::ArrayXXd dct = dc.array() + dh.array() * o * (1.0 - tc * tc);
        Mat da(4 * H, B);
        da.topRows(H) = (dct * g * i * (1.0 - i)).matrix();
        da.middleRows(H, H) = (dct * s.c_prev.array() * f * (1.0 - f)).matrix();
        da.middleRows(2 * H, H) = (dct * i * (1.0 - g * g)).matrix();
        da.bottomRows(H) = (dh.array() * tc * o * (1.0 - o)).matrix();
        dW.noalias() += da * s.x.transpose();
        dU.noalias() += da * s.h_prev.transpose();
        db.col(0) += da.rowwise().sum();
        dxs[t] = W.transpose() * da;
        dh = U.transpose() * da;
        dc = (dct * f).matrix();
      } else {
        Mat & dbu = grads.at(name("bu"));
        const auto z = s.gates.topRows(H).array();
        const auto r = s.gates.middleRows(H, H).array();
        const auto n = s.gates.bottomRows(H).array();
        const Eigen::ArrayXXd dn_pre = dh.array() * (1.0 - z) * (1.0 - n * n);
        const Eigen::ArrayXXd dz_pre = dh.array() * (s.h_prev.array() - n) * z * (1.0 - z);
        const Eigen::ArrayXXd dr_pre = dn_pre * s.hidden_n.array() * r * (1.0 - r);
        Mat dax(3 * H, B), dah(3 * H, B);
        dax.topRows(H) = dz_pre.matrix();
        dax.middleRows(H, H) = dr_pre.matrix();
        dax.bottomRows(H) = dn_pre.matrix();
        dah.topRows(2 * H) = dax.topRows(2 * H);
        dah.bottomRows(H) = (dn_pre * r).matrix();
        dW.noalias() += dax * s.x.transpose();
        db.col(0) += dax.rowwise().sum();
        dU.noalias() += dah * s.h_prev.transpose();
        dbu.col(0) += dah.rowwise().sum();
        dxs[t] = W.transpose() * dax;
        dh = (dh.array() * z).matrix() + U.transpose() * dah;
      }
    }
    LayerState d0;
    d0.h = std::move(dh);
    if (cell_ == CellKind::Lstm) {
      d0.c = std::move(dc);
    }
    return d0;
  }

private:
  std::string prefix_;
  CellKind cell_ = CellKind::Lstm;
  Eigen::Index input_ = 0;
  Eigen::Index hidden_ = 0;
};

}  // namespace trajal::ae
