#pragma once

// Differentiable building blocks. Activations are column-major batches:
// one column per sample. Every forward has a matching backward that
// accumulates parameter gradients into Param::grad and returns the
// gradient with respect to its inputs.

#include "gaxnet/nn/param_store.hpp"
#include "gaxnet/types.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace gaxnet::nn {

template <typename Scalar>
void check_finite(const MatrixX<Scalar>& m, const char* what) {
  if (!m.allFinite()) throw NumericError(std::string("non-finite values in ") + what);
}

// ---------------------------------------------------------------------------
// Affine: y = W x + b

template <typename Scalar>
struct AffineLayer {
  Param<Scalar>* weight = nullptr;  // out x in
  Param<Scalar>* bias = nullptr;    // out x 1

  Index in_dim() const { return weight->value.cols(); }
  Index out_dim() const { return weight->value.rows(); }
};

template <typename Scalar>
AffineLayer<Scalar> bind_affine(BasicParamStore<Scalar>& store, const std::string& prefix) {
  return {&store.at(prefix + "/weight"), &store.at(prefix + "/bias")};
}

/// Registers `prefix/weight` and `prefix/bias` with fan-in uniform init.
template <typename Scalar>
AffineLayer<Scalar> make_affine(BasicParamStore<Scalar>& store, const std::string& prefix, Index in, Index out,
                                Rng& rng) {
  const Scalar bound = Scalar(std::sqrt(1.0 / double(in)));
  store.add(prefix + "/weight", out, in, bound, rng);
  store.add(prefix + "/bias", out, 1, bound, rng);
  return bind_affine(store, prefix);
}

template <typename Scalar>
MatrixX<Scalar> affine(const AffineLayer<Scalar>& layer, const MatrixX<Scalar>& x) {
  if (x.rows() != layer.in_dim())
    throw ShapeError("affine: input has " + std::to_string(x.rows()) + " rows, layer expects " +
                     std::to_string(layer.in_dim()));
  MatrixX<Scalar> y = layer.weight->value * x;
  y.colwise() += layer.bias->value.col(0);
  return y;
}

template <typename Scalar>
MatrixX<Scalar> affine_backward(const AffineLayer<Scalar>& layer, const MatrixX<Scalar>& x,
                                const MatrixX<Scalar>& dy) {
  if (dy.rows() != layer.out_dim() || dy.cols() != x.cols()) throw ShapeError("affine_backward: gradient shape");
  layer.weight->grad.noalias() += dy * x.transpose();
  layer.bias->grad.col(0) += dy.rowwise().sum();
  return layer.weight->value.transpose() * dy;
}

// ---------------------------------------------------------------------------
// Elementwise activations. Backward takes the forward *output*.

template <typename Scalar>
MatrixX<Scalar> sigmoid(const MatrixX<Scalar>& x) {
  return (Scalar(1) + (-x.array()).exp()).inverse().matrix();
}
template <typename Scalar>
MatrixX<Scalar> sigmoid_backward(const MatrixX<Scalar>& y, const MatrixX<Scalar>& dy) {
  return (dy.array() * y.array() * (Scalar(1) - y.array())).matrix();
}

template <typename Scalar>
MatrixX<Scalar> tanh(const MatrixX<Scalar>& x) {
  return x.array().tanh().matrix();
}
template <typename Scalar>
MatrixX<Scalar> tanh_backward(const MatrixX<Scalar>& y, const MatrixX<Scalar>& dy) {
  return (dy.array() * (Scalar(1) - y.array().square())).matrix();
}

template <typename Scalar>
MatrixX<Scalar> relu(const MatrixX<Scalar>& x) {
  return x.cwiseMax(Scalar(0));
}
template <typename Scalar>
MatrixX<Scalar> relu_backward(const MatrixX<Scalar>& y, const MatrixX<Scalar>& dy) {
  return (y.array() > Scalar(0)).select(dy, Scalar(0));
}

template <typename Scalar>
MatrixX<Scalar> elu(const MatrixX<Scalar>& x) {
  return (x.array() > Scalar(0)).select(x, x.array().exp() - Scalar(1));
}
template <typename Scalar>
MatrixX<Scalar> elu_backward(const MatrixX<Scalar>& y, const MatrixX<Scalar>& dy) {
  return (y.array() > Scalar(0)).select(dy, (dy.array() * (y.array() + Scalar(1))).matrix());
}

/// Softmax down each column.
template <typename Scalar>
MatrixX<Scalar> softmax(const MatrixX<Scalar>& scores) {
  MatrixX<Scalar> out = scores;
  for (Index j = 0; j < out.cols(); ++j) {
    auto col = out.col(j);
    col.array() = (col.array() - col.maxCoeff()).exp();
    col /= col.sum();
  }
  return out;
}
template <typename Scalar>
MatrixX<Scalar> softmax_backward(const MatrixX<Scalar>& y, const MatrixX<Scalar>& dy) {
  RowVectorX<Scalar> inner = (y.array() * dy.array()).colwise().sum();
  return (y.array() * (dy.rowwise() - inner).array()).matrix();
}

// ---------------------------------------------------------------------------
// Gated recurrent cell (reset gate applied after the hidden projection):
//   r  = sigmoid(W_ir x + b_ir + W_hr h + b_hr)
//   z  = sigmoid(W_iz x + b_iz + W_hz h + b_hz)
//   n  = tanh(W_in x + b_in + r * (W_hn h + b_hn))
//   h' = (1 - z) * n + z * h
// Gate blocks are stacked [r; z; n] in the 3H-row weights.

template <typename Scalar>
struct GruLayer {
  Param<Scalar>* w_ih = nullptr;  // 3H x I
  Param<Scalar>* w_hh = nullptr;  // 3H x H
  Param<Scalar>* b_ih = nullptr;  // 3H x 1
  Param<Scalar>* b_hh = nullptr;  // 3H x 1

  Index input_dim() const { return w_ih->value.cols(); }
  Index hidden_dim() const { return w_hh->value.cols(); }
};

template <typename Scalar>
GruLayer<Scalar> bind_gru(BasicParamStore<Scalar>& store, const std::string& prefix) {
  return {&store.at(prefix + "/w_ih"), &store.at(prefix + "/w_hh"), &store.at(prefix + "/b_ih"),
          &store.at(prefix + "/b_hh")};
}

template <typename Scalar>
GruLayer<Scalar> make_gru(BasicParamStore<Scalar>& store, const std::string& prefix, Index input, Index hidden,
                          Rng& rng) {
  const Scalar bound = Scalar(std::sqrt(1.0 / double(hidden)));
  store.add(prefix + "/w_ih", 3 * hidden, input, bound, rng);
  store.add(prefix + "/w_hh", 3 * hidden, hidden, bound, rng);
  store.add(prefix + "/b_ih", 3 * hidden, 1, bound, rng);
  store.add(prefix + "/b_hh", 3 * hidden, 1, bound, rng);
  return bind_gru(store, prefix);
}

template <typename Scalar>
struct GruCache {
  MatrixX<Scalar> x, h, r, z, n, hn;
};

template <typename Scalar>
MatrixX<Scalar> gru_cell(const GruLayer<Scalar>& cell, const MatrixX<Scalar>& x, const MatrixX<Scalar>& h,
                         GruCache<Scalar>* cache = nullptr) {
  const Index H = cell.hidden_dim();
  if (x.rows() != cell.input_dim() || h.rows() != H || x.cols() != h.cols())
    throw ShapeError("gru_cell: input " + std::to_string(x.rows()) + "x" + std::to_string(x.cols()) + ", hidden " +
                     std::to_string(h.rows()) + "x" + std::to_string(h.cols()));
  MatrixX<Scalar> gi = cell.w_ih->value * x;
  gi.colwise() += cell.b_ih->value.col(0);
  MatrixX<Scalar> gh = cell.w_hh->value * h;
  gh.colwise() += cell.b_hh->value.col(0);

  MatrixX<Scalar> r = sigmoid<Scalar>(gi.topRows(H) + gh.topRows(H));
  MatrixX<Scalar> z = sigmoid<Scalar>(gi.middleRows(H, H) + gh.middleRows(H, H));
  MatrixX<Scalar> hn = gh.bottomRows(H);
  MatrixX<Scalar> n = (gi.bottomRows(H).array() + r.array() * hn.array()).tanh().matrix();
  MatrixX<Scalar> out = ((Scalar(1) - z.array()) * n.array() + z.array() * h.array()).matrix();
  if (cache) *cache = {x, h, std::move(r), std::move(z), std::move(n), std::move(hn)};
  return out;
}

template <typename Scalar>
struct GruGrad {
  MatrixX<Scalar> dx, dh;
};

template <typename Scalar>
GruGrad<Scalar> gru_cell_backward(const GruLayer<Scalar>& cell, const GruCache<Scalar>& c,
                                  const MatrixX<Scalar>& dout) {
  const Index H = cell.hidden_dim();
  const auto one = Scalar(1);
  MatrixX<Scalar> dn = (dout.array() * (one - c.z.array())).matrix();
  MatrixX<Scalar> dz = (dout.array() * (c.h.array() - c.n.array())).matrix();
  MatrixX<Scalar> dh = (dout.array() * c.z.array()).matrix();

  MatrixX<Scalar> dn_pre = tanh_backward<Scalar>(c.n, dn);
  MatrixX<Scalar> dr = (dn_pre.array() * c.hn.array()).matrix();
  MatrixX<Scalar> dr_pre = sigmoid_backward<Scalar>(c.r, dr);
  MatrixX<Scalar> dz_pre = sigmoid_backward<Scalar>(c.z, dz);

  MatrixX<Scalar> dgi(3 * H, dout.cols());
  dgi << dr_pre, dz_pre, dn_pre;
  MatrixX<Scalar> dgh(3 * H, dout.cols());
  dgh << dr_pre, dz_pre, (dn_pre.array() * c.r.array()).matrix();

  cell.w_ih->grad.noalias() += dgi * c.x.transpose();
  cell.b_ih->grad.col(0) += dgi.rowwise().sum();
  cell.w_hh->grad.noalias() += dgh * c.h.transpose();
  cell.b_hh->grad.col(0) += dgh.rowwise().sum();

  GruGrad<Scalar> g;
  g.dx = cell.w_ih->value.transpose() * dgi;
  g.dh = dh + cell.w_hh->value.transpose() * dgh;
  return g;
}

// ---------------------------------------------------------------------------
// Scaled dot-product attention of one query against K keys, per column.
//   score_j = <q, k_j> / scale
//   weights = softmax(scores)   (or the raw scores when normalize == false)
//   mixed   = sum_j weights_j * v_j

template <typename Scalar>
struct ScaledDotCache {
  MatrixX<Scalar> q;
  std::vector<MatrixX<Scalar>> keys, values;
  MatrixX<Scalar> weights;  // K x B
  Scalar scale = 1;
  bool normalize = true;
};

template <typename Scalar>
struct ScaledDotResult {
  MatrixX<Scalar> weights;  // K x B
  MatrixX<Scalar> mixed;    // J x B
};

template <typename Scalar>
ScaledDotResult<Scalar> scaled_dot(const MatrixX<Scalar>& q, const std::vector<MatrixX<Scalar>>& keys,
                                   const std::vector<MatrixX<Scalar>>& values, Scalar scale, bool normalize = true,
                                   ScaledDotCache<Scalar>* cache = nullptr) {
  if (keys.empty()) throw ShapeError("scaled_dot: empty neighbor set");
  if (keys.size() != values.size()) throw ShapeError("scaled_dot: key/value count mismatch");
  const Index K = Index(keys.size());
  MatrixX<Scalar> scores(K, q.cols());
  for (Index j = 0; j < K; ++j) {
    if (keys[j].rows() != q.rows() || keys[j].cols() != q.cols() || values[j].cols() != q.cols())
      throw ShapeError("scaled_dot: key/value shape mismatch");
    scores.row(j) = (q.array() * keys[j].array()).colwise().sum() / scale;
  }
  ScaledDotResult<Scalar> out;
  out.weights = normalize ? softmax<Scalar>(scores) : scores;
  out.mixed = MatrixX<Scalar>::Zero(values[0].rows(), q.cols());
  for (Index j = 0; j < K; ++j) out.mixed.array() += values[j].array().rowwise() * out.weights.row(j).array();
  if (cache) *cache = {q, keys, values, out.weights, scale, normalize};
  return out;
}

template <typename Scalar>
struct ScaledDotGrad {
  MatrixX<Scalar> dq;
  std::vector<MatrixX<Scalar>> dkeys, dvalues;
};

/// `dweights` may be empty when only `mixed` feeds the loss.
template <typename Scalar>
ScaledDotGrad<Scalar> scaled_dot_backward(const ScaledDotCache<Scalar>& c, const MatrixX<Scalar>& dweights,
                                          const MatrixX<Scalar>& dmixed) {
  const Index K = Index(c.keys.size());
  MatrixX<Scalar> dw = dweights.size() ? dweights : MatrixX<Scalar>::Zero(K, c.q.cols());
  ScaledDotGrad<Scalar> g;
  g.dvalues.resize(K);
  for (Index j = 0; j < K; ++j) {
    dw.row(j) += (dmixed.array() * c.values[j].array()).colwise().sum().matrix();
    g.dvalues[j] = (dmixed.array().rowwise() * c.weights.row(j).array()).matrix();
  }
  MatrixX<Scalar> dscores = c.normalize ? softmax_backward<Scalar>(c.weights, dw) : dw;
  dscores /= c.scale;
  g.dq = MatrixX<Scalar>::Zero(c.q.rows(), c.q.cols());
  g.dkeys.resize(K);
  for (Index j = 0; j < K; ++j) {
    g.dq.array() += c.keys[j].array().rowwise() * dscores.row(j).array();
    g.dkeys[j] = (c.q.array().rowwise() * dscores.row(j).array()).matrix();
  }
  return g;
}

}  // namespace gaxnet::nn
