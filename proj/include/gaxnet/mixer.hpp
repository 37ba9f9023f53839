#pragma once

// Monotonic value mixer: state-conditioned hypernetworks produce the
// mixing weights, which enter through |.| so Q_tot never decreases when
// any single agent utility increases.
//
//   hidden = elu(|W1(s)|^T u + b1(s))
//   Q_tot  = |w2(s)|^T hidden + b2(s),   b2(s) = V2 relu(V1 s + c1) + c2

#include "gaxnet/nn/ops.hpp"
#include "gaxnet/nn/param_store.hpp"
#include "gaxnet/types.hpp"

namespace gaxnet::qmix {

struct MixerConfig {
  int n_agents = 4;
  int state_dim = 180;
  int mixing_dim = 32;
};

struct MixerCache {
  Matrix state, utilities;
  Matrix w1_raw, w1;  // (N*E) x B, before/after |.|
  Matrix b1;
  Matrix hidden;      // E x B after elu
  Matrix w2_raw, w2;  // E x B
  Matrix v1_act;      // E x B after relu
};

class Mixer {
 public:
  Mixer(const MixerConfig& cfg, nn::Rng& rng);
  Mixer(const Mixer& other);
  Mixer& operator=(const Mixer& other);

  /// utilities: N x B, state: state_dim x B -> 1 x B.
  Matrix mix(const Matrix& utilities, const Matrix& state, MixerCache* cache = nullptr) const;
  /// Accumulates parameter gradients; returns dQ_tot/du (N x B).
  Matrix backward(const MixerCache& cache, const Matrix& dq_tot);

  const MixerConfig& config() const { return cfg_; }
  nn::ParamStore& params() { return store_; }
  const nn::ParamStore& params() const { return store_; }

 private:
  void bind();

  MixerConfig cfg_;
  nn::ParamStore store_;
  nn::AffineLayer<double> hyper_w1_, hyper_b1_, hyper_w2_, hyper_b2_in_, hyper_b2_out_;
};

}  // namespace gaxnet::qmix
