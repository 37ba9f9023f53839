#include "gaxnet/mixer.hpp"

namespace gaxnet::qmix {

Mixer::Mixer(const MixerConfig& cfg, nn::Rng& rng) : cfg_(cfg) {
  if (cfg_.n_agents < 1 || cfg_.state_dim < 1 || cfg_.mixing_dim < 1) throw ConfigError("mixer: bad dimensions");
  const int e = cfg_.mixing_dim;
  nn::make_affine(store_, "mixer/hyper_w1", cfg_.state_dim, cfg_.n_agents * e, rng);
  nn::make_affine(store_, "mixer/hyper_b1", cfg_.state_dim, e, rng);
  nn::make_affine(store_, "mixer/hyper_w2", cfg_.state_dim, e, rng);
  nn::make_affine(store_, "mixer/hyper_b2_in", cfg_.state_dim, e, rng);
  nn::make_affine(store_, "mixer/hyper_b2_out", e, 1, rng);
  bind();
}

Mixer::Mixer(const Mixer& other) : cfg_(other.cfg_), store_(other.store_) { bind(); }

Mixer& Mixer::operator=(const Mixer& other) {
  if (this != &other) {
    cfg_ = other.cfg_;
    store_ = other.store_;
    bind();
  }
  return *this;
}

void Mixer::bind() {
  hyper_w1_ = nn::bind_affine(store_, "mixer/hyper_w1");
  hyper_b1_ = nn::bind_affine(store_, "mixer/hyper_b1");
  hyper_w2_ = nn::bind_affine(store_, "mixer/hyper_w2");
  hyper_b2_in_ = nn::bind_affine(store_, "mixer/hyper_b2_in");
  hyper_b2_out_ = nn::bind_affine(store_, "mixer/hyper_b2_out");
}

Matrix Mixer::mix(const Matrix& utilities, const Matrix& state, MixerCache* cache) const {
  const int n = cfg_.n_agents, e = cfg_.mixing_dim;
  if (utilities.rows() != n || state.rows() != cfg_.state_dim || utilities.cols() != state.cols())
    throw ShapeError("mix: expected utilities " + std::to_string(n) + "xB and state " +
                     std::to_string(cfg_.state_dim) + "xB");
  Matrix w1_raw = nn::affine(hyper_w1_, state);
  Matrix w1 = w1_raw.cwiseAbs();
  Matrix b1 = nn::affine(hyper_b1_, state);

  Matrix pre = b1;
  for (int a = 0; a < n; ++a) pre.array() += w1.middleRows(a * e, e).array().rowwise() * utilities.row(a).array();
  Matrix hidden = nn::elu<double>(pre);

  Matrix w2_raw = nn::affine(hyper_w2_, state);
  Matrix w2 = w2_raw.cwiseAbs();
  Matrix v1_act = nn::relu<double>(nn::affine(hyper_b2_in_, state));
  Matrix b2 = nn::affine(hyper_b2_out_, v1_act);

  Matrix q_tot = (w2.array() * hidden.array()).colwise().sum().matrix() + b2;
  if (cache) *cache = {state, utilities, std::move(w1_raw), std::move(w1), std::move(b1), std::move(hidden),
                       std::move(w2_raw), std::move(w2), std::move(v1_act)};
  return q_tot;
}

Matrix Mixer::backward(const MixerCache& c, const Matrix& dq_tot) {
  const int n = cfg_.n_agents, e = cfg_.mixing_dim;
  const Index b = dq_tot.cols();
  if (dq_tot.rows() != 1 || b != c.state.cols()) throw ShapeError("mixer backward: dq_tot must be 1 x B");

  // b2 branch.
  Matrix dv1_act = nn::affine_backward(hyper_b2_out_, c.v1_act, dq_tot);
  nn::affine_backward(hyper_b2_in_, c.state, nn::relu_backward<double>(c.v1_act, dv1_act));

  // Second mixing layer.
  Matrix dw2 = (c.hidden.array().rowwise() * dq_tot.row(0).array()).matrix();
  Matrix dw2_raw = (c.w2_raw.array().sign() * dw2.array()).matrix();
  nn::affine_backward(hyper_w2_, c.state, dw2_raw);
  Matrix dhidden = (c.w2.array().rowwise() * dq_tot.row(0).array()).matrix();
  Matrix dpre = nn::elu_backward<double>(c.hidden, dhidden);

  // First mixing layer.
  nn::affine_backward(hyper_b1_, c.state, dpre);
  Matrix dw1(n * e, b);
  Matrix du(n, b);
  for (int a = 0; a < n; ++a) {
    dw1.middleRows(a * e, e) = dpre.array().rowwise() * c.utilities.row(a).array();
    du.row(a) = (c.w1.middleRows(a * e, e).array() * dpre.array()).colwise().sum();
  }
  Matrix dw1_raw = (c.w1_raw.array().sign() * dw1.array()).matrix();
  nn::affine_backward(hyper_w1_, c.state, dw1_raw);
  return du;
}

}  // namespace gaxnet::qmix
