#include "gaxnet/policy.hpp"

#include <cmath>

namespace gaxnet::policy {
namespace {

// (K x B) <-> (1 x K*B), neighbour-major column blocks.
Matrix flatten_rows(const Matrix& m) {
  const Index k = m.rows(), b = m.cols();
  Matrix flat(1, k * b);
  for (Index j = 0; j < k; ++j) flat.middleCols(j * b, b) = m.row(j);
  return flat;
}

Matrix unflatten_rows(const Matrix& flat, Index k) {
  const Index b = flat.cols() / k;
  Matrix m(k, b);
  for (Index j = 0; j < k; ++j) m.row(j) = flat.middleCols(j * b, b);
  return m;
}

constexpr int kObservableRow = 8;

}  // namespace

void ActorConfig::validate() const {
  if (n_agents < 2) throw ConfigError("actor: n_agents must be >= 2");
  if (obs_dim != env::EnvConfig::kOwnDim + env::EnvConfig::kOtherDim * neighbors())
    throw ConfigError("actor: obs_dim inconsistent with n_agents");
  if (other_dim != 9) throw ConfigError("actor: other_dim must be 9");
  if (embed_dim < 1 || attention_dim < 1 || head_hidden < 1 || n_actions < 1)
    throw ConfigError("actor: layer widths must be positive");
}

ActorState ActorState::zeros(const ActorConfig& cfg, Index batch) {
  return {Matrix::Zero(cfg.head_hidden, batch), Matrix::Zero(cfg.neighbors(), batch), 0};
}

ActorInput make_input(const ActorConfig& cfg, const std::vector<const env::Observation*>& batch) {
  const Index b = Index(batch.size());
  const int k = cfg.neighbors();
  ActorInput in;
  in.own.resize(cfg.obs_dim, b);
  in.other.assign(k, Matrix(cfg.other_dim, b));
  in.inbox = Matrix::Zero(k, b);
  for (Index c = 0; c < b; ++c) {
    const env::Observation& o = *batch[c];
    if (o.size() != cfg.obs_dim) throw ShapeError("make_input: observation has " + std::to_string(o.size()) + " entries");
    in.own.col(c) = o;
    for (int j = 0; j < k; ++j) {
      const int blk = env::EnvConfig::kOwnDim + env::EnvConfig::kOtherDim * j;
      auto col = in.other[j].col(c);
      col.segment<2>(0) = o.segment<2>(0);      // own position
      col.segment<2>(2) = o.segment<2>(2);      // relative target position
      col.segment<2>(4) = o.segment<2>(blk);    // relative neighbour position
      col(6) = o(4);                            // target distance
      col(7) = o(blk + 2);                      // neighbour distance
      col(kObservableRow) = o(blk + 3);         // observable flag
    }
  }
  return in;
}

Matrix observable_mask(const ActorConfig& cfg, const ActorInput& in) {
  Matrix mask(cfg.neighbors(), in.own.cols());
  for (int j = 0; j < cfg.neighbors(); ++j) mask.row(j) = in.other[j].row(kObservableRow);
  return mask;
}

Matrix gate_inbox(const Matrix& raw_inbox, const Matrix& observable, int slot) {
  if (slot == 0) return Matrix::Zero(raw_inbox.rows(), raw_inbox.cols());
  return raw_inbox.cwiseProduct(observable);
}

Actor::Actor(const ActorConfig& cfg, const std::string& prefix, Rng& rng) : cfg_(cfg), prefix_(prefix) {
  cfg_.validate();
  const std::string p = prefix_ + "/";
  nn::make_affine(store_, p + "enc_own", cfg_.obs_dim, cfg_.embed_dim, rng);
  if (cfg_.attention) {
    nn::make_affine(store_, p + "enc_other", cfg_.other_dim, cfg_.embed_dim, rng);
    nn::make_affine(store_, p + "query", cfg_.embed_dim, cfg_.attention_dim, rng);
    nn::make_affine(store_, p + "key", cfg_.embed_dim, cfg_.attention_dim, rng);
    nn::make_affine(store_, p + "value", cfg_.embed_dim, cfg_.attention_dim, rng);
    nn::make_gru(store_, p + "sr_cell", 2, 1, rng);
    nn::make_affine(store_, p + "sr_readout", 1, 1, rng);
  }
  nn::make_affine(store_, p + "head_in", cfg_.head_input_dim(), cfg_.head_hidden, rng);
  nn::make_gru(store_, p + "head_cell", cfg_.head_hidden, cfg_.head_hidden, rng);
  nn::make_affine(store_, p + "head_out", cfg_.head_hidden, cfg_.n_actions, rng);
  bind();
}

Actor::Actor(const Actor& other) : cfg_(other.cfg_), prefix_(other.prefix_), store_(other.store_) { bind(); }

Actor& Actor::operator=(const Actor& other) {
  if (this != &other) {
    cfg_ = other.cfg_;
    prefix_ = other.prefix_;
    store_ = other.store_;
    bind();
  }
  return *this;
}

Actor::Actor(Actor&& other) : cfg_(other.cfg_), prefix_(std::move(other.prefix_)), store_(std::move(other.store_)) {
  bind();
}

Actor& Actor::operator=(Actor&& other) {
  if (this != &other) {
    cfg_ = other.cfg_;
    prefix_ = std::move(other.prefix_);
    store_ = std::move(other.store_);
    bind();
  }
  return *this;
}

void Actor::bind() {
  const std::string p = prefix_ + "/";
  enc_own_ = nn::bind_affine(store_, p + "enc_own");
  if (cfg_.attention) {
    enc_other_ = nn::bind_affine(store_, p + "enc_other");
    query_ = nn::bind_affine(store_, p + "query");
    key_ = nn::bind_affine(store_, p + "key");
    value_ = nn::bind_affine(store_, p + "value");
    sr_cell_ = nn::bind_gru(store_, p + "sr_cell");
    sr_readout_ = nn::bind_affine(store_, p + "sr_readout");
  }
  head_in_ = nn::bind_affine(store_, p + "head_in");
  head_cell_ = nn::bind_gru(store_, p + "head_cell");
  head_out_ = nn::bind_affine(store_, p + "head_out");
}

Actor::Encoded Actor::encode(const ActorInput& in, EncodeCache* cache) const {
  if (cfg_.attention && int(in.other.size()) != cfg_.neighbors()) throw ShapeError("encode: wrong neighbour count");
  Encoded out;
  out.h_own = nn::affine(enc_own_, in.own);
  if (cfg_.attention) {
    out.h_other.reserve(in.other.size());
    for (const auto& o : in.other) out.h_other.push_back(nn::affine(enc_other_, o));
  }
  if (cache) *cache = {in.own, cfg_.attention ? in.other : std::vector<Matrix>{}};
  return out;
}

Actor::Attended Actor::attention_graph(const Encoded& enc, AttentionCache* cache) const {
  Matrix q = nn::affine(query_, enc.h_own);
  std::vector<Matrix> keys, values;
  keys.reserve(enc.h_other.size());
  values.reserve(enc.h_other.size());
  for (const auto& h : enc.h_other) {
    keys.push_back(nn::affine(key_, h));
    values.push_back(nn::affine(value_, h));
  }
  const double scale = std::sqrt(double(cfg_.attention_dim));
  nn::ScaledDotCache<double>* dot_cache = cache ? &cache->dot : nullptr;
  auto res = nn::scaled_dot<double>(q, keys, values, scale, cfg_.normalize_attention, dot_cache);
  if (cache) {
    cache->h_own = enc.h_own;
    cache->h_other = enc.h_other;
  }
  return {std::move(res.weights), std::move(values), std::move(res.mixed)};
}

Actor::SrOutput Actor::sr_encode(const Matrix& w_now, const Matrix& sr_in, const Matrix& pair_hidden,
                                 SrCache* cache) const {
  const Index k = w_now.rows(), b = w_now.cols();
  if (sr_in.rows() != k || sr_in.cols() != b || pair_hidden.rows() != k || pair_hidden.cols() != b)
    throw ShapeError("sr_encode: inputs must share shape");
  Matrix x(2, k * b);
  x.row(0) = flatten_rows(w_now);
  x.row(1) = flatten_rows(sr_in);
  nn::GruCache<double> cell_cache;
  Matrix hidden = nn::gru_cell(sr_cell_, x, flatten_rows(pair_hidden), cache ? &cell_cache : nullptr);
  Matrix sr = nn::sigmoid<double>(nn::affine(sr_readout_, hidden));
  SrOutput out{unflatten_rows(sr, k), unflatten_rows(hidden, k)};
  if (cache) *cache = {std::move(cell_cache), std::move(hidden), std::move(sr)};
  return out;
}

Actor::Utility Actor::utility(const Matrix& h_own, const Matrix& sr, const Matrix& weights,
                              const std::vector<Matrix>& values, const Matrix& agent_hidden,
                              UtilityCache* cache) const {
  Matrix input(cfg_.head_input_dim(), h_own.cols());
  input.topRows(cfg_.embed_dim) = h_own;
  if (cfg_.attention) {
    const int k = cfg_.neighbors(), j2 = cfg_.attention_dim;
    input.middleRows(cfg_.embed_dim, k) = sr;
    for (int j = 0; j < k; ++j)
      input.middleRows(cfg_.embed_dim + k + j * j2, j2) = values[j].array().rowwise() * weights.row(j).array();
  }
  Matrix pre = nn::affine(head_in_, input);
  Matrix act = nn::tanh<double>(pre);
  nn::GruCache<double> cell_cache;
  Matrix hidden = nn::gru_cell(head_cell_, act, agent_hidden, cache ? &cell_cache : nullptr);
  Matrix q = nn::affine(head_out_, hidden);
  if (cache) *cache = {std::move(input), std::move(pre), act, std::move(cell_cache), hidden};
  return {std::move(q), std::move(hidden)};
}

ActorOutput Actor::forward(const ActorInput& in, const Matrix& agent_hidden, const Matrix& pair_hidden,
                           ActorCache* cache) const {
  Encoded enc = encode(in, cache ? &cache->encode : nullptr);
  ActorOutput out;
  if (cfg_.attention) {
    Attended att = attention_graph(enc, cache ? &cache->attention : nullptr);
    SrOutput sr = sr_encode(att.weights, in.inbox, pair_hidden, cache ? &cache->sr : nullptr);
    Utility u = utility(enc.h_own, sr.sr, att.weights, att.values, agent_hidden, cache ? &cache->utility : nullptr);
    out.q = std::move(u.q);
    out.agent_hidden = std::move(u.hidden);
    out.attention = att.weights;
    out.sr = std::move(sr.sr);
    out.pair_hidden = std::move(sr.hidden);
    if (cache) {
      cache->attention_weights = std::move(att.weights);
      cache->values = std::move(att.values);
    }
  } else {
    Utility u = utility(enc.h_own, Matrix(), Matrix(), {}, agent_hidden, cache ? &cache->utility : nullptr);
    out.q = std::move(u.q);
    out.agent_hidden = std::move(u.hidden);
    out.attention = Matrix(0, in.own.cols());
    out.sr = Matrix(0, in.own.cols());
    out.pair_hidden = pair_hidden;
  }
  if (cache) cache->h_own = enc.h_own;
  return out;
}

ActorInputGrad Actor::backward(const ActorCache& c, const ActorUpstream& up) {
  const Index b = up.dq.cols();
  const int k = cfg_.neighbors(), j1 = cfg_.embed_dim, j2 = cfg_.attention_dim;
  ActorInputGrad g;

  // Utility head.
  Matrix dhidden = nn::affine_backward(head_out_, c.utility.hidden, up.dq);
  if (up.dagent_hidden.size()) dhidden += up.dagent_hidden;
  auto cell_grad = nn::gru_cell_backward(head_cell_, c.utility.cell, dhidden);
  g.dagent_hidden = std::move(cell_grad.dh);
  Matrix dpre = nn::tanh_backward<double>(c.utility.act, cell_grad.dx);
  Matrix dinput = nn::affine_backward(head_in_, c.utility.input, dpre);
  Matrix dh_own = dinput.topRows(j1);

  if (!cfg_.attention) {
    g.down = nn::affine_backward(enc_own_, c.encode.own, dh_own);
    g.dinbox = Matrix::Zero(k, b);
    g.dpair_hidden = up.dpair_hidden.size() ? up.dpair_hidden : Matrix::Zero(k, b);
    return g;
  }

  // Weighted value rows and SR slots of the head input.
  Matrix dweights(k, b);
  std::vector<Matrix> dvalues(k);
  for (int j = 0; j < k; ++j) {
    const auto du = dinput.middleRows(j1 + k + j * j2, j2);
    dweights.row(j) = (du.array() * c.values[j].array()).colwise().sum();
    dvalues[j] = (du.array().rowwise() * c.attention_weights.row(j).array()).matrix();
  }
  if (up.dattention.size()) dweights += up.dattention;
  Matrix dsr = dinput.middleRows(j1, k);
  if (up.dsr.size()) dsr += up.dsr;

  // SR encoder.
  Matrix dsr_pre = nn::sigmoid_backward<double>(c.sr.sr, flatten_rows(dsr));
  Matrix dpair = nn::affine_backward(sr_readout_, c.sr.hidden, dsr_pre);
  if (up.dpair_hidden.size()) dpair += flatten_rows(up.dpair_hidden);
  auto sr_grad = nn::gru_cell_backward(sr_cell_, c.sr.cell, dpair);
  dweights += unflatten_rows(sr_grad.dx.row(0), k);
  g.dinbox = unflatten_rows(sr_grad.dx.row(1), k);
  g.dpair_hidden = unflatten_rows(sr_grad.dh, k);

  // Attention graph.
  auto dot_grad = nn::scaled_dot_backward<double>(c.attention.dot, dweights, Matrix::Zero(j2, b));
  dh_own += nn::affine_backward(query_, c.attention.h_own, dot_grad.dq);
  g.dother.resize(k);
  for (int j = 0; j < k; ++j) {
    Matrix dh = nn::affine_backward(key_, c.attention.h_other[j], dot_grad.dkeys[j]);
    dh += nn::affine_backward(value_, c.attention.h_other[j], Matrix(dot_grad.dvalues[j] + dvalues[j]));
    g.dother[j] = nn::affine_backward(enc_other_, c.encode.other[j], dh);
  }
  g.down = nn::affine_backward(enc_own_, c.encode.own, dh_own);
  return g;
}

int greedy_action(const Eigen::Ref<const Vector>& q) {
  int best = 0;
  for (int a = 1; a < q.size(); ++a)
    if (q(a) > q(best)) best = a;
  return best;
}

Actor::Decision Actor::act(const env::Observation& obs, const std::vector<double>& inbox, ActorState& state,
                           double epsilon, Rng& rng, ExchangeMode mode) const {
  const int k = cfg_.neighbors();
  ActorInput in = make_input(cfg_, {&obs});
  if (cfg_.attention) {
    if (int(inbox.size()) != k) throw ShapeError("act: inbox must hold one entry per neighbour");
    Matrix raw = Eigen::Map<const Matrix>(inbox.data(), k, 1);
    if (mode == ExchangeMode::kNone) raw.setZero();
    in.inbox = gate_inbox(raw, observable_mask(cfg_, in), state.slot);
  }
  if (state.agent_hidden.size() == 0) state = ActorState::zeros(cfg_, 1);

  ActorOutput out = forward(in, state.agent_hidden, state.pair_hidden);
  nn::check_finite(out.q, "action values");

  Decision d;
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  if (coin(rng) < epsilon) {
    std::uniform_int_distribution<int> pick(0, cfg_.n_actions - 1);
    d.action = pick(rng);
  } else {
    d.action = greedy_action(out.q.col(0));
  }
  d.q.assign(out.q.data(), out.q.data() + out.q.size());
  d.attention.assign(out.attention.data(), out.attention.data() + out.attention.size());
  d.sr.assign(out.sr.data(), out.sr.data() + out.sr.size());
  switch (mode) {
    case ExchangeMode::kSemantic: d.outgoing = d.sr; break;
    case ExchangeMode::kRaw: d.outgoing = d.attention; break;
    case ExchangeMode::kNone: d.outgoing.assign(cfg_.attention ? k : 0, 0.0); break;
  }

  state.agent_hidden = std::move(out.agent_hidden);
  state.pair_hidden = std::move(out.pair_hidden);
  ++state.slot;
  return d;
}

}  // namespace gaxnet::policy
