#include "checks.hpp"

#include "gaxnet/mixer.hpp"
#include "gaxnet/policy.hpp"

#include <doctest.h>

#include <cmath>

using namespace gaxnet;
using namespace gaxnet::policy;

namespace {

ActorInput random_input(const ActorConfig& cfg, Index b, std::mt19937_64& rng) {
  ActorInput in;
  in.own = fd::random_matrix(cfg.obs_dim, b, rng);
  for (int j = 0; j < cfg.neighbors(); ++j) in.other.push_back(fd::random_matrix(cfg.other_dim, b, rng));
  in.inbox = fd::random_matrix(cfg.neighbors(), b, rng, 0.5).array() + 0.5;
  return in;
}

void check_actor(const ActorConfig& cfg, std::uint64_t seed, int per_param) {
  fd::Report rep = checks::actor_gradients(cfg, seed, per_param);
  INFO(rep.where);
  CHECK(rep.worst < fd::kTolerance);
  CHECK(rep.checked > 100);
}

}  // namespace

TEST_CASE("actor gradients at production shapes") {
  ActorConfig cfg;  // N=4, J1=64, J2=32
  check_actor(cfg, 21, 40);
}

TEST_CASE("actor gradients with raw attention scores") {
  ActorConfig cfg;
  cfg.normalize_attention = false;
  check_actor(cfg, 22, 20);
}

TEST_CASE("baseline actor gradients") {
  ActorConfig cfg;
  cfg.attention = false;
  check_actor(cfg, 23, 40);
}

TEST_CASE("head input width") {
  ActorConfig cfg;
  CHECK(cfg.head_input_dim() == 64 + 3 + 3 * 32);
  cfg.attention = false;
  CHECK(cfg.head_input_dim() == 64);
}

TEST_CASE("attention weights are a distribution over neighbours") {
  std::mt19937_64 rng(24);
  ActorConfig cfg;
  Actor actor(cfg, "a", rng);
  ActorInput in = random_input(cfg, 5, rng);
  ActorOutput o = actor.forward(in, Matrix::Zero(64, 5), Matrix::Zero(3, 5));
  CHECK((o.attention.colwise().sum().array() - 1.0).abs().maxCoeff() < 1e-12);
  CHECK(o.attention.minCoeff() > 0.0);
  CHECK(o.sr.minCoeff() > 0.0);
  CHECK(o.sr.maxCoeff() < 1.0);
}

TEST_CASE("inbox gating") {
  Matrix raw(3, 2);
  raw << 0.1, 0.2, 0.3, 0.4, 0.5, 0.6;
  Matrix mask(3, 2);
  mask << 1, 0, 1, 1, 0, 1;
  CHECK(gate_inbox(raw, mask, 0).isZero());
  Matrix g = gate_inbox(raw, mask, 4);
  CHECK(g(0, 1) == 0.0);
  CHECK(g(2, 0) == 0.0);
  CHECK(g(1, 1) == 0.4);
}

TEST_CASE("input layout follows the observation") {
  ActorConfig cfg;
  env::Observation o = env::Observation::LinSpaced(22, 0.0, 21.0);
  ActorInput in = make_input(cfg, {&o});
  CHECK(in.own.col(0) == o);
  // Neighbour slot 1 uses observation block 14..17.
  CHECK(in.other[1](4, 0) == 14.0);
  CHECK(in.other[1](5, 0) == 15.0);
  CHECK(in.other[1](7, 0) == 16.0);
  CHECK(in.other[1](8, 0) == 17.0);
  CHECK(in.other[1](6, 0) == 4.0);
  env::Observation bad = env::Observation::Zero(21);
  CHECK_THROWS_AS(make_input(cfg, {&bad}), ShapeError);
}

TEST_CASE("greedy ties go to the lowest action") {
  CHECK(greedy_action(Vector::Constant(8, 1.5)) == 0);
  Vector q = Vector::Zero(8);
  q(5) = 2.0;
  q(6) = 2.0;
  CHECK(greedy_action(q) == 5);
}

TEST_CASE("uniform exploration at epsilon = 1") {
  std::mt19937_64 init(25);
  ActorConfig cfg;
  Actor actor(cfg, "a", init);
  env::Observation o = env::Observation::Constant(22, 0.1);
  nn::Rng rng(26);
  std::vector<int> counts(8, 0);
  const int draws = 10000;
  for (int i = 0; i < draws; ++i) {
    ActorState st = ActorState::zeros(cfg, 1);
    ++counts[std::size_t(actor.act(o, {0.0, 0.0, 0.0}, st, 1.0, rng).action)];
  }
  const double mean = draws / 8.0, sigma = std::sqrt(draws * (1.0 / 8) * (7.0 / 8));
  for (int c : counts) CHECK(std::abs(c - mean) <= 3 * sigma);
}

TEST_CASE("act carries recurrent state and emits the configured message") {
  std::mt19937_64 init(27);
  ActorConfig cfg;
  Actor actor(cfg, "a", init);
  env::Observation o = env::Observation::Constant(22, 0.2);
  for (int i = 13; i < 22; i += 4) o(i) = 1.0;  // all observable
  nn::Rng rng(1);
  ActorState st = ActorState::zeros(cfg, 1);
  auto d0 = actor.act(o, {0.9, 0.9, 0.9}, st, 0.0, rng, ExchangeMode::kSemantic);
  CHECK(st.slot == 1);
  CHECK(d0.outgoing == d0.sr);
  auto d1 = actor.act(o, {0.9, 0.9, 0.9}, st, 0.0, rng, ExchangeMode::kRaw);
  CHECK(d1.outgoing == d1.attention);
  auto d2 = actor.act(o, {0.9, 0.9, 0.9}, st, 0.0, rng, ExchangeMode::kNone);
  CHECK(d2.outgoing == std::vector<double>(3, 0.0));
  CHECK(d0.action == greedy_action(Eigen::Map<const Vector>(d0.q.data(), 8)));
  CHECK_THROWS_AS(actor.act(o, {0.1}, st, 0.0, rng), ShapeError);
}

TEST_CASE("copies own independent parameters") {
  std::mt19937_64 init(28);
  Actor a(ActorConfig{}, "a", init);
  Actor b = a;
  b.params().at("a/head_out/bias").value.setConstant(3.0);
  CHECK(a.params().at("a/head_out/bias").value != b.params().at("a/head_out/bias").value);
  std::vector<Actor> v;
  v.push_back(std::move(b));
  env::Observation o = env::Observation::Zero(22);
  auto in = make_input(v[0].config(), {&o});
  ActorOutput out = v[0].forward(in, Matrix::Zero(64, 1), Matrix::Zero(3, 1));
  CHECK(out.q(0, 0) == doctest::Approx(3.0 + (v[0].params().at("a/head_out/weight").value * out.agent_hidden)(0, 0)));
}

// ---------------------------------------------------------------------------
// Mixer

TEST_CASE("mixer gradients at production shapes") {
  fd::Report rep = checks::mixer_gradients(31, 60);
  INFO(rep.where);
  CHECK(rep.worst < fd::kTolerance);
  std::mt19937_64 rng(31);
  qmix::Mixer mixer({4, 180, 32}, rng);
  CHECK_THROWS_AS(mixer.mix(Matrix(3, 2), Matrix(180, 2)), ShapeError);
}

TEST_CASE("mixer is monotone in every utility") { CHECK(checks::mixer_monotonicity_violations(100) == 0); }
