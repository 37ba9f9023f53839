#include "gaxnet/config.hpp"

#include <doctest.h>

using namespace gaxnet;

TEST_CASE("config text round trip") {
  RunConfig cfg;
  cfg.embed_dim = 48;
  cfg.exchange = policy::ExchangeMode::kRaw;
  cfg.train.seed = 17;
  cfg.train.lr_gaxnet = 3e-4;
  const std::string text = to_text(cfg);
  const RunConfig back = parse_config(text);
  CHECK(to_text(back) == text);
  CHECK(back.embed_dim == 48);
  CHECK(back.exchange == policy::ExchangeMode::kRaw);
  CHECK(back.train.lr_gaxnet == 3e-4);
  CHECK(config_hash(back) == config_hash(cfg));
}

TEST_CASE("comments and partial files keep defaults") {
  RunConfig cfg = parse_config("# header\nembed_dim = 16   # trailing\n\n");
  CHECK(cfg.embed_dim == 16);
  CHECK(cfg.attention_dim == 32);
}

TEST_CASE("bad config text is rejected") {
  CHECK_THROWS_AS(parse_config("no_such_key = 1\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("embed_dim = 1\nembed_dim = 2\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("embed_dim = abc\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("embed_dim\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("embed_dim = 0\n"), ConfigError);
}

TEST_CASE("hash tracks the model shape, not the schedule") {
  RunConfig a;
  const auto h = config_hash(a);
  CHECK(h.size() == 16);
  RunConfig b = a;
  b.train.seed = 99;
  b.train.iterations = 7;
  CHECK(config_hash(b) == h);
  b.embed_dim = 32;
  CHECK(config_hash(b) != h);
  RunConfig c = a;
  c.baseline = true;
  CHECK(config_hash(c) != h);
  RunConfig d = a;
  d.exchange = policy::ExchangeMode::kNone;
  CHECK(config_hash(d) != h);
}

TEST_CASE("exchange mode names") {
  for (auto m : {policy::ExchangeMode::kSemantic, policy::ExchangeMode::kRaw, policy::ExchangeMode::kNone})
    CHECK(parse_exchange_mode(to_string(m)) == m);
  CHECK_THROWS_AS(parse_exchange_mode("loud"), ConfigError);
}
