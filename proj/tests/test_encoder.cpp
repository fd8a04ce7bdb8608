#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "bicl/corpus.hpp"
#include "bicl/embedding.hpp"
#include "bicl/encoder.hpp"
#include "bicl/losses.hpp"
#include "bicl/rng.hpp"

using namespace bicl;

namespace {

EncoderConfig small_config() {
  EncoderConfig c;
  c.embedding_dim = 6;
  c.hidden_dim = 5;
  c.attention_dim = 3;
  return c;
}

ParamStore make_params(const EncoderConfig& config, std::uint64_t seed) {
  ParamStore store;
  std::mt19937_64 rng(hash_mix(seed));
  init_encoder_params(store, config, rng);
  return store;
}

Conversation make_conversation(const std::vector<std::pair<std::string, std::string>>& turns) {
  Conversation c;
  c.id = "enc-test";
  for (std::size_t i = 0; i < turns.size(); ++i) {
    Utterance u;
    u.index = static_cast<int>(i);
    u.speaker = turns[i].first;
    u.text = turns[i].second;
    u.tokens = tokenize(u.text);
    c.utterances.push_back(std::move(u));
  }
  return c;
}

}  // namespace

TEST_CASE("single-token utterances get attention weight exactly 1") {
  const EncoderConfig cfg = small_config();
  const ParamStore store = make_params(cfg, 2);
  const EmbeddingTable table(cfg.embedding_dim, 3);
  Tape tape;
  const BoundParams bound = store.bind(tape, false);
  std::vector<NodeId> states = {tape.constant(Tensor::vector({0.1, -0.2, 0.3, 0.0, 0.5}))};
  std::vector<double> weights;
  attention_pool(tape, bound.at("enc.tok_attn.w"), bound.at("enc.tok_attn.v"), states, &weights);
  REQUIRE(weights.size() == 1);
  CHECK(weights[0] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("identical states get uniform attention weights") {
  const EncoderConfig cfg = small_config();
  const ParamStore store = make_params(cfg, 2);
  Tape tape;
  const BoundParams bound = store.bind(tape, false);
  const NodeId s = tape.constant(Tensor::vector({0.4, -0.1, 0.2, 0.7, -0.3}));
  std::vector<NodeId> states = {s, s, s};
  std::vector<double> weights;
  attention_pool(tape, bound.at("enc.tok_attn.w"), bound.at("enc.tok_attn.v"), states, &weights);
  REQUIRE(weights.size() == 3);
  for (double w : weights) CHECK(w == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("encode_utterance is deterministic and rejects empty input") {
  const EncoderConfig cfg = small_config();
  const ParamStore store = make_params(cfg, 4);
  const EmbeddingTable table(cfg.embedding_dim, 3);
  const std::vector<std::string> tokens = {"alpha", "beta", "gamma", "delta", "echo"};

  Tape t1, t2;
  const BoundParams b1 = store.bind(t1, false);
  const BoundParams b2 = store.bind(t2, false);
  const Tensor u1 = t1.value(encode_utterance(t1, b1, tokens, table, cfg));
  const Tensor u2 = t2.value(encode_utterance(t2, b2, tokens, table, cfg));
  CHECK(u1.shape == std::vector<int>{cfg.hidden_dim});
  for (std::size_t i = 0; i < u1.values.size(); ++i) CHECK(u1.values[i] == u2.values[i]);

  Tape t3;
  const BoundParams b3 = store.bind(t3, false);
  CHECK_THROWS_AS(encode_utterance(t3, b3, {}, table, cfg), std::invalid_argument);
}

TEST_CASE("encode_context output shape and bidirectionality") {
  const EncoderConfig cfg = small_config();
  const ParamStore store = make_params(cfg, 5);
  std::mt19937_64 rng(6);

  Tape tape;
  const BoundParams bound = store.bind(tape, false);
  Tensor single = Tensor::zeros({cfg.hidden_dim});
  for (double& v : single.values) v = uniform_real(rng, -1, 1);
  const auto one = encode_context(tape, bound, std::vector<NodeId>{tape.constant(single)});
  REQUIRE(one.size() == 1);
  CHECK(tape.value(one[0]).shape == std::vector<int>{cfg.hidden_dim});

  // perturbing the last input changes the first output (backward direction)
  std::vector<Tensor> inputs;
  for (int i = 0; i < 4; ++i) {
    Tensor t = Tensor::zeros({cfg.hidden_dim});
    for (double& v : t.values) v = uniform_real(rng, -1, 1);
    inputs.push_back(std::move(t));
  }
  Tape ta, tb;
  const BoundParams ba = store.bind(ta, false);
  const BoundParams bb = store.bind(tb, false);
  std::vector<NodeId> na, nb;
  for (int i = 0; i < 4; ++i) {
    na.push_back(ta.constant(inputs[static_cast<std::size_t>(i)]));
    Tensor t = inputs[static_cast<std::size_t>(i)];
    if (i == 3) t.values[0] += 0.5;
    nb.push_back(tb.constant(t));
  }
  const Tensor first_a = ta.value(encode_context(ta, ba, na)[0]);
  const Tensor first_b = tb.value(encode_context(tb, bb, nb)[0]);
  double diff = 0.0;
  for (std::size_t i = 0; i < first_a.values.size(); ++i) diff += std::abs(first_a.values[i] - first_b.values[i]);
  CHECK(diff > 1e-9);
}

TEST_CASE("zero input sequence stays finite") {
  const EncoderConfig cfg = small_config();
  const ParamStore store = make_params(cfg, 7);
  Tape tape;
  const BoundParams bound = store.bind(tape, false);
  std::vector<NodeId> zeros = {tape.constant(Tensor::zeros({cfg.hidden_dim})),
                               tape.constant(Tensor::zeros({cfg.hidden_dim}))};
  const auto out = encode_context(tape, bound, zeros);
  for (NodeId n : out) CHECK(tape.value(n).all_finite());
}

TEST_CASE("represent returns unit-norm vectors of dimension hidden+window") {
  const EncoderConfig cfg = small_config();
  const ParamStore store = make_params(cfg, 8);
  const EmbeddingTable table(cfg.embedding_dim, 3);
  const Conversation conv = make_conversation({{"ana", "red blue"}, {"bo", "green"}, {"ana", "blue blue"}});

  Tape tape;
  const BoundParams bound = store.bind(tape, false);
  const auto v = represent(tape, bound, conv, table, cfg);
  REQUIRE(v.size() == 3);
  for (NodeId n : v) {
    const Tensor& t = tape.value(n);
    CHECK(t.shape == std::vector<int>{cfg.representation_dim()});
    CHECK(std::abs(t.norm2() - 1.0) <= 1e-9);
  }
}

TEST_CASE("represent rejects over-length conversations") {
  const EncoderConfig cfg = small_config();
  const ParamStore store = make_params(cfg, 8);
  const EmbeddingTable table(cfg.embedding_dim, 3);
  Conversation conv;
  conv.id = "big";
  for (int i = 0; i < kWindow + 1; ++i) {
    Utterance u;
    u.index = i;
    u.speaker = "s";
    u.text = "x";
    u.tokens = tokenize(u.text);
    conv.utterances.push_back(std::move(u));
  }
  Tape tape;
  const BoundParams bound = store.bind(tape, false);
  CHECK_THROWS_AS(represent(tape, bound, conv, table, cfg), std::invalid_argument);
}

TEST_CASE("speaker handles permute mention slots but leave the token path unchanged") {
  const EncoderConfig cfg = small_config();
  const ParamStore store = make_params(cfg, 10);
  const EmbeddingTable table(cfg.embedding_dim, 3);
  // all-distinct speakers, no mentions: mention block reduces to the self bit
  const Conversation a = make_conversation({{"p", "one two"}, {"q", "three"}, {"r", "four five"}});
  const Conversation b = make_conversation({{"zz", "one two"}, {"qq", "three"}, {"aa", "four five"}});

  Tape ta, tb;
  const auto va = represent(ta, store.bind(ta, false), a, table, cfg);
  const auto vb = represent(tb, store.bind(tb, false), b, table, cfg);
  for (std::size_t i = 0; i < va.size(); ++i) {
    const Tensor& x = ta.value(va[i]);
    const Tensor& y = tb.value(vb[i]);
    for (std::size_t j = 0; j < x.values.size(); ++j) CHECK(x.values[j] == doctest::Approx(y.values[j]).epsilon(1e-12));
  }
}

TEST_CASE("gradients flow through represent into a scalar loss") {
  // a light end-to-end differentiation check; the exhaustive one lives in the
  // gradcheck suite
  const EncoderConfig cfg = small_config();
  EmbeddingTable table(cfg.embedding_dim, 3);
  std::mt19937_64 wrng(21);
  for (const char* w : {"red", "blue", "green"}) {
    std::vector<double> vec(static_cast<std::size_t>(cfg.embedding_dim));
    for (double& x : vec) x = uniform_real(wrng, -1, 1);
    table.insert(w, vec);
  }
  ParamStore store = make_params(cfg, 11);
  const Conversation conv = make_conversation({{"s1", "red blue"}, {"s2", "green"}, {"s1", "blue"}});
  const std::vector<int> labels = {0, 0, 1};

  Tape tape;
  const BoundParams bound = store.bind(tape, true);
  const auto v = represent(tape, bound, conv, table, cfg);
  const NodeId loss = utterance_contrastive(tape, v, labels, 0.5, 64, 1);
  const auto grads = tape.backward(loss);
  double total_norm = 0.0;
  for (const auto& [name, node] : bound) total_norm += grads.at(node).norm2();
  CHECK(total_norm > 0.0);
  CHECK(std::isfinite(total_norm));
}
