#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "bicl/corpus.hpp"
#include "bicl/kpredictor.hpp"
#include "bicl/rng.hpp"
#include "bicl/tape.hpp"

using namespace bicl;

namespace {

KPredictorConfig small_config() {
  KPredictorConfig c;
  c.input_dim = 8;
  c.hidden_dim = 5;
  c.attention_dim = 3;
  c.max_sessions = 4;
  return c;
}

std::vector<NodeId> random_reps(Tape& tape, int n, int dim, std::mt19937_64& rng) {
  std::vector<NodeId> out;
  for (int i = 0; i < n; ++i) {
    Tensor t = Tensor::zeros({dim});
    for (double& v : t.values) v = uniform_real(rng, -1, 1);
    out.push_back(tape.constant(std::move(t)));
  }
  return out;
}

}  // namespace

TEST_CASE("zero-initialized output layer gives the uniform distribution") {
  const KPredictorConfig cfg = small_config();
  ParamStore store;
  std::mt19937_64 rng(1);
  init_kpredictor_params(store, cfg, rng);
  Tensor& w2 = store.at("kpred.w2");
  std::fill(w2.values.begin(), w2.values.end(), 0.0);

  Tape tape;
  std::mt19937_64 rng2(2);
  const BoundParams bound = store.bind(tape, false);
  const auto v = random_reps(tape, 5, cfg.input_dim, rng2);
  const NodeId logits = k_logits(tape, bound, v, 3, 5, cfg);
  const KDistribution d = distribution_from_logits(tape, logits);
  REQUIRE(d.probabilities.size() == static_cast<std::size_t>(cfg.max_sessions));
  for (double p : d.probabilities) CHECK(p == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("distribution length equals max_sessions regardless of n") {
  const KPredictorConfig cfg = small_config();
  ParamStore store;
  std::mt19937_64 rng(3);
  init_kpredictor_params(store, cfg, rng);
  for (int n : {1, 2, 9}) {
    Tape tape;
    std::mt19937_64 rng2(static_cast<std::uint64_t>(n));
    const BoundParams bound = store.bind(tape, false);
    const auto v = random_reps(tape, n, cfg.input_dim, rng2);
    const KDistribution d = distribution_from_logits(tape, k_logits(tape, bound, v, 2, n, cfg));
    CHECK(d.probabilities.size() == static_cast<std::size_t>(cfg.max_sessions));
    double sum = 0.0;
    for (double p : d.probabilities) sum += p;
    CHECK(std::abs(sum - 1.0) <= 1e-9);
  }
}

TEST_CASE("meta features influence the prediction") {
  const KPredictorConfig cfg = small_config();
  ParamStore store;
  std::mt19937_64 rng(4);
  init_kpredictor_params(store, cfg, rng);
  Tape tape;
  std::mt19937_64 rng2(5);
  const BoundParams bound = store.bind(tape, false);
  const auto v = random_reps(tape, 4, cfg.input_dim, rng2);
  const KDistribution a = distribution_from_logits(tape, k_logits(tape, bound, v, 2, 4, cfg));
  const KDistribution b = distribution_from_logits(tape, k_logits(tape, bound, v, 2, 8, cfg));
  double diff = 0.0;
  for (std::size_t i = 0; i < a.probabilities.size(); ++i)
    diff += std::abs(a.probabilities[i] - b.probabilities[i]);
  CHECK(diff > 1e-12);
}

TEST_CASE("predict_k takes the unconstrained argmax when it fits") {
  KDistribution d;
  d.probabilities = {0.1, 0.2, 0.7};
  CHECK(predict_k(d, 10) == 3);
}

TEST_CASE("predict_k is constrained to at most n") {
  KDistribution d;
  d.probabilities = {0.1, 0.2, 0.7};
  CHECK(predict_k(d, 2) == 2);
  CHECK(predict_k(d, 1) == 1);
}

TEST_CASE("predict_k breaks ties toward the smaller k") {
  KDistribution d;
  d.probabilities = {0.25, 0.25, 0.25, 0.25};
  CHECK(predict_k(d, 10) == 1);
}

TEST_CASE("k_loss values") {
  KDistribution sure;
  sure.probabilities = {0.0, 1.0, 0.0, 0.0};
  CHECK(k_loss(sure, 2) == doctest::Approx(0.0).epsilon(1e-12));
  KDistribution uniform;
  uniform.probabilities = {0.25, 0.25, 0.25, 0.25};
  CHECK(k_loss(uniform, 3) == doctest::Approx(std::log(4.0)).epsilon(1e-12));
  KDistribution half;
  half.probabilities = {0.5, 0.5};
  CHECK(k_loss(half, 1) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("k_loss rejects gold K above M with a message naming M") {
  KDistribution d;
  d.probabilities = {0.5, 0.5};
  CHECK_THROWS_WITH_AS(k_loss(d, 3), doctest::Contains("max_sessions"), std::invalid_argument);
}

TEST_CASE("L_k gradient w.r.t. logits equals softmax minus one-hot") {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 10; ++trial) {
    Tensor logits = Tensor::zeros({5});
    for (double& v : logits.values) v = uniform_real(rng, -2, 2);
    logits.requires_grad = true;
    const int gold = uniform_int(rng, 1, 5);

    Tape tape;
    const NodeId leaf = tape.leaf(logits);
    const NodeId loss = k_loss_node(tape, leaf, gold);
    const Tensor grad = tape.backward(loss).at(leaf);
    const Tensor probs = tape.value(tape.softmax(leaf));
    for (int i = 0; i < 5; ++i) {
      const double expected = probs.values[static_cast<std::size_t>(i)] - (i == gold - 1 ? 1.0 : 0.0);
      CHECK(grad.values[static_cast<std::size_t>(i)] == doctest::Approx(expected).epsilon(1e-9));
    }
    // and against finite differences
    const double err = grad_check([&](Tape& t, NodeId x) { return k_loss_node(t, x, gold); },
                                  [&] { Tensor t2 = logits; t2.requires_grad = false; return t2; }(), 1e-5);
    CHECK(err < 1e-6);
  }
}

TEST_CASE("predict_k never exceeds n or M on random distributions") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    const int m = uniform_int(rng, 1, 6);
    KDistribution d;
    d.probabilities.resize(static_cast<std::size_t>(m));
    double sum = 0.0;
    for (double& p : d.probabilities) {
      p = uniform01(rng) + 1e-6;
      sum += p;
    }
    for (double& p : d.probabilities) p /= sum;
    const int n = uniform_int(rng, 1, 8);
    const int k = predict_k(d, n);
    CHECK(k >= 1);
    CHECK(k <= m);
    CHECK(k <= std::max(1, n));
  }
}
