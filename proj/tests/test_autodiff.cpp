#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "bicl/errors.hpp"
#include "bicl/rng.hpp"
#include "bicl/tape.hpp"

using namespace bicl;

namespace {

Tensor rand_vec(int n, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  Tensor t = Tensor::zeros({n});
  for (double& v : t.values) v = uniform_real(rng, lo, hi);
  return t;
}

}  // namespace

TEST_CASE("matmul by the identity returns the input") {
  Tape tape;
  const NodeId eye = tape.constant(Tensor::matrix(3, 3, {1, 0, 0, 0, 1, 0, 0, 0, 1}));
  const NodeId x = tape.constant(Tensor::matrix(3, 2, {1, 2, 3, 4, 5, 6}));
  const Tensor& y = tape.value(tape.matmul(eye, x));
  CHECK(y.shape == std::vector<int>{3, 2});
  for (int i = 0; i < 6; ++i) CHECK(y.values[i] == doctest::Approx(i + 1).epsilon(1e-12));
}

TEST_CASE("softmax of equal logits is uniform") {
  Tape tape;
  const Tensor& y = tape.value(tape.softmax(tape.constant(Tensor::vector({0.0, 0.0}))));
  CHECK(y.values[0] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(y.values[1] == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("softmax handles large logits and sums to one") {
  Tape tape;
  const Tensor& y = tape.value(tape.softmax(tape.constant(Tensor::vector({1000.0, 999.0, -1000.0}))));
  double sum = 0.0;
  for (double v : y.values) sum += v;
  CHECK(std::abs(sum - 1.0) <= 1e-12);
  CHECK(y.values[0] > y.values[1]);
}

TEST_CASE("relu definition") {
  Tape tape;
  const Tensor& y = tape.value(tape.relu(tape.constant(Tensor::vector({-1.0, 2.0}))));
  CHECK(y.values[0] == 0.0);
  CHECK(y.values[1] == 2.0);
}

TEST_CASE("backward of sum(relu(x)) uses the 0 subgradient at the kink") {
  Tape tape;
  Tensor x = Tensor::vector({-1.0, 2.0});
  x.requires_grad = true;
  const NodeId leaf = tape.leaf(x);
  const NodeId root = tape.sum(tape.relu(leaf));
  const Tensor g = tape.backward(root).at(leaf);
  CHECK(g.values[0] == 0.0);
  CHECK(g.values[1] == 1.0);

  Tape tape2;
  Tensor zero = Tensor::vector({0.0});
  zero.requires_grad = true;
  const NodeId z = tape2.leaf(zero);
  CHECK(tape2.backward(tape2.sum(tape2.relu(z))).at(z).values[0] == 0.0);
}

TEST_CASE("backward of dot(x, x) is 2x") {
  Tape tape;
  Tensor x = Tensor::vector({1.0, 2.0});
  x.requires_grad = true;
  const NodeId leaf = tape.leaf(x);
  const Tensor g = tape.backward(tape.dot(leaf, leaf)).at(leaf);
  CHECK(g.values[0] == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(g.values[1] == doctest::Approx(4.0).epsilon(1e-12));
}

TEST_CASE("gradient of log softmax component sums to zero") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    Tape tape;
    Tensor x = rand_vec(5, rng, -2.0, 2.0);
    x.requires_grad = true;
    const NodeId leaf = tape.leaf(x);
    const NodeId root = tape.log(pick(tape, tape.softmax(leaf), 0));
    const Tensor g = tape.backward(root).at(leaf);
    double sum = 0.0;
    for (double v : g.values) sum += v;
    CHECK(std::abs(sum) < 1e-10);

    // matches the finite-difference oracle as well
    const double err = grad_check(
        [](Tape& t, NodeId v) { return t.log(pick(t, t.softmax(v), 0)); }, rand_vec(5, rng, -2.0, 2.0), 1e-5);
    CHECK(err < 1e-4);
  }
}

TEST_CASE("grad_check on sum(x^2) has closed-form agreement") {
  const double err =
      grad_check([](Tape& t, NodeId x) { return t.sum(t.mul(x, x)); }, Tensor::vector({1.0, 2.0, 3.0}), 1e-5);
  CHECK(err < 1e-6);
}

TEST_CASE("every primitive matches central finite differences on random points") {
  // 100 trials spread over the primitive set, fixed seed
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 100; ++trial) {
    const int which = trial % 10;
    double err = 0.0;
    switch (which) {
      case 0: {
        Tensor c = rand_vec(6, rng);
        err = grad_check([&](Tape& t, NodeId x) { return t.dot(t.sigmoid(x), t.constant(c)); },
                         rand_vec(6, rng, -2, 2), 1e-5);
        break;
      }
      case 1: {
        Tensor c = rand_vec(6, rng);
        err = grad_check([&](Tape& t, NodeId x) { return t.dot(t.tanh(x), t.constant(c)); },
                         rand_vec(6, rng, -2, 2), 1e-5);
        break;
      }
      case 2: {
        Tensor c = rand_vec(6, rng);
        err = grad_check([&](Tape& t, NodeId x) { return t.dot(t.exp(x), t.constant(c)); },
                         rand_vec(6, rng, -1.5, 1.5), 1e-5);
        break;
      }
      case 3: {
        Tensor c = rand_vec(6, rng);
        err = grad_check([&](Tape& t, NodeId x) { return t.dot(t.log(x), t.constant(c)); },
                         rand_vec(6, rng, 0.5, 2.0), 1e-5);
        break;
      }
      case 4: {
        Tensor c = rand_vec(5, rng);
        err = grad_check([&](Tape& t, NodeId x) { return t.dot(t.softmax(x), t.constant(c)); },
                         rand_vec(5, rng, -2, 2), 1e-5);
        break;
      }
      case 5: {
        Tensor c = rand_vec(6, rng);
        Tensor p = Tensor::zeros({6});
        for (double& v : p.values) {
          const double m = uniform_real(rng, 0.3, 1.0);
          v = uniform01(rng) < 0.5 ? -m : m;
        }
        err = grad_check([&](Tape& t, NodeId x) { return t.dot(t.l2_normalize(x), t.constant(c)); }, p, 1e-5);
        break;
      }
      case 6: {
        Tensor m = Tensor::zeros({3, 4});
        for (double& v : m.values) v = uniform_real(rng, -1, 1);
        err = grad_check([&](Tape& t, NodeId x) { return t.sum(t.matmul(t.constant(m), x)); },
                         rand_vec(4, rng), 1e-5);
        break;
      }
      case 7: {
        err = grad_check([&](Tape& t, NodeId x) { return t.mean(t.mul(x, x)); }, rand_vec(7, rng), 1e-5);
        break;
      }
      case 8: {
        Tensor c = rand_vec(3, rng), w = rand_vec(9, rng);
        err = grad_check(
            [&](Tape& t, NodeId x) {
              return t.dot(t.apply(OpKind::concat, {x, t.constant(c)}), t.constant(w));
            },
            rand_vec(6, rng), 1e-5);
        break;
      }
      default: {
        Tensor w = rand_vec(5, rng);
        err = grad_check([&](Tape& t, NodeId x) { return t.dot(t.scale_by(x, pick(t, x, 2)), t.constant(w)); },
                         rand_vec(5, rng), 1e-5);
        break;
      }
    }
    CAPTURE(trial);
    CHECK(err < 1e-4);
  }
}

TEST_CASE("l2-normalize output has unit norm for inputs above the floor") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    Tensor x = rand_vec(8, rng, -2, 2);
    if (x.norm2() < 1e-8) continue;
    Tape tape;
    const Tensor& y = tape.value(tape.l2_normalize(tape.constant(x)));
    CHECK(std::abs(y.norm2() - 1.0) <= 1e-9);
  }
}

TEST_CASE("shape mismatches are rejected with the offending shapes named") {
  Tape tape;
  const NodeId a = tape.constant(Tensor::matrix(2, 3, {1, 2, 3, 4, 5, 6}));
  const NodeId b = tape.constant(Tensor::vector({1.0, 2.0}));
  CHECK_THROWS_WITH_AS(tape.matmul(a, b), doctest::Contains("[2x3]"), std::invalid_argument);
  CHECK_THROWS_AS(tape.add(a, b), std::invalid_argument);
}

TEST_CASE("log of non-positive input is rejected") {
  Tape tape;
  CHECK_THROWS_AS(tape.log(tape.constant(Tensor::vector({1.0, 0.0}))), NumericError);
  CHECK_THROWS_AS(tape.log(tape.constant(Tensor::vector({-1.0}))), NumericError);
}

TEST_CASE("l2-normalize of a near-zero vector is rejected") {
  Tape tape;
  CHECK_THROWS_AS(tape.l2_normalize(tape.constant(Tensor::vector({0.0, 0.0}))), NumericError);
}

TEST_CASE("backward rejects a non-scalar root") {
  Tape tape;
  Tensor x = Tensor::vector({1.0, 2.0});
  x.requires_grad = true;
  const NodeId leaf = tape.leaf(x);
  CHECK_THROWS_AS(tape.backward(leaf), std::invalid_argument);
}

TEST_CASE("gradients of unreachable leaves are zero") {
  Tape tape;
  Tensor x = Tensor::vector({1.0});
  Tensor y = Tensor::vector({2.0});
  x.requires_grad = true;
  y.requires_grad = true;
  const NodeId lx = tape.leaf(x);
  const NodeId ly = tape.leaf(y);
  const NodeId root = tape.sum(tape.mul(lx, lx));
  const auto grads = tape.backward(root);
  CHECK(grads.at(ly).values[0] == 0.0);
  CHECK(grads.at(lx).values[0] == doctest::Approx(2.0));
}

TEST_CASE("two backward passes over the same tape are bit-identical") {
  std::mt19937_64 rng(3);
  Tape tape;
  Tensor x = rand_vec(12, rng);
  x.requires_grad = true;
  const NodeId leaf = tape.leaf(x);
  const NodeId root = tape.sum(tape.mul(tape.tanh(leaf), leaf));
  const auto g1 = tape.backward(root);
  const auto g2 = tape.backward(root);
  REQUIRE(g1.size() == g2.size());
  for (const auto& [id, gt] : g1) {
    const Tensor& other = g2.at(id);
    for (std::size_t i = 0; i < gt.values.size(); ++i) CHECK(gt.values[i] == other.values[i]);
  }
}

TEST_CASE("non-finite forward values are rejected") {
  Tape tape;
  const NodeId big = tape.constant(Tensor::vector({1e308, 1e308}));
  CHECK_THROWS_AS(tape.exp(big), NumericError);
}
