#include "bicl/gradcheck_suite.hpp"

#include <algorithm>
#include <cmath>

#include "bicl/clustering.hpp"
#include "bicl/corpus.hpp"
#include "bicl/embedding.hpp"
#include "bicl/encoder.hpp"
#include "bicl/kpredictor.hpp"
#include "bicl/losses.hpp"
#include "bicl/rng.hpp"
#include "bicl/tape.hpp"
#include "bicl/trainer.hpp"

namespace bicl {

namespace {

constexpr double kEps = 1e-5;
// Deep-path probes need a higher-order stencil: the smallest path gradients
// sit near 1e-8, where two-point central differences at any usable step are
// all quantization noise.
constexpr double kEpsPath = 3e-3;

Tensor random_tensor(const std::vector<int>& shape, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  Tensor t = Tensor::zeros(shape);
  for (double& v : t.values) v = uniform_real(rng, lo, hi);
  return t;
}

/// Random values bounded away from zero, for kinked or domain-limited ops.
Tensor random_offset_tensor(const std::vector<int>& shape, std::mt19937_64& rng, double lo, double hi) {
  Tensor t = Tensor::zeros(shape);
  for (double& v : t.values) {
    const double mag = uniform_real(rng, lo, hi);
    v = uniform01(rng) < 0.5 ? -mag : mag;
  }
  return t;
}

/// Constant selector matrix extracting block `i` of width `d` from a flat
/// vector of n*d entries; lets one leaf stand for several representation
/// vectors.
Tensor block_selector(int i, int d, int n) {
  Tensor s = Tensor::zeros({d, n * d});
  for (int r = 0; r < d; ++r) s.values[static_cast<std::size_t>(r) * (n * d) + i * d + r] = 1.0;
  return s;
}

std::vector<NodeId> unit_blocks(Tape& tape, NodeId flat, int n, int d) {
  std::vector<NodeId> v;
  v.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i)
    v.push_back(tape.l2_normalize(tape.matmul(tape.constant(block_selector(i, d, n)), flat)));
  return v;
}

double max_over_trials(int trials, const std::function<double(std::mt19937_64&)>& one, std::mt19937_64& rng) {
  double worst = 0.0;
  for (int t = 0; t < trials; ++t) worst = std::max(worst, one(rng));
  return worst;
}

/// Checks each coordinate with two central schemes and keeps the better one:
/// the two-point probe at a tiny step is blind to gradients near 1e-8 (pure
/// quantization noise) and the wide fourth-order stencil can straddle a ReLU
/// kink, but a genuinely wrong derivative fails both.
double path_grad_check(const ScalarFn& fn, const Tensor& point, double eps_small, double eps_wide) {
  Tensor p = point;
  p.requires_grad = true;
  Tape tape;
  const NodeId x = tape.leaf(p);
  const NodeId y = fn(tape, x);
  const Tensor analytic = tape.backward(y).at(x);

  auto eval = [&](const Tensor& at) {
    Tensor t = at;
    t.requires_grad = false;
    Tape fresh;
    return fresh.value(fn(fresh, fresh.leaf(std::move(t)))).item();
  };
  auto rel_to = [](double fd, double a) {
    return std::abs(fd - a) / std::max({std::abs(fd), std::abs(a), 1e-8});
  };

  double max_rel = 0.0;
  for (std::size_t i = 0; i < point.values.size(); ++i) {
    const double a = analytic.values[i];
    auto probe = [&](double offset) {
      Tensor t = point;
      t.values[i] += offset;
      return eval(t);
    };
    const double two_point = (probe(eps_small) - probe(-eps_small)) / (2.0 * eps_small);
    double rel = rel_to(two_point, a);
    if (rel >= 0.1 * kGradCheckTolerance) {
      const double stencil = (probe(-2 * eps_wide) - 8.0 * probe(-eps_wide) + 8.0 * probe(eps_wide) -
                              probe(2 * eps_wide)) /
                             (12.0 * eps_wide);
      rel = std::min(rel, rel_to(stencil, a));
    }
    if (rel >= kGradCheckTolerance) {
      // kink-adjacent coordinate: shrink the straddle further
      const double fine = (probe(eps_small / 10) - probe(-eps_small / 10)) / (0.2 * eps_small);
      rel = std::min(rel, rel_to(fine, a));
    }
    max_rel = std::max(max_rel, rel);
  }
  return max_rel;
}

struct PathFixture {
  TrainConfig config;
  EmbeddingTable table{10, 7};
  Conversation conversation;
  std::vector<int> labels{0, 0, 1};
  std::vector<Tensor> frozen_centroids;
  std::map<int, int> frozen_matching;
  ParamStore params;

  PathFixture(std::uint64_t seed) {
    config.embedding_dim = 10;
    config.hidden_dim = 8;
    config.attention_dim = 4;
    config.k_hidden = 6;
    config.max_sessions = 4;
    config.seed = seed;

    conversation.id = "gradcheck";
    const char* speakers[] = {"ana", "bo", "ana"};
    const char* texts[] = {"tilo ema", "riva dun ola", "tilo bo"};
    for (int i = 0; i < 3; ++i) {
      Utterance u;
      u.index = i;
      u.speaker = speakers[i];
      u.text = texts[i];
      u.tokens = tokenize(u.text);
      u.session_id = labels[static_cast<std::size_t>(i)];
      conversation.utterances.push_back(std::move(u));
    }

    std::mt19937_64 rng(hash_mix(seed));
    init_encoder_params(params, config.encoder_config(), rng);
    init_kpredictor_params(params, config.kpredictor_config(), rng);

    // Probe at O(1) signal levels: with the tiny default init and fallback
    // embeddings the deep gradients sit below what central differences can
    // resolve, so the comparison would measure floating-point noise instead
    // of the backward pass.
    for (const char* word : {"tilo", "ema", "riva", "dun", "ola", "bo"})
      table.insert(word, random_tensor({10}, rng).values);
    for (auto& [name, tensor] : params.all()) {
      for (double& x : tensor.values) x = uniform_real(rng, -0.6, 0.6);
    }

    // Freeze k-means targets at the unperturbed parameters, mirroring the
    // E/M split used in training.
    Tape tape;
    const BoundParams bound = params.bind(tape, false);
    const std::vector<NodeId> v = represent(tape, bound, conversation, table, config.encoder_config());
    std::vector<Point> points;
    for (NodeId node : v) points.push_back(tape.value(node).values);
    const Clustering km = kmeans(points, 2, hash_combine(seed, 77));
    for (const Point& c : km.centroids) {
      Point unit = c;
      double norm = 0.0;
      for (double x : unit) norm += x * x;
      norm = std::sqrt(norm);
      for (double& x : unit) x /= norm;
      frozen_centroids.push_back(Tensor::vector(unit));
    }
    frozen_matching = {{0, 0}, {1, 1}};
  }

  /// Full objective with every parameter constant except `target`, whose
  /// value is taken from the grad_check probe point.
  ScalarFn objective_for(const std::string& target) const {
    return [this, target](Tape& tape, NodeId leaf) {
      BoundParams bound;
      for (const auto& [name, tensor] : params.all()) {
        if (name == target) {
          bound.emplace(name, leaf);
        } else {
          Tensor t = tensor;
          t.requires_grad = false;
          bound.emplace(name, tape.leaf(std::move(t)));
        }
      }
      const std::vector<NodeId> v = represent(tape, bound, conversation, table, config.encoder_config());
      const NodeId l_u = utterance_contrastive(tape, v, labels, 0.5, 64, 11);
      const SessionPrototypes protos = session_prototypes(tape, v, labels);
      const NodeId l_s = session_contrastive(tape, v, protos, labels, 0.5);
      const NodeId l_m = centroid_matching(tape, protos, frozen_centroids, frozen_matching);
      const NodeId logits = k_logits(tape, bound, v, conversation.speaker_count(), conversation.size(),
                                     config.kpredictor_config());
      const NodeId l_k = k_loss_node(tape, logits, 2);
      NodeId total = tape.add(l_u, tape.scale(l_s, 0.4));
      total = tape.add(total, tape.scale(l_k, 0.4));
      total = tape.add(total, tape.scale(l_m, 0.2));
      return total;
    };
  }
};

}  // namespace

std::vector<GradCheckEntry> run_gradient_checks(std::uint64_t seed) {
  std::mt19937_64 rng(hash_mix(seed));
  std::vector<GradCheckEntry> entries;
  auto entry = [&entries](std::string name, double err) { entries.push_back({std::move(name), err}); };

  // ---- primitives ----
  entry("matmul (left)", max_over_trials(5, [](std::mt19937_64& r) {
          const Tensor c = random_tensor({3, 2}, r);
          return grad_check([&](Tape& t, NodeId x) { return t.sum(t.matmul(x, t.constant(c))); },
                            random_tensor({2, 3}, r), kEps);
        }, rng));
  entry("matmul (right)", max_over_trials(5, [](std::mt19937_64& r) {
          const Tensor c = random_tensor({2, 3}, r);
          return grad_check([&](Tape& t, NodeId x) { return t.sum(t.matmul(t.constant(c), x)); },
                            random_tensor({3, 2}, r), kEps);
        }, rng));
  entry("matmul (vector)", max_over_trials(5, [](std::mt19937_64& r) {
          const Tensor c = random_tensor({2, 3}, r);
          return grad_check([&](Tape& t, NodeId x) { return t.sum(t.matmul(t.constant(c), x)); },
                            random_tensor({3}, r), kEps);
        }, rng));
  entry("add", max_over_trials(5, [](std::mt19937_64& r) {
          const Tensor c = random_tensor({4}, r), w = random_tensor({4}, r);
          return grad_check([&](Tape& t, NodeId x) { return t.dot(t.add(x, t.constant(c)), t.constant(w)); },
                            random_tensor({4}, r), kEps);
        }, rng));
  entry("sub", max_over_trials(5, [](std::mt19937_64& r) {
          const Tensor c = random_tensor({4}, r), w = random_tensor({4}, r);
          return grad_check([&](Tape& t, NodeId x) { return t.dot(t.sub(t.constant(c), x), t.constant(w)); },
                            random_tensor({4}, r), kEps);
        }, rng));
  entry("elementwise-mul", max_over_trials(5, [](std::mt19937_64& r) {
          const Tensor w = random_tensor({4}, r);
          return grad_check([&](Tape& t, NodeId x) { return t.sum(t.mul(x, t.mul(x, t.constant(w)))); },
                            random_tensor({4}, r), kEps);
        }, rng));
  entry("concat", max_over_trials(5, [](std::mt19937_64& r) {
          const Tensor c = random_tensor({3}, r), w = random_tensor({7}, r);
          return grad_check(
              [&](Tape& t, NodeId x) { return t.dot(t.apply(OpKind::concat, {x, t.constant(c)}), t.constant(w)); },
              random_tensor({4}, r), kEps);
        }, rng));
  entry("relu", max_over_trials(5, [](std::mt19937_64& r) {
          const Tensor w = random_tensor({6}, r);
          return grad_check([&](Tape& t, NodeId x) { return t.dot(t.relu(x), t.constant(w)); },
                            random_offset_tensor({6}, r, 0.2, 1.0), kEps);
        }, rng));
  entry("sigmoid", max_over_trials(5, [](std::mt19937_64& r) {
          const Tensor w = random_tensor({6}, r);
          return grad_check([&](Tape& t, NodeId x) { return t.dot(t.sigmoid(x), t.constant(w)); },
                            random_tensor({6}, r, -2.0, 2.0), kEps);
        }, rng));
  entry("tanh", max_over_trials(5, [](std::mt19937_64& r) {
          const Tensor w = random_tensor({6}, r);
          return grad_check([&](Tape& t, NodeId x) { return t.dot(t.tanh(x), t.constant(w)); },
                            random_tensor({6}, r, -2.0, 2.0), kEps);
        }, rng));
  entry("exp", max_over_trials(5, [](std::mt19937_64& r) {
          const Tensor w = random_tensor({6}, r);
          return grad_check([&](Tape& t, NodeId x) { return t.dot(t.exp(x), t.constant(w)); },
                            random_tensor({6}, r, -1.5, 1.5), kEps);
        }, rng));
  entry("log", max_over_trials(5, [](std::mt19937_64& r) {
          const Tensor w = random_tensor({6}, r);
          return grad_check([&](Tape& t, NodeId x) { return t.dot(t.log(x), t.constant(w)); },
                            random_tensor({6}, r, 0.5, 2.0), kEps);
        }, rng));
  entry("softmax", max_over_trials(5, [](std::mt19937_64& r) {
          const Tensor w = random_tensor({5}, r);
          return grad_check([&](Tape& t, NodeId x) { return t.dot(t.softmax(x), t.constant(w)); },
                            random_tensor({5}, r, -2.0, 2.0), kEps);
        }, rng));
  entry("mean", max_over_trials(5, [](std::mt19937_64& r) {
          return grad_check([&](Tape& t, NodeId x) { return t.mean(t.mul(x, x)); }, random_tensor({6}, r), kEps);
        }, rng));
  entry("sum", max_over_trials(5, [](std::mt19937_64& r) {
          const Tensor w = random_tensor({6}, r);
          return grad_check([&](Tape& t, NodeId x) { return t.sum(t.mul(x, t.constant(w))); },
                            random_tensor({6}, r), kEps);
        }, rng));
  entry("dot", max_over_trials(5, [](std::mt19937_64& r) {
          return grad_check([&](Tape& t, NodeId x) { return t.dot(x, x); }, random_tensor({6}, r), kEps);
        }, rng));
  entry("l2-normalize", max_over_trials(5, [](std::mt19937_64& r) {
          const Tensor w = random_tensor({6}, r);
          return grad_check([&](Tape& t, NodeId x) { return t.dot(t.l2_normalize(x), t.constant(w)); },
                            random_offset_tensor({6}, r, 0.3, 1.0), kEps);
        }, rng));
  entry("scalar-scale (constant)", max_over_trials(5, [](std::mt19937_64& r) {
          return grad_check([&](Tape& t, NodeId x) { return t.sum(t.scale(t.mul(x, x), 1.7)); },
                            random_tensor({6}, r), kEps);
        }, rng));
  entry("scalar-scale (node)", max_over_trials(5, [](std::mt19937_64& r) {
          const Tensor w = random_tensor({4}, r);
          return grad_check(
              [&](Tape& t, NodeId x) { return t.dot(t.scale_by(x, pick(t, x, 1)), t.constant(w)); },
              random_tensor({4}, r), kEps);
        }, rng));

  // ---- losses over representation blocks ----
  const int d = 6;
  entry("loss L_u", max_over_trials(3, [&](std::mt19937_64& r) {
          const std::vector<int> labels = {0, 0, 1, 1, 2};
          const int n = static_cast<int>(labels.size());
          return grad_check(
              [&](Tape& t, NodeId x) {
                return utterance_contrastive(t, unit_blocks(t, x, n, d), labels, 0.5, 64, 13);
              },
              random_offset_tensor({n * d}, r, 0.2, 1.0), kEps);
        }, rng));
  entry("loss L_u (capped negatives)", max_over_trials(3, [&](std::mt19937_64& r) {
          const std::vector<int> labels = {0, 0, 1, 1, 2, 2};
          const int n = static_cast<int>(labels.size());
          return grad_check(
              [&](Tape& t, NodeId x) {
                return utterance_contrastive(t, unit_blocks(t, x, n, d), labels, 0.5, 2, 13);
              },
              random_offset_tensor({n * d}, r, 0.2, 1.0), kEps);
        }, rng));
  entry("loss L_s", max_over_trials(3, [&](std::mt19937_64& r) {
          const std::vector<int> labels = {0, 0, 1, 1, 2};
          const int n = static_cast<int>(labels.size());
          return grad_check(
              [&](Tape& t, NodeId x) {
                const std::vector<NodeId> v = unit_blocks(t, x, n, d);
                return session_contrastive(t, v, session_prototypes(t, v, labels), labels, 0.5);
              },
              random_offset_tensor({n * d}, r, 0.2, 1.0), kEps);
        }, rng));
  entry("loss L_m", max_over_trials(3, [&](std::mt19937_64& r) {
          const std::vector<int> labels = {0, 0, 1, 1};
          const int n = static_cast<int>(labels.size());
          std::vector<Tensor> centroids;
          for (int c = 0; c < 2; ++c) {
            Tensor raw = random_tensor({d}, r);
            const double norm = raw.norm2();
            for (double& x : raw.values) x /= norm;
            centroids.push_back(std::move(raw));
          }
          const std::map<int, int> matching = {{0, 0}, {1, 1}};
          return grad_check(
              [&](Tape& t, NodeId x) {
                const std::vector<NodeId> v = unit_blocks(t, x, n, d);
                return centroid_matching(t, session_prototypes(t, v, labels), centroids, matching);
              },
              random_offset_tensor({n * d}, r, 0.2, 1.0), kEps);
        }, rng));
  entry("loss L_k (logits)", max_over_trials(3, [&](std::mt19937_64& r) {
          return grad_check([&](Tape& t, NodeId x) { return k_loss_node(t, x, 2); },
                            random_tensor({5}, r, -1.5, 1.5), kEps);
        }, rng));
  entry("loss L'_u", max_over_trials(3, [&](std::mt19937_64& r) {
          const int n = 6;
          const std::vector<std::vector<std::string>> speakers = {{"a", "a", "b"}, {"c", "c", "d"}};
          return grad_check(
              [&](Tape& t, NodeId x) {
                const std::vector<NodeId> v = unit_blocks(t, x, n, d);
                const std::vector<std::vector<NodeId>> by_conv = {{v[0], v[1], v[2]}, {v[3], v[4], v[5]}};
                return speaker_contrastive(t, by_conv, speakers, 0.5, 64, 17);
              },
              random_offset_tensor({n * d}, r, 0.2, 1.0), kEps);
        }, rng));
  entry("loss L'_s", max_over_trials(3, [&](std::mt19937_64& r) {
          const int n = 5;
          const Tensor point = random_offset_tensor({n * d}, r, 0.2, 1.0);
          // freeze clusterings at the probe point (E step)
          std::vector<FrozenClustering> clusterings;
          {
            Tape t;
            const NodeId x = t.leaf(point);
            std::vector<Point> points;
            for (NodeId node : unit_blocks(t, x, n, d)) points.push_back(t.value(node).values);
            for (int k : {2, 3}) {
              const Clustering km = kmeans(points, k, 23);
              FrozenClustering fc;
              fc.assignment = km.assignment;
              for (const Point& c : km.centroids) {
                Point unit = c;
                double norm = 0.0;
                for (double vv : unit) norm += vv * vv;
                norm = std::sqrt(norm);
                for (double& vv : unit) vv /= norm;
                fc.centroids.push_back(Tensor::vector(unit));
              }
              clusterings.push_back(std::move(fc));
            }
          }
          // temperature 0.5 here: at the production default 0.1 the saturated
          // softmax tails carry gradients below finite-difference resolution
          return grad_check(
              [&](Tape& t, NodeId x) {
                return prototypical_em_loss(t, unit_blocks(t, x, n, d), clusterings, 0.5);
              },
              point, kEps);
        }, rng));

  // ---- full model paths, one probe per parameter ----
  const PathFixture fixture(hash_combine(seed, 0xf1));
  double encoder_worst = 0.0, kpred_worst = 0.0;
  for (const auto& [name, tensor] : fixture.params.all()) {
    const double err = path_grad_check(fixture.objective_for(name), tensor, kEps, kEpsPath);
    if (name.rfind("kpred.", 0) == 0) {
      kpred_worst = std::max(kpred_worst, err);
    } else {
      encoder_worst = std::max(encoder_worst, err);
    }
  }
  entry("encoder path (all enc.* parameters)", encoder_worst);
  entry("k-predictor path (all kpred.* parameters)", kpred_worst);

  return entries;
}

}  // namespace bicl
