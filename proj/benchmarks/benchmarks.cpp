#include <benchmark/benchmark.h>

#include "bicl/clustering.hpp"
#include "bicl/encoder.hpp"
#include "bicl/losses.hpp"
#include "bicl/rng.hpp"
#include "bicl/synthetic.hpp"
#include "bicl/trainer.hpp"

using namespace bicl;

namespace {

std::vector<Point> random_points(int n, int dim, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<Point> pts(static_cast<std::size_t>(n), Point(static_cast<std::size_t>(dim)));
  for (auto& p : pts)
    for (double& v : p) v = uniform_real(rng, -1.0, 1.0);
  return pts;
}

TrainConfig bench_config() {
  TrainConfig c;
  c.embedding_dim = 24;
  c.hidden_dim = 24;
  c.attention_dim = 16;
  c.k_hidden = 32;
  c.max_sessions = 6;
  c.seed = 3;
  return c;
}

const Conversation& bench_conversation() {
  static const Conversation conv = [] {
    SyntheticSpec spec;
    spec.num_conversations = 1;
    spec.sessions_min = spec.sessions_max = 4;
    spec.session_length_min = spec.session_length_max = 10;
    return generate_synthetic(spec, 21)[0];
  }();
  return conv;
}

void KMeans(benchmark::State& state) {
  const auto pts = random_points(static_cast<int>(state.range(0)), 74, 5);
  for (auto _ : state) {
    benchmark::DoNotOptimize(kmeans(pts, 4, 9));
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(KMeans)->RangeMultiplier(2)->Range(8, 64)->Complexity();

void Hungarian(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  std::mt19937_64 rng(4);
  std::vector<std::vector<double>> cost(static_cast<std::size_t>(n), std::vector<double>(static_cast<std::size_t>(n)));
  for (auto& row : cost)
    for (double& v : row) v = uniform_real(rng, 0.0, 10.0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(hungarian(cost));
  }
}
BENCHMARK(Hungarian)->DenseRange(4, 14, 5);

void EncoderForward(benchmark::State& state) {
  const TrainConfig cfg = bench_config();
  const EmbeddingTable table(cfg.embedding_dim, 1);
  const Checkpoint ckpt = init_checkpoint(cfg, table);
  const Conversation& conv = bench_conversation();
  for (auto _ : state) {
    Tape tape;
    const BoundParams bound = ckpt.params.bind(tape, false);
    benchmark::DoNotOptimize(represent(tape, bound, conv, ckpt.table, cfg.encoder_config()));
  }
}
BENCHMARK(EncoderForward);

void UtteranceLossForwardBackward(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  std::mt19937_64 rng(6);
  std::vector<Tensor> reps;
  for (int i = 0; i < n; ++i) {
    Tensor t = Tensor::zeros({74});
    for (double& v : t.values) v = uniform_real(rng, -1.0, 1.0);
    const double norm = t.norm2();
    for (double& v : t.values) v /= norm;
    t.requires_grad = true;
    reps.push_back(std::move(t));
  }
  std::vector<int> labels(static_cast<std::size_t>(n));
  for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = static_cast<int>(i % 4);
  for (auto _ : state) {
    Tape tape;
    std::vector<NodeId> v;
    for (const Tensor& t : reps) v.push_back(tape.leaf(t));
    const NodeId loss = utterance_contrastive(tape, v, labels, 0.5, 64, 13);
    benchmark::DoNotOptimize(tape.backward(loss));
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(UtteranceLossForwardBackward)->RangeMultiplier(2)->Range(8, 64)->Complexity();

}  // namespace

BENCHMARK_MAIN();
