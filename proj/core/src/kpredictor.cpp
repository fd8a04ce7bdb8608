#include "bicl/kpredictor.hpp"

#include <cmath>
#include <stdexcept>

#include "bicl/corpus.hpp"
#include "bicl/encoder.hpp"
#include "bicl/errors.hpp"

namespace bicl {

void KDistribution::validate() const {
  if (probabilities.empty()) throw std::invalid_argument("empty K distribution");
  double sum = 0.0;
  for (double p : probabilities) {
    if (p < 0.0) throw NumericError("negative probability in K distribution");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-9)
    throw NumericError("K distribution sums to " + std::to_string(sum) + ", expected 1");
}

void init_kpredictor_params(ParamStore& store, const KPredictorConfig& config, std::mt19937_64& rng) {
  if (config.input_dim < 1 || config.hidden_dim < 1 || config.attention_dim < 1 || config.max_sessions < 1)
    throw std::invalid_argument("k-predictor dimensions must be positive");
  store.insert("kpred.attn.w", init_uniform({config.attention_dim, config.input_dim}, config.input_dim, rng));
  store.insert("kpred.attn.v", init_uniform({config.attention_dim}, config.attention_dim, rng));
  store.insert("kpred.w3", init_uniform({config.hidden_dim, config.input_dim + 2}, config.input_dim + 2, rng));
  store.insert("kpred.b3", Tensor::zeros({config.hidden_dim}));
  store.insert("kpred.w2", init_uniform({config.max_sessions, config.hidden_dim}, config.hidden_dim, rng));
  store.insert("kpred.b2", Tensor::zeros({config.max_sessions}));
}

NodeId k_logits(Tape& tape, const BoundParams& params, std::span<const NodeId> representations, int speaker_count,
                int utterance_count, const KPredictorConfig& config) {
  if (representations.empty()) throw std::invalid_argument("k_logits needs at least one representation");
  if (speaker_count < 1 || utterance_count < 1)
    throw std::invalid_argument("k_logits meta features must be positive");

  const NodeId pooled =
      attention_pool(tape, params.at("kpred.attn.w"), params.at("kpred.attn.v"), representations);
  const NodeId meta = tape.constant(Tensor::vector({static_cast<double>(speaker_count) / kWindow,
                                                    static_cast<double>(utterance_count) / kWindow}));
  const NodeId features = tape.apply(OpKind::concat, {pooled, meta});
  const NodeId hidden = tape.relu(tape.add(tape.matmul(params.at("kpred.w3"), features), params.at("kpred.b3")));
  NodeId logits = tape.add(tape.matmul(params.at("kpred.w2"), hidden), params.at("kpred.b2"));
  if (config.outer_relu) logits = tape.relu(logits);
  return logits;
}

KDistribution distribution_from_logits(Tape& tape, NodeId logits) {
  KDistribution d;
  d.probabilities = tape.value(tape.softmax(logits)).values;
  d.validate();
  return d;
}

int predict_k(const KDistribution& distribution, int utterance_count) {
  distribution.validate();
  const int limit = std::min(distribution.max_sessions(), std::max(1, utterance_count));
  int best = 1;
  double best_p = distribution.probabilities[0];
  for (int k = 2; k <= limit; ++k) {
    const double p = distribution.probabilities[static_cast<std::size_t>(k - 1)];
    if (p > best_p) {  // strict: ties stay at the smaller k
      best_p = p;
      best = k;
    }
  }
  return best;
}

double k_loss(const KDistribution& distribution, int gold_k) {
  distribution.validate();
  if (gold_k < 1 || gold_k > distribution.max_sessions())
    throw std::invalid_argument("gold K = " + std::to_string(gold_k) + " outside 1.." +
                                std::to_string(distribution.max_sessions()) +
                                "; raise max_sessions (M) to cover it");
  const double p = distribution.probabilities[static_cast<std::size_t>(gold_k - 1)];
  if (p <= 0.0) throw NumericError("gold class has zero probability");
  return -std::log(p);
}

NodeId k_loss_node(Tape& tape, NodeId logits, int gold_k) {
  const int m = tape.value(logits).shape.at(0);
  if (gold_k < 1 || gold_k > m)
    throw std::invalid_argument("gold K = " + std::to_string(gold_k) + " outside 1.." + std::to_string(m) +
                                "; raise max_sessions (M) to cover it");
  return tape.sub(log_sum_exp(tape, logits), pick(tape, logits, gold_k - 1));
}

}  // namespace bicl
