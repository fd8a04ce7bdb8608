#pragma once

#include <random>
#include <span>
#include <vector>

#include "bicl/params.hpp"
#include "bicl/tape.hpp"

namespace bicl {

/// Session-count predictor: self-attention pool over the utterance
/// representations, two feed-forward layers, softmax over the session counts
/// 1..max_sessions. The speaker and utterance counts enter as meta features
/// scaled by 1/kWindow.
struct KPredictorConfig {
  int input_dim = 350;     // representation dimension (hidden_dim + kWindow)
  int hidden_dim = 128;
  int attention_dim = 128;
  int max_sessions = 14;   // M: number of classes
  bool outer_relu = true;  // activation on the logits before softmax
};

struct KDistribution {
  std::vector<double> probabilities;  // index k-1 holds P(K = k)

  int max_sessions() const { return static_cast<int>(probabilities.size()); }
  void validate() const;
};

void init_kpredictor_params(ParamStore& store, const KPredictorConfig& config, std::mt19937_64& rng);

/// Raw logit vector q of length max_sessions, on the tape.
NodeId k_logits(Tape& tape, const BoundParams& params, std::span<const NodeId> representations, int speaker_count,
                int utterance_count, const KPredictorConfig& config);

/// softmax(q) read off the tape.
KDistribution distribution_from_logits(Tape& tape, NodeId logits);

/// Most likely K constrained to K <= n; ties break toward smaller K.
int predict_k(const KDistribution& distribution, int utterance_count);

/// -log P(K = gold_k) as a plain value.
double k_loss(const KDistribution& distribution, int gold_k);

/// -log softmax(q)[gold_k-1] on the tape, for training.
NodeId k_loss_node(Tape& tape, NodeId logits, int gold_k);

}  // namespace bicl
