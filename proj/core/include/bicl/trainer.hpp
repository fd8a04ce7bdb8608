#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "bicl/corpus.hpp"
#include "bicl/embedding.hpp"
#include "bicl/encoder.hpp"
#include "bicl/kpredictor.hpp"
#include "bicl/losses.hpp"
#include "bicl/metrics.hpp"
#include "bicl/params.hpp"

namespace bicl {

enum class TrainMode { supervised, unsupervised };
enum class KSelector { predictor, elbow, silhouette, gold };

std::string to_string(TrainMode mode);
std::string to_string(KSelector selector);
TrainMode train_mode_from_string(const std::string& s);
KSelector k_selector_from_string(const std::string& s);

struct TrainConfig {
  TrainMode mode = TrainMode::supervised;

  // objective weights and temperatures
  double alpha = 0.4;
  double beta = 0.4;
  double gamma = 0.2;
  double eta = 0.4;
  double tau1 = 0.5;
  double tau2 = 0.5;
  double tau1_prime = 0.5;
  double tau2_prime = 0.1;

  // optimization
  double learning_rate = 5e-5;
  int batch_size = 16;
  int epochs = 10;
  int negative_cap = 64;
  double clip_norm = 0.0;  // 0 disables gradient clipping

  // model shape
  int max_sessions = 14;  // M, the number of K-predictor classes
  int embedding_dim = 300;
  int hidden_dim = 300;
  int attention_dim = 128;
  int k_hidden = 128;
  bool k_outer_relu = true;

  // unsupervised EM
  std::vector<int> em_kset = {2, 3, 4, 5};
  int recluster_every = 1;           // epochs between E steps
  bool drop_utterance_loss = false;  // ablation: train on eta * L'_s only

  std::uint64_t seed = 0;
  KSelector k_selector = KSelector::predictor;

  void validate() const;
  EncoderConfig encoder_config() const;
  KPredictorConfig kpredictor_config() const;

  static TrainConfig from_kv(const std::map<std::string, std::string>& kv);
  std::map<std::string, std::string> to_kv() const;
};

struct AdamState {
  std::map<std::string, Tensor> m;
  std::map<std::string, Tensor> v;
  long step = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct Checkpoint {
  TrainConfig config;
  ParamStore params;
  AdamState adam;
  EmbeddingTable table;
  int epoch = 0;
  std::string rng_state;
};

struct StepLog {
  int epoch = 0;
  int step = 0;
  LossBreakdown losses;
};

struct TrainResult {
  Checkpoint checkpoint;
  std::vector<StepLog> log;
};

/// Bias-corrected Adam update over every parameter; `grads` must carry one
/// finite tensor per parameter name.
void adam_step(ParamStore& params, const std::map<std::string, Tensor>& grads, AdamState& state, double learning_rate,
               double clip_norm = 0.0);

/// Fresh parameters for the given config, before any training.
Checkpoint init_checkpoint(const TrainConfig& config, EmbeddingTable table);

/// Minimizes L_u + alpha L_s + beta L_k + gamma L_m over length-capped
/// segments of the corpus. Every conversation must carry gold session ids.
TrainResult train_supervised(const std::vector<Conversation>& corpus, EmbeddingTable table, const TrainConfig& config);

/// EM loop: each E step freezes per-conversation k-means clusterings for
/// every k in em_kset; M steps minimize L'_u + eta L'_s against the frozen
/// targets.
TrainResult train_unsupervised(const std::vector<Conversation>& corpus, EmbeddingTable table,
                               const TrainConfig& config);

struct DisentangleResult {
  Partition partition;
  int k = 1;
};

/// Encode, choose K (predictor / elbow / silhouette / gold), k-means into K
/// sessions. The conversation must fit one window; segment longer ones first.
DisentangleResult disentangle(const Conversation& conversation, const Checkpoint& checkpoint, KSelector selector);

struct ConversationEval {
  std::string id;
  int size = 0;
  int gold_k = 0;
  int predicted_k = 0;
  double nmi = 0.0;
  double ari = 0.0;
  double shen_f = 0.0;
};

struct EvalReport {
  std::string method = "macro";  // averaging convention
  double nmi = 0.0;
  double ari = 0.0;
  double shen_f = 0.0;
  double k_acc = 0.0;
  double k_mae = 0.0;
  KSelector k_selector = KSelector::gold;
  std::vector<ConversationEval> per_conversation;
};

/// Disentangles every segment of a gold-labeled corpus and macro-averages
/// NMI/ARI/Shen-F plus the K-prediction report.
EvalReport evaluate(const std::vector<Conversation>& corpus, const Checkpoint& checkpoint, KSelector selector);

}  // namespace bicl
