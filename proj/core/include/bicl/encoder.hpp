#pragma once

#include <random>
#include <span>
#include <string>
#include <vector>

#include "bicl/corpus.hpp"
#include "bicl/embedding.hpp"
#include "bicl/params.hpp"
#include "bicl/tape.hpp"

namespace bicl {

/// Shape hyperparameters of the hierarchical encoder. The final utterance
/// representation has hidden_dim + kWindow components (contextual vector
/// concatenated with the mention vector) and unit norm.
struct EncoderConfig {
  int embedding_dim = 300;
  int hidden_dim = 300;
  int attention_dim = 128;

  int representation_dim() const { return hidden_dim + kWindow; }
};

/// Creates every encoder parameter under the "enc." prefix: token-level
/// BiLSTM, the ReLU merge of the two directions, the utterance self-attention
/// pool, the context-level BiLSTM and its linear output projection.
/// Initialization is uniform in [-1/sqrt(fan_in), +1/sqrt(fan_in)] with
/// forget-gate biases at 1.
void init_encoder_params(ParamStore& store, const EncoderConfig& config, std::mt19937_64& rng);

/// One LSTM direction over a sequence; returns the hidden state per step (in
/// input order even when run reversed). Parameter names are taken from
/// `prefix` + {.wi,.ui,.bi,.wf,.uf,.bf,.wg,.ug,.bg,.wo,.uo,.bo}.
std::vector<NodeId> lstm_sequence(Tape& tape, const BoundParams& params, const std::string& prefix,
                                  std::span<const NodeId> inputs, bool reversed);

/// Single-hop additive self-attention pool: softmax over w_v . tanh(W_a h_t)
/// scores, output is the weighted sum of the states. `weights_out`, when
/// given, receives the attention weights.
NodeId attention_pool(Tape& tape, NodeId w_attn, NodeId v_attn, std::span<const NodeId> states,
                      std::vector<double>* weights_out = nullptr);

/// Token embeddings -> BiLSTM -> ReLU merge -> self-attention pool.
/// Output is the hidden_dim utterance vector.
NodeId encode_utterance(Tape& tape, const BoundParams& params, const std::vector<std::string>& tokens,
                        const EmbeddingTable& table, const EncoderConfig& config);

/// Context-level BiLSTM over the utterance vectors followed by a linear
/// projection back to hidden_dim. Every output depends on the whole sequence.
std::vector<NodeId> encode_context(Tape& tape, const BoundParams& params, std::span<const NodeId> utterance_vectors);

/// Full path: per-utterance encoding, context encoding, mention-vector
/// concatenation, l2 normalization. One node per utterance.
std::vector<NodeId> represent(Tape& tape, const BoundParams& params, const Conversation& conversation,
                              const EmbeddingTable& table, const EncoderConfig& config);

}  // namespace bicl
