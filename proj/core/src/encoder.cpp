#include "bicl/encoder.hpp"

#include <stdexcept>

namespace bicl {

namespace {

void init_lstm(ParamStore& store, const std::string& prefix, int input_dim, int hidden_dim, std::mt19937_64& rng) {
  for (const char* gate : {"i", "f", "g", "o"}) {
    store.insert(prefix + ".w" + gate, init_uniform({hidden_dim, input_dim}, input_dim, rng));
    store.insert(prefix + ".u" + gate, init_uniform({hidden_dim, hidden_dim}, hidden_dim, rng));
    Tensor bias = Tensor::zeros({hidden_dim});
    if (gate[0] == 'f') std::fill(bias.values.begin(), bias.values.end(), 1.0);
    store.insert(prefix + ".b" + gate, bias);
  }
}

struct LstmGates {
  NodeId wi, ui, bi, wf, uf, bf, wg, ug, bg, wo, uo, bo;
};

LstmGates gates_for(const BoundParams& params, const std::string& prefix) {
  auto get = [&](const std::string& suffix) {
    auto it = params.find(prefix + suffix);
    if (it == params.end()) throw std::invalid_argument("missing LSTM parameter '" + prefix + suffix + "'");
    return it->second;
  };
  return {get(".wi"), get(".ui"), get(".bi"), get(".wf"), get(".uf"), get(".bf"),
          get(".wg"), get(".ug"), get(".bg"), get(".wo"), get(".uo"), get(".bo")};
}

NodeId bound_at(const BoundParams& params, const std::string& name) {
  auto it = params.find(name);
  if (it == params.end()) throw std::invalid_argument("missing parameter '" + name + "'");
  return it->second;
}

}  // namespace

void init_encoder_params(ParamStore& store, const EncoderConfig& config, std::mt19937_64& rng) {
  if (config.embedding_dim < 1 || config.hidden_dim < 1 || config.attention_dim < 1)
    throw std::invalid_argument("encoder dimensions must be positive");
  init_lstm(store, "enc.tok.fwd", config.embedding_dim, config.hidden_dim, rng);
  init_lstm(store, "enc.tok.bwd", config.embedding_dim, config.hidden_dim, rng);
  store.insert("enc.merge.w", init_uniform({config.hidden_dim, 2 * config.hidden_dim}, 2 * config.hidden_dim, rng));
  store.insert("enc.merge.b", Tensor::zeros({config.hidden_dim}));
  store.insert("enc.tok_attn.w", init_uniform({config.attention_dim, config.hidden_dim}, config.hidden_dim, rng));
  store.insert("enc.tok_attn.v", init_uniform({config.attention_dim}, config.attention_dim, rng));
  init_lstm(store, "enc.ctx.fwd", config.hidden_dim, config.hidden_dim, rng);
  init_lstm(store, "enc.ctx.bwd", config.hidden_dim, config.hidden_dim, rng);
  store.insert("enc.proj.w", init_uniform({config.hidden_dim, 2 * config.hidden_dim}, 2 * config.hidden_dim, rng));
  store.insert("enc.proj.b", Tensor::zeros({config.hidden_dim}));
}

std::vector<NodeId> lstm_sequence(Tape& tape, const BoundParams& params, const std::string& prefix,
                                  std::span<const NodeId> inputs, bool reversed) {
  if (inputs.empty()) throw std::invalid_argument("lstm_sequence needs a non-empty input sequence");
  const LstmGates g = gates_for(params, prefix);
  const int hidden = tape.value(g.bi).shape[0];

  NodeId h = tape.constant(Tensor::zeros({hidden}));
  NodeId c = tape.constant(Tensor::zeros({hidden}));
  std::vector<NodeId> states(inputs.size());
  for (std::size_t step = 0; step < inputs.size(); ++step) {
    const std::size_t t = reversed ? inputs.size() - 1 - step : step;
    const NodeId x = inputs[t];
    auto gate = [&](NodeId w, NodeId u, NodeId b) {
      return tape.add(tape.add(tape.matmul(w, x), tape.matmul(u, h)), b);
    };
    const NodeId in_gate = tape.sigmoid(gate(g.wi, g.ui, g.bi));
    const NodeId forget_gate = tape.sigmoid(gate(g.wf, g.uf, g.bf));
    const NodeId cell_candidate = tape.tanh(gate(g.wg, g.ug, g.bg));
    const NodeId out_gate = tape.sigmoid(gate(g.wo, g.uo, g.bo));
    c = tape.add(tape.mul(forget_gate, c), tape.mul(in_gate, cell_candidate));
    h = tape.mul(out_gate, tape.tanh(c));
    states[t] = h;
  }
  return states;
}

NodeId attention_pool(Tape& tape, NodeId w_attn, NodeId v_attn, std::span<const NodeId> states,
                      std::vector<double>* weights_out) {
  if (states.empty()) throw std::invalid_argument("attention_pool needs a non-empty sequence");
  std::vector<NodeId> scores(states.size());
  for (std::size_t t = 0; t < states.size(); ++t)
    scores[t] = tape.dot(v_attn, tape.tanh(tape.matmul(w_attn, states[t])));
  const NodeId weights = tape.softmax(tape.concat(scores));
  if (weights_out) *weights_out = tape.value(weights).values;
  NodeId pooled = tape.scale_by(states[0], pick(tape, weights, 0));
  for (std::size_t t = 1; t < states.size(); ++t)
    pooled = tape.add(pooled, tape.scale_by(states[t], pick(tape, weights, static_cast<int>(t))));
  return pooled;
}

NodeId encode_utterance(Tape& tape, const BoundParams& params, const std::vector<std::string>& tokens,
                        const EmbeddingTable& table, const EncoderConfig& config) {
  if (tokens.empty()) throw std::invalid_argument("encode_utterance: empty token list");
  if (static_cast<int>(tokens.size()) > kWindow)
    throw std::invalid_argument("encode_utterance: more than " + std::to_string(kWindow) + " tokens");
  if (table.dimension() != config.embedding_dim)
    throw std::invalid_argument("embedding table dimension " + std::to_string(table.dimension()) +
                                " does not match encoder embedding_dim " + std::to_string(config.embedding_dim));

  std::vector<NodeId> embeddings(tokens.size());
  for (std::size_t t = 0; t < tokens.size(); ++t)
    embeddings[t] = tape.constant(Tensor::vector(table.lookup(tokens[t])));

  const std::vector<NodeId> fwd = lstm_sequence(tape, params, "enc.tok.fwd", embeddings, false);
  const std::vector<NodeId> bwd = lstm_sequence(tape, params, "enc.tok.bwd", embeddings, true);

  const NodeId merge_w = bound_at(params, "enc.merge.w");
  const NodeId merge_b = bound_at(params, "enc.merge.b");
  std::vector<NodeId> merged(tokens.size());
  for (std::size_t t = 0; t < tokens.size(); ++t) {
    const NodeId both = tape.apply(OpKind::concat, {fwd[t], bwd[t]});
    merged[t] = tape.relu(tape.add(tape.matmul(merge_w, both), merge_b));
  }
  return attention_pool(tape, bound_at(params, "enc.tok_attn.w"), bound_at(params, "enc.tok_attn.v"), merged);
}

std::vector<NodeId> encode_context(Tape& tape, const BoundParams& params, std::span<const NodeId> utterance_vectors) {
  if (utterance_vectors.empty()) throw std::invalid_argument("encode_context needs a non-empty sequence");
  const std::vector<NodeId> fwd = lstm_sequence(tape, params, "enc.ctx.fwd", utterance_vectors, false);
  const std::vector<NodeId> bwd = lstm_sequence(tape, params, "enc.ctx.bwd", utterance_vectors, true);
  const NodeId proj_w = bound_at(params, "enc.proj.w");
  const NodeId proj_b = bound_at(params, "enc.proj.b");
  std::vector<NodeId> contextual(utterance_vectors.size());
  for (std::size_t i = 0; i < utterance_vectors.size(); ++i) {
    const NodeId both = tape.apply(OpKind::concat, {fwd[i], bwd[i]});
    contextual[i] = tape.add(tape.matmul(proj_w, both), proj_b);
  }
  return contextual;
}

std::vector<NodeId> represent(Tape& tape, const BoundParams& params, const Conversation& conversation,
                              const EmbeddingTable& table, const EncoderConfig& config) {
  const int n = conversation.size();
  if (n == 0) throw std::invalid_argument("represent: empty conversation '" + conversation.id + "'");
  if (n > kWindow)
    throw std::invalid_argument("represent: conversation '" + conversation.id + "' has " + std::to_string(n) +
                                " utterances; segment to " + std::to_string(kWindow) + " first");

  std::vector<NodeId> utterance_vectors(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const Utterance& u = conversation.utterances[static_cast<std::size_t>(i)];
    const std::vector<std::string> tokens = u.tokens.empty() ? tokenize(u.text) : u.tokens;
    utterance_vectors[static_cast<std::size_t>(i)] = encode_utterance(tape, params, tokens, table, config);
  }
  const std::vector<NodeId> contextual = encode_context(tape, params, utterance_vectors);

  std::vector<NodeId> out(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const NodeId mention = tape.constant(Tensor::vector(build_mention_vector(conversation, i)));
    out[static_cast<std::size_t>(i)] =
        tape.l2_normalize(tape.apply(OpKind::concat, {contextual[static_cast<std::size_t>(i)], mention}));
  }
  return out;
}

}  // namespace bicl
