#include "bicl/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>
#include <stdexcept>

#include "bicl/clustering.hpp"
#include "bicl/errors.hpp"
#include "bicl/kvconfig.hpp"
#include "bicl/rng.hpp"

namespace bicl {

namespace {

constexpr double kTotalTolerance = 1e-10;

std::vector<Point> node_values(const Tape& tape, const std::vector<NodeId>& nodes) {
  std::vector<Point> out;
  out.reserve(nodes.size());
  for (NodeId n : nodes) out.push_back(tape.value(n).values);
  return out;
}

Point unit_normalized(Point p) {
  double norm = 0.0;
  for (double v : p) norm += v * v;
  norm = std::sqrt(norm);
  if (norm >= 1e-8) {
    for (double& v : p) v /= norm;
  }
  return p;
}

std::map<std::string, Tensor> gradients_by_name(const Tape& tape, const BoundParams& bound, NodeId root) {
  const std::map<NodeId, Tensor> raw = tape.backward(root);
  std::map<std::string, Tensor> grads;
  for (const auto& [name, node] : bound) grads.emplace(name, raw.at(node));
  return grads;
}

/// Contiguous batches over a shuffled index list. A trailing single-element
/// batch is merged into its predecessor so unsupervised steps always see at
/// least two conversations.
std::vector<std::vector<int>> make_batches(int count, int batch_size, std::mt19937_64& rng, bool merge_singletons) {
  std::vector<int> order(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) order[static_cast<std::size_t>(i)] = i;
  shuffle(order, rng);
  std::vector<std::vector<int>> batches;
  for (int start = 0; start < count; start += batch_size) {
    const int len = std::min(batch_size, count - start);
    batches.emplace_back(order.begin() + start, order.begin() + start + len);
  }
  if (merge_singletons && batches.size() >= 2 && batches.back().size() == 1) {
    batches[batches.size() - 2].push_back(batches.back()[0]);
    batches.pop_back();
  }
  return batches;
}

void check_total(double composed, double on_tape) {
  if (std::abs(composed - on_tape) > kTotalTolerance)
    throw NumericError("objective total drifted from its components: " + std::to_string(composed) + " vs " +
                       std::to_string(on_tape));
}

std::string rng_to_string(const std::mt19937_64& rng) {
  std::ostringstream os;
  os << rng;
  return os.str();
}

/// k-means centroids re-normalized to the unit sphere, matching the scale of
/// the session prototypes and utterance representations.
std::vector<Tensor> normalized_centroids(const Clustering& clustering) {
  std::vector<Tensor> out;
  out.reserve(clustering.centroids.size());
  for (const Point& c : clustering.centroids) out.push_back(Tensor::vector(unit_normalized(c)));
  return out;
}

int capped_k(int k, int n) { return std::min(k, n); }

}  // namespace

std::string to_string(TrainMode mode) { return mode == TrainMode::supervised ? "supervised" : "unsupervised"; }

std::string to_string(KSelector selector) {
  switch (selector) {
    case KSelector::predictor: return "predictor";
    case KSelector::elbow: return "elbow";
    case KSelector::silhouette: return "silhouette";
    case KSelector::gold: return "gold";
  }
  return "?";
}

TrainMode train_mode_from_string(const std::string& s) {
  if (s == "supervised") return TrainMode::supervised;
  if (s == "unsupervised") return TrainMode::unsupervised;
  throw std::invalid_argument("unknown mode '" + s + "' (expected supervised|unsupervised)");
}

KSelector k_selector_from_string(const std::string& s) {
  if (s == "predictor") return KSelector::predictor;
  if (s == "elbow") return KSelector::elbow;
  if (s == "silhouette") return KSelector::silhouette;
  if (s == "gold") return KSelector::gold;
  throw std::invalid_argument("unknown k-selector '" + s + "' (expected predictor|elbow|silhouette|gold)");
}

void TrainConfig::validate() const {
  auto positive = [](double v, const char* name) {
    if (!(v > 0.0)) throw std::invalid_argument(std::string(name) + " must be positive");
  };
  positive(tau1, "tau1");
  positive(tau2, "tau2");
  positive(tau1_prime, "tau1_prime");
  positive(tau2_prime, "tau2_prime");
  positive(learning_rate, "learning_rate");
  if (alpha < 0 || beta < 0 || gamma < 0 || eta < 0)
    throw std::invalid_argument("objective weights must be non-negative");
  if (batch_size < 1) throw std::invalid_argument("batch_size must be positive");
  if (mode == TrainMode::unsupervised && batch_size < 2)
    throw std::invalid_argument("unsupervised training needs batch_size >= 2 (cross-conversation negatives)");
  if (epochs < 1) throw std::invalid_argument("epochs must be positive");
  if (negative_cap < 1) throw std::invalid_argument("negative_cap must be positive");
  if (clip_norm < 0) throw std::invalid_argument("clip_norm must be non-negative");
  if (max_sessions < 1) throw std::invalid_argument("max_sessions must be positive");
  if (embedding_dim < 1 || hidden_dim < 1 || attention_dim < 1 || k_hidden < 1)
    throw std::invalid_argument("model dimensions must be positive");
  if (em_kset.empty()) throw std::invalid_argument("em_kset must be non-empty");
  for (int k : em_kset) {
    if (k < 1) throw std::invalid_argument("em_kset entries must be positive");
  }
  if (recluster_every < 1) throw std::invalid_argument("recluster_every must be positive");
}

EncoderConfig TrainConfig::encoder_config() const {
  EncoderConfig c;
  c.embedding_dim = embedding_dim;
  c.hidden_dim = hidden_dim;
  c.attention_dim = attention_dim;
  return c;
}

KPredictorConfig TrainConfig::kpredictor_config() const {
  KPredictorConfig c;
  c.input_dim = hidden_dim + kWindow;
  c.hidden_dim = k_hidden;
  c.attention_dim = attention_dim;
  c.max_sessions = max_sessions;
  c.outer_relu = k_outer_relu;
  return c;
}

TrainConfig TrainConfig::from_kv(const std::map<std::string, std::string>& kv) {
  static const std::set<std::string> known = {
      "mode",        "alpha",         "beta",          "gamma",         "eta",
      "tau1",        "tau2",          "tau1_prime",    "tau2_prime",    "learning_rate",
      "batch_size",  "epochs",        "negative_cap",  "clip_norm",     "max_sessions",
      "embedding_dim", "hidden_dim",  "attention_dim", "k_hidden",      "k_outer_relu",
      "em_kset",     "recluster_every", "drop_utterance_loss", "seed",  "k_selector"};
  for (const auto& [k, v] : kv) {
    if (!known.count(k)) throw DataError("unknown config key '" + k + "'");
  }
  TrainConfig c;
  c.mode = train_mode_from_string(kv_string(kv, "mode", to_string(c.mode)));
  c.alpha = kv_double(kv, "alpha", c.alpha);
  c.beta = kv_double(kv, "beta", c.beta);
  c.gamma = kv_double(kv, "gamma", c.gamma);
  c.eta = kv_double(kv, "eta", c.eta);
  c.tau1 = kv_double(kv, "tau1", c.tau1);
  c.tau2 = kv_double(kv, "tau2", c.tau2);
  c.tau1_prime = kv_double(kv, "tau1_prime", c.tau1_prime);
  c.tau2_prime = kv_double(kv, "tau2_prime", c.tau2_prime);
  c.learning_rate = kv_double(kv, "learning_rate", c.learning_rate);
  c.batch_size = kv_int(kv, "batch_size", c.batch_size);
  c.epochs = kv_int(kv, "epochs", c.epochs);
  c.negative_cap = kv_int(kv, "negative_cap", c.negative_cap);
  c.clip_norm = kv_double(kv, "clip_norm", c.clip_norm);
  c.max_sessions = kv_int(kv, "max_sessions", c.max_sessions);
  c.embedding_dim = kv_int(kv, "embedding_dim", c.embedding_dim);
  c.hidden_dim = kv_int(kv, "hidden_dim", c.hidden_dim);
  c.attention_dim = kv_int(kv, "attention_dim", c.attention_dim);
  c.k_hidden = kv_int(kv, "k_hidden", c.k_hidden);
  c.k_outer_relu = kv_bool(kv, "k_outer_relu", c.k_outer_relu);
  c.em_kset = kv_int_list(kv, "em_kset", c.em_kset);
  c.recluster_every = kv_int(kv, "recluster_every", c.recluster_every);
  c.drop_utterance_loss = kv_bool(kv, "drop_utterance_loss", c.drop_utterance_loss);
  c.seed = kv_uint64(kv, "seed", c.seed);
  c.k_selector = k_selector_from_string(kv_string(kv, "k_selector", to_string(c.k_selector)));
  return c;
}

std::map<std::string, std::string> TrainConfig::to_kv() const {
  auto real = [](double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
  };
  std::map<std::string, std::string> kv;
  kv["mode"] = to_string(mode);
  kv["alpha"] = real(alpha);
  kv["beta"] = real(beta);
  kv["gamma"] = real(gamma);
  kv["eta"] = real(eta);
  kv["tau1"] = real(tau1);
  kv["tau2"] = real(tau2);
  kv["tau1_prime"] = real(tau1_prime);
  kv["tau2_prime"] = real(tau2_prime);
  kv["learning_rate"] = real(learning_rate);
  kv["batch_size"] = std::to_string(batch_size);
  kv["epochs"] = std::to_string(epochs);
  kv["negative_cap"] = std::to_string(negative_cap);
  kv["clip_norm"] = real(clip_norm);
  kv["max_sessions"] = std::to_string(max_sessions);
  kv["embedding_dim"] = std::to_string(embedding_dim);
  kv["hidden_dim"] = std::to_string(hidden_dim);
  kv["attention_dim"] = std::to_string(attention_dim);
  kv["k_hidden"] = std::to_string(k_hidden);
  kv["k_outer_relu"] = k_outer_relu ? "true" : "false";
  std::string kset;
  for (std::size_t i = 0; i < em_kset.size(); ++i) {
    if (i) kset += ',';
    kset += std::to_string(em_kset[i]);
  }
  kv["em_kset"] = kset;
  kv["recluster_every"] = std::to_string(recluster_every);
  kv["drop_utterance_loss"] = drop_utterance_loss ? "true" : "false";
  kv["seed"] = std::to_string(seed);
  kv["k_selector"] = to_string(k_selector);
  return kv;
}

void adam_step(ParamStore& params, const std::map<std::string, Tensor>& grads, AdamState& state, double learning_rate,
               double clip_norm) {
  for (const auto& [name, p] : params.all()) {
    auto it = grads.find(name);
    if (it == grads.end()) throw std::invalid_argument("adam_step: missing gradient for parameter '" + name + "'");
    if (!it->second.all_finite()) throw NumericError("non-finite gradient for parameter '" + name + "'");
    if (!it->second.same_shape(p))
      throw std::invalid_argument("adam_step: gradient shape mismatch for parameter '" + name + "'");
  }

  double scale = 1.0;
  if (clip_norm > 0.0) {
    double sq = 0.0;
    for (const auto& [name, g] : grads) {
      for (double v : g.values) sq += v * v;
    }
    const double norm = std::sqrt(sq);
    if (norm > clip_norm) scale = clip_norm / norm;
  }

  ++state.step;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  for (auto& [name, p] : params.all()) {
    const Tensor& g = grads.at(name);
    auto [mit, m_new] = state.m.try_emplace(name, Tensor::zeros(p.shape));
    auto [vit, v_new] = state.v.try_emplace(name, Tensor::zeros(p.shape));
    Tensor& m = mit->second;
    Tensor& v = vit->second;
    for (std::size_t i = 0; i < p.values.size(); ++i) {
      const double gi = g.values[i] * scale;
      m.values[i] = state.beta1 * m.values[i] + (1.0 - state.beta1) * gi;
      v.values[i] = state.beta2 * v.values[i] + (1.0 - state.beta2) * gi * gi;
      const double m_hat = m.values[i] / bc1;
      const double v_hat = v.values[i] / bc2;
      p.values[i] -= learning_rate * m_hat / (std::sqrt(v_hat) + state.epsilon);
    }
    if (!p.all_finite()) throw NumericError("non-finite value in parameter '" + name + "' after update");
  }
}

Checkpoint init_checkpoint(const TrainConfig& config, EmbeddingTable table) {
  config.validate();
  if (table.dimension() != config.embedding_dim)
    throw std::invalid_argument("embedding table dimension " + std::to_string(table.dimension()) +
                                " does not match config embedding_dim " + std::to_string(config.embedding_dim));
  Checkpoint ckpt;
  ckpt.config = config;
  ckpt.table = std::move(table);
  std::mt19937_64 rng(hash_mix(config.seed));
  init_encoder_params(ckpt.params, config.encoder_config(), rng);
  init_kpredictor_params(ckpt.params, config.kpredictor_config(), rng);
  ckpt.rng_state = rng_to_string(rng);
  return ckpt;
}

TrainResult train_supervised(const std::vector<Conversation>& corpus, EmbeddingTable table,
                             const TrainConfig& config) {
  config.validate();
  if (config.mode != TrainMode::supervised)
    throw std::invalid_argument("train_supervised called with config.mode=unsupervised");
  for (const Conversation& c : corpus) {
    if (!c.labeled())
      throw DataError("supervised training needs gold session ids on every utterance; conversation '" + c.id +
                      "' is unlabeled");
  }
  const std::vector<Conversation> segments = segment_corpus(corpus);
  if (segments.empty()) throw DataError("supervised training corpus is empty");
  for (const Conversation& s : segments) {
    const int k = s.gold_session_count();
    if (k > config.max_sessions)
      throw DataError("segment '" + s.id + "' has " + std::to_string(k) + " gold sessions; raise max_sessions (M=" +
                      std::to_string(config.max_sessions) + ") to cover it");
  }

  TrainResult result;
  result.checkpoint = init_checkpoint(config, std::move(table));
  ParamStore& params = result.checkpoint.params;
  AdamState& adam = result.checkpoint.adam;
  const EncoderConfig enc_cfg = config.encoder_config();
  const KPredictorConfig kp_cfg = config.kpredictor_config();
  const EmbeddingTable& emb = result.checkpoint.table;

  std::mt19937_64 shuffle_rng(hash_combine(hash_mix(config.seed), 0x5u));
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    const auto batches =
        make_batches(static_cast<int>(segments.size()), config.batch_size, shuffle_rng, /*merge_singletons=*/false);
    for (std::size_t step = 0; step < batches.size(); ++step) {
      const std::uint64_t step_seed =
          hash_combine(hash_combine(hash_mix(config.seed), static_cast<std::uint64_t>(epoch)),
                       static_cast<std::uint64_t>(step));

      Tape tape;
      const BoundParams bound = params.bind(tape, /*trainable=*/true);

      std::vector<NodeId> pooled_v;
      std::vector<int> pooled_labels;
      int label_offset = 0;
      std::vector<NodeId> l_s_terms, l_k_terms, l_m_terms;
      for (std::size_t b = 0; b < batches[step].size(); ++b) {
        const Conversation& conv = segments[static_cast<std::size_t>(batches[step][b])];
        const std::vector<NodeId> v = represent(tape, bound, conv, emb, enc_cfg);
        const std::vector<int> labels = conv.gold_labels();
        const int gold_k = conv.gold_session_count();

        // utterance-level pool spans the whole batch; session ids offset per
        // conversation so sessions never collide across conversations
        for (std::size_t i = 0; i < v.size(); ++i) {
          pooled_v.push_back(v[i]);
          pooled_labels.push_back(labels[i] + label_offset);
        }
        label_offset += gold_k;

        const SessionPrototypes protos = session_prototypes(tape, v, labels);
        l_s_terms.push_back(session_contrastive(tape, v, protos, labels, config.tau2));

        const NodeId logits = k_logits(tape, bound, v, conv.speaker_count(), conv.size(), kp_cfg);
        l_k_terms.push_back(k_loss_node(tape, logits, gold_k));

        // K-Means on the detached representations with gold K; Hungarian
        // match on Euclidean cost; gradients reach only the prototypes.
        const Clustering km = kmeans(node_values(tape, v), gold_k, hash_combine(step_seed, 1000 + b));
        const std::vector<Tensor> centroids = normalized_centroids(km);
        std::vector<int> session_ids;
        for (const auto& [sid, node] : protos.by_session) session_ids.push_back(sid);
        std::vector<std::vector<double>> cost(session_ids.size(), std::vector<double>(centroids.size(), 0.0));
        for (std::size_t r = 0; r < session_ids.size(); ++r) {
          const Point p = tape.value(protos.by_session.at(session_ids[r])).values;
          for (std::size_t cdx = 0; cdx < centroids.size(); ++cdx)
            cost[r][cdx] = euclidean_distance(p, centroids[cdx].values);
        }
        const Matching match = hungarian(cost);
        std::map<int, int> matching;
        for (std::size_t r = 0; r < session_ids.size(); ++r) matching[session_ids[r]] = match.row_to_col[r];
        l_m_terms.push_back(centroid_matching(tape, protos, centroids, matching));
      }

      const NodeId l_u = pooled_v.size() >= 2
                             ? utterance_contrastive(tape, pooled_v, pooled_labels, config.tau1, config.negative_cap,
                                                     step_seed)
                             : tape.constant(Tensor::scalar(0.0));
      const NodeId l_s = tape.add_all(l_s_terms);
      const NodeId l_k = tape.add_all(l_k_terms);
      const NodeId l_m = tape.add_all(l_m_terms);

      NodeId total = l_u;
      if (config.alpha > 0) total = tape.add(total, tape.scale(l_s, config.alpha));
      if (config.beta > 0) total = tape.add(total, tape.scale(l_k, config.beta));
      if (config.gamma > 0) total = tape.add(total, tape.scale(l_m, config.gamma));

      const LossBreakdown breakdown =
          supervised_objective(tape.value(l_u).item(), tape.value(l_s).item(), tape.value(l_k).item(),
                               tape.value(l_m).item(), config.alpha, config.beta, config.gamma);
      check_total(breakdown.total, tape.value(total).item());

      adam_step(params, gradients_by_name(tape, bound, total), adam, config.learning_rate, config.clip_norm);
      result.log.push_back({epoch, static_cast<int>(step), breakdown});
    }
  }
  result.checkpoint.epoch = config.epochs;
  result.checkpoint.rng_state = rng_to_string(shuffle_rng);
  return result;
}

TrainResult train_unsupervised(const std::vector<Conversation>& corpus, EmbeddingTable table,
                               const TrainConfig& config) {
  config.validate();
  if (config.mode != TrainMode::unsupervised)
    throw std::invalid_argument("train_unsupervised called with config.mode=supervised");
  const std::vector<Conversation> segments = segment_corpus(corpus);
  if (segments.size() < 2)
    throw DataError("unsupervised training needs at least 2 conversations (cross-conversation negatives); got " +
                    std::to_string(segments.size()));

  TrainResult result;
  result.checkpoint = init_checkpoint(config, std::move(table));
  ParamStore& params = result.checkpoint.params;
  AdamState& adam = result.checkpoint.adam;
  const EncoderConfig enc_cfg = config.encoder_config();
  const EmbeddingTable& emb = result.checkpoint.table;

  // frozen E-step targets per segment
  std::vector<std::vector<FrozenClustering>> frozen(segments.size());
  auto run_e_step = [&](int epoch) {
    for (std::size_t s = 0; s < segments.size(); ++s) {
      Tape tape;
      const BoundParams bound = params.bind(tape, /*trainable=*/false);
      const std::vector<NodeId> v = represent(tape, bound, segments[s], emb, enc_cfg);
      const std::vector<Point> points = node_values(tape, v);
      std::vector<FrozenClustering> clusterings;
      for (std::size_t m = 0; m < config.em_kset.size(); ++m) {
        const int k = capped_k(config.em_kset[m], static_cast<int>(points.size()));
        const Clustering km =
            kmeans(points, k,
                   hash_combine(hash_combine(hash_mix(config.seed), static_cast<std::uint64_t>(epoch)),
                                hash_combine(static_cast<std::uint64_t>(s), static_cast<std::uint64_t>(m))));
        clusterings.push_back({km.assignment, normalized_centroids(km)});
      }
      frozen[s] = std::move(clusterings);
    }
  };

  std::mt19937_64 shuffle_rng(hash_combine(hash_mix(config.seed), 0x5u));
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    if (epoch % config.recluster_every == 0) run_e_step(epoch);

    const auto batches =
        make_batches(static_cast<int>(segments.size()), config.batch_size, shuffle_rng, /*merge_singletons=*/true);
    for (std::size_t step = 0; step < batches.size(); ++step) {
      const std::uint64_t step_seed =
          hash_combine(hash_combine(hash_mix(config.seed), static_cast<std::uint64_t>(epoch)),
                       static_cast<std::uint64_t>(4096 + step));

      Tape tape;
      const BoundParams bound = params.bind(tape, /*trainable=*/true);

      std::vector<std::vector<NodeId>> v_by_conv;
      std::vector<std::vector<std::string>> speakers_by_conv;
      std::vector<NodeId> l_s_terms;
      for (int idx : batches[step]) {
        const Conversation& conv = segments[static_cast<std::size_t>(idx)];
        std::vector<NodeId> v = represent(tape, bound, conv, emb, enc_cfg);
        std::vector<std::string> speakers;
        speakers.reserve(conv.utterances.size());
        for (const Utterance& u : conv.utterances) speakers.push_back(u.speaker);
        l_s_terms.push_back(prototypical_em_loss(tape, v, frozen[static_cast<std::size_t>(idx)], config.tau2_prime));
        v_by_conv.push_back(std::move(v));
        speakers_by_conv.push_back(std::move(speakers));
      }

      const NodeId l_s_prime = tape.add_all(l_s_terms);
      LossBreakdown breakdown;
      NodeId total;
      if (config.drop_utterance_loss) {
        total = tape.scale(l_s_prime, config.eta);
        breakdown.l_s_prime = tape.value(l_s_prime).item();
        breakdown.total = config.eta * *breakdown.l_s_prime;
      } else {
        const NodeId l_u_prime =
            speaker_contrastive(tape, v_by_conv, speakers_by_conv, config.tau1_prime, config.negative_cap, step_seed);
        total = config.eta > 0 ? tape.add(l_u_prime, tape.scale(l_s_prime, config.eta)) : l_u_prime;
        breakdown =
            unsupervised_objective(tape.value(l_u_prime).item(), tape.value(l_s_prime).item(), config.eta);
      }
      check_total(breakdown.total, tape.value(total).item());

      adam_step(params, gradients_by_name(tape, bound, total), adam, config.learning_rate, config.clip_norm);
      result.log.push_back({epoch, static_cast<int>(step), breakdown});
    }
  }
  result.checkpoint.epoch = config.epochs;
  result.checkpoint.rng_state = rng_to_string(shuffle_rng);
  return result;
}

DisentangleResult disentangle(const Conversation& conversation, const Checkpoint& checkpoint, KSelector selector) {
  const int n = conversation.size();
  if (n < 1) throw std::invalid_argument("disentangle: empty conversation");
  if (n > kWindow)
    throw std::invalid_argument("disentangle: conversation '" + conversation.id + "' has " + std::to_string(n) +
                                " utterances; segment to " + std::to_string(kWindow) + " first");

  Tape tape;
  const BoundParams bound = checkpoint.params.bind(tape, /*trainable=*/false);
  const std::vector<NodeId> v =
      represent(tape, bound, conversation, checkpoint.table, checkpoint.config.encoder_config());
  const std::vector<Point> points = node_values(tape, v);

  const std::uint64_t seed = hash_combine(hash_mix(checkpoint.config.seed), fnv1a(conversation.id));
  const int k_max = std::min(checkpoint.config.max_sessions, n);

  int k = 1;
  switch (selector) {
    case KSelector::gold:
      if (!conversation.labeled())
        throw DataError("k_selector=gold needs gold session ids; conversation '" + conversation.id +
                        "' is unlabeled");
      k = conversation.gold_session_count();
      break;
    case KSelector::predictor: {
      const NodeId logits = k_logits(tape, bound, v, conversation.speaker_count(), n,
                                     checkpoint.config.kpredictor_config());
      k = predict_k(distribution_from_logits(tape, logits), n);
      break;
    }
    case KSelector::elbow:
      k = n == 1 ? 1 : elbow_k(points, k_max, seed);
      break;
    case KSelector::silhouette:
      k = n < 3 ? 1 : silhouette_k(points, k_max, seed);
      break;
  }

  DisentangleResult out;
  out.k = k;
  out.partition = Partition(kmeans(points, k, hash_combine(seed, 0xA551u)).assignment);
  return out;
}

EvalReport evaluate(const std::vector<Conversation>& corpus, const Checkpoint& checkpoint, KSelector selector) {
  for (const Conversation& c : corpus) {
    if (!c.labeled()) throw DataError("evaluation needs gold session ids; conversation '" + c.id + "' is unlabeled");
  }
  const std::vector<Conversation> segments = segment_corpus(corpus);
  if (segments.empty()) throw DataError("evaluation corpus is empty");

  EvalReport report;
  report.k_selector = selector;
  std::vector<int> gold_ks, predicted_ks;
  for (const Conversation& seg : segments) {
    const DisentangleResult d = disentangle(seg, checkpoint, selector);
    const Partition truth(seg.gold_labels());

    ConversationEval row;
    row.id = seg.id;
    row.size = seg.size();
    row.gold_k = seg.gold_session_count();
    row.predicted_k = d.k;
    row.nmi = nmi(truth, d.partition);
    // a single-utterance segment has only the trivial partition on both sides
    row.ari = seg.size() >= 2 ? ari(truth, d.partition) : 1.0;
    row.shen_f = shen_f(truth, d.partition);
    gold_ks.push_back(row.gold_k);
    predicted_ks.push_back(row.predicted_k);

    report.nmi += row.nmi;
    report.ari += row.ari;
    report.shen_f += row.shen_f;
    report.per_conversation.push_back(std::move(row));
  }
  const double n = static_cast<double>(segments.size());
  report.nmi /= n;
  report.ari /= n;
  report.shen_f /= n;
  const KReport kr = k_report(gold_ks, predicted_ks);
  report.k_acc = kr.acc;
  report.k_mae = kr.mae;
  return report;
}

}  // namespace bicl
