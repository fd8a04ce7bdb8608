#include "bicl/losses.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>

#include "bicl/rng.hpp"

namespace bicl {

namespace {

NodeId zero_scalar(Tape& tape) { return tape.constant(Tensor::scalar(0.0)); }

/// (1/|P|) sum over positives of [ LSE(negative dots + that positive's dot)
/// - positive dot ], all dots pre-scaled by 1/tau. Empty positives or empty
/// negatives mean a zero contribution; callers skip those anchors.
NodeId contrastive_anchor(Tape& tape, NodeId anchor, std::span<const NodeId> positives,
                          std::span<const NodeId> negatives, double tau) {
  std::vector<NodeId> negative_dots;
  negative_dots.reserve(negatives.size());
  for (NodeId l : negatives) negative_dots.push_back(tape.scale(tape.dot(anchor, l), 1.0 / tau));
  const NodeId negative_vec = tape.concat(negative_dots);

  std::vector<NodeId> terms;
  terms.reserve(positives.size());
  for (NodeId j : positives) {
    const NodeId dj = tape.scale(tape.dot(anchor, j), 1.0 / tau);
    const NodeId logits = tape.apply(OpKind::concat, {negative_vec, dj});
    terms.push_back(tape.sub(log_sum_exp(tape, logits), dj));
  }
  return tape.scale(tape.add_all(terms), 1.0 / static_cast<double>(positives.size()));
}

std::vector<int> subsample(std::vector<int> candidates, int cap, std::uint64_t seed) {
  if (static_cast<int>(candidates.size()) <= cap) return candidates;
  std::mt19937_64 rng(seed);
  const std::vector<int> picks = sample_without_replacement(rng, static_cast<int>(candidates.size()), cap);
  std::vector<int> out;
  out.reserve(static_cast<std::size_t>(cap));
  for (int p : picks) out.push_back(candidates[static_cast<std::size_t>(p)]);
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

NodeId utterance_contrastive(Tape& tape, std::span<const NodeId> v, std::span<const int> labels, double tau1,
                             int negative_cap, std::uint64_t seed) {
  if (tau1 <= 0.0) throw std::invalid_argument("utterance_contrastive: temperature must be positive");
  if (negative_cap < 1) throw std::invalid_argument("utterance_contrastive: negative_cap must be positive");
  if (v.size() != labels.size() || v.size() < 2)
    throw std::invalid_argument("utterance_contrastive needs >= 2 representations with matching labels");

  const int n = static_cast<int>(v.size());
  std::vector<NodeId> anchor_terms;
  for (int i = 0; i < n; ++i) {
    std::vector<int> positives, negatives;
    for (int l = 0; l < n; ++l) {
      if (l == i) continue;
      (labels[static_cast<std::size_t>(l)] == labels[static_cast<std::size_t>(i)] ? positives : negatives).push_back(l);
    }
    if (positives.empty() || negatives.empty()) continue;  // no pair to contrast
    negatives = subsample(std::move(negatives), negative_cap,
                          hash_combine(hash_mix(seed), static_cast<std::uint64_t>(i)));

    std::vector<NodeId> pos_nodes, neg_nodes;
    for (int j : positives) pos_nodes.push_back(v[static_cast<std::size_t>(j)]);
    for (int l : negatives) neg_nodes.push_back(v[static_cast<std::size_t>(l)]);
    anchor_terms.push_back(contrastive_anchor(tape, v[static_cast<std::size_t>(i)], pos_nodes, neg_nodes, tau1));
  }
  return anchor_terms.empty() ? zero_scalar(tape) : tape.add_all(anchor_terms);
}

SessionPrototypes session_prototypes(Tape& tape, std::span<const NodeId> v, std::span<const int> labels) {
  if (v.size() != labels.size() || v.empty())
    throw std::invalid_argument("session_prototypes needs representations with matching labels");
  std::map<int, std::vector<NodeId>> members;
  for (std::size_t i = 0; i < v.size(); ++i) members[labels[i]].push_back(v[i]);

  SessionPrototypes out;
  for (const auto& [session, nodes] : members) {
    const NodeId mean = tape.scale(tape.add_all(nodes), 1.0 / static_cast<double>(nodes.size()));
    out.by_session.emplace(session, tape.l2_normalize(mean));
  }
  return out;
}

NodeId session_contrastive(Tape& tape, std::span<const NodeId> v, const SessionPrototypes& prototypes,
                           std::span<const int> labels, double tau2) {
  if (tau2 <= 0.0) throw std::invalid_argument("session_contrastive: temperature must be positive");
  if (v.size() != labels.size() || v.empty())
    throw std::invalid_argument("session_contrastive needs representations with matching labels");
  for (int l : labels) {
    if (!prototypes.by_session.count(l))
      throw std::invalid_argument("session_contrastive: no prototype for session " + std::to_string(l));
  }
  if (prototypes.by_session.size() < 2) return zero_scalar(tape);  // softmax over one prototype

  std::vector<int> sessions;
  std::vector<NodeId> protos;
  for (const auto& [session, node] : prototypes.by_session) {
    sessions.push_back(session);
    protos.push_back(node);
  }

  std::vector<NodeId> terms;
  terms.reserve(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    std::vector<NodeId> dots;
    dots.reserve(protos.size());
    int own = -1;
    for (std::size_t p = 0; p < protos.size(); ++p) {
      dots.push_back(tape.scale(tape.dot(v[i], protos[p]), 1.0 / tau2));
      if (sessions[p] == labels[i]) own = static_cast<int>(p);
    }
    const NodeId logits = tape.concat(dots);
    terms.push_back(tape.sub(log_sum_exp(tape, logits), pick(tape, logits, own)));
  }
  return tape.add_all(terms);
}

NodeId centroid_matching(Tape& tape, const SessionPrototypes& prototypes, const std::vector<Tensor>& centroids,
                         const std::map<int, int>& matching) {
  if (matching.empty()) throw std::invalid_argument("centroid_matching: empty matching");
  std::set<int> used;
  for (const auto& [session, centroid] : matching) {
    if (!prototypes.by_session.count(session))
      throw std::invalid_argument("centroid_matching: matching names unknown session " + std::to_string(session));
    if (centroid < 0 || centroid >= static_cast<int>(centroids.size()))
      throw std::invalid_argument("centroid_matching: centroid index " + std::to_string(centroid) + " out of range");
    if (!used.insert(centroid).second)
      throw std::invalid_argument("centroid_matching: matching is not a bijection (centroid " +
                                  std::to_string(centroid) + " used twice)");
  }

  std::vector<NodeId> distances;
  distances.reserve(matching.size());
  for (const auto& [session, centroid] : matching) {
    const NodeId p = prototypes.by_session.at(session);
    const NodeId c = tape.constant(centroids[static_cast<std::size_t>(centroid)]);
    const NodeId diff = tape.sub(p, c);
    if (tape.value(diff).norm2() < 1e-8) {
      // ||.|| is non-differentiable at 0; the matched pair already coincides,
      // so it contributes a plain zero.
      distances.push_back(zero_scalar(tape));
    } else {
      distances.push_back(tape.dot(diff, tape.l2_normalize(diff)));  // == ||diff||
    }
  }
  return tape.scale(tape.add_all(distances), 1.0 / static_cast<double>(distances.size()));
}

NodeId speaker_contrastive(Tape& tape, const std::vector<std::vector<NodeId>>& v_by_conversation,
                           const std::vector<std::vector<std::string>>& speakers_by_conversation, double tau1_prime,
                           int negative_cap, std::uint64_t seed) {
  if (tau1_prime <= 0.0) throw std::invalid_argument("speaker_contrastive: temperature must be positive");
  if (negative_cap < 1) throw std::invalid_argument("speaker_contrastive: negative_cap must be positive");
  if (v_by_conversation.size() < 2)
    throw std::invalid_argument("speaker_contrastive needs a batch of >= 2 conversations (negatives are "
                                "cross-conversation utterances)");
  if (v_by_conversation.size() != speakers_by_conversation.size())
    throw std::invalid_argument("speaker_contrastive: representation/speaker batches differ in size");

  std::vector<NodeId> anchor_terms;
  std::uint64_t anchor_index = 0;
  for (std::size_t c = 0; c < v_by_conversation.size(); ++c) {
    const auto& vs = v_by_conversation[c];
    const auto& speakers = speakers_by_conversation[c];
    if (vs.size() != speakers.size())
      throw std::invalid_argument("speaker_contrastive: conversation " + std::to_string(c) +
                                  " has mismatched representations and speakers");
    for (std::size_t i = 0; i < vs.size(); ++i, ++anchor_index) {
      std::vector<NodeId> positives;
      for (std::size_t j = 0; j < vs.size(); ++j) {
        if (j != i && speakers[j] == speakers[i]) positives.push_back(vs[j]);
      }
      if (positives.empty()) continue;

      std::vector<NodeId> pool;
      for (std::size_t other = 0; other < v_by_conversation.size(); ++other) {
        if (other == c) continue;
        pool.insert(pool.end(), v_by_conversation[other].begin(), v_by_conversation[other].end());
      }
      std::vector<int> indices(pool.size());
      for (std::size_t x = 0; x < pool.size(); ++x) indices[x] = static_cast<int>(x);
      indices = subsample(std::move(indices), negative_cap, hash_combine(hash_mix(seed), anchor_index));
      std::vector<NodeId> negatives;
      negatives.reserve(indices.size());
      for (int x : indices) negatives.push_back(pool[static_cast<std::size_t>(x)]);

      anchor_terms.push_back(contrastive_anchor(tape, vs[i], positives, negatives, tau1_prime));
    }
  }
  return anchor_terms.empty() ? zero_scalar(tape) : tape.add_all(anchor_terms);
}

NodeId prototypical_em_loss(Tape& tape, std::span<const NodeId> v, const std::vector<FrozenClustering>& clusterings,
                            double tau2_prime) {
  if (tau2_prime <= 0.0) throw std::invalid_argument("prototypical_em_loss: temperature must be positive");
  if (clusterings.empty()) throw std::invalid_argument("prototypical_em_loss: no clusterings given");
  if (v.empty()) throw std::invalid_argument("prototypical_em_loss: no representations given");

  std::vector<NodeId> terms;
  for (const FrozenClustering& clustering : clusterings) {
    if (clustering.assignment.size() != v.size())
      throw std::invalid_argument("prototypical_em_loss: clustering does not assign every utterance");
    const int k = static_cast<int>(clustering.centroids.size());
    if (k < 1) throw std::invalid_argument("prototypical_em_loss: clustering has no centroids");
    for (int a : clustering.assignment) {
      if (a < 0 || a >= k)
        throw std::invalid_argument("prototypical_em_loss: assignment names centroid " + std::to_string(a) +
                                    " outside 0.." + std::to_string(k - 1));
    }
    if (k == 1) continue;  // softmax over one centroid: exact zero

    std::vector<NodeId> centroid_nodes;
    centroid_nodes.reserve(static_cast<std::size_t>(k));
    for (const Tensor& c : clustering.centroids) centroid_nodes.push_back(tape.constant(c));

    for (std::size_t i = 0; i < v.size(); ++i) {
      std::vector<NodeId> dots;
      dots.reserve(static_cast<std::size_t>(k));
      for (int l = 0; l < k; ++l)
        dots.push_back(tape.scale(tape.dot(v[i], centroid_nodes[static_cast<std::size_t>(l)]), 1.0 / tau2_prime));
      const NodeId logits = tape.concat(dots);
      terms.push_back(tape.sub(log_sum_exp(tape, logits), pick(tape, logits, clustering.assignment[i])));
    }
  }
  if (terms.empty()) return zero_scalar(tape);
  return tape.scale(tape.add_all(terms), 1.0 / static_cast<double>(clusterings.size()));
}

LossBreakdown supervised_objective(double l_u, double l_s, double l_k, double l_m, double alpha, double beta,
                                   double gamma) {
  if (alpha < 0.0 || beta < 0.0 || gamma < 0.0)
    throw std::invalid_argument("supervised objective weights must be non-negative");
  LossBreakdown b;
  b.l_u = l_u;
  b.l_s = l_s;
  b.l_k = l_k;
  b.l_m = l_m;
  b.total = l_u + alpha * l_s + beta * l_k + gamma * l_m;
  return b;
}

LossBreakdown unsupervised_objective(double l_u_prime, double l_s_prime, double eta) {
  if (eta < 0.0) throw std::invalid_argument("eta must be non-negative");
  LossBreakdown b;
  b.l_u_prime = l_u_prime;
  b.l_s_prime = l_s_prime;
  b.total = l_u_prime + eta * l_s_prime;
  return b;
}

}  // namespace bicl
