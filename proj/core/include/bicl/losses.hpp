#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bicl/tape.hpp"

namespace bicl {

/// One unit-normalized prototype node per session: the mean of the session
/// members' representations, re-normalized.
struct SessionPrototypes {
  std::map<int, NodeId> by_session;
};

/// A clustering frozen for the current optimization step: gradients never
/// flow into the assignment or the centroids.
struct FrozenClustering {
  std::vector<int> assignment;      // utterance index -> cluster id
  std::vector<Tensor> centroids;    // unit-normalized
};

/// Per-term log of one training step. `total` is always the active
/// objective's weighted sum of the present terms.
struct LossBreakdown {
  std::optional<double> l_u, l_s, l_k, l_m, l_u_prime, l_s_prime;
  double total = 0.0;
};

/// Utterance-level contrastive loss: for each anchor, the average over its
/// positives of -log( exp(v_i.v_j/tau) / sum over negatives plus that one
/// positive ), summed over anchors. Anchors without positives (or without
/// negatives) contribute 0. Negatives are subsampled per anchor to
/// negative_cap without replacement, seeded.
NodeId utterance_contrastive(Tape& tape, std::span<const NodeId> v, std::span<const int> labels, double tau1,
                             int negative_cap, std::uint64_t seed);

SessionPrototypes session_prototypes(Tape& tape, std::span<const NodeId> v, std::span<const int> labels);

/// Session-level contrastive loss: -sum_i log softmax over all session
/// prototypes of v_i . p_{y(i)} / tau2.
NodeId session_contrastive(Tape& tape, std::span<const NodeId> v, const SessionPrototypes& prototypes,
                           std::span<const int> labels, double tau2);

/// Mean Euclidean distance between matched (prototype, centroid) pairs.
/// `matching` maps session id -> centroid index and must be injective;
/// centroids are constants.
NodeId centroid_matching(Tape& tape, const SessionPrototypes& prototypes, const std::vector<Tensor>& centroids,
                         const std::map<int, int>& matching);

/// Unsupervised utterance-level loss: positives are same-speaker utterances
/// within the same conversation, negatives come from the other conversations
/// of the batch (subsampled to negative_cap, seeded).
NodeId speaker_contrastive(Tape& tape, const std::vector<std::vector<NodeId>>& v_by_conversation,
                           const std::vector<std::vector<std::string>>& speakers_by_conversation, double tau1_prime,
                           int negative_cap, std::uint64_t seed);

/// Unsupervised session-level loss averaged over M frozen clusterings:
/// -(1/M) sum_i sum_m log softmax over the k_m centroids of
/// v_i . c_assigned / tau2_prime.
NodeId prototypical_em_loss(Tape& tape, std::span<const NodeId> v, const std::vector<FrozenClustering>& clusterings,
                            double tau2_prime);

/// total = l_u + alpha*l_s + beta*l_k + gamma*l_m.
LossBreakdown supervised_objective(double l_u, double l_s, double l_k, double l_m, double alpha, double beta,
                                   double gamma);

/// total = l_u_prime + eta*l_s_prime.
LossBreakdown unsupervised_objective(double l_u_prime, double l_s_prime, double eta);

}  // namespace bicl
