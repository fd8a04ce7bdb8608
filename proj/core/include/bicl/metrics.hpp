#pragma once

#include <vector>

namespace bicl {

/// Session assignment over one conversation: labels[i] is the session id of
/// utterance i. Ids need not be contiguous.
struct Partition {
  std::vector<int> labels;

  Partition() = default;
  explicit Partition(std::vector<int> l) : labels(std::move(l)) {}
  int size() const { return static_cast<int>(labels.size()); }
};

/// Mutual information normalized by the arithmetic mean of the two label
/// entropies (natural log). Identical partitions score 1.0 even when both
/// entropies are zero.
double nmi(const Partition& truth, const Partition& predicted);

/// Adjusted Rand index over pair counts. When both partitions are trivial
/// (MaxIndex == ExpectedIndex) the result is 1.0 if they are identical as
/// partitions, else 0.0. Needs at least 2 elements.
double ari(const Partition& truth, const Partition& predicted);

/// Cluster-size-weighted best-match F1 of ground-truth clusters against
/// predicted clusters.
double shen_f(const Partition& truth, const Partition& predicted);

struct KReport {
  double acc = 0.0;
  double mae = 0.0;
};

/// Exact-match accuracy and mean absolute error of session-count predictions.
KReport k_report(const std::vector<int>& gold_ks, const std::vector<int>& predicted_ks);

}  // namespace bicl
