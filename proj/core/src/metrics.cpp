#include "bicl/metrics.hpp"

#include <cmath>
#include <map>
#include <stdexcept>
#include <string>

namespace bicl {

namespace {

/// Labels renumbered to 0..k-1 in order of first appearance, so that two
/// partitions are comparable regardless of raw id choice.
std::vector<int> canonical(const std::vector<int>& labels) {
  std::map<int, int> remap;
  std::vector<int> out;
  out.reserve(labels.size());
  for (int l : labels) {
    auto [it, inserted] = remap.emplace(l, static_cast<int>(remap.size()));
    out.push_back(it->second);
  }
  return out;
}

struct Contingency {
  std::vector<std::vector<long>> cells;  // truth cluster x predicted cluster
  std::vector<long> truth_sizes;
  std::vector<long> pred_sizes;
  long n = 0;
};

Contingency contingency(const Partition& truth, const Partition& predicted, const char* caller) {
  if (truth.labels.size() != predicted.labels.size())
    throw std::invalid_argument(std::string(caller) + ": partitions cover different index sets (" +
                                std::to_string(truth.labels.size()) + " vs " +
                                std::to_string(predicted.labels.size()) + " elements)");
  if (truth.labels.empty()) throw std::invalid_argument(std::string(caller) + ": empty partitions");
  const std::vector<int> t = canonical(truth.labels);
  const std::vector<int> p = canonical(predicted.labels);
  Contingency c;
  int kt = 0, kp = 0;
  for (int v : t) kt = std::max(kt, v + 1);
  for (int v : p) kp = std::max(kp, v + 1);
  c.cells.assign(static_cast<std::size_t>(kt), std::vector<long>(static_cast<std::size_t>(kp), 0));
  c.truth_sizes.assign(static_cast<std::size_t>(kt), 0);
  c.pred_sizes.assign(static_cast<std::size_t>(kp), 0);
  c.n = static_cast<long>(t.size());
  for (std::size_t i = 0; i < t.size(); ++i) {
    ++c.cells[static_cast<std::size_t>(t[i])][static_cast<std::size_t>(p[i])];
    ++c.truth_sizes[static_cast<std::size_t>(t[i])];
    ++c.pred_sizes[static_cast<std::size_t>(p[i])];
  }
  return c;
}

double entropy(const std::vector<long>& sizes, long n) {
  double h = 0.0;
  for (long s : sizes) {
    if (s == 0) continue;
    const double p = static_cast<double>(s) / static_cast<double>(n);
    h -= p * std::log(p);
  }
  return h;
}

double comb2(long n) { return 0.5 * static_cast<double>(n) * static_cast<double>(n - 1); }

}  // namespace

double nmi(const Partition& truth, const Partition& predicted) {
  const Contingency c = contingency(truth, predicted, "nmi");
  if (canonical(truth.labels) == canonical(predicted.labels)) return 1.0;

  const double ht = entropy(c.truth_sizes, c.n);
  const double hp = entropy(c.pred_sizes, c.n);
  double mi = 0.0;
  for (std::size_t i = 0; i < c.cells.size(); ++i) {
    for (std::size_t j = 0; j < c.cells[i].size(); ++j) {
      const long nij = c.cells[i][j];
      if (nij == 0) continue;
      const double pij = static_cast<double>(nij) / static_cast<double>(c.n);
      mi += pij * std::log(static_cast<double>(c.n) * static_cast<double>(nij) /
                           (static_cast<double>(c.truth_sizes[i]) * static_cast<double>(c.pred_sizes[j])));
    }
  }
  const double denom = 0.5 * (ht + hp);
  if (denom <= 0.0) return 0.0;  // non-identical yet both trivial cannot happen; guard anyway
  const double v = mi / denom;
  return std::min(1.0, std::max(0.0, v));
}

double ari(const Partition& truth, const Partition& predicted) {
  const Contingency c = contingency(truth, predicted, "ari");
  if (c.n < 2) throw std::invalid_argument("ari needs at least 2 elements");

  double index = 0.0;
  for (const auto& row : c.cells)
    for (long nij : row) index += comb2(nij);
  double sum_t = 0.0, sum_p = 0.0;
  for (long s : c.truth_sizes) sum_t += comb2(s);
  for (long s : c.pred_sizes) sum_p += comb2(s);
  const double expected = sum_t * sum_p / comb2(c.n);
  const double max_index = 0.5 * (sum_t + sum_p);
  if (max_index == expected) {
    return canonical(truth.labels) == canonical(predicted.labels) ? 1.0 : 0.0;
  }
  return (index - expected) / (max_index - expected);
}

double shen_f(const Partition& truth, const Partition& predicted) {
  const Contingency c = contingency(truth, predicted, "shen_f");
  double f = 0.0;
  for (std::size_t i = 0; i < c.cells.size(); ++i) {
    double best = 0.0;
    for (std::size_t j = 0; j < c.cells[i].size(); ++j) {
      const long nij = c.cells[i][j];
      if (nij == 0) continue;
      const double precision = static_cast<double>(nij) / static_cast<double>(c.pred_sizes[j]);
      const double recall = static_cast<double>(nij) / static_cast<double>(c.truth_sizes[i]);
      best = std::max(best, 2.0 * precision * recall / (precision + recall));
    }
    f += static_cast<double>(c.truth_sizes[i]) / static_cast<double>(c.n) * best;
  }
  return f;
}

KReport k_report(const std::vector<int>& gold_ks, const std::vector<int>& predicted_ks) {
  if (gold_ks.size() != predicted_ks.size())
    throw std::invalid_argument("k_report: list lengths differ (" + std::to_string(gold_ks.size()) + " vs " +
                                std::to_string(predicted_ks.size()) + ")");
  if (gold_ks.empty()) throw std::invalid_argument("k_report: empty input");
  KReport r;
  for (std::size_t i = 0; i < gold_ks.size(); ++i) {
    if (gold_ks[i] == predicted_ks[i]) r.acc += 1.0;
    r.mae += std::abs(gold_ks[i] - predicted_ks[i]);
  }
  r.acc /= static_cast<double>(gold_ks.size());
  r.mae /= static_cast<double>(gold_ks.size());
  return r;
}

}  // namespace bicl
