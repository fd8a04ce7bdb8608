#include "bicl/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "bicl/errors.hpp"
#include "bicl/rng.hpp"

namespace bicl {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_points(const std::vector<Point>& points) {
  if (points.empty()) throw std::invalid_argument("clustering needs at least one point");
  const std::size_t dim = points[0].size();
  for (const Point& p : points) {
    if (p.size() != dim) throw std::invalid_argument("points must share one dimension");
  }
}

std::vector<int> assign_nearest(const std::vector<Point>& points, const std::vector<Point>& centroids) {
  std::vector<int> assignment(points.size(), 0);
  for (std::size_t i = 0; i < points.size(); ++i) {
    double best = kInf;
    for (std::size_t c = 0; c < centroids.size(); ++c) {
      const double d = squared_distance(points[i], centroids[c]);
      if (d < best) {
        best = d;
        assignment[i] = static_cast<int>(c);
      }
    }
  }
  return assignment;
}

/// Moves the point farthest from its centroid into each empty cluster,
/// drawing only from clusters that can spare a member.
void repair_empty(const std::vector<Point>& points, std::vector<int>& assignment,
                  std::vector<Point>& centroids, int k) {
  std::vector<int> sizes(static_cast<std::size_t>(k), 0);
  for (int a : assignment) ++sizes[static_cast<std::size_t>(a)];
  for (int e = 0; e < k; ++e) {
    if (sizes[static_cast<std::size_t>(e)] > 0) continue;
    int donor = -1;
    double far = -1.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
      const int c = assignment[i];
      if (sizes[static_cast<std::size_t>(c)] < 2) continue;
      const double d = squared_distance(points[i], centroids[static_cast<std::size_t>(c)]);
      if (d > far) {
        far = d;
        donor = static_cast<int>(i);
      }
    }
    if (donor < 0) continue;  // cannot happen when k <= |points|
    --sizes[static_cast<std::size_t>(assignment[static_cast<std::size_t>(donor)])];
    assignment[static_cast<std::size_t>(donor)] = e;
    sizes[static_cast<std::size_t>(e)] = 1;
    centroids[static_cast<std::size_t>(e)] = points[static_cast<std::size_t>(donor)];
  }
}

std::vector<Point> cluster_means(const std::vector<Point>& points, const std::vector<int>& assignment, int k) {
  const std::size_t dim = points[0].size();
  std::vector<Point> means(static_cast<std::size_t>(k), Point(dim, 0.0));
  std::vector<int> sizes(static_cast<std::size_t>(k), 0);
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto c = static_cast<std::size_t>(assignment[i]);
    ++sizes[c];
    for (std::size_t d = 0; d < dim; ++d) means[c][d] += points[i][d];
  }
  for (std::size_t c = 0; c < means.size(); ++c) {
    if (sizes[c] == 0) continue;
    for (double& v : means[c]) v /= sizes[c];
  }
  return means;
}

double total_inertia(const std::vector<Point>& points, const std::vector<int>& assignment,
                     const std::vector<Point>& centroids) {
  double s = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i)
    s += squared_distance(points[i], centroids[static_cast<std::size_t>(assignment[i])]);
  return s;
}

std::vector<Point> kmeanspp_seed(const std::vector<Point>& points, int k, std::mt19937_64& rng) {
  std::vector<Point> centroids;
  centroids.reserve(static_cast<std::size_t>(k));
  std::vector<bool> chosen(points.size(), false);
  std::vector<double> min_d2(points.size(), kInf);

  std::size_t first = uniform_below(rng, points.size());
  centroids.push_back(points[first]);
  chosen[first] = true;

  while (static_cast<int>(centroids.size()) < k) {
    double total = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
      min_d2[i] = std::min(min_d2[i], squared_distance(points[i], centroids.back()));
      total += min_d2[i];
    }
    std::size_t pick = points.size();
    if (total > 1e-300) {
      const double r = uniform01(rng) * total;
      double acc = 0.0;
      for (std::size_t i = 0; i < points.size(); ++i) {
        acc += min_d2[i];
        if (acc >= r) {
          pick = i;
          break;
        }
      }
      if (pick == points.size()) pick = points.size() - 1;
    } else {
      // all remaining mass is zero (duplicated points): lowest unchosen index
      for (std::size_t i = 0; i < points.size(); ++i) {
        if (!chosen[i]) {
          pick = i;
          break;
        }
      }
      if (pick == points.size()) pick = 0;
    }
    chosen[pick] = true;
    centroids.push_back(points[pick]);
  }
  return centroids;
}

Clustering lloyd_run(const std::vector<Point>& points, int k, std::mt19937_64& rng, int max_iterations,
                     std::vector<double>* inertia_trace) {
  Clustering result;
  result.k = k;
  std::vector<Point> centroids = kmeanspp_seed(points, k, rng);
  std::vector<int> assignment = assign_nearest(points, centroids);
  repair_empty(points, assignment, centroids, k);
  for (int it = 0; it < max_iterations; ++it) {
    centroids = cluster_means(points, assignment, k);
    std::vector<int> next = assign_nearest(points, centroids);
    repair_empty(points, next, centroids, k);
    if (inertia_trace) inertia_trace->push_back(total_inertia(points, next, centroids));
    if (next == assignment) break;
    assignment = std::move(next);
  }
  result.centroids = cluster_means(points, assignment, k);
  result.assignment = std::move(assignment);
  result.inertia = total_inertia(points, result.assignment, result.centroids);
  return result;
}

double tie_epsilon(double scale) { return 1e-9 * std::max(1.0, std::abs(scale)); }

/// O(n^3) assignment via potentials; returns the minimum total cost.
double hungarian_value(const std::vector<std::vector<double>>& a) {
  const int n = static_cast<int>(a.size());
  if (n == 0) return 0.0;
  std::vector<double> u(static_cast<std::size_t>(n + 1), 0.0), v(static_cast<std::size_t>(n + 1), 0.0);
  std::vector<int> p(static_cast<std::size_t>(n + 1), 0), way(static_cast<std::size_t>(n + 1), 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(static_cast<std::size_t>(n + 1), kInf);
    std::vector<bool> used(static_cast<std::size_t>(n + 1), false);
    do {
      used[static_cast<std::size_t>(j0)] = true;
      const int i0 = p[static_cast<std::size_t>(j0)];
      int j1 = -1;
      double delta = kInf;
      for (int j = 1; j <= n; ++j) {
        if (used[static_cast<std::size_t>(j)]) continue;
        const double cur = a[static_cast<std::size_t>(i0 - 1)][static_cast<std::size_t>(j - 1)] -
                           u[static_cast<std::size_t>(i0)] - v[static_cast<std::size_t>(j)];
        if (cur < minv[static_cast<std::size_t>(j)]) {
          minv[static_cast<std::size_t>(j)] = cur;
          way[static_cast<std::size_t>(j)] = j0;
        }
        if (minv[static_cast<std::size_t>(j)] < delta) {
          delta = minv[static_cast<std::size_t>(j)];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[static_cast<std::size_t>(j)]) {
          u[static_cast<std::size_t>(p[static_cast<std::size_t>(j)])] += delta;
          v[static_cast<std::size_t>(j)] -= delta;
        } else {
          minv[static_cast<std::size_t>(j)] -= delta;
        }
      }
      j0 = j1;
    } while (p[static_cast<std::size_t>(j0)] != 0);
    do {
      const int j1 = way[static_cast<std::size_t>(j0)];
      p[static_cast<std::size_t>(j0)] = p[static_cast<std::size_t>(j1)];
      j0 = j1;
    } while (j0);
  }
  double cost = 0.0;
  for (int j = 1; j <= n; ++j)
    cost += a[static_cast<std::size_t>(p[static_cast<std::size_t>(j)] - 1)][static_cast<std::size_t>(j - 1)];
  return cost;
}

}  // namespace

double squared_distance(const Point& a, const Point& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

double euclidean_distance(const Point& a, const Point& b) { return std::sqrt(squared_distance(a, b)); }

Clustering kmeans(const std::vector<Point>& points, int k, std::uint64_t seed, int restarts, int max_iterations,
                  std::vector<std::vector<double>>* inertia_trace) {
  check_points(points);
  if (k < 1) throw std::invalid_argument("kmeans k must be positive");
  if (k > static_cast<int>(points.size()))
    throw std::invalid_argument("kmeans k=" + std::to_string(k) + " exceeds the number of points (" +
                                std::to_string(points.size()) + ")");
  if (restarts < 1) throw std::invalid_argument("kmeans needs at least one restart");

  Clustering best;
  bool have = false;
  for (int r = 0; r < restarts; ++r) {
    std::mt19937_64 rng(hash_combine(hash_mix(seed), static_cast<std::uint64_t>(r)));
    std::vector<double> trace;
    Clustering run = lloyd_run(points, k, rng, max_iterations, inertia_trace ? &trace : nullptr);
    if (inertia_trace) inertia_trace->push_back(std::move(trace));
    if (!have || run.inertia < best.inertia) {  // ties keep the lowest restart index
      best = std::move(run);
      have = true;
    }
  }
  return best;
}

Matching hungarian(const std::vector<std::vector<double>>& cost) {
  const int n = static_cast<int>(cost.size());
  if (n == 0) throw std::invalid_argument("hungarian cost matrix must be non-empty");
  for (const auto& row : cost) {
    if (static_cast<int>(row.size()) != n)
      throw std::invalid_argument("hungarian cost matrix must be square; got " + std::to_string(cost.size()) +
                                  " rows, a row of width " + std::to_string(row.size()));
    for (double v : row) {
      if (!std::isfinite(v)) throw std::invalid_argument("hungarian cost matrix must be finite");
    }
  }

  const double total = hungarian_value(cost);
  const double eps = tie_epsilon(total);

  // Lexicographically smallest optimal permutation: fix rows in order, always
  // trying the smallest column that still admits an optimal completion.
  Matching m;
  m.row_to_col.assign(static_cast<std::size_t>(n), -1);
  std::vector<int> remaining_cols(static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j) remaining_cols[static_cast<std::size_t>(j)] = j;
  double remaining_target = total;

  for (int r = 0; r < n; ++r) {
    bool placed = false;
    for (std::size_t ci = 0; ci < remaining_cols.size() && !placed; ++ci) {
      const int c = remaining_cols[ci];
      std::vector<std::vector<double>> sub;
      sub.reserve(static_cast<std::size_t>(n - r - 1));
      for (int rr = r + 1; rr < n; ++rr) {
        std::vector<double> row;
        row.reserve(remaining_cols.size() - 1);
        for (int cc : remaining_cols) {
          if (cc != c) row.push_back(cost[static_cast<std::size_t>(rr)][static_cast<std::size_t>(cc)]);
        }
        sub.push_back(std::move(row));
      }
      const double completion = hungarian_value(sub);
      if (std::abs(cost[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)] + completion - remaining_target) <= eps) {
        m.row_to_col[static_cast<std::size_t>(r)] = c;
        remaining_target -= cost[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
        remaining_cols.erase(remaining_cols.begin() + static_cast<std::ptrdiff_t>(ci));
        placed = true;
      }
    }
    if (!placed) throw NumericError("hungarian: no optimal completion found (numerically inconsistent matrix)");
  }

  m.cost = 0.0;
  for (int r = 0; r < n; ++r)
    m.cost += cost[static_cast<std::size_t>(r)][static_cast<std::size_t>(m.row_to_col[static_cast<std::size_t>(r)])];
  return m;
}

int elbow_from_inertias(const std::vector<double>& inertias) {
  const int k_max = static_cast<int>(inertias.size());
  if (k_max < 1) throw std::invalid_argument("elbow needs at least one inertia value");
  if (inertias[0] < 1e-12) return 1;  // one cluster already fits perfectly
  if (k_max < 3) return 1;
  int best_k = 2;
  double best = 0.0;
  bool have = false;
  for (int k = 2; k <= k_max - 1; ++k) {
    const double second_diff = inertias[static_cast<std::size_t>(k - 2)] - 2.0 * inertias[static_cast<std::size_t>(k - 1)] +
                               inertias[static_cast<std::size_t>(k)];
    if (!have || second_diff > best + tie_epsilon(best)) {
      best = second_diff;
      best_k = k;
      have = true;
    }
  }
  return best_k;
}

int elbow_k(const std::vector<Point>& points, int k_max, std::uint64_t seed) {
  check_points(points);
  if (k_max < 1 || k_max > static_cast<int>(points.size()))
    throw std::invalid_argument("elbow k_max must be in [1, |points|]");
  std::vector<double> inertias;
  inertias.reserve(static_cast<std::size_t>(k_max));
  for (int k = 1; k <= k_max; ++k)
    inertias.push_back(kmeans(points, k, hash_combine(seed, static_cast<std::uint64_t>(k))).inertia);
  return elbow_from_inertias(inertias);
}

double mean_silhouette(const std::vector<Point>& points, const std::vector<int>& assignment, int k) {
  const std::size_t n = points.size();
  std::vector<int> sizes(static_cast<std::size_t>(k), 0);
  for (int a : assignment) ++sizes[static_cast<std::size_t>(a)];

  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const int ci = assignment[i];
    if (sizes[static_cast<std::size_t>(ci)] < 2) continue;  // singleton contributes 0
    std::vector<double> sum_d(static_cast<std::size_t>(k), 0.0);
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      sum_d[static_cast<std::size_t>(assignment[j])] += euclidean_distance(points[i], points[j]);
    }
    const double a = sum_d[static_cast<std::size_t>(ci)] / (sizes[static_cast<std::size_t>(ci)] - 1);
    double b = kInf;
    for (int c = 0; c < k; ++c) {
      if (c == ci || sizes[static_cast<std::size_t>(c)] == 0) continue;
      b = std::min(b, sum_d[static_cast<std::size_t>(c)] / sizes[static_cast<std::size_t>(c)]);
    }
    if (b == kInf) continue;
    const double denom = std::max(a, b);
    total += denom > 0.0 ? (b - a) / denom : 0.0;
  }
  return total / static_cast<double>(n);
}

int silhouette_k(const std::vector<Point>& points, int k_max, std::uint64_t seed) {
  check_points(points);
  if (points.size() < 3) throw std::invalid_argument("silhouette needs at least 3 points");
  if (k_max < 1 || k_max > static_cast<int>(points.size()))
    throw std::invalid_argument("silhouette k_max must be in [1, |points|]");
  if (k_max < 2) return 1;
  int best_k = 2;
  double best = -kInf;
  for (int k = 2; k <= k_max; ++k) {
    const Clustering cl = kmeans(points, k, hash_combine(seed, static_cast<std::uint64_t>(k)));
    const double s = mean_silhouette(points, cl.assignment, k);
    if (s > best + tie_epsilon(1.0)) {
      best = s;
      best_k = k;
    }
  }
  return best_k;
}

}  // namespace bicl
